//! Input and output sets and the set operations the solvers need.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{self, dot};
use crate::lp::{self, LinearModel, LpStatus, Relation, Sense};
use crate::TAU_SET;

/// Axis-aligned box `|x − center| ≤ radius`.
#[derive(Clone, Debug, PartialEq)]
pub struct Hyperrectangle {
    pub center: Vec<f64>,
    pub radius: Vec<f64>,
}

/// `{x : C x ≤ d}`.
#[derive(Clone, Debug, PartialEq)]
pub struct HPolytope {
    pub c: DMatrix<f64>,
    pub d: Vec<f64>,
}

/// Convex hull of a finite vertex list.
#[derive(Clone, Debug, PartialEq)]
pub struct VPolytope {
    pub vertices: Vec<Vec<f64>>,
}

/// `{x : cᵀx ≤ d}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Halfspace {
    pub c: Vec<f64>,
    pub d: f64,
}

/// Every point outside `inner`.
#[derive(Clone, Debug, PartialEq)]
pub struct PolytopeComplement {
    pub inner: HPolytope,
}

#[derive(Clone, Debug, PartialEq)]
pub enum GeometricSet {
    Hyperrectangle(Hyperrectangle),
    HPolytope(HPolytope),
    VPolytope(VPolytope),
    Halfspace(Halfspace),
    PolytopeComplement(PolytopeComplement),
}

fn all_finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

impl Hyperrectangle {
    pub fn new(center: Vec<f64>, radius: Vec<f64>) -> Result<Self> {
        check_dim("hyperrectangle radius", center.len(), radius.len())?;
        if !all_finite(&center) || !all_finite(&radius) || radius.iter().any(|&r| r < 0.0) {
            return Err(Error::Invalid("hyperrectangle needs finite center and radius ≥ 0".into()));
        }
        Ok(Hyperrectangle { center, radius })
    }

    pub fn from_bounds(low: &[f64], high: &[f64]) -> Result<Self> {
        check_dim("hyperrectangle bounds", low.len(), high.len())?;
        if low.iter().zip(high).any(|(l, h)| l > h) {
            return Err(Error::Invalid("low bound above high bound".into()));
        }
        let center = low.iter().zip(high).map(|(l, h)| (l + h) / 2.0).collect();
        let radius = low.iter().zip(high).map(|(l, h)| ((h - l) / 2.0).max(0.0)).collect();
        Hyperrectangle::new(center, radius)
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn low(&self) -> Vec<f64> {
        self.center.iter().zip(&self.radius).map(|(c, r)| c - r).collect()
    }

    pub fn high(&self) -> Vec<f64> {
        self.center.iter().zip(&self.radius).map(|(c, r)| c + r).collect()
    }

    pub fn max_radius(&self) -> f64 {
        self.radius.iter().copied().fold(0.0, f64::max)
    }

    /// Corner points; dimensions of zero width contribute a single coordinate.
    pub fn vertices(&self) -> Vec<Vec<f64>> {
        let mut out = vec![Vec::with_capacity(self.dim())];
        for j in 0..self.dim() {
            let vals: Vec<f64> = if self.radius[j] == 0.0 {
                vec![self.center[j]]
            } else {
                vec![self.center[j] - self.radius[j], self.center[j] + self.radius[j]]
            };
            out = out
                .into_iter()
                .flat_map(|p| {
                    vals.iter().map(move |&v| {
                        let mut q = p.clone();
                        q.push(v);
                        q
                    })
                })
                .collect();
        }
        out
    }

    pub fn to_hpolytope(&self) -> HPolytope {
        let n = self.dim();
        let mut rows = Vec::with_capacity(2 * n);
        let mut d = Vec::with_capacity(2 * n);
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            rows.push(e.clone());
            d.push(self.center[j] + self.radius[j]);
            e[j] = -1.0;
            rows.push(e);
            d.push(self.radius[j] - self.center[j]);
        }
        HPolytope { c: linalg::from_rows(&rows, n), d }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().zip(&self.center).zip(&self.radius).all(|((x, c), r)| (x - c).abs() <= r + TAU_SET)
    }

    /// Nearest point of the box.
    pub fn clamp(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(self.low().iter().zip(self.high())).map(|(v, (l, h))| v.clamp(*l, h)).collect()
    }
}

impl HPolytope {
    pub fn new(c: DMatrix<f64>, d: Vec<f64>) -> Result<Self> {
        check_dim("polytope offsets", c.nrows(), d.len())?;
        if c.nrows() == 0 || c.ncols() == 0 {
            return Err(Error::Invalid("polytope needs at least one constraint".into()));
        }
        if !all_finite(c.as_slice()) || !all_finite(&d) {
            return Err(Error::Invalid("non-finite polytope data".into()));
        }
        Ok(HPolytope { c, d })
    }

    pub fn from_rows(rows: &[Vec<f64>], d: Vec<f64>) -> Result<Self> {
        let n = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Invalid("ragged polytope rows".into()));
        }
        HPolytope::new(linalg::from_rows(rows, n), d)
    }

    pub fn dim(&self) -> usize {
        self.c.ncols()
    }

    pub fn rows(&self) -> Vec<(Vec<f64>, f64)> {
        (0..self.c.nrows()).map(|i| (linalg::row(&self.c, i), self.d[i])).collect()
    }

    /// The polytope with extra rows appended.
    pub fn with_rows(&self, extra: &[(Vec<f64>, f64)]) -> HPolytope {
        let mut rows = self.rows();
        rows.extend_from_slice(extra);
        polytope_from_pairs(&rows, self.dim())
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        (0..self.c.nrows()).all(|i| (0..self.dim()).map(|j| self.c[(i, j)] * x[j]).sum::<f64>() <= self.d[i] + TAU_SET)
    }
}

pub(crate) fn polytope_from_pairs(rows: &[(Vec<f64>, f64)], n: usize) -> HPolytope {
    let c = DMatrix::from_fn(rows.len(), n, |i, j| rows[i].0[j]);
    HPolytope { c, d: rows.iter().map(|r| r.1).collect() }
}

impl VPolytope {
    pub fn new(vertices: Vec<Vec<f64>>) -> Result<Self> {
        let n = vertices.first().map(Vec::len).ok_or_else(|| Error::Invalid("empty vertex list".into()))?;
        if vertices.iter().any(|v| v.len() != n || !all_finite(v)) {
            return Err(Error::Invalid("vertices must share one dimension and be finite".into()));
        }
        Ok(VPolytope { vertices })
    }

    pub fn dim(&self) -> usize {
        self.vertices[0].len()
    }
}

impl Halfspace {
    pub fn new(c: Vec<f64>, d: f64) -> Result<Self> {
        if c.is_empty() || c.iter().all(|&x| x == 0.0) || !all_finite(&c) || !d.is_finite() {
            return Err(Error::Invalid("halfspace needs a finite nonzero normal".into()));
        }
        Ok(Halfspace { c, d })
    }

    pub fn dim(&self) -> usize {
        self.c.len()
    }
}

impl PolytopeComplement {
    pub fn new(inner: HPolytope) -> Self {
        PolytopeComplement { inner }
    }

    pub fn dim(&self) -> usize {
        self.inner.dim()
    }
}

macro_rules! impl_from {
    ($($t:ident),*) => {$(
        impl From<$t> for GeometricSet {
            fn from(s: $t) -> Self {
                GeometricSet::$t(s)
            }
        }
    )*};
}
impl_from!(Hyperrectangle, HPolytope, VPolytope, Halfspace, PolytopeComplement);

impl GeometricSet {
    pub fn dim(&self) -> usize {
        match self {
            GeometricSet::Hyperrectangle(s) => s.dim(),
            GeometricSet::HPolytope(s) => s.dim(),
            GeometricSet::VPolytope(s) => s.dim(),
            GeometricSet::Halfspace(s) => s.dim(),
            GeometricSet::PolytopeComplement(s) => s.dim(),
        }
    }

    pub fn kind(&self) -> SetKind {
        match self {
            GeometricSet::Hyperrectangle(_) => SetKind::Hyperrectangle,
            GeometricSet::HPolytope(_) => SetKind::HPolytope,
            GeometricSet::VPolytope(_) => SetKind::VPolytope,
            GeometricSet::Halfspace(_) => SetKind::Halfspace,
            GeometricSet::PolytopeComplement(_) => SetKind::PolytopeComplement,
        }
    }

    pub fn as_hyperrectangle(&self) -> Option<&Hyperrectangle> {
        match self {
            GeometricSet::Hyperrectangle(h) => Some(h),
            _ => None,
        }
    }

    /// Linear inequalities describing a convex set.
    pub fn constraint_rows(&self) -> Result<Vec<(Vec<f64>, f64)>> {
        Ok(match self {
            GeometricSet::Hyperrectangle(h) => h.to_hpolytope().rows(),
            GeometricSet::HPolytope(p) => p.rows(),
            GeometricSet::Halfspace(h) => vec![(h.c.clone(), h.d)],
            GeometricSet::VPolytope(v) => v_to_h(v)?.rows(),
            GeometricSet::PolytopeComplement(_) => return Err(Error::NonconvexSet),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SetKind {
    Hyperrectangle,
    HPolytope,
    VPolytope,
    Halfspace,
    PolytopeComplement,
}

impl SetKind {
    pub fn name(self) -> &'static str {
        match self {
            SetKind::Hyperrectangle => "hyperrectangle",
            SetKind::HPolytope => "hpolytope",
            SetKind::VPolytope => "vpolytope",
            SetKind::Halfspace => "halfspace",
            SetKind::PolytopeComplement => "polytope_complement",
        }
    }
}

// ---------------------------------------------------------------------------
// membership and inclusion

fn member_vpolytope(v: &VPolytope, x: &[f64]) -> bool {
    let mut m = LinearModel::new();
    let lam: Vec<_> = v.vertices.iter().map(|_| m.add_continuous(0.0, f64::INFINITY)).collect();
    let ones = lam.iter().map(|&l| (l, 1.0)).collect();
    m.add_constraint(ones, Relation::Eq, 1.0).unwrap();
    for j in 0..v.dim() {
        let coeffs: Vec<_> = lam.iter().zip(&v.vertices).map(|(&l, p)| (l, p[j])).collect();
        m.add_constraint(coeffs.clone(), Relation::Le, x[j] + TAU_SET).unwrap();
        m.add_constraint(coeffs, Relation::Ge, x[j] - TAU_SET).unwrap();
    }
    lp::solve_lp(&m).is_optimal()
}

pub fn member(s: &GeometricSet, x: &[f64]) -> Result<bool> {
    check_dim("membership point", s.dim(), x.len())?;
    Ok(match s {
        GeometricSet::Hyperrectangle(h) => h.contains(x),
        GeometricSet::HPolytope(p) => p.contains(x),
        GeometricSet::VPolytope(v) => member_vpolytope(v, x),
        GeometricSet::Halfspace(h) => dot(&h.c, x) <= h.d + TAU_SET,
        GeometricSet::PolytopeComplement(pc) => !pc.inner.contains(x),
    })
}

/// Whether the bounded set `a` lies inside `b`.
pub fn subset(a: &GeometricSet, b: &GeometricSet) -> Result<bool> {
    check_dim("subset", a.dim(), b.dim())?;
    if let GeometricSet::Hyperrectangle(ha) = a {
        match b {
            GeometricSet::Halfspace(hb) => {
                let support: f64 =
                    dot(&hb.c, &ha.center) + hb.c.iter().zip(&ha.radius).map(|(c, r)| c.abs() * r).sum::<f64>();
                return Ok(support <= hb.d + TAU_SET);
            }
            GeometricSet::Hyperrectangle(hb) => {
                let ok = ha.low().iter().zip(hb.low()).all(|(a, b)| *a >= b - TAU_SET)
                    && ha.high().iter().zip(hb.high()).all(|(a, b)| *a <= b + TAU_SET);
                return Ok(ok);
            }
            _ => {}
        }
    }
    if let GeometricSet::HPolytope(p) = a {
        if is_empty(p) {
            return Ok(true);
        }
    }
    if !is_bounded(a)? {
        return Err(Error::Unsupported("subset needs a bounded left operand".into()));
    }
    if let GeometricSet::PolytopeComplement(pc) = b {
        let mut rows = a.constraint_rows()?;
        rows.extend(pc.inner.rows().into_iter().map(|(c, d)| (c, d + TAU_SET)));
        return Ok(is_empty(&polytope_from_pairs(&rows, a.dim())));
    }
    let rows = b.constraint_rows()?;
    let verts = vertices(a)?;
    Ok(verts.iter().all(|v| rows.iter().all(|(c, d)| dot(c, v) <= d + TAU_SET * (1.0 + d.abs()))))
}

pub fn is_bounded(s: &GeometricSet) -> Result<bool> {
    Ok(match s {
        GeometricSet::Hyperrectangle(_) | GeometricSet::VPolytope(_) => true,
        GeometricSet::Halfspace(_) | GeometricSet::PolytopeComplement(_) => false,
        GeometricSet::HPolytope(p) => axis_extents(p).is_ok(),
    })
}

/// Per-axis `(min, max)` of a nonempty bounded H-polytope.
fn axis_extents(p: &HPolytope) -> Result<Vec<(f64, f64)>> {
    let n = p.dim();
    let mut m = LinearModel::new();
    let x = m.add_free_vec(n);
    lp::add_set_constraint(&mut m, &GeometricSet::HPolytope(p.clone()), &x)?;
    let mut out = Vec::with_capacity(n);
    for j in 0..n {
        let mut ext = [0.0; 2];
        for (k, sense) in [Sense::Minimize, Sense::Maximize].into_iter().enumerate() {
            m.set_objective(vec![(x[j], 1.0)], 0.0, sense)?;
            let o = lp::solve_lp(&m);
            match o.status {
                LpStatus::Optimal => ext[k] = o.value,
                LpStatus::Infeasible => return Err(Error::EmptySet),
                LpStatus::Unbounded => return Err(Error::Unsupported("unbounded polytope".into())),
            }
        }
        out.push((ext[0], ext[1]));
    }
    Ok(out)
}

/// Smallest box containing a bounded set.
pub fn bounding_box(s: &GeometricSet) -> Result<Hyperrectangle> {
    match s {
        GeometricSet::Hyperrectangle(h) => Ok(h.clone()),
        GeometricSet::VPolytope(v) => {
            let n = v.dim();
            let lo: Vec<f64> = (0..n).map(|j| v.vertices.iter().map(|p| p[j]).fold(f64::INFINITY, f64::min)).collect();
            let hi: Vec<f64> =
                (0..n).map(|j| v.vertices.iter().map(|p| p[j]).fold(f64::NEG_INFINITY, f64::max)).collect();
            Hyperrectangle::from_bounds(&lo, &hi)
        }
        GeometricSet::HPolytope(p) => {
            let ext = axis_extents(p)?;
            let lo: Vec<f64> = ext.iter().map(|e| e.0).collect();
            let hi: Vec<f64> = ext.iter().map(|e| e.1.max(e.0)).collect();
            Hyperrectangle::from_bounds(&lo, &hi)
        }
        _ => Err(Error::Unsupported("bounding box of an unbounded set".into())),
    }
}

/// Vertices of a bounded set.
pub fn vertices(s: &GeometricSet) -> Result<Vec<Vec<f64>>> {
    match s {
        GeometricSet::Hyperrectangle(h) => Ok(h.vertices()),
        GeometricSet::VPolytope(v) => Ok(v.vertices.clone()),
        GeometricSet::HPolytope(p) => Ok(h_to_v(p)?.vertices),
        _ => Err(Error::Unsupported("vertices of an unbounded set".into())),
    }
}

/// Exact image of a bounded set under `x ↦ W x + b`, as a V-polytope.
pub fn affine_image(s: &GeometricSet, w: &DMatrix<f64>, b: &[f64]) -> Result<GeometricSet> {
    check_dim("affine map input", s.dim(), w.ncols())?;
    check_dim("affine map bias", w.nrows(), b.len())?;
    let verts = vertices(s)?;
    let mapped: Vec<Vec<f64>> = verts.iter().map(|v| linalg::affine(w, v, b)).collect();
    Ok(GeometricSet::VPolytope(VPolytope::new(dedup_points(mapped))?))
}

/// Interval over-approximation of the image of a box under `x ↦ W x + b`.
pub fn affine_image_interval(h: &Hyperrectangle, w: &DMatrix<f64>, b: &[f64]) -> Hyperrectangle {
    let center = linalg::affine(w, &h.center, b);
    let radius = (0..w.nrows()).map(|i| (0..w.ncols()).map(|j| w[(i, j)].abs() * h.radius[j]).sum()).collect();
    Hyperrectangle { center, radius }
}

pub fn is_empty(p: &HPolytope) -> bool {
    let mut m = LinearModel::new();
    let x = m.add_free_vec(p.dim());
    for (c, d) in p.rows() {
        let coeffs = x.iter().copied().zip(c).filter(|(_, a)| *a != 0.0).collect();
        m.add_constraint(coeffs, Relation::Le, d).unwrap();
    }
    !lp::solve_lp(&m).is_optimal()
}

// ---------------------------------------------------------------------------
// vertex and facet enumeration

const MAX_SUBSETS: u128 = 20_000_000;

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Calls `f` on every `k`-subset of `0..n` in lexicographic order.
fn for_each_subset(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 && idx[0] == n - k {
                return;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn scale_of(points: &[Vec<f64>]) -> f64 {
    points.iter().flatten().fold(1.0f64, |m, x| m.max(x.abs()))
}

pub(crate) fn dedup_points(points: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let tol = 1e-9 * scale_of(&points);
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(points.len());
    for p in points {
        if !out.iter().any(|q| linalg::inf_norm_dist(q, &p) <= tol) {
            out.push(p);
        }
    }
    out
}

fn normalized_rows(p: &HPolytope) -> Vec<(Vec<f64>, f64)> {
    let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
    for (c, d) in p.rows() {
        let norm = c.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-14 {
            continue;
        }
        let row = (c.iter().map(|x| x / norm).collect::<Vec<_>>(), d / norm);
        let dup = rows
            .iter()
            .any(|(rc, rd)| linalg::inf_norm_dist(rc, &row.0) < 1e-12 && (rd - row.1).abs() < 1e-12 * (1.0 + rd.abs()));
        if !dup {
            rows.push(row);
        }
    }
    rows
}

/// Vertices of a polytope known to be nonempty and bounded.
pub fn vertices_of_bounded(p: &HPolytope) -> Result<Vec<Vec<f64>>> {
    let n = p.dim();
    let rows = normalized_rows(p);
    let all_zero_rows = p.rows().iter().filter(|(c, _)| c.iter().all(|x| x.abs() < 1e-14)).all(|(_, d)| *d >= -TAU_SET);
    if !all_zero_rows {
        return Ok(Vec::new());
    }
    if binomial(rows.len(), n) > MAX_SUBSETS {
        return Err(Error::ScaleLimit(format!("{} constraints in dimension {n}", rows.len())));
    }
    let mut verts = Vec::new();
    let mut a = DMatrix::zeros(n, n);
    let mut rhs = nalgebra::DVector::zeros(n);
    for_each_subset(rows.len(), n, |idx| {
        for (r, &i) in idx.iter().enumerate() {
            for j in 0..n {
                a[(r, j)] = rows[i].0[j];
            }
            rhs[r] = rows[i].1;
        }
        let lu = a.clone().lu();
        if lu.determinant().abs() < 1e-10 {
            return;
        }
        let Some(x) = lu.solve(&rhs) else { return };
        let x: Vec<f64> = x.iter().copied().collect();
        if !all_finite(&x) {
            return;
        }
        let tol = 1e-9 * (1.0 + x.iter().fold(0.0f64, |m, v| m.max(v.abs())));
        if rows.iter().all(|(c, d)| dot(c, &x) <= d + tol) {
            verts.push(x);
        }
    });
    Ok(dedup_points(verts))
}

/// Vertex enumeration of a bounded H-polytope.
pub fn h_to_v(p: &HPolytope) -> Result<VPolytope> {
    axis_extents(p)?;
    let verts = vertices_of_bounded(p)?;
    if verts.is_empty() {
        return Err(Error::EmptySet);
    }
    VPolytope::new(verts)
}

/// Facets of the convex hull of a vertex set.
///
/// Lower-dimensional hulls get a pair of opposing inequalities for every
/// direction orthogonal to their affine hull.
pub fn v_to_h(p: &VPolytope) -> Result<HPolytope> {
    let n = p.dim();
    let pts = dedup_points(p.vertices.clone());
    let p0 = pts[0].clone();
    let scale = scale_of(&pts);
    let mut gram = DMatrix::<f64>::zeros(n, n);
    for q in &pts[1..] {
        for i in 0..n {
            for j in 0..n {
                gram[(i, j)] += (q[i] - p0[i]) * (q[j] - p0[j]);
            }
        }
    }
    let eig = SymmetricEigen::new(gram);
    let lmax = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(*v));
    let thresh = (1e-14 * lmax).max(1e-20 * scale * scale);
    let mut span = Vec::new();
    let mut ortho = Vec::new();
    for k in 0..n {
        let v: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
        if eig.eigenvalues[k] > thresh {
            span.push(v);
        } else {
            ortho.push(v);
        }
    }
    let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
    for nv in &ortho {
        let b = dot(nv, &p0);
        rows.push((nv.clone(), b));
        rows.push((nv.iter().map(|x| -x).collect(), -b));
    }
    let r = span.len();
    let proj: Vec<Vec<f64>> = pts
        .iter()
        .map(|q| {
            let diff: Vec<f64> = q.iter().zip(&p0).map(|(a, b)| a - b).collect();
            span.iter().map(|u| dot(u, &diff)).collect()
        })
        .collect();
    let tol = 1e-9 * scale;
    let mut facets: Vec<(Vec<f64>, f64)> = Vec::new();
    let lift = |a: &[f64], b: f64| -> (Vec<f64>, f64) {
        let mut full = vec![0.0; n];
        for (k, u) in span.iter().enumerate() {
            for j in 0..n {
                full[j] += a[k] * u[j];
            }
        }
        let off = b + dot(&full, &p0);
        (full, off)
    };
    let push_facet = |a: Vec<f64>, b: f64, facets: &mut Vec<(Vec<f64>, f64)>| {
        let dup = facets
            .iter()
            .any(|(fa, fb)| linalg::inf_norm_dist(fa, &a) < 1e-7 && (fb - b).abs() < 1e-7 * (1.0 + b.abs()));
        if !dup {
            facets.push((a, b));
        }
    };
    if r == 1 {
        let lo = proj.iter().map(|v| v[0]).fold(f64::INFINITY, f64::min);
        let hi = proj.iter().map(|v| v[0]).fold(f64::NEG_INFINITY, f64::max);
        push_facet(vec![1.0], hi, &mut facets);
        push_facet(vec![-1.0], -lo, &mut facets);
    } else if r >= 2 {
        if binomial(proj.len(), r) > MAX_SUBSETS {
            return Err(Error::ScaleLimit(format!("{} points in dimension {r}", proj.len())));
        }
        let mut m = DMatrix::<f64>::zeros(r - 1, r);
        for_each_subset(proj.len(), r, |idx| {
            let base = &proj[idx[0]];
            for k in 1..r {
                for j in 0..r {
                    m[(k - 1, j)] = proj[idx[k]][j] - base[j];
                }
            }
            // normal through generalized cross product
            let mut a = vec![0.0; r];
            for j in 0..r {
                let minor = m.clone().remove_column(j);
                let det = if r == 2 { minor[(0, 0)] } else { minor.determinant() };
                a[j] = if j % 2 == 0 { det } else { -det };
            }
            let norm = a.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm < 1e-12 * scale.powi(r as i32 - 1) {
                return;
            }
            a.iter_mut().for_each(|x| *x /= norm);
            let b = dot(&a, base);
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for q in &proj {
                let s = dot(&a, q) - b;
                lo = lo.min(s);
                hi = hi.max(s);
            }
            if hi <= tol {
                push_facet(a, b, &mut facets);
            } else if lo >= -tol {
                push_facet(a.iter().map(|x| -x).collect(), -b, &mut facets);
            }
        });
    }
    for (a, b) in facets {
        rows.push(lift(&a, b));
    }
    if rows.is_empty() {
        // a single point in zero dimensions cannot happen; n ≥ 1 gives ortho rows
        return Err(Error::Invalid("degenerate hull".into()));
    }
    Ok(polytope_from_pairs(&rows, n))
}

/// Smallest H-polytope containing every given bounded set.
pub fn convex_hull(ps: &[GeometricSet]) -> Result<HPolytope> {
    let first = ps.first().ok_or_else(|| Error::Invalid("convex hull of no sets".into()))?;
    let n = first.dim();
    let mut pts = Vec::new();
    for s in ps {
        check_dim("convex hull", n, s.dim())?;
        match s {
            GeometricSet::HPolytope(p) if is_empty(p) => continue,
            _ => pts.extend(vertices(s)?),
        }
    }
    if pts.is_empty() {
        return Err(Error::EmptySet);
    }
    v_to_h(&VPolytope::new(pts)?)
}

/// Bisects `dom` along dimension `i` (zero-based).
pub fn split_interval(dom: &Hyperrectangle, i: usize) -> Result<(Hyperrectangle, Hyperrectangle)> {
    if i >= dom.dim() {
        return Err(Error::Invalid(format!("split index {i} out of range")));
    }
    if dom.radius[i] <= 0.0 {
        return Err(Error::DegenerateSplit(i));
    }
    let half = dom.radius[i] / 2.0;
    let mut left = dom.clone();
    let mut right = dom.clone();
    left.center[i] = dom.center[i] - half;
    right.center[i] = dom.center[i] + half;
    left.radius[i] = half;
    right.radius[i] = half;
    Ok((left, right))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square() -> Hyperrectangle {
        Hyperrectangle::new(vec![0.5, 0.5], vec![0.5, 0.5]).unwrap()
    }

    fn same_points(a: &[Vec<f64>], b: &[Vec<f64>]) -> bool {
        a.len() == b.len() && a.iter().all(|p| b.iter().any(|q| linalg::inf_norm_dist(p, q) < 1e-9))
    }

    #[test]
    fn membership() {
        let h: GeometricSet = Hyperrectangle::new(vec![0.0], vec![1.0]).unwrap().into();
        assert!(member(&h, &[0.5]).unwrap());
        let hs: GeometricSet = Halfspace::new(vec![1.0], 0.5).unwrap().into();
        assert!(member(&hs, &[0.5]).unwrap());
        let pc: GeometricSet = PolytopeComplement::new(HPolytope::from_rows(&[vec![1.0]], vec![0.5]).unwrap()).into();
        assert!(member(&pc, &[0.75]).unwrap());
        assert!(!member(&pc, &[0.25]).unwrap());
        let v: GeometricSet = VPolytope::new(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap().into();
        assert!(member(&v, &[0.25, 0.25]).unwrap());
        assert!(!member(&v, &[0.75, 0.75]).unwrap());
        assert!(member(&h, &[0.0, 1.0]).is_err());
    }

    #[test]
    fn subset_examples() {
        let hs: GeometricSet = Halfspace::new(vec![1.0], 1.5).unwrap().into();
        let a: GeometricSet = Hyperrectangle::from_bounds(&[0.0], &[1.0]).unwrap().into();
        let b: GeometricSet = Hyperrectangle::from_bounds(&[0.0], &[2.0]).unwrap().into();
        assert!(subset(&a, &hs).unwrap());
        assert!(!subset(&b, &hs).unwrap());
        assert!(subset(&b, &b).unwrap());
        let tri: GeometricSet = VPolytope::new(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap().into();
        assert!(subset(&tri, &tri).unwrap());
        assert!(subset(&tri, &GeometricSet::Hyperrectangle(unit_square())).unwrap());
        assert!(!subset(&GeometricSet::Hyperrectangle(unit_square()), &tri).unwrap());
        assert!(subset(&hs, &hs).is_err());
        let pc: GeometricSet = PolytopeComplement::new(HPolytope::from_rows(&[vec![-1.0]], vec![-1.5]).unwrap()).into();
        assert!(subset(&a, &pc).unwrap());
        assert!(!subset(&b, &pc).unwrap());
    }

    #[test]
    fn affine_examples() {
        let sq: GeometricSet = unit_square().into();
        let id = DMatrix::identity(2, 2);
        let img = affine_image(&sq, &id, &[0.0, 0.0]).unwrap();
        assert!(same_points(&vertices(&img).unwrap(), &unit_square().vertices()));

        let w = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let img = affine_image(&sq, &w, &[0.0, 1.0]).unwrap();
        let expect: Vec<Vec<f64>> = unit_square().vertices().iter().map(|v| vec![v[0], 1.0 - v[1]]).collect();
        assert!(same_points(&vertices(&img).unwrap(), &expect));

        let w = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let img = affine_image(&sq, &w, &[0.0]).unwrap();
        let bb = bounding_box(&img).unwrap();
        assert_eq!((bb.low(), bb.high()), (vec![0.0], vec![2.0]));
    }

    #[test]
    fn h_v_conversion() {
        let box_h = unit_square().to_hpolytope();
        assert!(same_points(&h_to_v(&box_h).unwrap().vertices, &unit_square().vertices()));

        let tri = VPolytope::new(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let h = v_to_h(&tri).unwrap();
        assert_eq!(h.c.nrows(), 3);
        assert!(same_points(&h_to_v(&h).unwrap().vertices, &tri.vertices));

        let pt = VPolytope::new(vec![vec![2.0, 3.0]]).unwrap();
        let h = v_to_h(&pt).unwrap();
        assert!(h.contains(&[2.0, 3.0]));
        assert!(!h.contains(&[2.0, 3.1]));
        assert!(!h.contains(&[2.1, 3.0]));

        let unbounded = HPolytope::from_rows(&[vec![1.0, 0.0]], vec![1.0]).unwrap();
        assert!(h_to_v(&unbounded).is_err());
    }

    #[test]
    fn emptiness() {
        assert!(is_empty(&HPolytope::from_rows(&[vec![1.0], vec![-1.0]], vec![1.0, -2.0]).unwrap()));
        assert!(!is_empty(&unit_square().to_hpolytope()));
        assert!(!is_empty(&HPolytope::from_rows(&[vec![1.0], vec![-1.0]], vec![0.0, 0.0]).unwrap()));
    }

    #[test]
    fn hull_examples() {
        let h = convex_hull(&[unit_square().into()]).unwrap();
        assert!(same_points(&h_to_v(&h).unwrap().vertices, &unit_square().vertices()));
        let a = Hyperrectangle::from_bounds(&[0.0], &[1.0]).unwrap().into();
        let b = Hyperrectangle::from_bounds(&[2.0], &[3.0]).unwrap().into();
        let h = convex_hull(&[a, b]).unwrap();
        let bb = bounding_box(&h.into()).unwrap();
        assert!((bb.low()[0] - 0.0).abs() < 1e-9 && (bb.high()[0] - 3.0).abs() < 1e-9);
        let seg = VPolytope::new(vec![vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap().into();
        let pt = VPolytope::new(vec![vec![0.0, 0.0]]).unwrap().into();
        let h = convex_hull(&[seg, pt]).unwrap();
        assert!(same_points(&h_to_v(&h).unwrap().vertices, &[vec![0.0, 0.0], vec![1.0, 0.0]]));
        assert!(convex_hull(&[]).is_err());
    }

    #[test]
    fn splitting() {
        let d = Hyperrectangle::new(vec![0.0], vec![1.0]).unwrap();
        let (l, r) = split_interval(&d, 0).unwrap();
        assert_eq!((l.low(), l.high(), r.low(), r.high()), (vec![-1.0], vec![0.0], vec![0.0], vec![1.0]));
        let (l, r) = split_interval(&unit_square(), 1).unwrap();
        assert_eq!((l.radius.clone(), r.radius.clone()), (vec![0.5, 0.25], vec![0.5, 0.25]));
        let d = Hyperrectangle::new(vec![1.0, 2.0], vec![3.0, 0.5]).unwrap();
        let (l, r) = split_interval(&d, 0).unwrap();
        assert_eq!((l.center, r.center, l.radius), (vec![-0.5, 2.0], vec![2.5, 2.0], vec![1.5, 0.5]));
        let flat = Hyperrectangle::new(vec![0.0, 0.0], vec![1.0, 0.0]).unwrap();
        assert_eq!(split_interval(&flat, 1), Err(Error::DegenerateSplit(1)));
    }

    #[test]
    fn subset_enumeration() {
        let mut seen = Vec::new();
        for_each_subset(4, 2, |s| seen.push(s.to_vec()));
        assert_eq!(seen.len(), 6);
        assert_eq!(seen[0], vec![0, 1]);
        assert_eq!(seen[5], vec![2, 3]);
        let mut c = 0;
        for_each_subset(3, 3, |_| c += 1);
        assert_eq!(c, 1);
    }
}
