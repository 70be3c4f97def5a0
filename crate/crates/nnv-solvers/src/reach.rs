//! Layer-by-layer reachability: ExactReach, Ai2 and MaxSens.

use nalgebra::DMatrix;
use nnv_core::geometry::{
    self, is_empty, subset, vertices_of_bounded, GeometricSet, HPolytope, Hyperrectangle, VPolytope,
};
use nnv_core::linalg::{affine, dot, matvec};
use nnv_core::{Activation, Error, Network, Result, Status, VerificationProblem, VerificationResult, TAU_SET};

use crate::deadline;
use crate::util::{box_from, dedup};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExactReachConfig {
    /// Widest layer accepted; each layer can split a piece into `2^width` parts.
    pub max_width: usize,
}

impl Default for ExactReachConfig {
    fn default() -> Self {
        ExactReachConfig { max_width: 10 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MaxSensConfig {
    pub resolution: f64,
    pub tight: bool,
}

impl Default for MaxSensConfig {
    fn default() -> Self {
        MaxSensConfig { resolution: 1.0, tight: false }
    }
}

fn check_width(net: &Network, cap: usize) -> Result<()> {
    match net.widths().iter().skip(1).find(|&&w| w > cap) {
        Some(w) => Err(Error::ScaleLimit(format!("layer width {w} exceeds {cap}"))),
        None => Ok(()),
    }
}

fn input_rows(s: &GeometricSet) -> Result<Vec<(Vec<f64>, f64)>> {
    match s {
        GeometricSet::Hyperrectangle(_) | GeometricSet::HPolytope(_) | GeometricSet::VPolytope(_) => {
            s.constraint_rows()
        }
        _ => Err(Error::Unsupported(format!("reachability needs a bounded polytope input, got {}", s.kind().name()))),
    }
}

/// A linear region of the input with the affine map the network computes on it.
struct Piece {
    rows: Vec<(Vec<f64>, f64)>,
    a: DMatrix<f64>,
    c: Vec<f64>,
}

fn feasible(rows: &[(Vec<f64>, f64)], n: usize) -> bool {
    if rows.is_empty() {
        return true;
    }
    let c: Vec<Vec<f64>> = rows.iter().map(|r| r.0.clone()).collect();
    let d = rows.iter().map(|r| r.1).collect();
    match HPolytope::from_rows(&c, d) {
        Ok(p) => !is_empty(&p),
        Err(_) => n == 0,
    }
}

/// Adds `row·x ≤ rhs`, answering constant rows directly. Returns false when infeasible.
fn push_row(rows: &mut Vec<(Vec<f64>, f64)>, row: Vec<f64>, rhs: f64) -> bool {
    if row.iter().all(|v| v.abs() < 1e-14) {
        return rhs >= -TAU_SET;
    }
    rows.push((row, rhs));
    true
}

fn split_piece(piece: Piece, w: &DMatrix<f64>, b: &[f64], act: Activation, n: usize, out: &mut Vec<Piece>) {
    let a = w * &piece.a;
    let c = affine(w, &piece.c, b);
    if act == Activation::Id {
        out.push(Piece { rows: piece.rows, a, c });
        return;
    }
    let k = a.nrows();
    // depth-first over node signs, pruning empty prefixes
    let mut stack = vec![(piece.rows, Vec::<bool>::new())];
    while let Some((rows, signs)) = stack.pop() {
        let j = signs.len();
        if j == k {
            let mut a2 = a.clone();
            let mut c2 = c.clone();
            for (r, &on) in signs.iter().enumerate() {
                if !on {
                    a2.row_mut(r).fill(0.0);
                    c2[r] = 0.0;
                }
            }
            out.push(Piece { rows, a: a2, c: c2 });
            continue;
        }
        let row: Vec<f64> = a.row(j).iter().copied().collect();
        // inactive is pushed first so the active branch is explored first
        for on in [false, true] {
            let mut next = rows.clone();
            let ok = if on {
                push_row(&mut next, row.iter().map(|v| -v).collect(), c[j])
            } else {
                push_row(&mut next, row.clone(), -c[j])
            };
            if ok && (next.len() == rows.len() || feasible(&next, n)) {
                let mut s = signs.clone();
                s.push(on);
                stack.push((next, s));
            }
        }
    }
}

fn piece_included(piece: &Piece, image: &VPolytope, y: &GeometricSet, n: usize) -> Result<bool> {
    if let GeometricSet::PolytopeComplement(pc) = y {
        let mut rows = piece.rows.clone();
        for (cy, d) in pc.inner.rows() {
            let row: Vec<f64> = (0..n).map(|col| (0..cy.len()).map(|r| cy[r] * piece.a[(r, col)]).sum()).collect();
            if !push_row(&mut rows, row, d - dot(&cy, &piece.c) + TAU_SET) {
                return Ok(true);
            }
        }
        return Ok(!feasible(&rows, n));
    }
    subset(&GeometricSet::VPolytope(image.clone()), y)
}

/// Exact reachable set as a union of polytopes, one per linear region.
pub fn solve_exactreach(p: &VerificationProblem, cfg: ExactReachConfig) -> Result<VerificationResult> {
    check_width(&p.network, cfg.max_width)?;
    let n = p.network.input_dim();
    let rows = input_rows(&p.input)?;
    let mut pieces = vec![Piece { rows, a: DMatrix::identity(n, n), c: vec![0.0; n] }];
    for layer in p.network.layers() {
        if deadline::expired() {
            return Ok(VerificationResult::unknown());
        }
        let mut next = Vec::new();
        for piece in pieces {
            split_piece(piece, &layer.weights, &layer.bias, layer.activation, n, &mut next);
        }
        pieces = next;
    }
    let mut reach = Vec::new();
    let mut holds = true;
    for piece in &pieces {
        let poly = HPolytope::from_rows(
            &piece.rows.iter().map(|r| r.0.clone()).collect::<Vec<_>>(),
            piece.rows.iter().map(|r| r.1).collect(),
        )?;
        let verts = vertices_of_bounded(&poly)?;
        if verts.is_empty() {
            continue;
        }
        let image = VPolytope::new(dedup(verts.iter().map(|v| affine(&piece.a, v, &piece.c)).collect()))?;
        if holds && !piece_included(piece, &image, &p.output, n)? {
            holds = false;
        }
        reach.push(GeometricSet::VPolytope(image));
    }
    let status = if holds { Status::Holds } else { Status::Violated };
    Ok(VerificationResult::reachable(status, reach))
}

/// Convex-hull over-approximation: each layer is split by sign pattern and
/// the pieces are joined again.
pub fn solve_ai2(p: &VerificationProblem) -> Result<VerificationResult> {
    check_width(&p.network, ExactReachConfig::default().max_width)?;
    input_rows(&p.input)?;
    let mut verts = geometry::vertices(&p.input)?;
    for layer in p.network.layers() {
        if deadline::expired() {
            return Ok(VerificationResult::unknown());
        }
        let mapped = dedup(verts.iter().map(|v| layer.affine(v)).collect());
        if layer.activation == Activation::Id {
            verts = mapped;
            continue;
        }
        let k = layer.output_dim();
        let mut inactive = vec![false; k];
        let mut open = Vec::new();
        for (j, flag) in inactive.iter_mut().enumerate() {
            let lo = mapped.iter().map(|v| v[j]).fold(f64::INFINITY, f64::min);
            let hi = mapped.iter().map(|v| v[j]).fold(f64::NEG_INFINITY, f64::max);
            if hi <= 0.0 {
                *flag = true;
            } else if lo < 0.0 {
                open.push(j);
            }
        }
        let zero = |mut v: Vec<f64>, off: &[bool]| {
            for (x, &o) in v.iter_mut().zip(off) {
                if o {
                    *x = 0.0;
                }
            }
            v
        };
        if open.is_empty() {
            verts = dedup(mapped.into_iter().map(|v| zero(v, &inactive)).collect());
            continue;
        }
        let hull = geometry::v_to_h(&VPolytope::new(mapped)?)?;
        let mut joined = Vec::new();
        for pattern in 0..(1usize << open.len()) {
            let mut off = inactive.clone();
            let mut extra = Vec::new();
            for (bit, &j) in open.iter().enumerate() {
                let mut e = vec![0.0; k];
                if pattern >> bit & 1 == 1 {
                    e[j] = -1.0;
                } else {
                    e[j] = 1.0;
                    off[j] = true;
                }
                extra.push((e, 0.0));
            }
            let piece = hull.with_rows(&extra);
            if is_empty(&piece) {
                continue;
            }
            joined.extend(vertices_of_bounded(&piece)?.into_iter().map(|v| zero(v, &off)));
        }
        if joined.is_empty() {
            return Err(Error::EmptySet);
        }
        verts = dedup(joined);
    }
    let reach = GeometricSet::VPolytope(VPolytope::new(verts)?);
    let status = if subset(&reach, &p.output)? { Status::Holds } else { Status::Violated };
    Ok(VerificationResult::reachable(status, vec![reach]))
}

/// Cells of side at most `resolution` covering `h`, in row-major order with
/// the last dimension varying fastest.
pub fn partition(h: &Hyperrectangle, resolution: f64) -> Result<Vec<Hyperrectangle>> {
    if !(resolution.is_finite() && resolution > 0.0) {
        return Err(Error::Invalid("resolution must be positive".into()));
    }
    let (lo, hi) = (h.low(), h.high());
    let axes: Vec<Vec<(f64, f64)>> = lo
        .iter()
        .zip(&hi)
        .map(|(&l, &u)| {
            let count = (((u - l) / resolution) - 1e-12).ceil().max(1.0) as usize;
            (0..count).map(|i| (l + i as f64 * resolution, (l + (i + 1) as f64 * resolution).min(u))).collect()
        })
        .collect();
    let total: usize = axes.iter().map(Vec::len).product();
    if total > 1_000_000 {
        return Err(Error::ScaleLimit(format!("{total} partition cells")));
    }
    let mut cells = Vec::with_capacity(total);
    let mut idx = vec![0usize; axes.len()];
    loop {
        let (cl, cu): (Vec<f64>, Vec<f64>) = idx.iter().zip(&axes).map(|(&i, a)| a[i]).unzip();
        cells.push(box_from(&cl, &cu));
        let mut d = axes.len();
        loop {
            if d == 0 {
                return Ok(cells);
            }
            d -= 1;
            idx[d] += 1;
            if idx[d] < axes[d].len() {
                break;
            }
            idx[d] = 0;
        }
    }
}

fn maxsens_layer(net: &Network, cell: &Hyperrectangle, tight: bool) -> Hyperrectangle {
    let mut cur = cell.clone();
    for layer in net.layers() {
        let mid = matvec(&layer.weights, &cur.center);
        let (mut center, mut radius) = (Vec::new(), Vec::new());
        for j in 0..layer.output_dim() {
            let pre = mid[j] + layer.bias[j];
            let spread: f64 = (0..layer.input_dim()).map(|k| layer.weights[(j, k)].abs() * cur.radius[k]).sum();
            let s = |v: f64| layer.activation.apply(v);
            let (beta, bmax, bmin) = (s(pre), s(pre + spread), s(pre - spread));
            if tight {
                center.push((bmax + bmin) / 2.0);
                radius.push((bmax - bmin) / 2.0);
            } else {
                center.push(beta);
                radius.push((bmax - beta).abs().max((bmin - beta).abs()));
            }
        }
        cur = Hyperrectangle { center, radius };
    }
    cur
}

/// Box propagation over a partition of the input.
pub fn solve_maxsens(p: &VerificationProblem, cfg: MaxSensConfig) -> Result<VerificationResult> {
    let bbox = geometry::bounding_box(&p.input)?;
    let cells = partition(&bbox, cfg.resolution)?;
    let mut reach = Vec::with_capacity(cells.len());
    let mut holds = true;
    for cell in &cells {
        if deadline::expired() {
            return Ok(VerificationResult::unknown());
        }
        let out = GeometricSet::Hyperrectangle(maxsens_layer(&p.network, cell, cfg.tight));
        if holds && !subset(&out, &p.output)? {
            holds = false;
        }
        reach.push(out);
    }
    let status = if holds { Status::Holds } else { Status::Violated };
    Ok(VerificationResult::reachable(status, reach))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::util::fixtures::*;
    use nnv_core::geometry::bounding_box;

    fn union_range(r: &VerificationResult) -> (f64, f64) {
        let sets = r.reachable_sets().unwrap();
        let boxes: Vec<_> = sets.iter().map(|s| bounding_box(s).unwrap()).collect();
        (
            boxes.iter().map(|b| b.low()[0]).fold(f64::INFINITY, f64::min),
            boxes.iter().map(|b| b.high()[0]).fold(f64::NEG_INFINITY, f64::max),
        )
    }

    fn close(a: (f64, f64), b: (f64, f64)) -> bool {
        (a.0 - b.0).abs() < 1e-9 && (a.1 - b.1).abs() < 1e-9
    }

    #[test]
    fn exactreach_examples() {
        let r = solve_exactreach(&prob_hold(), ExactReachConfig::default()).unwrap();
        assert_eq!(r.status, Status::Holds);
        assert!(close(union_range(&r), (0.0, 1.0)));
        let r = solve_exactreach(&prob_viol(), ExactReachConfig::default()).unwrap();
        assert_eq!(r.status, Status::Violated);
        let y = Hyperrectangle::new(vec![0.0], vec![2.0]).unwrap().into();
        let r = solve_exactreach(&prob(net_id(), boxed(0.0, 1.0), y), ExactReachConfig::default()).unwrap();
        assert_eq!(r.status, Status::Holds);
        assert_eq!(r.reachable_sets().unwrap().len(), 1);
        assert!(close(union_range(&r), (-1.0, 1.0)));
    }

    #[test]
    fn exactreach_width_cap() {
        let r = solve_exactreach(&prob_hold(), ExactReachConfig { max_width: 1 });
        assert!(matches!(r, Err(Error::ScaleLimit(_))));
    }

    #[test]
    fn ai2_examples() {
        let r = solve_ai2(&prob_hold()).unwrap();
        assert_eq!(r.status, Status::Holds);
        assert!(close(union_range(&r), (0.0, 1.0)));
        let r = solve_ai2(&prob(net_id(), boxed(0.5, 0.25), below(1.0))).unwrap();
        assert!(close(union_range(&r), (0.25, 0.75)));
    }

    #[test]
    fn maxsens_examples() {
        let r = solve_maxsens(&prob_hold(), MaxSensConfig { resolution: 2.0, tight: true }).unwrap();
        assert_eq!(r.status, Status::Violated);
        assert!(close(union_range(&r), (0.0, 2.0)));
        let r = solve_maxsens(&prob_hold(), MaxSensConfig { resolution: 1.0, tight: true }).unwrap();
        assert_eq!(r.status, Status::Holds);
        assert_eq!(r.reachable_sets().unwrap().len(), 2);
        assert!(close(union_range(&r), (0.0, 1.0)));
        let r = solve_maxsens(
            &prob(net_id(), boxed(0.0, 1.0), below(2.0)),
            MaxSensConfig { resolution: 0.3, tight: false },
        )
        .unwrap();
        assert!(close(union_range(&r), (-1.0, 1.0)));
    }

    #[test]
    fn partition_remainder_cells() {
        let h = Hyperrectangle::from_bounds(&[0.0, 0.0], &[1.0, 0.0]).unwrap();
        let cells = partition(&h, 0.4).unwrap();
        assert_eq!(cells.len(), 3);
        assert!((cells[2].low()[0] - 0.8).abs() < 1e-12 && (cells[2].high()[0] - 1.0).abs() < 1e-12);
        assert!(partition(&h, 0.0).is_err());
    }
}
