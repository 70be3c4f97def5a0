//! Linear models, a dense two-phase simplex and branch-and-bound over binaries.

use crate::error::{check_dim, Error, Result};
use crate::geometry::GeometricSet;
use crate::TAU_LP;

pub type VarId = usize;

/// Margin used when a strict inequality `cᵀy > d` is closed to `cᵀy ≥ d + margin`.
pub const STRICT_MARGIN: f64 = 1e-7;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarKind {
    Continuous,
    Binary,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Variable {
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<(VarId, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
    Feasibility,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Objective {
    pub coeffs: Vec<(VarId, f64)>,
    pub constant: f64,
    pub sense: Sense,
}

impl Default for Objective {
    fn default() -> Self {
        Objective { coeffs: Vec::new(), constant: 0.0, sense: Sense::Feasibility }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinearModel {
    variables: Vec<Variable>,
    constraints: Vec<Constraint>,
    objective: Objective,
}

impl LinearModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_variable(&mut self, kind: VarKind, lower: f64, upper: f64) -> VarId {
        let (lower, upper) = match kind {
            VarKind::Continuous => (lower, upper),
            VarKind::Binary => (lower.max(0.0), upper.min(1.0)),
        };
        self.variables.push(Variable { kind, lower, upper });
        self.variables.len() - 1
    }

    pub fn add_continuous(&mut self, lower: f64, upper: f64) -> VarId {
        self.add_variable(VarKind::Continuous, lower, upper)
    }

    pub fn add_free(&mut self) -> VarId {
        self.add_continuous(f64::NEG_INFINITY, f64::INFINITY)
    }

    pub fn add_free_vec(&mut self, n: usize) -> Vec<VarId> {
        (0..n).map(|_| self.add_free()).collect()
    }

    pub fn add_binary(&mut self) -> VarId {
        self.add_variable(VarKind::Binary, 0.0, 1.0)
    }

    fn check_ids(&self, coeffs: &[(VarId, f64)]) -> Result<()> {
        match coeffs.iter().find(|(id, _)| *id >= self.variables.len()) {
            Some((id, _)) => Err(Error::UnknownVariable(*id)),
            None => Ok(()),
        }
    }

    pub fn add_constraint(&mut self, coeffs: Vec<(VarId, f64)>, relation: Relation, rhs: f64) -> Result<()> {
        self.check_ids(&coeffs)?;
        if !rhs.is_finite() || coeffs.iter().any(|(_, c)| !c.is_finite()) {
            return Err(Error::Invalid("non-finite constraint data".into()));
        }
        self.constraints.push(Constraint { coeffs, relation, rhs });
        Ok(())
    }

    pub fn set_objective(&mut self, coeffs: Vec<(VarId, f64)>, constant: f64, sense: Sense) -> Result<()> {
        self.check_ids(&coeffs)?;
        self.objective = Objective { coeffs, constant, sense };
        Ok(())
    }

    pub fn set_bounds(&mut self, id: VarId, lower: f64, upper: f64) -> Result<()> {
        let v = self.variables.get_mut(id).ok_or(Error::UnknownVariable(id))?;
        v.lower = lower;
        v.upper = upper;
        Ok(())
    }

    pub fn fix(&mut self, id: VarId, value: f64) -> Result<()> {
        self.set_bounds(id, value, value)
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn objective(&self) -> &Objective {
        &self.objective
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn binaries(&self) -> Vec<VarId> {
        (0..self.variables.len()).filter(|&i| self.variables[i].kind == VarKind::Binary).collect()
    }

    pub fn objective_value(&self, point: &[f64]) -> f64 {
        match self.objective.sense {
            Sense::Feasibility => 0.0,
            _ => self.objective.constant + self.objective.coeffs.iter().map(|&(i, c)| c * point[i]).sum::<f64>(),
        }
    }

    /// Whether `point` satisfies every bound and constraint within `tol`.
    pub fn is_feasible(&self, point: &[f64], tol: f64) -> bool {
        if point.len() != self.variables.len() {
            return false;
        }
        let bounds_ok = self.variables.iter().zip(point).all(|(v, &x)| {
            x >= v.lower - tol && x <= v.upper + tol && (v.kind == VarKind::Continuous || (x - x.round()).abs() <= tol)
        });
        bounds_ok
            && self.constraints.iter().all(|c| {
                let lhs: f64 = c.coeffs.iter().map(|&(i, a)| a * point[i]).sum();
                match c.relation {
                    Relation::Le => lhs <= c.rhs + tol,
                    Relation::Ge => lhs >= c.rhs - tol,
                    Relation::Eq => (lhs - c.rhs).abs() <= tol,
                }
            })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveOutcome {
    pub status: LpStatus,
    /// Variable values, indexed by [`VarId`]; empty unless optimal.
    pub point: Vec<f64>,
    /// Objective value; zero for feasibility problems, NaN unless optimal.
    pub value: f64,
}

impl SolveOutcome {
    fn infeasible() -> Self {
        SolveOutcome { status: LpStatus::Infeasible, point: Vec::new(), value: f64::NAN }
    }

    fn unbounded() -> Self {
        SolveOutcome { status: LpStatus::Unbounded, point: Vec::new(), value: f64::NAN }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

// ---------------------------------------------------------------------------
// simplex

const EPS_PIVOT: f64 = 1e-9;
const EPS_COST: f64 = 1e-10;
const MAX_PIVOTS: usize = 200_000;

#[derive(Clone, Copy)]
enum ColMap {
    Fixed(f64),
    Shift { col: usize, lower: f64 },
    Flip { col: usize, upper: f64 },
    Split { pos: usize, neg: usize },
}

struct Tableau {
    rows: usize,
    cols: usize,
    a: Vec<f64>,
    basis: Vec<usize>,
    /// Reduced costs followed by minus the objective value.
    cost: Vec<f64>,
}

enum Phase {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn at(&self, i: usize, j: usize) -> f64 {
        self.a[i * (self.cols + 1) + j]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.a[i * (self.cols + 1) + self.cols]
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let w = self.cols + 1;
        let p = self.a[r * w + q];
        for j in 0..w {
            self.a[r * w + j] /= p;
        }
        self.a[r * w + q] = 1.0;
        let prow: Vec<f64> = self.a[r * w..(r + 1) * w].to_vec();
        for i in 0..self.rows {
            if i == r {
                continue;
            }
            let f = self.a[i * w + q];
            if f != 0.0 {
                for j in 0..w {
                    let v = self.a[i * w + j] - f * prow[j];
                    self.a[i * w + j] = if v.abs() < 1e-13 { 0.0 } else { v };
                }
                self.a[i * w + q] = 0.0;
            }
        }
        let f = self.cost[q];
        if f != 0.0 {
            for j in 0..w {
                self.cost[j] -= f * prow[j];
            }
            self.cost[q] = 0.0;
        }
        self.basis[r] = q;
    }

    fn set_costs(&mut self, c: &[f64]) {
        let w = self.cols + 1;
        self.cost = vec![0.0; w];
        self.cost[..self.cols].copy_from_slice(c);
        for i in 0..self.rows {
            let cb = c[self.basis[i]];
            if cb != 0.0 {
                for j in 0..w {
                    self.cost[j] -= cb * self.a[i * w + j];
                }
            }
        }
    }

    /// Minimizes the current cost row with Bland's rule over columns `< allowed`.
    fn run(&mut self, allowed: usize) -> Phase {
        for _ in 0..MAX_PIVOTS {
            let Some(q) = (0..allowed).find(|&j| self.cost[j] < -EPS_COST) else {
                return Phase::Optimal;
            };
            let mut best: Option<(usize, f64)> = None;
            for i in 0..self.rows {
                let aiq = self.at(i, q);
                if aiq > EPS_PIVOT {
                    let ratio = self.rhs(i).max(0.0) / aiq;
                    best = match best {
                        None => Some((i, ratio)),
                        Some((bi, br)) => {
                            if ratio < br - 1e-12 * (1.0 + br.abs())
                                || (ratio <= br + 1e-12 * (1.0 + br.abs()) && self.basis[i] < self.basis[bi])
                            {
                                Some((i, ratio))
                            } else {
                                Some((bi, br))
                            }
                        }
                    };
                }
            }
            match best {
                None => return Phase::Unbounded,
                Some((r, _)) => self.pivot(r, q),
            }
        }
        Phase::Optimal
    }
}

/// Solves the LP relaxation of `m` (binaries are treated as continuous in their bounds).
pub fn solve_lp(m: &LinearModel) -> SolveOutcome {
    // column mapping for the original variables
    let mut maps = Vec::with_capacity(m.variables.len());
    let mut ncols = 0usize;
    let mut bound_rows: Vec<(usize, f64)> = Vec::new();
    for v in &m.variables {
        if v.lower > v.upper + TAU_LP {
            return SolveOutcome::infeasible();
        }
        let map = if v.lower.is_finite() && v.upper.is_finite() && v.upper - v.lower <= 0.0 {
            ColMap::Fixed(v.lower)
        } else if v.lower.is_finite() {
            let col = ncols;
            ncols += 1;
            if v.upper.is_finite() {
                bound_rows.push((col, v.upper - v.lower));
            }
            ColMap::Shift { col, lower: v.lower }
        } else if v.upper.is_finite() {
            let col = ncols;
            ncols += 1;
            ColMap::Flip { col, upper: v.upper }
        } else {
            ncols += 2;
            ColMap::Split { pos: ncols - 2, neg: ncols - 1 }
        };
        maps.push(map);
    }
    let nstruct = ncols;

    // structural rows
    let mut rows: Vec<(Vec<f64>, Relation, f64)> = Vec::with_capacity(m.constraints.len() + bound_rows.len());
    for c in &m.constraints {
        let mut coef = vec![0.0; nstruct];
        let mut rhs = c.rhs;
        for &(id, a) in &c.coeffs {
            match maps[id] {
                ColMap::Fixed(v) => rhs -= a * v,
                ColMap::Shift { col, lower } => {
                    coef[col] += a;
                    rhs -= a * lower;
                }
                ColMap::Flip { col, upper } => {
                    coef[col] -= a;
                    rhs -= a * upper;
                }
                ColMap::Split { pos, neg } => {
                    coef[pos] += a;
                    coef[neg] -= a;
                }
            }
        }
        if coef.iter().all(|&x| x == 0.0) {
            let ok = match c.relation {
                Relation::Le => rhs >= -TAU_LP,
                Relation::Ge => rhs <= TAU_LP,
                Relation::Eq => rhs.abs() <= TAU_LP,
            };
            if !ok {
                return SolveOutcome::infeasible();
            }
            continue;
        }
        rows.push((coef, c.relation, rhs));
    }
    for &(col, ub) in &bound_rows {
        let mut coef = vec![0.0; nstruct];
        coef[col] = 1.0;
        rows.push((coef, Relation::Le, ub));
    }
    for row in rows.iter_mut() {
        if row.2 < 0.0 {
            row.0.iter_mut().for_each(|x| *x = -*x);
            row.2 = -row.2;
            row.1 = match row.1 {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            };
        }
    }

    let nrows = rows.len();
    let nslack = rows.iter().filter(|r| r.1 != Relation::Eq).count();
    let nart = rows.iter().filter(|r| r.1 != Relation::Le).count();
    let cols = nstruct + nslack + nart;
    let w = cols + 1;
    let mut t = Tableau { rows: nrows, cols, a: vec![0.0; nrows * w], basis: vec![0; nrows], cost: Vec::new() };
    let (mut s, mut art) = (nstruct, nstruct + nslack);
    for (i, (coef, rel, rhs)) in rows.iter().enumerate() {
        t.a[i * w..i * w + nstruct].copy_from_slice(coef);
        t.a[i * w + cols] = *rhs;
        match rel {
            Relation::Le => {
                t.a[i * w + s] = 1.0;
                t.basis[i] = s;
                s += 1;
            }
            Relation::Ge => {
                t.a[i * w + s] = -1.0;
                s += 1;
                t.a[i * w + art] = 1.0;
                t.basis[i] = art;
                art += 1;
            }
            Relation::Eq => {
                t.a[i * w + art] = 1.0;
                t.basis[i] = art;
                art += 1;
            }
        }
    }
    let first_art = nstruct + nslack;

    if nart > 0 {
        let mut c1 = vec![0.0; cols];
        c1[first_art..].iter_mut().for_each(|x| *x = 1.0);
        t.set_costs(&c1);
        t.run(cols);
        let scale = 1.0 + rows.iter().map(|r| r.2.abs()).fold(0.0, f64::max);
        let infeas: f64 = (0..nrows).filter(|&i| t.basis[i] >= first_art).map(|i| t.rhs(i)).sum();
        if infeas > 1e-9 * scale {
            return SolveOutcome::infeasible();
        }
        for i in 0..nrows {
            if t.basis[i] >= first_art {
                if let Some(j) = (0..first_art).find(|&j| t.at(i, j).abs() > EPS_PIVOT) {
                    t.pivot(i, j);
                }
            }
        }
    }

    let sense = m.objective.sense;
    if sense != Sense::Feasibility {
        let sign = if sense == Sense::Maximize { -1.0 } else { 1.0 };
        let mut c2 = vec![0.0; cols];
        for &(id, a) in &m.objective.coeffs {
            match maps[id] {
                ColMap::Fixed(_) => {}
                ColMap::Shift { col, .. } => c2[col] += sign * a,
                ColMap::Flip { col, .. } => c2[col] -= sign * a,
                ColMap::Split { pos, neg } => {
                    c2[pos] += sign * a;
                    c2[neg] -= sign * a;
                }
            }
        }
        t.set_costs(&c2);
        if let Phase::Unbounded = t.run(first_art) {
            return SolveOutcome::unbounded();
        }
    }

    let mut colval = vec![0.0; cols];
    for i in 0..nrows {
        colval[t.basis[i]] = t.rhs(i).max(0.0);
    }
    let point: Vec<f64> = maps
        .iter()
        .map(|mp| match *mp {
            ColMap::Fixed(v) => v,
            ColMap::Shift { col, lower } => lower + colval[col],
            ColMap::Flip { col, upper } => upper - colval[col],
            ColMap::Split { pos, neg } => colval[pos] - colval[neg],
        })
        .collect();
    let value = m.objective_value(&point);
    SolveOutcome { status: LpStatus::Optimal, point, value }
}

/// Branch-and-bound over the binary variables of `m`.
///
/// Depth-first; branches on the binary whose relaxed value is closest to 0.5
/// (lowest id on ties) and explores the nearer rounding first.
pub fn solve_milp(m: &LinearModel) -> SolveOutcome {
    let binaries = m.binaries();
    if binaries.is_empty() {
        return solve_lp(m);
    }
    let sign = match m.objective.sense {
        Sense::Maximize => -1.0,
        _ => 1.0,
    };
    let feasibility = m.objective.sense == Sense::Feasibility;
    let mut incumbent: Option<SolveOutcome> = None;
    let mut saw_unbounded = false;
    let mut stack: Vec<Vec<(VarId, f64)>> = vec![Vec::new()];
    let mut work = m.clone();
    while let Some(fixings) = stack.pop() {
        for &b in &binaries {
            let v = &m.variables[b];
            work.variables[b].lower = v.lower;
            work.variables[b].upper = v.upper;
        }
        for &(b, val) in &fixings {
            work.variables[b].lower = val;
            work.variables[b].upper = val;
        }
        let out = solve_lp(&work);
        match out.status {
            LpStatus::Infeasible => continue,
            LpStatus::Unbounded => {
                saw_unbounded = true;
                continue;
            }
            LpStatus::Optimal => {}
        }
        if let Some(inc) = &incumbent {
            if sign * out.value >= sign * inc.value - TAU_LP {
                continue;
            }
        }
        let branch = binaries.iter().copied().filter(|&b| (out.point[b] - out.point[b].round()).abs() > TAU_LP).min_by(
            |&a, &b| {
                let da = (out.point[a] - 0.5).abs();
                let db = (out.point[b] - 0.5).abs();
                da.partial_cmp(&db).unwrap().then(a.cmp(&b))
            },
        );
        match branch {
            None => {
                // polish with binaries pinned to exact integers
                let mut exact = work.clone();
                for &b in &binaries {
                    let r = out.point[b].round();
                    exact.variables[b].lower = r;
                    exact.variables[b].upper = r;
                }
                let polished = solve_lp(&exact);
                if !polished.is_optimal() {
                    let frac = |b: VarId| (out.point[b] - out.point[b].round()).abs();
                    if let Some(b) = binaries
                        .iter()
                        .copied()
                        .filter(|&b| frac(b) > 0.0)
                        .max_by(|&a, &b| frac(a).total_cmp(&frac(b)).then(b.cmp(&a)))
                    {
                        let near = out.point[b].round();
                        let mut far_fix = fixings.clone();
                        far_fix.push((b, 1.0 - near));
                        let mut near_fix = fixings;
                        near_fix.push((b, near));
                        stack.push(far_fix);
                        stack.push(near_fix);
                    }
                    continue;
                }
                let cand = polished;
                let better = incumbent.as_ref().is_none_or(|inc| sign * cand.value < sign * inc.value - TAU_LP);
                if better {
                    incumbent = Some(cand);
                }
                if feasibility {
                    break;
                }
            }
            Some(b) => {
                let near = if out.point[b] >= 0.5 { 1.0 } else { 0.0 };
                let mut far_fix = fixings.clone();
                far_fix.push((b, 1.0 - near));
                let mut near_fix = fixings;
                near_fix.push((b, near));
                stack.push(far_fix);
                stack.push(near_fix);
            }
        }
    }
    match incumbent {
        Some(inc) => inc,
        None if saw_unbounded => SolveOutcome::unbounded(),
        None => SolveOutcome::infeasible(),
    }
}

// ---------------------------------------------------------------------------
// set constraints

fn halfspace_rows(s: &GeometricSet) -> Result<Vec<(Vec<f64>, f64)>> {
    Ok(match s {
        GeometricSet::Hyperrectangle(h) => {
            let n = h.dim();
            let mut rows = Vec::with_capacity(2 * n);
            for j in 0..n {
                let mut e = vec![0.0; n];
                e[j] = 1.0;
                rows.push((e.clone(), h.center[j] + h.radius[j]));
                e[j] = -1.0;
                rows.push((e, h.radius[j] - h.center[j]));
            }
            rows
        }
        GeometricSet::HPolytope(p) => p.rows(),
        GeometricSet::Halfspace(h) => vec![(h.c.clone(), h.d)],
        GeometricSet::VPolytope(v) => crate::geometry::v_to_h(v)?.rows(),
        GeometricSet::PolytopeComplement(_) => return Err(Error::NonconvexSet),
    })
}

fn push_rows(m: &mut LinearModel, rows: Vec<(Vec<f64>, f64)>, vars: &[VarId], rel: Relation, shift: f64) -> Result<()> {
    for (a, d) in rows {
        let coeffs = vars.iter().copied().zip(a).filter(|(_, c)| *c != 0.0).collect();
        m.add_constraint(coeffs, rel, d + shift)?;
    }
    Ok(())
}

/// Adds `vars ∈ s` for a convex set `s`.
pub fn add_set_constraint(m: &mut LinearModel, s: &GeometricSet, vars: &[VarId]) -> Result<()> {
    check_dim("set constraint", s.dim(), vars.len())?;
    let rows = halfspace_rows(s)?;
    push_rows(m, rows, vars, Relation::Le, 0.0)
}

/// Adds `vars ∉ s` where the complement of `s` is convex.
///
/// The complement of a halfspace `cᵀy ≤ d` is closed to `cᵀy ≥ d + STRICT_MARGIN`;
/// the complement of a polytope complement is its inner polytope.
pub fn add_complement_constraint(m: &mut LinearModel, s: &GeometricSet, vars: &[VarId]) -> Result<()> {
    check_dim("complement constraint", s.dim(), vars.len())?;
    match s {
        GeometricSet::Halfspace(h) => push_rows(m, vec![(h.c.clone(), h.d)], vars, Relation::Ge, STRICT_MARGIN),
        GeometricSet::PolytopeComplement(pc) => push_rows(m, pc.inner.rows(), vars, Relation::Le, 0.0),
        _ => Err(Error::NonconvexComplement),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{HPolytope, Halfspace, Hyperrectangle, PolytopeComplement};

    #[test]
    fn small_lps() {
        let mut m = LinearModel::new();
        let x = m.add_continuous(0.0, 1.0);
        let y = m.add_continuous(0.0, 1.0);
        m.set_objective(vec![(x, 1.0), (y, 1.0)], 0.0, Sense::Maximize).unwrap();
        let out = solve_lp(&m);
        assert_eq!(out.status, LpStatus::Optimal);
        assert!((out.value - 2.0).abs() < 1e-9);
        assert!((out.point[x] - 1.0).abs() < 1e-9 && (out.point[y] - 1.0).abs() < 1e-9);

        let mut m = LinearModel::new();
        let x = m.add_free();
        m.add_constraint(vec![(x, 1.0)], Relation::Le, 1.0).unwrap();
        m.add_constraint(vec![(x, -1.0)], Relation::Le, -2.0).unwrap();
        assert_eq!(solve_lp(&m).status, LpStatus::Infeasible);

        let mut m = LinearModel::new();
        let x = m.add_continuous(0.0, f64::INFINITY);
        m.set_objective(vec![(x, 1.0)], 0.0, Sense::Maximize).unwrap();
        assert_eq!(solve_lp(&m).status, LpStatus::Unbounded);
    }

    #[test]
    fn equality_and_free_vars() {
        let mut m = LinearModel::new();
        let x = m.add_free();
        let y = m.add_free();
        m.add_constraint(vec![(x, 1.0), (y, 1.0)], Relation::Eq, -3.0).unwrap();
        m.add_constraint(vec![(x, 1.0), (y, -1.0)], Relation::Ge, 1.0).unwrap();
        m.add_constraint(vec![(y, 1.0)], Relation::Ge, -10.0).unwrap();
        m.set_objective(vec![(x, 1.0)], 0.5, Sense::Minimize).unwrap();
        let out = solve_lp(&m);
        assert_eq!(out.status, LpStatus::Optimal);
        assert!((out.point[x] + 1.0).abs() < 1e-9, "{:?}", out.point);
        assert!((out.value + 0.5).abs() < 1e-9);
        assert!(m.is_feasible(&out.point, 1e-9));
    }

    #[test]
    fn milp_examples() {
        let mut m = LinearModel::new();
        let x = m.add_binary();
        m.add_constraint(vec![(x, 1.0)], Relation::Le, 0.6).unwrap();
        m.set_objective(vec![(x, 1.0)], 0.0, Sense::Maximize).unwrap();
        let out = solve_milp(&m);
        assert_eq!(out.status, LpStatus::Optimal);
        assert_eq!(out.point[x], 0.0);

        let mut m = LinearModel::new();
        let x = m.add_binary();
        let y = m.add_binary();
        m.add_constraint(vec![(x, 1.0), (y, 1.0)], Relation::Le, 1.0).unwrap();
        m.set_objective(vec![(x, 1.0), (y, 1.0)], 0.0, Sense::Maximize).unwrap();
        let out = solve_milp(&m);
        assert!((out.value - 1.0).abs() < 1e-9);
        assert_eq!((out.point[x], out.point[y]), (1.0, 0.0));
    }

    #[test]
    fn set_constraints() {
        let mut m = LinearModel::new();
        let v = m.add_free_vec(1);
        add_set_constraint(&mut m, &Hyperrectangle::new(vec![0.0], vec![1.0]).unwrap().into(), &v).unwrap();
        assert_eq!(m.constraints().len(), 2);
        assert_eq!(m.constraints()[0].rhs, 1.0);
        assert_eq!(m.constraints()[1].coeffs, vec![(v[0], -1.0)]);
        assert_eq!(m.constraints()[1].rhs, 1.0);

        let mut m = LinearModel::new();
        let v = m.add_free_vec(2);
        add_set_constraint(&mut m, &Halfspace::new(vec![1.0, -1.0], 0.0).unwrap().into(), &v).unwrap();
        assert_eq!(m.constraints()[0].coeffs, vec![(v[0], 1.0), (v[1], -1.0)]);

        let p = HPolytope::from_rows(&[vec![1.0, 2.0], vec![-1.0, 0.0]], vec![3.0, 4.0]).unwrap();
        let mut m = LinearModel::new();
        let v = m.add_free_vec(2);
        add_set_constraint(&mut m, &p.clone().into(), &v).unwrap();
        assert_eq!(m.constraints().len(), 2);
        assert_eq!(m.constraints()[1].rhs, 4.0);

        let pc: GeometricSet = PolytopeComplement::new(p.clone()).into();
        assert_eq!(add_set_constraint(&mut m, &pc, &v), Err(Error::NonconvexSet));
        assert_eq!(add_complement_constraint(&mut m, &p.clone().into(), &v), Err(Error::NonconvexComplement));
        let before = m.constraints().len();
        add_complement_constraint(&mut m, &pc, &v).unwrap();
        assert_eq!(m.constraints().len(), before + 2);

        let mut m = LinearModel::new();
        let y = m.add_free_vec(1);
        add_complement_constraint(&mut m, &Halfspace::new(vec![1.0], 0.5).unwrap().into(), &y).unwrap();
        assert_eq!(m.constraints()[0].relation, Relation::Ge);
        assert!((m.constraints()[0].rhs - 0.5).abs() <= STRICT_MARGIN);
    }
}
