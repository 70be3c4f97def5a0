//! Search combined with optimization: Sherlock, BaB, Planet and Reluplex.

use nnv_core::bounds::{bounds_from_box, get_bounds, get_gradient, LayerBounds};
use nnv_core::encoding::{encode_network, encode_network_onto, objective, EncodingKind, NetworkVars, ObjectiveKind};
use nnv_core::geometry::{split_interval, GeometricSet, Halfspace, Hyperrectangle};
use nnv_core::lp::{add_complement_constraint, add_set_constraint, solve_lp, LinearModel, LpStatus, Relation};
use nnv_core::sat::{sat_solve, Cnf};
use nnv_core::{
    get_activation, Activation, ActivationPattern, Error, Network, Result, Status, VerificationProblem,
    VerificationResult, TAU_SET,
};

use crate::deadline;
use crate::primal::{solve_nsverify, NsVerifyConfig};
use crate::util::{input_box, output_interval, single_output, verified};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SherlockConfig {
    pub epsilon: f64,
}

impl Default for SherlockConfig {
    fn default() -> Self {
        SherlockConfig { epsilon: 0.1 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BabConfig {
    pub epsilon: f64,
    /// Largest number of domain splits per bound direction.
    pub max_iter: usize,
}

impl Default for BabConfig {
    fn default() -> Self {
        BabConfig { epsilon: 0.1, max_iter: 10_000 }
    }
}

fn check_epsilon(eps: f64) -> Result<()> {
    if eps.is_finite() && eps > 0.0 {
        Ok(())
    } else {
        Err(Error::Invalid("epsilon must be positive".into()))
    }
}

fn scalar(net: &Network, x: &[f64]) -> Result<f64> {
    Ok(net.forward(x)?[0])
}

/// An achieved output value with its input.
#[derive(Clone, Debug)]
struct Witness {
    x: Vec<f64>,
    value: f64,
}

/// Decision from bounds on a single output: `low` and `high` are attained
/// values, `reach` encloses every output.
fn interpret(p: &VerificationProblem, low: &Witness, high: &Witness, reach: (f64, f64)) -> Result<VerificationResult> {
    let (ylo, yhi) = output_interval(&p.output)?;
    let rset = || {
        vec![GeometricSet::Hyperrectangle(Hyperrectangle::from_bounds(&[reach.0], &[reach.1.max(reach.0)]).unwrap())]
    };
    if reach.0 >= ylo - TAU_SET && reach.1 <= yhi + TAU_SET {
        return Ok(VerificationResult::reachable(Status::Holds, rset()));
    }
    for (w, out) in [(high, high.value > yhi + TAU_SET), (low, low.value < ylo - TAU_SET)] {
        if out {
            if let Some(x) = verified(p, w.x.clone()) {
                return Ok(VerificationResult::counter_example(x));
            }
        }
    }
    Ok(VerificationResult::reachable(Status::Unknown, rset()))
}

/// Best point of the linear region of `x`, moving along the local gradient.
fn local_search(p: &VerificationProblem, x: &[f64], index: f64) -> Result<Witness> {
    let delta = get_activation(&p.network, x)?;
    let g = get_gradient(&p.network, x)?;
    let c: Vec<f64> = g.row(0).iter().map(|v| index * v).collect();
    let mut m = LinearModel::new();
    let vars = encode_network(&mut m, &p.network, EncodingKind::StandardLP(&delta))?;
    add_set_constraint(&mut m, &p.input, vars.input())?;
    objective(&mut m, ObjectiveKind::Linear { c: &c, d: 0.0 }, vars.input())?;
    let out = solve_lp(&m);
    let x = match out.status {
        LpStatus::Optimal => p.input.as_hyperrectangle().map_or_else(
            || vars.input().iter().map(|&v| out.point[v]).collect(),
            |h| h.clamp(&vars.input().iter().map(|&v| out.point[v]).collect::<Vec<_>>()),
        ),
        _ => x.to_vec(),
    };
    let value = scalar(&p.network, &x)?;
    Ok(Witness { x, value })
}

/// Alternates local and global search for one side of the output range.
fn sherlock_bound(p: &VerificationProblem, eps: f64, index: f64) -> Result<Option<Witness>> {
    let x = input_box(p)?;
    let mut best = Witness { x: x.center.clone(), value: scalar(&p.network, &x.center)? };
    loop {
        if deadline::expired() {
            return Ok(None);
        }
        let local = local_search(p, &best.x, index)?;
        if index * local.value >= index * best.value {
            best = local;
        }
        let target = best.value + index * eps;
        let q = VerificationProblem::new(
            p.network.clone(),
            p.input.clone(),
            Halfspace::new(vec![index], index * target)?.into(),
        )?;
        let r = solve_nsverify(&q, NsVerifyConfig::default())?;
        match (r.status, r.counter_example_point()) {
            (Status::Violated, Some(x)) => {
                let value = scalar(&p.network, x)?;
                best = Witness { x: x.to_vec(), value };
            }
            (Status::Holds, _) => return Ok(Some(best)),
            _ => return Ok(None),
        }
    }
}

fn sherlock_witnesses(p: &VerificationProblem, cfg: SherlockConfig) -> Result<Option<(Witness, Witness)>> {
    check_epsilon(cfg.epsilon)?;
    single_output(p)?;
    input_box(p)?;
    Ok(match (sherlock_bound(p, cfg.epsilon, -1.0)?, sherlock_bound(p, cfg.epsilon, 1.0)?) {
        (Some(low), Some(high)) => Some((low, high)),
        _ => None,
    })
}

/// Attained output range; the exact range lies within `epsilon` of it.
pub fn sherlock_range(p: &VerificationProblem, cfg: SherlockConfig) -> Result<Option<(f64, f64)>> {
    Ok(sherlock_witnesses(p, cfg)?.map(|(l, h)| (l.value, h.value)))
}

/// Output range by local and global search.
pub fn solve_sherlock(p: &VerificationProblem, cfg: SherlockConfig) -> Result<VerificationResult> {
    output_interval(&p.output)?;
    let Some((low, high)) = sherlock_witnesses(p, cfg)? else {
        return Ok(VerificationResult::unknown());
    };
    interpret(p, &low, &high, (low.value - cfg.epsilon, high.value + cfg.epsilon))
}

/// Best of the center and the two extreme corners of `dom`.
fn concrete_bound(net: &Network, dom: &Hyperrectangle, index: f64) -> Result<Witness> {
    let mut best: Option<Witness> = None;
    for x in [dom.center.clone(), dom.low(), dom.high()] {
        let value = scalar(net, &x)?;
        if best.as_ref().is_none_or(|b| index * value > index * b.value) {
            best = Some(Witness { x, value });
        }
    }
    Ok(best.unwrap())
}

/// Bound on the output over `dom` from the triangle relaxation.
fn approx_bound(net: &Network, dom: &Hyperrectangle, index: f64) -> Result<f64> {
    let b = bounds_from_box(net, dom);
    let mut m = LinearModel::new();
    let vars = encode_network(&mut m, net, EncodingKind::TriangularRelaxedLP(&b))?;
    add_set_constraint(&mut m, &GeometricSet::Hyperrectangle(dom.clone()), vars.input())?;
    let kind = if index > 0.0 { ObjectiveKind::MaxSum } else { ObjectiveKind::MinSum };
    objective(&mut m, kind, vars.output())?;
    let out = solve_lp(&m);
    Ok(if out.is_optimal() {
        out.value
    } else if index > 0.0 {
        b.output().high()[0]
    } else {
        b.output().low()[0]
    })
}

fn longest_dim(dom: &Hyperrectangle) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &r) in dom.radius.iter().enumerate() {
        if r > 0.0 && best.is_none_or(|(_, b)| r > b) {
            best = Some((i, r));
        }
    }
    best.map(|(i, _)| i)
}

/// Concrete and approximated bound for one side of the output range.
///
/// The approximated bound is the largest relaxation value over all live and
/// pruned domains.
fn bab_bound(net: &Network, root: &Hyperrectangle, cfg: BabConfig, index: f64) -> Result<(Witness, f64)> {
    let mut concrete = concrete_bound(net, root, index)?;
    let mut doms: Vec<(f64, Hyperrectangle)> = vec![(approx_bound(net, root, index)?, root.clone())];
    let mut pruned = f64::NEG_INFINITY;
    let global = |doms: &[(f64, Hyperrectangle)], pruned: f64| {
        index * doms.first().map_or(pruned, |d| (index * d.0).max(pruned))
    };
    let mut approx = global(&doms, pruned);
    let mut iter = 0;
    while index * (approx - concrete.value) > cfg.epsilon && iter < cfg.max_iter && !deadline::expired() {
        iter += 1;
        let (a, dom) = doms.remove(0);
        let Some(k) = longest_dim(&dom) else {
            pruned = pruned.max(index * a);
            approx = global(&doms, pruned);
            continue;
        };
        let (left, right) = split_interval(&dom, k)?;
        for sub in [left, right] {
            let c = concrete_bound(net, &sub, index)?;
            if index * c.value > index * concrete.value {
                concrete = c;
            }
            let a = approx_bound(net, &sub, index)?;
            if index * (a - concrete.value) > cfg.epsilon {
                let at = doms.partition_point(|d| index * d.0 >= index * a);
                doms.insert(at, (a, sub));
            } else {
                pruned = pruned.max(index * a);
            }
        }
        approx = global(&doms, pruned);
    }
    Ok((concrete, approx))
}

/// Attained range and enclosing range of the single output over the input box.
pub fn bab_range(p: &VerificationProblem, cfg: BabConfig) -> Result<((f64, f64), (f64, f64))> {
    let ((low, l), (high, u)) = bab_witnesses(p, cfg)?;
    Ok(((low.value, high.value), (l, u)))
}

fn bab_witnesses(p: &VerificationProblem, cfg: BabConfig) -> Result<((Witness, f64), (Witness, f64))> {
    check_epsilon(cfg.epsilon)?;
    single_output(p)?;
    let x = input_box(p)?;
    Ok((bab_bound(&p.network, x, cfg, -1.0)?, bab_bound(&p.network, x, cfg, 1.0)?))
}

/// Output range by branch and bound over the input box.
pub fn solve_bab(p: &VerificationProblem, cfg: BabConfig) -> Result<VerificationResult> {
    output_interval(&p.output)?;
    let ((low, l), (high, u)) = bab_witnesses(p, cfg)?;
    interpret(p, &low, &high, (l, u))
}

/// ReLU nodes as `(layer, node)`; node `k` in this list has SAT variable `k + 1`.
fn relu_nodes(net: &Network) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (i, layer) in net.layers().iter().enumerate() {
        if layer.activation == Activation::ReLU {
            out.extend((0..layer.output_dim()).map(|j| (i, j)));
        }
    }
    out
}

/// Starting clauses: a unit clause for every node with a known phase and a
/// tautology for every undetermined one.
pub fn planet_initial_clauses(net: &Network, bounds: &LayerBounds) -> Vec<Vec<i32>> {
    relu_nodes(net)
        .into_iter()
        .enumerate()
        .map(|(k, (i, j))| {
            let id = k as i32 + 1;
            let (l, u) = (bounds.pre[i].low()[j], bounds.pre[i].high()[j]);
            if l > 0.0 {
                vec![id]
            } else if u < 0.0 {
                vec![-id]
            } else {
                vec![id, -id]
            }
        })
        .collect()
}

fn pattern_from(net: &Network, nodes: &[(usize, usize)], assign: &[bool]) -> ActivationPattern {
    let mut pattern: Vec<Vec<bool>> = net.layers().iter().map(|l| vec![true; l.output_dim()]).collect();
    for (k, &(i, j)) in nodes.iter().enumerate() {
        pattern[i][j] = assign[k];
    }
    ActivationPattern(pattern)
}

/// Triangle relaxation with `x ∈ X` and `y ∉ Y`.
fn relaxed_model(p: &VerificationProblem, bounds: &LayerBounds) -> Result<(LinearModel, NetworkVars)> {
    let mut m = LinearModel::new();
    let vars = encode_network(&mut m, &p.network, EncodingKind::TriangularRelaxedLP(bounds))?;
    add_set_constraint(&mut m, &p.input, vars.input())?;
    add_complement_constraint(&mut m, &p.output, vars.output())?;
    Ok((m, vars))
}

enum Elastic {
    Violated(Vec<f64>),
    Conflict(Vec<i32>),
    Unknown,
}

/// Fixes the largest slack to zero until the relaxed model is infeasible or
/// no slack is left.
fn elastic_filtering(
    p: &VerificationProblem,
    bounds: &LayerBounds,
    nodes: &[(usize, usize)],
    assign: &[bool],
) -> Result<Elastic> {
    let delta = pattern_from(&p.network, nodes, assign);
    let mut fixed: Vec<usize> = Vec::new();
    loop {
        let (mut m, vars) = relaxed_model(p, bounds)?;
        let sl = encode_network_onto(&mut m, &p.network, EncodingKind::SlackLP(&delta), vars.z.clone())?;
        let slacks: Vec<_> = nodes.iter().map(|&(i, j)| sl.slack[i][j].unwrap()).collect();
        for &k in &fixed {
            m.fix(slacks[k], 0.0)?;
        }
        objective(&mut m, ObjectiveKind::MinSum, &slacks)?;
        let out = solve_lp(&m);
        match out.status {
            LpStatus::Infeasible => {
                let clause = fixed.iter().map(|&k| if assign[k] { -(k as i32 + 1) } else { k as i32 + 1 }).collect();
                return Ok(Elastic::Conflict(clause));
            }
            LpStatus::Unbounded => return Ok(Elastic::Unknown),
            LpStatus::Optimal => {}
        }
        let mut best: Option<(usize, f64)> = None;
        for (k, &s) in slacks.iter().enumerate() {
            let v = out.point[s];
            if !fixed.contains(&k) && v > 1e-9 && best.is_none_or(|(_, b)| v > b) {
                best = Some((k, v));
            }
        }
        match best {
            Some((k, _)) => fixed.push(k),
            None => {
                let x = vars.input().iter().map(|&v| out.point[v]).collect();
                return Ok(verified(p, x).map_or(Elastic::Unknown, Elastic::Violated));
            }
        }
    }
}

/// SAT search over activation patterns with LP conflict analysis.
pub fn solve_planet(p: &VerificationProblem) -> Result<VerificationResult> {
    input_box(p)?;
    let bounds = get_bounds(p)?;
    for kind in [ObjectiveKind::MinSum, ObjectiveKind::MaxSum] {
        let (mut m, vars) = relaxed_model(p, &bounds)?;
        let all: Vec<_> = vars.z.iter().flatten().copied().collect();
        objective(&mut m, kind, &all)?;
        if solve_lp(&m).status == LpStatus::Infeasible {
            return Ok(VerificationResult::holds());
        }
    }
    let nodes = relu_nodes(&p.network);
    let mut cnf = Cnf::new(nodes.len(), planet_initial_clauses(&p.network, &bounds))?;
    loop {
        if deadline::expired() {
            return Ok(VerificationResult::unknown());
        }
        let Some(assign) = sat_solve(&cnf) else {
            return Ok(VerificationResult::holds());
        };
        match elastic_filtering(p, &bounds, &nodes, &assign)? {
            Elastic::Violated(x) => return Ok(VerificationResult::counter_example(x)),
            Elastic::Unknown => return Ok(VerificationResult::unknown()),
            Elastic::Conflict(clause) if clause.is_empty() => return Ok(VerificationResult::holds()),
            Elastic::Conflict(clause) => cnf.add_clause(clause)?,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum NodeStatus {
    Free,
    Active,
    Inactive,
}

struct ReluplexModel {
    m: LinearModel,
    input: Vec<usize>,
    /// `(ẑ, z)` per ReLU node, in the order of [`relu_nodes`].
    pairs: Vec<(usize, usize)>,
}

fn reluplex_model(p: &VerificationProblem, bounds: &LayerBounds, status: &[NodeStatus]) -> Result<ReluplexModel> {
    let mut m = LinearModel::new();
    let input = m.add_free_vec(p.network.input_dim());
    add_set_constraint(&mut m, &p.input, &input)?;
    let mut prev = input.clone();
    let mut pairs = Vec::new();
    for (i, layer) in p.network.layers().iter().enumerate() {
        let (l, u) = bounds.pre_bounds(i);
        let mut cur = Vec::new();
        for j in 0..layer.output_dim() {
            let zh = m.add_continuous(l[j], u[j]);
            let mut row: Vec<(usize, f64)> =
                prev.iter().enumerate().map(|(k, &v)| (v, -layer.weights[(j, k)])).collect();
            row.push((zh, 1.0));
            m.add_constraint(row, Relation::Eq, layer.bias[j])?;
            let z = m.add_free();
            if layer.activation == Activation::Id {
                m.add_constraint(vec![(z, 1.0), (zh, -1.0)], Relation::Eq, 0.0)?;
            } else {
                m.add_constraint(vec![(z, 1.0)], Relation::Ge, 0.0)?;
                m.add_constraint(vec![(z, 1.0), (zh, -1.0)], Relation::Ge, 0.0)?;
                match status[pairs.len()] {
                    NodeStatus::Free => {}
                    NodeStatus::Active => {
                        m.add_constraint(vec![(z, 1.0), (zh, -1.0)], Relation::Eq, 0.0)?;
                        m.add_constraint(vec![(zh, 1.0)], Relation::Ge, 0.0)?;
                    }
                    NodeStatus::Inactive => {
                        m.add_constraint(vec![(zh, 1.0)], Relation::Le, 0.0)?;
                        m.add_constraint(vec![(z, 1.0)], Relation::Eq, 0.0)?;
                    }
                }
                pairs.push((zh, z));
            }
            cur.push(z);
        }
        prev = cur;
    }
    add_complement_constraint(&mut m, &p.output, &prev)?;
    Ok(ReluplexModel { m, input, pairs })
}

/// Depth-first search over ReLU phases, fixing one broken node per level.
pub fn solve_reluplex(p: &VerificationProblem) -> Result<VerificationResult> {
    input_box(p)?;
    let bounds = get_bounds(p)?;
    let count = relu_nodes(&p.network).len();
    let mut stack = vec![vec![NodeStatus::Free; count]];
    while let Some(status) = stack.pop() {
        if deadline::expired() {
            return Ok(VerificationResult::unknown());
        }
        let model = reluplex_model(p, &bounds, &status)?;
        let out = solve_lp(&model.m);
        if !out.is_optimal() {
            continue;
        }
        let gap = |k: usize| {
            let (zh, z) = model.pairs[k];
            (out.point[z] - out.point[zh].max(0.0)).abs()
        };
        let free = |k: &usize| status[*k] == NodeStatus::Free;
        let mut broken = (0..count).filter(free).find(|&k| gap(k) > 1e-6);
        if broken.is_none() {
            let x = model.input.iter().map(|&v| out.point[v]).collect();
            if let Some(x) = verified(p, x) {
                return Ok(VerificationResult::counter_example(x));
            }
            broken = (0..count).filter(free).find(|&k| gap(k) > 1e-12);
        }
        if let Some(k) = broken {
            for s in [NodeStatus::Inactive, NodeStatus::Active] {
                let mut next = status.clone();
                next[k] = s;
                stack.push(next);
            }
        }
    }
    Ok(VerificationResult::holds())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::is_counter_example;
    use crate::util::fixtures::*;

    fn interval(lo: f64, hi: f64) -> GeometricSet {
        Hyperrectangle::from_bounds(&[lo], &[hi]).unwrap().into()
    }

    #[test]
    fn sherlock_examples() {
        let p = prob(net_abs(), boxed(0.0, 1.0), interval(-0.2, 1.2));
        let high = sherlock_bound(&p, 0.1, 1.0).unwrap().unwrap();
        let low = sherlock_bound(&p, 0.1, -1.0).unwrap().unwrap();
        assert!((high.value - 1.0).abs() < 1e-9 && low.value.abs() < 1e-9);
        assert_eq!(solve_sherlock(&p, SherlockConfig::default()).unwrap().status, Status::Holds);
        let p = prob(net_abs(), boxed(0.0, 1.0), interval(0.0, 0.5));
        let r = solve_sherlock(&p, SherlockConfig::default()).unwrap();
        let x = r.counter_example_point().unwrap();
        assert!((scalar(&p.network, x).unwrap() - 1.0).abs() < 1e-9);
        let two = prob(net_abs(), boxed(0.0, 1.0), below(1.0));
        assert!(solve_sherlock(&two, SherlockConfig::default()).is_ok());
    }

    #[test]
    fn bab_examples() {
        let root = Hyperrectangle::new(vec![0.0], vec![1.0]).unwrap();
        assert!((approx_bound(&net_abs(), &root, 1.0).unwrap() - 1.0).abs() < 1e-9);
        let (c, a) = bab_bound(&net_abs(), &root, BabConfig { epsilon: 0.05, max_iter: 0 }, 1.0).unwrap();
        assert!((c.value - 1.0).abs() < 1e-12 && (a - 1.0).abs() < 1e-9);
        let (c, a) = bab_bound(&net_id(), &root, BabConfig::default(), -1.0).unwrap();
        assert_eq!((c.value, a), (-1.0, -1.0));
        let p = prob(net_abs(), boxed(0.0, 1.0), interval(-0.2, 1.2));
        assert_eq!(solve_bab(&p, BabConfig::default()).unwrap().status, Status::Holds);
        let p = prob(net_abs(), boxed(0.0, 1.0), interval(0.0, 0.5));
        let r = solve_bab(&p, BabConfig::default()).unwrap();
        assert!(is_counter_example(&p, r.counter_example_point().unwrap()));
    }

    #[test]
    fn bab_lower_bound_converges() {
        let root = Hyperrectangle::new(vec![0.0], vec![1.0]).unwrap();
        let (c, a) = bab_bound(&net_abs(), &root, BabConfig { epsilon: 0.01, max_iter: 10_000 }, -1.0).unwrap();
        assert!(c.value.abs() < 1e-12);
        assert!(a <= c.value && c.value - a <= 0.01 + 1e-12, "{a}");
    }

    #[test]
    fn sherlock_rejects_multiple_outputs() {
        let net =
            Network::new(vec![
                nnv_core::Layer::from_rows(&[vec![1.0], vec![2.0]], vec![0.0, 0.0], Activation::Id).unwrap()
            ])
            .unwrap();
        let y = Hyperrectangle::from_bounds(&[0.0, 0.0], &[1.0, 1.0]).unwrap().into();
        let p = prob(net, boxed(0.0, 1.0), y);
        assert!(matches!(solve_sherlock(&p, SherlockConfig::default()), Err(Error::Unsupported(_))));
        assert!(matches!(solve_bab(&p, BabConfig::default()), Err(Error::Unsupported(_))));
    }

    #[test]
    fn planet_examples() {
        assert_eq!(solve_planet(&prob_hold()).unwrap().status, Status::Holds);
        let p = prob_viol();
        let r = solve_planet(&p).unwrap();
        let x = r.counter_example_point().unwrap();
        assert!(is_counter_example(&p, x) && x[0].abs() >= 0.5);
        let b = get_bounds(&p).unwrap();
        let clauses = planet_initial_clauses(&p.network, &b);
        assert_eq!(clauses, vec![vec![1, -1], vec![2, -2]]);
        assert_eq!(clauses.iter().map(Vec::len).sum::<usize>(), 4);
    }

    #[test]
    fn reluplex_examples() {
        assert_eq!(solve_reluplex(&prob_hold()).unwrap().status, Status::Holds);
        let p = prob_viol();
        let r = solve_reluplex(&p).unwrap();
        assert!(is_counter_example(&p, r.counter_example_point().unwrap()));
    }
}
