//! MILP and LP falsification: NSVerify, MIPVerify and ILP.

use nnv_core::bounds::get_bounds;
use nnv_core::encoding::{
    default_big_m, encode_network, objective, pre_activation, EncodingKind, NetworkVars, ObjectiveKind,
};
use nnv_core::lp::{
    add_complement_constraint, add_set_constraint, solve_lp, solve_milp, LinearModel, LpStatus, Relation, Sense,
};
use nnv_core::{
    get_activation, Activation, ActivationPattern, Result, Status, VerificationProblem, VerificationResult,
};

use crate::deadline;
use crate::util::{input_box, uniform_radius, verified};

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct NsVerifyConfig {
    /// Big-M constant; `None` derives one from interval bounds.
    pub m: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IlpConfig {
    pub iterative: bool,
}

impl Default for IlpConfig {
    fn default() -> Self {
        IlpConfig { iterative: true }
    }
}

/// Searches for an input in `X` mapping outside `Y` with a big-M encoding.
pub fn solve_nsverify(p: &VerificationProblem, cfg: NsVerifyConfig) -> Result<VerificationResult> {
    let big = match cfg.m {
        Some(m) => m,
        None => default_big_m(&get_bounds(p)?),
    };
    let mut m = LinearModel::new();
    let vars = encode_network(&mut m, &p.network, EncodingKind::NaiveMIP(big))?;
    add_set_constraint(&mut m, &p.input, vars.input())?;
    add_complement_constraint(&mut m, &p.output, vars.output())?;
    objective(&mut m, ObjectiveKind::Feasibility, vars.input())?;
    let out = solve_milp(&m);
    Ok(match out.status {
        LpStatus::Infeasible => VerificationResult::holds(),
        LpStatus::Optimal => {
            let x = vars.input().iter().map(|&v| out.point[v]).collect();
            verified(p, x).map_or_else(VerificationResult::unknown, VerificationResult::counter_example)
        }
        LpStatus::Unbounded => VerificationResult::unknown(),
    })
}

/// Smallest ∞-distance from the input center to a violating input.
pub fn solve_mipverify(p: &VerificationProblem) -> Result<VerificationResult> {
    let x = input_box(p)?;
    let eps = uniform_radius(x)?;
    let bounds = get_bounds(p)?;
    let mut m = LinearModel::new();
    let vars = encode_network(&mut m, &p.network, EncodingKind::BoundedMIP(&bounds))?;
    add_complement_constraint(&mut m, &p.output, vars.output())?;
    let t = objective(&mut m, ObjectiveKind::MaxDisturbance { center: &x.center }, vars.input())?.unwrap();
    let out = solve_milp(&m);
    Ok(match out.status {
        LpStatus::Infeasible => VerificationResult::holds(),
        LpStatus::Optimal if out.point[t] >= eps => VerificationResult::holds(),
        LpStatus::Optimal => VerificationResult::disturbance(Status::Violated, out.point[t]),
        LpStatus::Unbounded => VerificationResult::unknown(),
    })
}

/// ReLU nodes as `(layer, node)` in network order.
fn relu_nodes(p: &VerificationProblem) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (i, layer) in p.network.layers().iter().enumerate() {
        if layer.activation == Activation::ReLU {
            out.extend((0..layer.output_dim()).map(|j| (i, j)));
        }
    }
    out
}

/// Adds `(2δ − 1)ẑ ≥ 0` for node `(i, j)`.
fn add_sign(
    m: &mut LinearModel,
    p: &VerificationProblem,
    vars: &NetworkVars,
    delta: &ActivationPattern,
    (i, j): (usize, usize),
) -> Result<()> {
    let (coeffs, c) = pre_activation(&p.network.layers()[i], j, &vars.z[i]);
    let rel = if delta.0[i][j] { Relation::Ge } else { Relation::Le };
    m.add_constraint(coeffs, rel, -c)
}

/// First node whose value at `point` breaks its sign constraint, in network order.
fn match_activation(
    p: &VerificationProblem,
    vars: &NetworkVars,
    delta: &ActivationPattern,
    point: &[f64],
    skip: &[(usize, usize)],
) -> Option<(usize, usize)> {
    relu_nodes(p).into_iter().filter(|n| !skip.contains(n)).find(|&(i, j)| {
        let (coeffs, c) = pre_activation(&p.network.layers()[i], j, &vars.z[i]);
        let zh = c + coeffs.iter().map(|&(v, w)| w * point[v]).sum::<f64>();
        let tol = 1e-9 * (1.0 + zh.abs());
        if delta.0[i][j] {
            zh < -tol
        } else {
            zh > tol
        }
    })
}

/// Whether every point of the input box has activation pattern `delta`, up to ties.
fn pattern_covers_input(p: &VerificationProblem, delta: &ActivationPattern) -> Result<bool> {
    for (i, j) in relu_nodes(p) {
        let mut m = LinearModel::new();
        let vars = encode_network(&mut m, &p.network, EncodingKind::LinearRelaxedLP(delta))?;
        add_set_constraint(&mut m, &p.input, vars.input())?;
        let (coeffs, c) = pre_activation(&p.network.layers()[i], j, &vars.z[i]);
        let sense = if delta.0[i][j] { Sense::Minimize } else { Sense::Maximize };
        m.set_objective(coeffs, c, sense)?;
        let out = solve_lp(&m);
        if !out.is_optimal() {
            return Ok(false);
        }
        let ok = if delta.0[i][j] { out.value >= -1e-9 } else { out.value <= 1e-9 };
        if !ok {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Disturbance search restricted to the linear region of the input center.
pub fn solve_ilp(p: &VerificationProblem, cfg: IlpConfig) -> Result<VerificationResult> {
    let x = input_box(p)?;
    let delta = get_activation(&p.network, &x.center)?;
    let build = |kind: EncodingKind| -> Result<(LinearModel, NetworkVars, usize)> {
        let mut m = LinearModel::new();
        let vars = encode_network(&mut m, &p.network, kind)?;
        add_complement_constraint(&mut m, &p.output, vars.output())?;
        let t = objective(&mut m, ObjectiveKind::MaxDisturbance { center: &x.center }, vars.input())?.unwrap();
        Ok((m, vars, t))
    };
    let (out, t) = if cfg.iterative {
        let mut added: Vec<(usize, usize)> = Vec::new();
        loop {
            if deadline::expired() {
                return Ok(VerificationResult::unknown());
            }
            let (mut m, vars, t) = build(EncodingKind::LinearRelaxedLP(&delta))?;
            for &node in &added {
                add_sign(&mut m, p, &vars, &delta, node)?;
            }
            let out = solve_lp(&m);
            if !out.is_optimal() {
                break (out, t);
            }
            match match_activation(p, &vars, &delta, &out.point, &added) {
                Some(node) => added.push(node),
                None => break (out, t),
            }
        }
    } else {
        let (m, _, t) = build(EncodingKind::StandardLP(&delta))?;
        (solve_lp(&m), t)
    };
    if !out.is_optimal() {
        return Ok(VerificationResult::unknown());
    }
    let eps = out.point[t];
    if eps < x.max_radius() {
        return Ok(VerificationResult::disturbance(Status::Violated, eps));
    }
    let status = if pattern_covers_input(p, &delta)? { Status::Holds } else { Status::Unknown };
    Ok(VerificationResult::disturbance(status, eps))
}
