//! Linear and mixed-integer encodings of a network, and objective builders.

use crate::bounds::{node_phase, LayerBounds, NodePhase};
use crate::error::{check_dim, Error, Result};
use crate::lp::{LinearModel, Relation, Sense, VarId};
use crate::nn::{Activation, ActivationPattern, Layer, Network};

#[derive(Clone, Copy, Debug)]
pub enum EncodingKind<'a> {
    /// Exact on the linear piece of one activation pattern.
    StandardLP(&'a ActivationPattern),
    /// The equalities of [`EncodingKind::StandardLP`] without the sign constraints on `ẑ`.
    LinearRelaxedLP(&'a ActivationPattern),
    /// [`EncodingKind::StandardLP`] with a free slack per ReLU node.
    SlackLP(&'a ActivationPattern),
    /// Triangle relaxation of undetermined nodes.
    TriangularRelaxedLP(&'a LayerBounds),
    /// Big-M encoding with a binary per ReLU node (`δ = 1` means active).
    NaiveMIP(f64),
    /// Encoding with binaries only on undetermined nodes, using node bounds.
    BoundedMIP(&'a LayerBounds),
}

/// Variables created by [`encode_network`].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct NetworkVars {
    /// `z[0]` are the inputs, `z[i + 1]` the outputs of layer `i`.
    pub z: Vec<Vec<VarId>>,
    pub delta: Vec<Vec<Option<VarId>>>,
    pub slack: Vec<Vec<Option<VarId>>>,
}

impl NetworkVars {
    pub fn input(&self) -> &[VarId] {
        &self.z[0]
    }

    pub fn output(&self) -> &[VarId] {
        self.z.last().unwrap()
    }

    pub fn all_slacks(&self) -> Vec<(usize, usize, VarId)> {
        let mut out = Vec::new();
        for (i, layer) in self.slack.iter().enumerate() {
            for (j, s) in layer.iter().enumerate() {
                if let Some(s) = s {
                    out.push((i, j, *s));
                }
            }
        }
        out
    }
}

/// `ẑ_j = Σ_k w_jk z_k + b_j` as coefficients and constant.
pub fn pre_activation(layer: &Layer, j: usize, prev: &[VarId]) -> (Vec<(VarId, f64)>, f64) {
    let coeffs = prev
        .iter()
        .enumerate()
        .filter(|(k, _)| layer.weights[(j, *k)] != 0.0)
        .map(|(k, &v)| (v, layer.weights[(j, k)]))
        .collect();
    (coeffs, layer.bias[j])
}

/// `a·z + coeff·ẑ` with ẑ expanded; returns coefficients and the constant carried by ẑ.
fn with_pre(z: &[(VarId, f64)], pre: &(Vec<(VarId, f64)>, f64), coeff: f64) -> (Vec<(VarId, f64)>, f64) {
    let mut out = z.to_vec();
    out.extend(pre.0.iter().map(|&(v, w)| (v, coeff * w)));
    (out, coeff * pre.1)
}

/// Adds `Σ coeffs rel rhs` where `coeffs` may hold a constant to move across.
fn add(m: &mut LinearModel, (coeffs, constant): (Vec<(VarId, f64)>, f64), rel: Relation, rhs: f64) -> Result<()> {
    m.add_constraint(coeffs, rel, rhs - constant)
}

fn check_pattern(net: &Network, d: &ActivationPattern) -> Result<()> {
    if d.matches(net) {
        Ok(())
    } else {
        Err(Error::Invalid("activation pattern does not match the network".into()))
    }
}

fn check_bounds(net: &Network, b: &LayerBounds) -> Result<()> {
    if b.pre.len() != net.layers().len() || b.pre.iter().zip(net.layers()).any(|(h, l)| h.dim() != l.output_dim()) {
        return Err(Error::Bounds("bounds do not cover every layer".into()));
    }
    if b.pre.iter().any(|h| h.center.iter().chain(&h.radius).any(|v| !v.is_finite())) {
        return Err(Error::Bounds("infinite node bounds".into()));
    }
    Ok(())
}

/// Big-M used by the naive MIP when none is given.
pub fn default_big_m(bounds: &LayerBounds) -> f64 {
    (10.0 * bounds.max_abs_pre()).max(1e4)
}

/// Encodes `net` into `m` layer by layer and returns the created variables.
pub fn encode_network(m: &mut LinearModel, net: &Network, kind: EncodingKind) -> Result<NetworkVars> {
    let mut z = vec![m.add_free_vec(net.input_dim())];
    for layer in net.layers() {
        z.push(m.add_free_vec(layer.output_dim()));
    }
    encode_network_onto(m, net, kind, z)
}

/// Like [`encode_network`] but over existing node variables, so several
/// encodings can constrain the same neurons.
pub fn encode_network_onto(
    m: &mut LinearModel,
    net: &Network,
    kind: EncodingKind,
    z: Vec<Vec<VarId>>,
) -> Result<NetworkVars> {
    check_dim("node variable layers", net.layers().len() + 1, z.len())?;
    check_dim("input variables", net.input_dim(), z[0].len())?;
    for (layer, vars) in net.layers().iter().zip(&z[1..]) {
        check_dim("node variables", layer.output_dim(), vars.len())?;
    }
    match kind {
        EncodingKind::StandardLP(d) | EncodingKind::LinearRelaxedLP(d) | EncodingKind::SlackLP(d) => {
            check_pattern(net, d)?
        }
        EncodingKind::TriangularRelaxedLP(b) | EncodingKind::BoundedMIP(b) => check_bounds(net, b)?,
        EncodingKind::NaiveMIP(big) => {
            if !(big.is_finite() && big > 0.0) {
                return Err(Error::Invalid("big-M must be positive and finite".into()));
            }
        }
    }
    let mut vars = NetworkVars { z: vec![z[0].clone()], ..Default::default() };
    for (i, layer) in net.layers().iter().enumerate() {
        let k = layer.output_dim();
        let z = z[i + 1].clone();
        let mut deltas = vec![None; k];
        let mut slacks = vec![None; k];
        let prev = vars.z[i].clone();
        for j in 0..k {
            let pre = pre_activation(layer, j, &prev);
            let zj = z[j];
            if layer.activation == Activation::Id {
                add(m, with_pre(&[(zj, 1.0)], &pre, -1.0), Relation::Eq, 0.0)?;
                continue;
            }
            match kind {
                EncodingKind::StandardLP(d) | EncodingKind::LinearRelaxedLP(d) => {
                    let strict = matches!(kind, EncodingKind::StandardLP(_));
                    if d.0[i][j] {
                        add(m, with_pre(&[(zj, 1.0)], &pre, -1.0), Relation::Eq, 0.0)?;
                        if strict {
                            add(m, with_pre(&[], &pre, 1.0), Relation::Ge, 0.0)?;
                        }
                    } else {
                        m.add_constraint(vec![(zj, 1.0)], Relation::Eq, 0.0)?;
                        if strict {
                            add(m, with_pre(&[], &pre, 1.0), Relation::Le, 0.0)?;
                        }
                    }
                }
                EncodingKind::SlackLP(d) => {
                    let s = m.add_free();
                    slacks[j] = Some(s);
                    if d.0[i][j] {
                        add(m, with_pre(&[(zj, 1.0), (s, -1.0)], &pre, -1.0), Relation::Eq, 0.0)?;
                        add(m, with_pre(&[(s, 1.0)], &pre, 1.0), Relation::Ge, 0.0)?;
                    } else {
                        m.add_constraint(vec![(zj, 1.0), (s, -1.0)], Relation::Eq, 0.0)?;
                        add(m, with_pre(&[(s, -1.0)], &pre, 1.0), Relation::Le, 0.0)?;
                    }
                }
                EncodingKind::TriangularRelaxedLP(b) | EncodingKind::BoundedMIP(b) => {
                    let (l, u) = (b.pre[i].center[j] - b.pre[i].radius[j], b.pre[i].center[j] + b.pre[i].radius[j]);
                    match node_phase(l, u) {
                        NodePhase::Active => add(m, with_pre(&[(zj, 1.0)], &pre, -1.0), Relation::Eq, 0.0)?,
                        NodePhase::Inactive => m.add_constraint(vec![(zj, 1.0)], Relation::Eq, 0.0)?,
                        NodePhase::Undetermined => {
                            add(m, with_pre(&[(zj, 1.0)], &pre, -1.0), Relation::Ge, 0.0)?;
                            m.add_constraint(vec![(zj, 1.0)], Relation::Ge, 0.0)?;
                            if matches!(kind, EncodingKind::TriangularRelaxedLP(_)) {
                                let slope = u / (u - l);
                                add(m, with_pre(&[(zj, 1.0)], &pre, -slope), Relation::Le, -slope * l)?;
                            } else {
                                let dv = m.add_binary();
                                deltas[j] = Some(dv);
                                m.add_constraint(vec![(zj, 1.0), (dv, -u)], Relation::Le, 0.0)?;
                                add(m, with_pre(&[(zj, 1.0), (dv, -l)], &pre, -1.0), Relation::Le, -l)?;
                            }
                        }
                    }
                }
                EncodingKind::NaiveMIP(big) => {
                    let dv = m.add_binary();
                    deltas[j] = Some(dv);
                    add(m, with_pre(&[(zj, 1.0)], &pre, -1.0), Relation::Ge, 0.0)?;
                    m.add_constraint(vec![(zj, 1.0)], Relation::Ge, 0.0)?;
                    add(m, with_pre(&[(zj, 1.0), (dv, big)], &pre, -1.0), Relation::Le, big)?;
                    m.add_constraint(vec![(zj, 1.0), (dv, -big)], Relation::Le, 0.0)?;
                }
            }
        }
        vars.z.push(z);
        vars.delta.push(deltas);
        vars.slack.push(slacks);
    }
    Ok(vars)
}

/// The two parallel lines `slope·ẑ ≤ z ≤ slope·(ẑ − ℓ̂)` bounding an undetermined ReLU.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ParallelRelaxation {
    pub slope: f64,
    pub lower_intercept: f64,
    pub upper_intercept: f64,
}

pub fn parallel_relaxation_bounds(l: f64, u: f64) -> Result<ParallelRelaxation> {
    if node_phase(l, u) != NodePhase::Undetermined {
        return Err(Error::Invalid(format!("node with bounds [{l}, {u}] is not undetermined")));
    }
    let slope = u / (u - l);
    Ok(ParallelRelaxation { slope, lower_intercept: 0.0, upper_intercept: -slope * l })
}

#[derive(Clone, Copy, Debug)]
pub enum ObjectiveKind<'a> {
    /// Maximize `cᵀvars − d`.
    Linear {
        c: &'a [f64],
        d: f64,
    },
    /// Minimize `‖vars − center‖∞` through an epigraph variable.
    MaxDisturbance {
        center: &'a [f64],
    },
    MinSum,
    MaxSum,
    Feasibility,
}

/// Sets the objective of `m`; returns the epigraph variable for
/// [`ObjectiveKind::MaxDisturbance`].
pub fn objective(m: &mut LinearModel, kind: ObjectiveKind, vars: &[VarId]) -> Result<Option<VarId>> {
    match kind {
        ObjectiveKind::Linear { c, d } => {
            check_dim("linear objective", vars.len(), c.len())?;
            m.set_objective(vars.iter().copied().zip(c.iter().copied()).collect(), -d, Sense::Maximize)?;
            Ok(None)
        }
        ObjectiveKind::MaxDisturbance { center } => {
            check_dim("disturbance center", vars.len(), center.len())?;
            let t = m.add_continuous(0.0, f64::INFINITY);
            for (&v, &c) in vars.iter().zip(center) {
                m.add_constraint(vec![(t, 1.0), (v, -1.0)], Relation::Ge, -c)?;
                m.add_constraint(vec![(t, 1.0), (v, 1.0)], Relation::Ge, c)?;
            }
            m.set_objective(vec![(t, 1.0)], 0.0, Sense::Minimize)?;
            Ok(Some(t))
        }
        ObjectiveKind::MinSum => {
            m.set_objective(vars.iter().map(|&v| (v, 1.0)).collect(), 0.0, Sense::Minimize)?;
            Ok(None)
        }
        ObjectiveKind::MaxSum => {
            m.set_objective(vars.iter().map(|&v| (v, 1.0)).collect(), 0.0, Sense::Maximize)?;
            Ok(None)
        }
        ObjectiveKind::Feasibility => {
            m.set_objective(Vec::new(), 0.0, Sense::Feasibility)?;
            Ok(None)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::bounds_from_box;
    use crate::geometry::{GeometricSet, Hyperrectangle};
    use crate::lp::{add_set_constraint, solve_lp, solve_milp};
    use crate::nn::get_activation;

    fn net_abs() -> Network {
        Network::new(vec![
            Layer::from_rows(&[vec![1.0], vec![-1.0]], vec![0.0, 0.0], Activation::ReLU).unwrap(),
            Layer::from_rows(&[vec![1.0, 1.0]], vec![0.0], Activation::Id).unwrap(),
        ])
        .unwrap()
    }

    fn single_relu() -> Network {
        Network::new(vec![Layer::from_rows(&[vec![1.0]], vec![0.0], Activation::ReLU).unwrap()]).unwrap()
    }

    fn triangle_feasible(zh: f64, z: f64) -> bool {
        let net = single_relu();
        let b = bounds_from_box(&net, &Hyperrectangle::new(vec![0.0], vec![1.0]).unwrap());
        let mut m = LinearModel::new();
        let v = encode_network(&mut m, &net, EncodingKind::TriangularRelaxedLP(&b)).unwrap();
        m.fix(v.z[0][0], zh).unwrap();
        m.fix(v.z[1][0], z).unwrap();
        solve_lp(&m).is_optimal()
    }

    #[test]
    fn triangle_region() {
        assert!(triangle_feasible(0.5, 0.5));
        assert!(triangle_feasible(-1.0, 0.0));
        assert!(!triangle_feasible(0.0, 0.9));
    }

    #[test]
    fn standard_lp_admits_trace() {
        let net = net_abs();
        let d = get_activation(&net, &[1.0]).unwrap();
        let mut m = LinearModel::new();
        let v = encode_network(&mut m, &net, EncodingKind::StandardLP(&d)).unwrap();
        let mut point = vec![0.0; m.num_vars()];
        point[v.z[0][0]] = 1.0;
        point[v.z[1][0]] = 1.0;
        point[v.z[1][1]] = 0.0;
        point[v.z[2][0]] = 1.0;
        assert!(m.is_feasible(&point, 1e-12));
    }

    #[test]
    fn bounded_mip_max() {
        let net = net_abs();
        let x = Hyperrectangle::new(vec![0.0], vec![1.0]).unwrap();
        let b = bounds_from_box(&net, &x);
        let mut m = LinearModel::new();
        let v = encode_network(&mut m, &net, EncodingKind::BoundedMIP(&b)).unwrap();
        add_set_constraint(&mut m, &GeometricSet::Hyperrectangle(x), v.input()).unwrap();
        objective(&mut m, ObjectiveKind::MaxSum, v.output()).unwrap();
        let out = solve_milp(&m);
        assert!((out.value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn naive_mip_matches_forward() {
        let net = net_abs();
        for xv in [-0.8, -0.1, 0.0, 0.3, 1.0] {
            let mut m = LinearModel::new();
            let v = encode_network(&mut m, &net, EncodingKind::NaiveMIP(1e4)).unwrap();
            m.fix(v.input()[0], xv).unwrap();
            objective(&mut m, ObjectiveKind::MaxSum, v.output()).unwrap();
            let hi = solve_milp(&m).value;
            objective(&mut m, ObjectiveKind::MinSum, v.output()).unwrap();
            let lo = solve_milp(&m).value;
            assert!((hi - xv.abs()).abs() < 1e-9 && (lo - xv.abs()).abs() < 1e-9);
        }
    }

    #[test]
    fn parallel_examples() {
        let p = parallel_relaxation_bounds(-1.0, 1.0).unwrap();
        assert_eq!((p.slope, p.upper_intercept), (0.5, 0.5));
        assert_eq!(parallel_relaxation_bounds(-3.0, 1.0).unwrap().slope, 0.25);
        assert!(parallel_relaxation_bounds(-1e-12, 1.0).unwrap().slope > 1.0 - 1e-9);
        assert!(parallel_relaxation_bounds(0.5, 1.0).is_err());
    }

    #[test]
    fn objective_examples() {
        let mut m = LinearModel::new();
        let x = m.add_free_vec(1);
        m.add_constraint(vec![(x[0], 1.0)], Relation::Ge, 0.5).unwrap();
        objective(&mut m, ObjectiveKind::MaxDisturbance { center: &[0.0] }, &x).unwrap();
        assert!((solve_lp(&m).value - 0.5).abs() < 1e-12);

        let mut m = LinearModel::new();
        let y = m.add_free_vec(1);
        m.fix(y[0], 1.0).unwrap();
        objective(&mut m, ObjectiveKind::Linear { c: &[1.0], d: 1.5 }, &y).unwrap();
        assert!((solve_lp(&m).value + 0.5).abs() < 1e-12);
        objective(&mut m, ObjectiveKind::Feasibility, &y).unwrap();
        assert_eq!(solve_lp(&m).value, 0.0);
    }

    #[test]
    fn missing_bounds_rejected() {
        let net = net_abs();
        let b = bounds_from_box(&single_relu(), &Hyperrectangle::new(vec![0.0], vec![1.0]).unwrap());
        let mut m = LinearModel::new();
        assert!(encode_network(&mut m, &net, EncodingKind::BoundedMIP(&b)).is_err());
        assert!(encode_network(&mut m, &net, EncodingKind::NaiveMIP(f64::INFINITY)).is_err());
    }
}
