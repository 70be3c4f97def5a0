//! Lagrangian dual bounds: Duality and ConvDual.

use nnv_core::bounds::{get_bounds, node_phase, NodePhase};
use nnv_core::linalg::{dot, pos};
use nnv_core::lp::{solve_lp, LinearModel, LpStatus, Relation, Sense, VarId};
use nnv_core::{Activation, Error, Result, VerificationProblem, VerificationResult};

use crate::fastlin::fastlin_bounds;
use crate::util::{input_box, output_halfspace, uniform_radius};

/// Slope of the upper relaxation of a ReLU with pre-activation bounds `[l, u]`.
pub fn relaxed_relu(l: f64, u: f64) -> f64 {
    match node_phase(l, u) {
        NodePhase::Inactive => 0.0,
        NodePhase::Active => 1.0,
        NodePhase::Undetermined => u / (u - l),
    }
}

/// Adds `t ≥ e` and `t ≥ −e` for an expression `e = Σ coeffs + constant`; returns `t`.
fn abs_epigraph(m: &mut LinearModel, coeffs: &[(VarId, f64)], constant: f64) -> Result<VarId> {
    let t = m.add_free();
    for sign in [1.0, -1.0] {
        let mut row = vec![(t, 1.0)];
        row.extend(coeffs.iter().map(|&(v, c)| (v, -sign * c)));
        m.add_constraint(row, Relation::Ge, sign * constant)?;
    }
    Ok(t)
}

/// Adds `t ≥ a·v + a0` and `t ≥ b·v + b0`; returns `t`.
fn max_epigraph(m: &mut LinearModel, v: VarId, (a, a0): (f64, f64), (b, b0): (f64, f64)) -> Result<VarId> {
    let t = m.add_free();
    m.add_constraint(vec![(t, 1.0), (v, -a)], Relation::Ge, a0)?;
    m.add_constraint(vec![(t, 1.0), (v, -b)], Relation::Ge, b0)?;
    Ok(t)
}

/// Optimal value of the Lagrangian dual, an upper bound on `max cᵀf(x) − d` over the input box.
///
/// Returns `+∞` when the dual LP has no finite optimum.
pub fn duality_value(p: &VerificationProblem) -> Result<f64> {
    let (c, d) = output_halfspace(p)?;
    let x = input_box(p)?;
    let bounds = get_bounds(p)?;
    let layers = p.network.layers();
    let n = layers.len();
    let mut m = LinearModel::new();
    let mu: Vec<Vec<VarId>> = layers.iter().map(|l| m.add_free_vec(l.output_dim())).collect();
    let lambda: Vec<Vec<VarId>> = layers[..n - 1].iter().map(|l| m.add_free_vec(l.output_dim())).collect();
    let mut obj: Vec<(VarId, f64)> = Vec::new();
    let mut constant = -d;

    // input term: max over the box of −μ₁ᵀW₁z₀
    let w1 = &layers[0].weights;
    let pre0 = layers[0].affine(&x.center);
    for (j, &v) in mu[0].iter().enumerate() {
        obj.push((v, -pre0[j]));
    }
    for k in 0..x.dim() {
        if x.radius[k] > 0.0 {
            let col: Vec<(VarId, f64)> = mu[0].iter().enumerate().map(|(j, &v)| (v, w1[(j, k)])).collect();
            let t = abs_epigraph(&mut m, &col, 0.0)?;
            obj.push((t, x.radius[k]));
        }
    }

    // hidden terms: max over the post-activation box of (λ_i − W_{i+1}ᵀμ_{i+1})ᵀz_i
    for i in 0..n - 1 {
        let next = &layers[i + 1];
        let post = &bounds.post[i + 1];
        for (j, &v) in mu[i + 1].iter().enumerate() {
            obj.push((v, -next.bias[j]));
        }
        for (j, &lam) in lambda[i].iter().enumerate() {
            let mut e = vec![(lam, 1.0)];
            e.extend(mu[i + 1].iter().enumerate().map(|(r, &v)| (v, -next.weights[(r, j)])));
            for &(v, coef) in &e {
                obj.push((v, coef * post.center[j]));
            }
            if post.radius[j] > 0.0 {
                let t = abs_epigraph(&mut m, &e, 0.0)?;
                obj.push((t, post.radius[j]));
            }
        }
    }

    // activation terms: max over [ℓ̂, û] of μẑ − λσ(ẑ), bounded per part
    for (i, layer) in layers.iter().enumerate() {
        let (l, u) = bounds.pre_bounds(i);
        let s = |v: f64| layer.activation.apply(v);
        for j in 0..layer.output_dim() {
            let t = max_epigraph(&mut m, mu[i][j], (l[j], 0.0), (u[j], 0.0))?;
            obj.push((t, 1.0));
            if i + 1 < n {
                let t = max_epigraph(&mut m, lambda[i][j], (-s(l[j]), 0.0), (-s(u[j]), 0.0))?;
                obj.push((t, 1.0));
            } else {
                // λ_n = −c
                constant += (c[j] * s(l[j])).max(c[j] * s(u[j]));
            }
        }
    }

    m.set_objective(obj, constant, Sense::Minimize)?;
    let out = solve_lp(&m);
    Ok(match out.status {
        LpStatus::Optimal => out.value,
        _ => f64::INFINITY,
    })
}

pub fn solve_duality(p: &VerificationProblem) -> Result<VerificationResult> {
    let v = duality_value(p)?;
    Ok(if v < 0.0 { VerificationResult::holds() } else { VerificationResult::unknown() })
}

/// Dual objective `o` of the fixed dual-feasible point; the property holds when `o ≥ 0`.
pub fn convdual_value(p: &VerificationProblem) -> Result<f64> {
    let (c, d) = output_halfspace(p)?;
    let x = input_box(p)?;
    let eps = uniform_radius(x)?;
    let layers = p.network.layers();
    if layers.last().unwrap().activation != Activation::Id {
        return Err(Error::Unsupported("the last layer must be linear".into()));
    }
    let bounds = fastlin_bounds(&p.network, &x.center, eps)?;
    let mut v = c;
    let mut o = d;
    for i in (0..layers.len()).rev() {
        let layer = &layers[i];
        o -= dot(&v, &layer.bias);
        v = (0..layer.input_dim())
            .map(|k| (0..layer.output_dim()).map(|j| layer.weights[(j, k)] * v[j]).sum())
            .collect();
        if i > 0 && layers[i - 1].activation == Activation::ReLU {
            let (l, u) = bounds.pre_bounds(i - 1);
            for j in 0..v.len() {
                let s = relaxed_relu(l[j], u[j]);
                if s < 1.0 {
                    v[j] *= s;
                    o += pos(v[j]) * l[j];
                }
            }
        }
    }
    o -= dot(&x.center, &v) + eps * v.iter().map(|a| a.abs()).sum::<f64>();
    Ok(o)
}

pub fn solve_convdual(p: &VerificationProblem) -> Result<VerificationResult> {
    let o = convdual_value(p)?;
    Ok(if o >= 0.0 { VerificationResult::holds() } else { VerificationResult::unknown() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::util::fixtures::*;
    use nnv_core::geometry::Hyperrectangle;
    use nnv_core::Status;

    #[test]
    fn relaxed_relu_examples() {
        assert_eq!(relaxed_relu(-1.0, 1.0), 0.5);
        assert_eq!(relaxed_relu(1.0, 2.0), 1.0);
        assert_eq!(relaxed_relu(-2.0, -1.0), 0.0);
    }

    #[test]
    fn convdual_examples() {
        assert!((convdual_value(&prob_hold()).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(solve_convdual(&prob_hold()).unwrap().status, Status::Holds);
        assert!((convdual_value(&prob_viol()).unwrap() + 0.5).abs() < 1e-12);
        assert_eq!(solve_convdual(&prob_viol()).unwrap().status, Status::Unknown);
        let skew = Hyperrectangle::new(vec![0.0, 0.0], vec![1.0, 0.5]).unwrap();
        let net =
            nnv_core::Network::new(vec![
                nnv_core::Layer::from_rows(&[vec![1.0, 1.0]], vec![0.0], Activation::Id).unwrap()
            ])
            .unwrap();
        assert!(convdual_value(&prob(net, skew.into(), below(1.0))).is_err());
    }

    #[test]
    fn duality_examples() {
        let v = duality_value(&prob(net_id(), boxed(0.0, 1.0), below(2.0))).unwrap();
        assert!((v + 1.0).abs() < 1e-9, "{v}");
        assert!(duality_value(&prob_hold()).unwrap() >= -0.5 - 1e-9);
        let v = duality_value(&prob_viol()).unwrap();
        assert!(v >= 0.5 - 1e-9);
        assert_eq!(solve_duality(&prob_viol()).unwrap().status, Status::Unknown);
    }

    #[test]
    fn duality_shifted_identity() {
        let v = duality_value(&prob(net_id(), boxed(0.5, 0.5), below(2.0))).unwrap();
        assert!((v + 1.0).abs() < 1e-9, "{v}");
    }
}
