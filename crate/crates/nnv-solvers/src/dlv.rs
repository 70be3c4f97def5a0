//! DLV: sampling hidden layers for values that leave the output set.

use nnv_core::bounds::{get_bounds, LayerBounds};
use nnv_core::encoding::{encode_network, objective, EncodingKind, ObjectiveKind};
use nnv_core::geometry::{member, subset, GeometricSet, Hyperrectangle};
use nnv_core::lp::{add_set_constraint, solve_milp, LinearModel};
use nnv_core::{Error, Network, Result, Status, VerificationProblem, VerificationResult};

use crate::deadline;
use crate::util::{input_box, verified};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DlvConfig {
    /// Input sampling interval; `None` uses a tenth of the largest input radius.
    pub epsilon: Option<f64>,
    pub gamma: f64,
}

impl Default for DlvConfig {
    fn default() -> Self {
        DlvConfig { epsilon: None, gamma: 0.5 }
    }
}

const MAX_CHAIN: usize = 10_000;
const MAX_BACKWARD: usize = 4;

/// Sampling intervals of layer `i` from those of the layer before it.
fn manipulation(net: &Network, i: usize, prev: &[f64], gamma: f64) -> Vec<f64> {
    let layer = &net.layers()[i];
    (0..layer.output_dim())
        .map(|j| {
            let m = (0..layer.input_dim())
                .map(|k| layer.activation.apply(layer.weights[(j, k)].abs() * prev[k]))
                .fold(0.0, f64::max);
            gamma * m
        })
        .collect()
}

/// Points along the axis chains through `start` that map outside the output set.
fn bounded_variation(
    p: &VerificationProblem,
    rest: Option<&Network>,
    start: &[f64],
    eta: &Hyperrectangle,
    delta: &[f64],
    limit: usize,
) -> Result<Vec<Vec<f64>>> {
    let outside = |z: &[f64]| -> Result<bool> {
        let y = match rest {
            Some(net) => net.forward(z)?,
            None => z.to_vec(),
        };
        Ok(!member(&p.output, &y)?)
    };
    let mut found = Vec::new();
    if outside(start)? {
        found.push(start.to_vec());
    }
    for (j, &d) in delta.iter().enumerate() {
        if d <= 0.0 {
            continue;
        }
        for dir in [1.0, -1.0] {
            for k in 1..=MAX_CHAIN {
                if found.len() >= limit {
                    return Ok(found);
                }
                let mut z = start.to_vec();
                z[j] += dir * k as f64 * d;
                if !eta.contains(&z) {
                    break;
                }
                if outside(&z)? {
                    found.push(z);
                }
            }
        }
    }
    Ok(found)
}

/// Input in `X` closest to the center whose layer-`i` value is `z`.
fn backward_map(
    p: &VerificationProblem,
    i: usize,
    z: &[f64],
    bounds: &LayerBounds,
    center: &[f64],
) -> Result<Option<Vec<f64>>> {
    let prefix = p.network.prefix(i + 1)?;
    let sub = LayerBounds { post: bounds.post[..=i + 1].to_vec(), pre: bounds.pre[..=i].to_vec() };
    let mut m = LinearModel::new();
    let vars = encode_network(&mut m, &prefix, EncodingKind::BoundedMIP(&sub))?;
    add_set_constraint(&mut m, &p.input, vars.input())?;
    for (&v, &val) in vars.output().iter().zip(z) {
        m.fix(v, val)?;
    }
    objective(&mut m, ObjectiveKind::MaxDisturbance { center }, vars.input())?;
    let out = solve_milp(&m);
    Ok(out.is_optimal().then(|| vars.input().iter().map(|&v| out.point[v]).collect()))
}

pub fn solve_dlv(p: &VerificationProblem, cfg: DlvConfig) -> Result<VerificationResult> {
    let x = input_box(p)?;
    if !(cfg.gamma > 0.0 && cfg.gamma < 1.0) {
        return Err(Error::Invalid("gamma must lie in (0, 1)".into()));
    }
    let eps = cfg.epsilon.unwrap_or(0.1 * x.max_radius());
    if !(eps.is_finite() && eps >= 0.0) {
        return Err(Error::Invalid("sampling interval must be non-negative".into()));
    }
    let eta = get_bounds(p)?;
    let out_box = GeometricSet::Hyperrectangle(eta.output().clone());
    if subset(&out_box, &p.output)? {
        return Ok(VerificationResult::holds());
    }
    let n = p.network.layers().len();
    let (_, post) = p.network.trace(&x.center)?;
    let mut delta = vec![eps; x.dim()];
    for i in 0..n {
        if deadline::expired() {
            return Ok(VerificationResult::unknown());
        }
        delta = manipulation(&p.network, i, &delta, cfg.gamma);
        let rest = (i + 1 < n).then(|| Network::new(p.network.layers()[i + 1..].to_vec())).transpose()?;
        let hits = bounded_variation(p, rest.as_ref(), &post[i + 1], &eta.post[i + 1], &delta, MAX_BACKWARD)?;
        for z in hits {
            if let Some(cand) = backward_map(p, i, &z, &eta, &x.center)? {
                if let Some(cex) = verified(p, cand) {
                    return Ok(VerificationResult::counter_example(cex));
                }
            }
        }
    }
    Ok(VerificationResult::reachable(Status::Violated, vec![out_box]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::util::fixtures::*;

    #[test]
    fn dlv_examples() {
        let y = Hyperrectangle::from_bounds(&[-0.5], &[2.5]).unwrap().into();
        let r = solve_dlv(&prob(net_abs(), boxed(0.0, 1.0), y), DlvConfig::default()).unwrap();
        assert_eq!(r.status, Status::Holds);

        let p = prob_viol();
        let r = solve_dlv(&p, DlvConfig::default()).unwrap();
        assert_eq!(r.status, Status::Violated);
        match r.counter_example_point() {
            Some(x) => assert!(crate::is_counter_example(&p, x)),
            None => {
                let s = &r.reachable_sets().unwrap()[0];
                assert_eq!(s, &GeometricSet::Hyperrectangle(Hyperrectangle::from_bounds(&[0.0], &[2.0]).unwrap()));
            }
        }

        let r = solve_dlv(&prob(net_id(), boxed(0.0, 1.0), below(1.0)), DlvConfig::default()).unwrap();
        assert_eq!(r.status, Status::Holds);
    }

    #[test]
    fn dlv_finds_hidden_counter_examples() {
        let p = prob(net_abs(), boxed(0.0, 1.0), below(0.7));
        let r = solve_dlv(&p, DlvConfig::default()).unwrap();
        let x = r.counter_example_point().expect("counter example");
        assert!(crate::is_counter_example(&p, x));
    }

    #[test]
    fn manipulation_shrinks() {
        let d = manipulation(&net_abs(), 0, &[0.1], 0.5);
        assert_eq!(d, vec![0.05, 0.05]);
    }
}
