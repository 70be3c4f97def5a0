//! FastLin layer bounds and the FastLin and FastLip certified radii.

use nalgebra::DMatrix;
use nnv_core::bounds::{get_gradient_bounds, interval_map, node_phase, LayerBounds, NodePhase};
use nnv_core::geometry::{subset, GeometricSet, Hyperrectangle};
use nnv_core::linalg::{dot, neg, pos};
use nnv_core::{Activation, Error, Network, Result, Status, VerificationProblem, VerificationResult};

use crate::deadline;
use crate::util::{box_from, input_box, output_halfspace};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FastLinConfig {
    pub max_iter: usize,
    /// Sets the initial upper end of the search; `None` uses the largest input radius.
    pub eps0: Option<f64>,
    pub accuracy: f64,
}

impl Default for FastLinConfig {
    fn default() -> Self {
        FastLinConfig { max_iter: 20, eps0: None, accuracy: 1e-4 }
    }
}

/// Node bounds for inputs in the ∞-ball of radius `eps` around `x0`, built by
/// propagating linear relaxations of earlier layers backwards.
pub fn fastlin_bounds(net: &Network, x0: &[f64], eps: f64) -> Result<LayerBounds> {
    if x0.len() != net.input_dim() {
        return Err(Error::Dimension { context: "fastlin center", expected: net.input_dim(), found: x0.len() });
    }
    if !(eps.is_finite() && eps >= 0.0) {
        return Err(Error::Invalid("radius must be finite and non-negative".into()));
    }
    let layers = net.layers();
    let mut post = vec![Hyperrectangle::new(x0.to_vec(), vec![eps; x0.len()])?];
    let mut pre: Vec<Hyperrectangle> = Vec::new();
    // relaxation slope of every node of every finished layer
    let mut slopes: Vec<Vec<f64>> = Vec::new();
    for (m, layer) in layers.iter().enumerate() {
        let k = layer.output_dim();
        // coefficient of each earlier pre-activation vector in ẑ_m
        let mut coef: Vec<DMatrix<f64>> = vec![DMatrix::zeros(0, 0); m + 1];
        coef[m] = DMatrix::identity(k, k);
        for i in (0..m).rev() {
            let mut b = &coef[i + 1] * &layers[i + 1].weights;
            for (j, s) in slopes[i].iter().enumerate() {
                b.column_mut(j).scale_mut(*s);
            }
            coef[i] = b;
        }
        let a = &coef[0] * &layers[0].weights;
        let (mut lo, mut hi) = (vec![0.0; k], vec![0.0; k]);
        for r in 0..k {
            let ar: Vec<f64> = a.row(r).iter().copied().collect();
            let mut center = dot(&ar, x0);
            for (i, ci) in coef.iter().enumerate() {
                center += (0..ci.ncols()).map(|j| ci[(r, j)] * layers[i].bias[j]).sum::<f64>();
            }
            let spread = eps * ar.iter().map(|v| v.abs()).sum::<f64>();
            let (mut u, mut l) = (center + spread, center - spread);
            for i in 0..m {
                if layers[i].activation != Activation::ReLU {
                    continue;
                }
                let (pl, pu) = pre[i].low().into_iter().zip(pre[i].high()).unzip::<f64, f64, Vec<_>, Vec<_>>();
                for j in 0..pl.len() {
                    if node_phase(pl[j], pu[j]) == NodePhase::Undetermined {
                        u -= pos(coef[i][(r, j)]) * pl[j];
                        l -= neg(coef[i][(r, j)]) * pl[j];
                    }
                }
            }
            lo[r] = l;
            hi[r] = u;
        }
        let zh = box_from(&lo, &hi);
        slopes.push(
            (0..k)
                .map(|j| match layer.activation {
                    Activation::Id => 1.0,
                    Activation::ReLU => crate::dual::relaxed_relu(lo[j], hi[j]),
                })
                .collect(),
        );
        let zl: Vec<f64> = lo.iter().map(|&v| layer.activation.apply(v)).collect();
        let zu: Vec<f64> = zh.high().iter().map(|&v| layer.activation.apply(v)).collect();
        post.push(box_from(&zl, &zu));
        pre.push(zh);
    }
    Ok(LayerBounds { post, pre })
}

/// Largest certified radius found by bisection on FastLin bounds.
fn certified_radius(p: &VerificationProblem, x0: &[f64], maxr: f64, cfg: FastLinConfig) -> Result<f64> {
    let mut upper = 2.0 * cfg.eps0.unwrap_or(maxr).max(maxr);
    let mut lower = 0.0;
    let mut eps = maxr;
    for _ in 0..cfg.max_iter {
        if deadline::expired() {
            break;
        }
        let b = fastlin_bounds(&p.network, x0, eps)?;
        if subset(&GeometricSet::Hyperrectangle(b.output().clone()), &p.output)? {
            lower = eps;
            let next = (eps + upper) / 2.0;
            let step = (eps - next).abs();
            eps = next;
            if step <= cfg.accuracy {
                break;
            }
        } else {
            upper = eps;
            eps = (eps + lower) / 2.0;
        }
    }
    Ok(lower)
}

pub fn solve_fastlin(p: &VerificationProblem, cfg: FastLinConfig) -> Result<VerificationResult> {
    let x = input_box(p)?;
    let maxr = x.max_radius();
    let lower = certified_radius(p, &x.center, maxr, cfg)?;
    let status = if lower > maxr { Status::Holds } else { Status::Violated };
    Ok(VerificationResult::disturbance(status, lower))
}

/// FastLin radius capped by a Lipschitz estimate from gradient bounds.
pub fn solve_fastlip(p: &VerificationProblem, cfg: FastLinConfig) -> Result<VerificationResult> {
    let (c, d) = output_halfspace(p)?;
    let x = input_box(p)?;
    let maxr = x.max_radius();
    let o = dot(&c, &p.network.forward(&x.center)?) - d;
    if o > 0.0 {
        return Ok(VerificationResult::disturbance(Status::Violated, -o));
    }
    let lin = certified_radius(p, &x.center, maxr, cfg)?;
    if lin <= maxr {
        return Ok(VerificationResult::disturbance(Status::Violated, lin));
    }
    let g = get_gradient_bounds(&p.network, &p.input)?;
    let cm = DMatrix::from_row_slice(1, c.len(), &c);
    let (a, b) = interval_map_rows(&cm, &g.lg, &g.ug);
    let lip: f64 = a.iter().zip(&b).map(|(a, b)| a.abs().max(b.abs())).sum();
    let eps = if lip > 0.0 { (-o / lip).min(lin) } else { lin };
    let status = if eps > maxr { Status::Holds } else { Status::Violated };
    Ok(VerificationResult::disturbance(status, eps))
}

/// Bounds of `c G` for `G` between `lg` and `ug`, one entry per input.
fn interval_map_rows(c: &DMatrix<f64>, lg: &DMatrix<f64>, ug: &DMatrix<f64>) -> (Vec<f64>, Vec<f64>) {
    let (mut lo, mut hi) = (Vec::new(), Vec::new());
    for k in 0..lg.ncols() {
        let l: Vec<f64> = lg.column(k).iter().copied().collect();
        let u: Vec<f64> = ug.column(k).iter().copied().collect();
        let (a, b) = interval_map(c, &l, &u).unwrap();
        lo.push(a[0]);
        hi.push(b[0]);
    }
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::util::fixtures::*;

    fn out_range(b: &LayerBounds) -> (f64, f64) {
        (b.output().low()[0], b.output().high()[0])
    }

    #[test]
    fn fastlin_bound_examples() {
        let b = fastlin_bounds(&net_abs(), &[0.0], 1.0).unwrap();
        let (l, u) = out_range(&b);
        assert!(l.abs() < 1e-12 && (u - 1.0).abs() < 1e-12, "{l} {u}");
        let b = fastlin_bounds(&net_abs(), &[0.0], 0.3).unwrap();
        assert!((b.pre[0].low()[0] + 0.3).abs() < 1e-12 && (b.pre[0].high()[1] - 0.3).abs() < 1e-12);
        let b = fastlin_bounds(&net_id(), &[2.0], 0.5).unwrap();
        assert_eq!(out_range(&b), (1.5, 2.5));
    }

    #[test]
    fn fastlin_examples() {
        let cfg = FastLinConfig::default();
        let r = solve_fastlin(&prob_viol(), cfg).unwrap();
        assert_eq!(r.status, Status::Violated);
        let e = r.max_disturbance().unwrap();
        assert!(e <= 0.5 && e >= 0.5 - cfg.accuracy, "{e}");
        let p = prob(net_abs(), boxed(0.0, 0.4), below(1.5));
        let r = solve_fastlin(&p, cfg).unwrap();
        assert_eq!(r.status, Status::Holds);
        assert!(r.max_disturbance().unwrap() >= 0.4);
    }

    #[test]
    fn fastlip_examples() {
        let r = solve_fastlip(&prob_viol(), FastLinConfig::default()).unwrap();
        assert_eq!(r.status, Status::Violated);
        assert!((r.max_disturbance().unwrap() - 0.5).abs() < 1e-3);
        let r = solve_fastlip(&prob(net_id(), boxed(3.0, 1.0), below(2.0)), FastLinConfig::default()).unwrap();
        assert_eq!(r, VerificationResult::disturbance(Status::Violated, -1.0));
    }
}
