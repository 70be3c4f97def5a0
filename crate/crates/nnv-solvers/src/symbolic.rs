//! Symbolic interval propagation and ReluVal.

use std::collections::VecDeque;

use nalgebra::DMatrix;
use nnv_core::bounds::gradient_bounds_from_masks;
use nnv_core::geometry::{member, split_interval, subset, GeometricSet, Hyperrectangle};
use nnv_core::{Activation, Error, Network, Result, VerificationProblem, VerificationResult};

use crate::deadline;
use crate::util::{box_from, input_box, verified};

/// Linear lower and upper bounds over the extended input `[x, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymbolicInterval {
    pub low: DMatrix<f64>,
    pub up: DMatrix<f64>,
    pub interval: Hyperrectangle,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SymbolicIntervalMask {
    pub sym: SymbolicInterval,
    /// Lower and upper activation-gradient masks per layer.
    pub la: Vec<Vec<f64>>,
    pub ua: Vec<Vec<f64>>,
}

impl SymbolicInterval {
    /// Smallest value of `row · [x, 1]` over the interval.
    pub fn lower_bound(&self, row: &[f64]) -> f64 {
        let n = self.interval.dim();
        row[n] + (0..n).map(|k| row[k] * self.interval.center[k] - row[k].abs() * self.interval.radius[k]).sum::<f64>()
    }

    /// Largest value of `row · [x, 1]` over the interval.
    pub fn upper_bound(&self, row: &[f64]) -> f64 {
        let n = self.interval.dim();
        row[n] + (0..n).map(|k| row[k] * self.interval.center[k] + row[k].abs() * self.interval.radius[k]).sum::<f64>()
    }

    fn row(m: &DMatrix<f64>, i: usize) -> Vec<f64> {
        m.row(i).iter().copied().collect()
    }

    /// Concrete box: lower bounds of `low`, upper bounds of `up`.
    pub fn concrete(&self) -> Hyperrectangle {
        let k = self.low.nrows();
        let lo: Vec<f64> = (0..k).map(|i| self.lower_bound(&Self::row(&self.low, i))).collect();
        let hi: Vec<f64> = (0..k).map(|i| self.upper_bound(&Self::row(&self.up, i))).collect();
        box_from(&lo, &hi)
    }
}

fn extended(w: &DMatrix<f64>, b: &[f64]) -> DMatrix<f64> {
    let (k, n) = w.shape();
    DMatrix::from_fn(k, n + 1, |i, j| if j < n { w[(i, j)] } else { b[i] })
}

/// Propagates symbolic bounds through `net` for inputs in `input`.
pub fn symbolic_forward(net: &Network, input: &Hyperrectangle) -> Result<SymbolicIntervalMask> {
    if input.dim() != net.input_dim() {
        return Err(Error::Dimension { context: "symbolic input", expected: net.input_dim(), found: input.dim() });
    }
    let n = input.dim();
    let mut sym: Option<SymbolicInterval> = None;
    let (mut la, mut ua) = (Vec::new(), Vec::new());
    for layer in net.layers() {
        let mut s = match sym {
            None => {
                let e = extended(&layer.weights, &layer.bias);
                SymbolicInterval { low: e.clone(), up: e, interval: input.clone() }
            }
            Some(prev) => {
                let wp = layer.weights.map(|v| v.max(0.0));
                let wn = layer.weights.map(|v| v.min(0.0));
                let mut low = &wp * &prev.low + &wn * &prev.up;
                let mut up = &wp * &prev.up + &wn * &prev.low;
                for (j, b) in layer.bias.iter().enumerate() {
                    low[(j, n)] += b;
                    up[(j, n)] += b;
                }
                SymbolicInterval { low, up, interval: prev.interval }
            }
        };
        let k = layer.output_dim();
        let (mut lo_mask, mut up_mask) = (vec![1.0; k], vec![1.0; k]);
        if layer.activation == Activation::ReLU {
            for j in 0..k {
                let up_row = SymbolicInterval::row(&s.up, j);
                let low_row = SymbolicInterval::row(&s.low, j);
                if s.upper_bound(&up_row) <= 0.0 {
                    s.low.row_mut(j).fill(0.0);
                    s.up.row_mut(j).fill(0.0);
                    lo_mask[j] = 0.0;
                    up_mask[j] = 0.0;
                } else if s.lower_bound(&low_row) >= 0.0 {
                    continue;
                } else {
                    s.low.row_mut(j).fill(0.0);
                    lo_mask[j] = 0.0;
                    if s.lower_bound(&up_row) < 0.0 {
                        let hi = s.upper_bound(&up_row);
                        s.up.row_mut(j).fill(0.0);
                        s.up[(j, n)] = hi;
                    }
                }
            }
        }
        la.push(lo_mask);
        ua.push(up_mask);
        sym = Some(s);
    }
    let sym = sym.ok_or_else(|| Error::Invalid("network has no layers".into()))?;
    Ok(SymbolicIntervalMask { sym, la, ua })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TreeSearch {
    Dfs,
    Bfs,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReluValConfig {
    pub tree_search: TreeSearch,
    pub max_iter: usize,
}

impl Default for ReluValConfig {
    fn default() -> Self {
        ReluValConfig { tree_search: TreeSearch::Dfs, max_iter: 1000 }
    }
}

enum Check {
    Holds,
    Violated(Vec<f64>),
    Unknown(SymbolicIntervalMask),
}

fn check_interval(p: &VerificationProblem, dom: &Hyperrectangle) -> Result<Check> {
    let reach = symbolic_forward(&p.network, dom)?;
    if subset(&GeometricSet::Hyperrectangle(reach.sym.concrete()), &p.output)? {
        return Ok(Check::Holds);
    }
    let y = p.network.forward(&dom.center)?;
    if !member(&p.output, &y)? {
        if let Some(x) = verified(p, dom.center.clone()) {
            return Ok(Check::Violated(x));
        }
    }
    Ok(Check::Unknown(reach))
}

/// Input dimension with the largest smear; ties go to the lowest index.
fn split_dim(net: &Network, reach: &SymbolicIntervalMask) -> Option<usize> {
    let (lg, ug) = gradient_bounds_from_masks(net, &reach.la, &reach.ua);
    let r = &reach.sym.interval.radius;
    let mut best: Option<(usize, f64)> = None;
    for k in 0..r.len() {
        if r[k] <= 0.0 {
            continue;
        }
        let smear: f64 = (0..lg.nrows()).map(|j| lg[(j, k)].abs().max(ug[(j, k)].abs()) * r[k]).sum();
        if best.is_none_or(|(_, s)| smear > s) {
            best = Some((k, smear));
        }
    }
    best.map(|(k, _)| k)
}

/// Symbolic intervals with iterative input bisection.
pub fn solve_reluval(p: &VerificationProblem, cfg: ReluValConfig) -> Result<VerificationResult> {
    let root = input_box(p)?.clone();
    let mut work: VecDeque<SymbolicIntervalMask> = match check_interval(p, &root)? {
        Check::Holds => return Ok(VerificationResult::holds()),
        Check::Violated(x) => return Ok(VerificationResult::counter_example(x)),
        Check::Unknown(r) => VecDeque::from([r]),
    };
    for _ in 0..cfg.max_iter {
        if deadline::expired() {
            return Ok(VerificationResult::unknown());
        }
        let next = match cfg.tree_search {
            TreeSearch::Dfs => work.pop_back(),
            TreeSearch::Bfs => work.pop_front(),
        };
        let Some(reach) = next else {
            return Ok(VerificationResult::holds());
        };
        let Some(k) = split_dim(&p.network, &reach) else {
            // a single point that neither verifies nor violates
            return Ok(VerificationResult::unknown());
        };
        let (left, right) = split_interval(&reach.sym.interval, k)?;
        for dom in [left, right] {
            match check_interval(p, &dom)? {
                Check::Holds => {}
                Check::Violated(x) => return Ok(VerificationResult::counter_example(x)),
                Check::Unknown(r) => work.push_back(r),
            }
        }
    }
    if work.is_empty() {
        Ok(VerificationResult::holds())
    } else {
        Ok(VerificationResult::unknown())
    }
}
