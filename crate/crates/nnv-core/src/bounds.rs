//! Interval bounds on node values, pointwise gradients and gradient bounds.

use nalgebra::DMatrix;

use crate::error::{check_dim, Result};
use crate::geometry::{bounding_box, GeometricSet, Hyperrectangle};
use crate::linalg::{mat_neg, mat_pos, pos};
use crate::nn::{Activation, Network, VerificationProblem};

/// Interval image of `[l, u]` under `W`: `l' = W⁺l + W⁻u`, `u' = W⁺u + W⁻l`.
pub fn interval_map(w: &DMatrix<f64>, l: &[f64], u: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    check_dim("interval map", w.ncols(), l.len())?;
    check_dim("interval map", l.len(), u.len())?;
    let mut lo = vec![0.0; w.nrows()];
    let mut hi = vec![0.0; w.nrows()];
    for i in 0..w.nrows() {
        for j in 0..w.ncols() {
            let a = w[(i, j)];
            if a >= 0.0 {
                lo[i] += a * l[j];
                hi[i] += a * u[j];
            } else {
                lo[i] += a * u[j];
                hi[i] += a * l[j];
            }
        }
    }
    Ok((lo, hi))
}

/// Matrix form of [`interval_map`], applied column by column.
pub fn interval_map_mat(w: &DMatrix<f64>, l: &DMatrix<f64>, u: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let (wp, wn) = (mat_pos(w), mat_neg(w));
    (&wp * l + &wn * u, &wp * u + &wn * l)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NodePhase {
    Active,
    Inactive,
    Undetermined,
}

/// Phase of a ReLU node with pre-activation bounds `[l, u]`; `l = u = 0` counts as inactive.
pub fn node_phase(l: f64, u: f64) -> NodePhase {
    if u <= 0.0 {
        NodePhase::Inactive
    } else if l >= 0.0 {
        NodePhase::Active
    } else {
        NodePhase::Undetermined
    }
}

/// Per-layer node bounds. `post[0]` is the input box, `post[i + 1]` bounds
/// the output of layer `i`, and `pre[i]` bounds its pre-activation values.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerBounds {
    pub post: Vec<Hyperrectangle>,
    pub pre: Vec<Hyperrectangle>,
}

impl LayerBounds {
    pub fn output(&self) -> &Hyperrectangle {
        self.post.last().unwrap()
    }

    /// Pre-activation `(low, high)` of layer `i`.
    pub fn pre_bounds(&self, i: usize) -> (Vec<f64>, Vec<f64>) {
        (self.pre[i].low(), self.pre[i].high())
    }

    pub fn max_abs_pre(&self) -> f64 {
        self.pre.iter().flat_map(|h| h.low().into_iter().chain(h.high())).fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct NodeClasses {
    pub active: Vec<usize>,
    pub inactive: Vec<usize>,
    pub undetermined: Vec<usize>,
}

/// Splits the nodes of layer `layer` into Γ⁺, Γ⁻ and Γ by their pre-activation bounds.
pub fn classify_nodes(bounds: &LayerBounds, layer: usize) -> NodeClasses {
    let (l, u) = bounds.pre_bounds(layer);
    let mut out = NodeClasses::default();
    for j in 0..l.len() {
        match node_phase(l[j], u[j]) {
            NodePhase::Active => out.active.push(j),
            NodePhase::Inactive => out.inactive.push(j),
            NodePhase::Undetermined => out.undetermined.push(j),
        }
    }
    out
}

/// Interval bounds of every layer for inputs in `input`.
pub fn bounds_from_box(net: &Network, input: &Hyperrectangle) -> LayerBounds {
    let mut post = vec![input.clone()];
    let mut pre = Vec::with_capacity(net.layers().len());
    for layer in net.layers() {
        let prev = post.last().unwrap();
        let (mut lo, mut hi) = interval_map(&layer.weights, &prev.low(), &prev.high()).unwrap();
        for ((l, h), b) in lo.iter_mut().zip(hi.iter_mut()).zip(&layer.bias) {
            *l += b;
            *h += b;
        }
        let zh = Hyperrectangle::from_bounds(&lo, &hi).unwrap();
        let zl: Vec<f64> = lo.iter().map(|&v| layer.activation.apply(v)).collect();
        let zu: Vec<f64> = hi.iter().map(|&v| layer.activation.apply(v)).collect();
        post.push(Hyperrectangle::from_bounds(&zl, &zu).unwrap());
        pre.push(zh);
    }
    LayerBounds { post, pre }
}

/// Interval bounds for a problem; non-box inputs are first enclosed in their bounding box.
pub fn get_bounds(p: &VerificationProblem) -> Result<LayerBounds> {
    let b = bounding_box(&p.input)?;
    Ok(bounds_from_box(&p.network, &b))
}

/// Jacobian of the network at `x`; kinks at zero take the inactive slope.
pub fn get_gradient(net: &Network, x: &[f64]) -> Result<DMatrix<f64>> {
    let (pre, _) = net.trace(x)?;
    let mut g = DMatrix::identity(net.input_dim(), net.input_dim());
    for (layer, zh) in net.layers().iter().zip(&pre) {
        let mut next = &layer.weights * g;
        if layer.activation == Activation::ReLU {
            for (i, v) in zh.iter().enumerate() {
                if *v <= 0.0 {
                    next.row_mut(i).fill(0.0);
                }
            }
        }
        g = next;
    }
    Ok(g)
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradientBounds {
    pub lg: DMatrix<f64>,
    pub ug: DMatrix<f64>,
    pub lambda_low: Vec<Vec<f64>>,
    pub lambda_up: Vec<Vec<f64>>,
}

/// Activation-gradient bound diagonals per layer from node phases.
pub fn activation_masks(net: &Network, bounds: &LayerBounds) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let mut low = Vec::new();
    let mut up = Vec::new();
    for (i, layer) in net.layers().iter().enumerate() {
        let (l, u) = bounds.pre_bounds(i);
        let (mut lo, mut hi) = (Vec::new(), Vec::new());
        for j in 0..l.len() {
            let (a, b) = match layer.activation {
                Activation::Id => (1.0, 1.0),
                Activation::ReLU => match node_phase(l[j], u[j]) {
                    NodePhase::Active => (1.0, 1.0),
                    NodePhase::Inactive => (0.0, 0.0),
                    NodePhase::Undetermined => (0.0, 1.0),
                },
            };
            lo.push(a);
            hi.push(b);
        }
        low.push(lo);
        up.push(hi);
    }
    (low, up)
}

/// Forward recursion of gradient bounds given activation-gradient masks.
pub fn gradient_bounds_from_masks(net: &Network, low: &[Vec<f64>], up: &[Vec<f64>]) -> (DMatrix<f64>, DMatrix<f64>) {
    let n0 = net.input_dim();
    let mut lg = DMatrix::identity(n0, n0);
    let mut ug = DMatrix::identity(n0, n0);
    for (i, layer) in net.layers().iter().enumerate() {
        let (lh, uh) = interval_map_mat(&layer.weights, &lg, &ug);
        let rows = layer.output_dim();
        lg = DMatrix::from_fn(rows, n0, |r, c| {
            let v = lh[(r, c)];
            low[i][r] * pos(v) + up[i][r] * v.min(0.0)
        });
        ug = DMatrix::from_fn(rows, n0, |r, c| {
            let v = uh[(r, c)];
            low[i][r] * v.min(0.0) + up[i][r] * pos(v)
        });
    }
    (lg, ug)
}

/// Elementwise bounds on the Jacobian over a bounded input set.
pub fn get_gradient_bounds(net: &Network, input: &GeometricSet) -> Result<GradientBounds> {
    check_dim("gradient bounds input", net.input_dim(), input.dim())?;
    let b = bounds_from_box(net, &bounding_box(input)?);
    let (lambda_low, lambda_up) = activation_masks(net, &b);
    let (lg, ug) = gradient_bounds_from_masks(net, &lambda_low, &lambda_up);
    Ok(GradientBounds { lg, ug, lambda_low, lambda_up })
}
