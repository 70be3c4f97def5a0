//! Seeded random instances and their per-group encodings.

use nalgebra::DMatrix;
use nnv_core::bounds::bounds_from_box;
use nnv_core::geometry::GeometricSet;
use nnv_core::{
    Activation, HPolytope, Halfspace, Hyperrectangle, Layer, Network, PolytopeComplement, Result, VerificationProblem,
};
use rand::Rng;

use crate::oracle::exact_range;

/// Smallest distance kept between `d` and the ends of the range of `cᵀy`.
pub const GAP: f64 = 1e-3;

/// A network, an input box and the property `cᵀy ≤ d`.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    pub network: Network,
    pub input: Hyperrectangle,
    pub c: Vec<f64>,
    pub d: f64,
    /// Exact range of `cᵀf(x)` over the input box.
    pub range: (f64, f64),
}

fn uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    rng.gen_range(lo..=hi)
}

fn random_layer(rng: &mut impl Rng, inputs: usize, outputs: usize, act: Activation) -> Layer {
    let w = DMatrix::from_fn(outputs, inputs, |_, _| uniform(rng, -2.0, 2.0));
    let b = (0..outputs).map(|_| uniform(rng, -2.0, 2.0)).collect();
    Layer::new(w, b, act).expect("consistent shapes")
}

/// Random network with 1 to 3 hidden ReLU layers of width 2 to 4 and a linear output layer.
pub fn random_network(rng: &mut impl Rng, inputs: usize, outputs: usize) -> Network {
    let depth = rng.gen_range(1..=3);
    let mut layers = Vec::with_capacity(depth + 1);
    let mut prev = inputs;
    for _ in 0..depth {
        let w = rng.gen_range(2..=4);
        layers.push(random_layer(rng, prev, w, Activation::ReLU));
        prev = w;
    }
    layers.push(random_layer(rng, prev, outputs, Activation::Id));
    Network::new(layers).expect("consistent widths")
}

/// Random box with center in `[−1, 1]` and one radius in `[0.2, 1]`.
pub fn random_box(rng: &mut impl Rng, dim: usize) -> Hyperrectangle {
    let center = (0..dim).map(|_| uniform(rng, -1.0, 1.0)).collect();
    let r = uniform(rng, 0.2, 1.0);
    Hyperrectangle::new(center, vec![r; dim]).expect("positive radius")
}

/// Replaces the linear output layer `Wz + b` by `cᵀWz + cᵀb`.
pub fn fold(net: &Network, c: &[f64]) -> Network {
    let mut layers = net.layers().to_vec();
    let last = layers.pop().expect("non-empty network");
    assert_eq!(last.activation, Activation::Id, "folding needs a linear output layer");
    let cm = DMatrix::from_row_slice(1, c.len(), c);
    let w = &cm * &last.weights;
    let b = c.iter().zip(&last.bias).map(|(a, b)| a * b).sum();
    layers.push(Layer::new(w, vec![b], Activation::Id).expect("consistent shapes"));
    Network::new(layers).expect("consistent widths")
}

/// Draws an instance whose property holds or fails with equal probability.
pub fn random_instance(rng: &mut impl Rng) -> Result<Instance> {
    let inputs = rng.gen_range(2..=4);
    let outputs = rng.gen_range(1..=3);
    let network = random_network(rng, inputs, outputs);
    let input = random_box(rng, inputs);
    let mut c: Vec<f64> = (0..outputs).map(|_| uniform(rng, -1.0, 1.0)).collect();
    if c.iter().all(|v| v.abs() < 1e-3) {
        c[0] = 1.0;
    }
    let range = exact_range(&fold(&network, &c), &input.clone().into())?;
    let (lo, hi) = range;
    let t = uniform(rng, 0.0, 1.0);
    let d = if rng.gen_bool(0.5) {
        hi + GAP + t * 0.25 * (hi - lo)
    } else if hi - lo > 2.0 * GAP {
        lo + GAP + t * (hi - lo - 2.0 * GAP)
    } else {
        hi - GAP
    };
    Ok(Instance { network, input, c, d, range })
}

/// How an instance is presented to a solver.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Encoding {
    /// H-polytope input, bounded H-polytope output.
    Polytope,
    /// Box input, polytope complement output.
    Complement,
    /// Box input, halfspace output.
    Halfspace,
    /// Box input, `cᵀ` folded into the network, one-dimensional box output.
    Interval,
}

impl Instance {
    pub fn problem(&self, enc: Encoding) -> Result<VerificationProblem> {
        let x: GeometricSet = self.input.clone().into();
        let (net, x, y): (Network, GeometricSet, GeometricSet) = match enc {
            Encoding::Polytope => {
                let out = bounds_from_box(&self.network, &self.input).output().clone();
                let mut rows = vec![(self.c.clone(), self.d)];
                for (j, (l, u)) in out.low().into_iter().zip(out.high()).enumerate() {
                    let mut e = vec![0.0; self.c.len()];
                    e[j] = 1.0;
                    rows.push((e.clone(), u + 1.0));
                    e[j] = -1.0;
                    rows.push((e, 1.0 - l));
                }
                let (c, d): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
                let y = HPolytope::from_rows(&c, d)?.into();
                (self.network.clone(), self.input.to_hpolytope().into(), y)
            }
            Encoding::Complement => {
                let neg: Vec<f64> = self.c.iter().map(|v| -v).collect();
                let inner = HPolytope::from_rows(&[neg], vec![-self.d])?;
                (self.network.clone(), x, PolytopeComplement::new(inner).into())
            }
            Encoding::Halfspace => (self.network.clone(), x, Halfspace::new(self.c.clone(), self.d)?.into()),
            Encoding::Interval => {
                let y = Hyperrectangle::from_bounds(&[self.range.0 - 1.0], &[self.d])?.into();
                (fold(&self.network, &self.c), x, y)
            }
        };
        VerificationProblem::new(net, x, y)
    }
}
