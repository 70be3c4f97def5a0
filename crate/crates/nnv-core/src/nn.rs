//! Feedforward networks, activation patterns, problems and results.

use std::fmt;

use nalgebra::DMatrix;

use crate::error::{check_dim, Error, Result};
use crate::geometry::GeometricSet;
use crate::linalg;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Activation {
    ReLU,
    Id,
}

impl Activation {
    pub fn apply(self, v: f64) -> f64 {
        match self {
            Activation::ReLU => v.max(0.0),
            Activation::Id => v,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::ReLU => "relu",
            Activation::Id => "id",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    pub weights: DMatrix<f64>,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl Layer {
    pub fn new(weights: DMatrix<f64>, bias: Vec<f64>, activation: Activation) -> Result<Self> {
        check_dim("layer bias", weights.nrows(), bias.len())?;
        if weights.nrows() == 0 || weights.ncols() == 0 {
            return Err(Error::Invalid("layer with zero width".into()));
        }
        if weights.iter().chain(bias.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Invalid("non-finite layer parameter".into()));
        }
        Ok(Layer { weights, bias, activation })
    }

    /// Builds a layer from row-major weights.
    pub fn from_rows(rows: &[Vec<f64>], bias: Vec<f64>, activation: Activation) -> Result<Self> {
        let ncols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(Error::Invalid("ragged weight rows".into()));
        }
        Layer::new(linalg::from_rows(rows, ncols), bias, activation)
    }

    pub fn input_dim(&self) -> usize {
        self.weights.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.weights.nrows()
    }

    /// Pre-activation values `W x + b`.
    pub fn affine(&self, x: &[f64]) -> Vec<f64> {
        linalg::affine(&self.weights, x, &self.bias)
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.affine(x).into_iter().map(|v| self.activation.apply(v)).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    layers: Vec<Layer>,
}

impl Network {
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Invalid("network needs at least one layer".into()));
        }
        for pair in layers.windows(2) {
            check_dim("consecutive layers", pair[0].output_dim(), pair[1].input_dim())?;
        }
        Ok(Network { layers })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].output_dim()
    }

    /// Widths `k_0, …, k_n`.
    pub fn widths(&self) -> Vec<usize> {
        let mut w = vec![self.input_dim()];
        w.extend(self.layers.iter().map(Layer::output_dim));
        w
    }

    pub fn relu_count(&self) -> usize {
        self.layers.iter().filter(|l| l.activation == Activation::ReLU).map(Layer::output_dim).sum()
    }

    /// The first `n` layers as a network of their own.
    pub fn prefix(&self, n: usize) -> Result<Network> {
        if n == 0 || n > self.layers.len() {
            return Err(Error::Invalid(format!("prefix length {n} out of range")));
        }
        Network::new(self.layers[..n].to_vec())
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        forward(self, x)
    }

    /// Pre- and post-activation values of every layer. `post[0]` is the input.
    pub fn trace(&self, x: &[f64]) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
        check_dim("network input", self.input_dim(), x.len())?;
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut post = vec![x.to_vec()];
        for layer in &self.layers {
            let zh = layer.affine(post.last().unwrap());
            post.push(zh.iter().map(|&v| layer.activation.apply(v)).collect());
            pre.push(zh);
        }
        Ok((pre, post))
    }
}

pub fn forward(net: &Network, x: &[f64]) -> Result<Vec<f64>> {
    check_dim("network input", net.input_dim(), x.len())?;
    let mut z = x.to_vec();
    for layer in net.layers() {
        z = layer.apply(&z);
    }
    Ok(z)
}

pub fn relu(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| x.max(0.0)).collect()
}

/// On/off status of every node, one vector per layer. Identity layers are all on.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ActivationPattern(pub Vec<Vec<bool>>);

impl ActivationPattern {
    pub fn layer(&self, i: usize) -> &[bool] {
        &self.0[i]
    }

    pub fn matches(&self, net: &Network) -> bool {
        self.0.len() == net.layers().len() && self.0.iter().zip(net.layers()).all(|(d, l)| d.len() == l.output_dim())
    }

    /// Enumerates every pattern over the ReLU nodes of `net`; identity layers stay on.
    pub fn enumerate(net: &Network) -> Vec<ActivationPattern> {
        let count = net.relu_count();
        let mut out = Vec::with_capacity(1usize << count);
        for code in 0u64..(1u64 << count) {
            let mut bit = 0;
            let mut layers = Vec::with_capacity(net.layers().len());
            for layer in net.layers() {
                let mut d = Vec::with_capacity(layer.output_dim());
                for _ in 0..layer.output_dim() {
                    if layer.activation == Activation::ReLU {
                        d.push(code >> bit & 1 == 1);
                        bit += 1;
                    } else {
                        d.push(true);
                    }
                }
                layers.push(d);
            }
            out.push(ActivationPattern(layers));
        }
        out
    }
}

pub fn get_activation(net: &Network, x: &[f64]) -> Result<ActivationPattern> {
    let (pre, _) = net.trace(x)?;
    Ok(ActivationPattern(
        pre.iter()
            .zip(net.layers())
            .map(|(zh, l)| match l.activation {
                Activation::ReLU => zh.iter().map(|&v| v > 0.0).collect(),
                Activation::Id => vec![true; zh.len()],
            })
            .collect(),
    ))
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerificationProblem {
    pub network: Network,
    pub input: GeometricSet,
    pub output: GeometricSet,
}

impl VerificationProblem {
    pub fn new(network: Network, input: GeometricSet, output: GeometricSet) -> Result<Self> {
        check_dim("input set", network.input_dim(), input.dim())?;
        check_dim("output set", network.output_dim(), output.dim())?;
        Ok(VerificationProblem { network, input, output })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Status {
    Holds,
    Violated,
    Unknown,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Holds => "holds",
            Status::Violated => "violated",
            Status::Unknown => "unknown",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Payload {
    None,
    CounterExample(Vec<f64>),
    MaxDisturbance(f64),
    Reachable(Vec<GeometricSet>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerificationResult {
    pub status: Status,
    pub payload: Payload,
}

impl VerificationResult {
    pub fn new(status: Status, payload: Payload) -> Self {
        VerificationResult { status, payload }
    }

    pub fn holds() -> Self {
        Self::new(Status::Holds, Payload::None)
    }

    pub fn unknown() -> Self {
        Self::new(Status::Unknown, Payload::None)
    }

    pub fn counter_example(x: Vec<f64>) -> Self {
        Self::new(Status::Violated, Payload::CounterExample(x))
    }

    pub fn disturbance(status: Status, eps: f64) -> Self {
        Self::new(status, Payload::MaxDisturbance(eps))
    }

    pub fn reachable(status: Status, sets: Vec<GeometricSet>) -> Self {
        Self::new(status, Payload::Reachable(sets))
    }

    pub fn counter_example_point(&self) -> Option<&[f64]> {
        match &self.payload {
            Payload::CounterExample(x) => Some(x),
            _ => None,
        }
    }

    pub fn max_disturbance(&self) -> Option<f64> {
        match self.payload {
            Payload::MaxDisturbance(e) => Some(e),
            _ => None,
        }
    }

    pub fn reachable_sets(&self) -> Option<&[GeometricSet]> {
        match &self.payload {
            Payload::Reachable(s) => Some(s),
            _ => None,
        }
    }
}
