//! Helpers shared by the solvers.

use nnv_core::geometry::{member, GeometricSet, Hyperrectangle};
use nnv_core::{Error, Result, VerificationProblem};

pub(crate) fn input_box(p: &VerificationProblem) -> Result<&Hyperrectangle> {
    p.input
        .as_hyperrectangle()
        .ok_or_else(|| Error::Unsupported(format!("input must be a hyperrectangle, got {}", p.input.kind().name())))
}

pub(crate) fn uniform_radius(h: &Hyperrectangle) -> Result<f64> {
    let r = h.max_radius();
    if h.radius.iter().any(|&x| (x - r).abs() > 1e-12 * (1.0 + r)) {
        return Err(Error::Unsupported("input box must have a uniform radius".into()));
    }
    Ok(r)
}

/// `(c, d)` of an output constraint `cᵀy ≤ d`.
pub(crate) fn output_halfspace(p: &VerificationProblem) -> Result<(Vec<f64>, f64)> {
    match &p.output {
        GeometricSet::Halfspace(h) => Ok((h.c.clone(), h.d)),
        GeometricSet::HPolytope(hp) if hp.d.len() == 1 => Ok(hp.rows().remove(0)),
        s => Err(Error::Unsupported(format!("output must be a halfspace, got {}", s.kind().name()))),
    }
}

/// `[low, high]` of a one-dimensional output set; unbounded sides are infinite.
pub(crate) fn output_interval(s: &GeometricSet) -> Result<(f64, f64)> {
    if s.dim() != 1 {
        return Err(Error::Unsupported("output set must be one-dimensional".into()));
    }
    let rows = match s {
        GeometricSet::Hyperrectangle(h) => return Ok((h.low()[0], h.high()[0])),
        GeometricSet::PolytopeComplement(_) => return Err(Error::Unsupported("output must be an interval".into())),
        s => s.constraint_rows()?,
    };
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for (c, d) in rows {
        if c[0] > 0.0 {
            hi = hi.min(d / c[0]);
        } else if c[0] < 0.0 {
            lo = lo.max(d / c[0]);
        } else if d < 0.0 {
            return Err(Error::EmptySet);
        }
    }
    Ok((lo, hi))
}

pub(crate) fn single_output(p: &VerificationProblem) -> Result<()> {
    if p.network.output_dim() != 1 {
        return Err(Error::Unsupported(format!("network must have one output, has {}", p.network.output_dim())));
    }
    Ok(())
}

/// Whether `x` lies in the input set and maps outside the output set.
pub fn is_counter_example(p: &VerificationProblem, x: &[f64]) -> bool {
    if x.len() != p.network.input_dim() || !member(&p.input, x).unwrap_or(false) {
        return false;
    }
    match p.network.forward(x) {
        Ok(y) => matches!(member(&p.output, &y), Ok(false)),
        Err(_) => false,
    }
}

/// A candidate point moved into a box input and checked by a forward pass.
pub(crate) fn verified(p: &VerificationProblem, x: Vec<f64>) -> Option<Vec<f64>> {
    let x = match p.input.as_hyperrectangle() {
        Some(h) => h.clamp(&x),
        None => x,
    };
    is_counter_example(p, &x).then_some(x)
}

/// Axis-aligned box of `[low, high]` bounds, widening inverted pairs.
pub(crate) fn box_from(lo: &[f64], hi: &[f64]) -> Hyperrectangle {
    let hi: Vec<f64> = lo.iter().zip(hi).map(|(l, h)| h.max(*l)).collect();
    Hyperrectangle::from_bounds(lo, &hi).unwrap()
}

pub(crate) fn dedup(points: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    for p in points {
        let scale = 1e-9 * (1.0 + p.iter().fold(0.0f64, |m, v| m.max(v.abs())));
        if !out.iter().any(|q| nnv_core::linalg::inf_norm_dist(&p, q) <= scale) {
            out.push(p);
        }
    }
    out
}
