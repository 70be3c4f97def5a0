//! Core types and numerical kernels for verifying feedforward ReLU networks.
//!
//! The crate holds the network model, the set vocabulary used for input and
//! output constraints, a dense simplex LP solver with branch-and-bound for
//! binaries, a DPLL SAT solver, interval and gradient bounds, and the
//! constraint encodings that turn a network into a [`lp::LinearModel`].

pub mod bounds;
pub mod encoding;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod lp;
pub mod nn;
pub mod sat;
pub mod text;

pub use error::{Error, Result};
pub use geometry::{GeometricSet, HPolytope, Halfspace, Hyperrectangle, PolytopeComplement, VPolytope};
pub use nn::{
    forward, get_activation, relu, Activation, ActivationPattern, Layer, Network, Payload, Status, VerificationProblem,
    VerificationResult,
};

/// Absolute slack allowed on inequality tests in set membership.
pub const TAU_SET: f64 = 1e-8;
/// Feasibility tolerance of the LP kernel.
pub const TAU_LP: f64 = 1e-7;
