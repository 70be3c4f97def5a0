//! Verification algorithms for feed-forward ReLU networks.
//!
//! Every solver takes a [`VerificationProblem`](nnv_core::VerificationProblem)
//! and returns a [`VerificationResult`](nnv_core::VerificationResult). Solvers
//! that cannot handle a problem's input or output set return an error instead
//! of a guess.

pub mod deadline;
pub mod dlv;
pub mod dual;
pub mod fastlin;
pub mod primal;
pub mod reach;
pub mod search;
pub mod symbolic;
pub mod util;

pub use dlv::{solve_dlv, DlvConfig};
pub use dual::{convdual_value, duality_value, relaxed_relu, solve_convdual, solve_duality};
pub use fastlin::{fastlin_bounds, solve_fastlin, solve_fastlip, FastLinConfig};
pub use primal::{solve_ilp, solve_mipverify, solve_nsverify, IlpConfig, NsVerifyConfig};
pub use reach::{solve_ai2, solve_exactreach, solve_maxsens, ExactReachConfig, MaxSensConfig};
pub use search::{
    bab_range, planet_initial_clauses, sherlock_range, solve_bab, solve_planet, solve_reluplex, solve_sherlock,
    BabConfig, SherlockConfig,
};
pub use symbolic::{
    solve_reluval, symbolic_forward, ReluValConfig, SymbolicInterval, SymbolicIntervalMask, TreeSearch,
};
pub use util::is_counter_example;
