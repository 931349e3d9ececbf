//! Explicit two-step finite-difference solver for coupled KdV systems
//!
//! ```text
//! (θ_n)_t + c_n (θ_n)_x + Σ_{m,k} g[m][k][n] θ_k (θ_m)_x + d_n (θ_n)_xxx = 0
//! ```
//!
//! with the Hirota–Satsuma one-soliton as an exact reference, a
//! conditional-stability time-step rule and run diagnostics.
#![no_std]
// `!(x > 0.0)` deliberately rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod analytic;
pub mod diagnostics;
mod error;
pub mod model;
pub mod scheme;
pub mod stability;

pub use error::{Error, Result};
pub use model::{
    effective_dispersion, hs_integrable_system, hs_nonintegrable_system, kdv_single_system, Boundary,
    CoupledSystem, Coupling, Grid, SchemeCoefficients, WaveState,
};
pub use scheme::{integrate, integrate_observed, RunOutcome, RunSpec, RunStatus, Simulation};
