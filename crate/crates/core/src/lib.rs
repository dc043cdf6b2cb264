//! Simulation, Monte Carlo limit constants and extreme-value diagnostics for
//! stationary generalized Ornstein-Uhlenbeck volatility processes
//! `V_t = e^{-xi_t} (int_0^t e^{xi_s} d eta_s + V_0)` and their integrated
//! increments `I_k = int sqrt(V_{t-}) dL_t`.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiment;
pub mod levy;
pub mod rng;
pub mod sim;
pub mod stats;
pub mod theory;

pub use error::{Error, Result};
pub use levy::{BrownianParams, CogarchParams, JumpLaw, LevyModel, NelsonParams};
pub use sim::{SimOptions, SkeletonSeries, SupMode};
