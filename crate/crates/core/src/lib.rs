//! Replica-symmetric mean-square-error analysis of Bayes-optimal joint
//! channel-and-data (JCD) estimation for multi-cell massive MIMO uplink.
//!
//! The crate is organized bottom-up:
//!
//! * [`priors`]: scalar source distributions and their MMSE / mutual
//!   information on the scalar Gaussian channel `Y = sqrt(q) X + W`.
//! * [`replica`]: scenario description, order parameters, the one-step
//!   update maps and the replica-symmetric free entropy.
//! * [`solver`]: damped fixed-point iteration, multi-start selection,
//!   parameter sweeps and transition localization.
//! * [`scenarios`]: named worked examples and the JSON scenario format.
//! * [`montecarlo`]: finite-size simulation of the uplink model and
//!   tractable baseline estimators.
//! * [`exec`]: data-parallel execution with a sequential fallback.

pub mod error;
pub mod exec;
pub mod montecarlo;
pub mod priors;
pub mod replica;
pub mod scenarios;
pub mod solver;

pub use error::{Error, Result};
pub use exec::Execution;
pub use priors::{Prior, Snr};
pub use replica::{OrderParams, Phase, Pins, Scenario, Target};
pub use solver::{
    FixedPoint, Init, Selection, Solution, SolverConfig, TransitionOutcome, TransitionReport,
};
