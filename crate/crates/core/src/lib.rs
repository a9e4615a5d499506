//! Neural predictive ensemble sampling for non-stationary contextual bandits.
//!
//! The crate is split along the lines of the experiment pipeline:
//!
//! - [`nn`]: a small deterministic neural-network kernel (MLP, GRU, losses,
//!   SGD, finite-difference gradient checking).
//! - [`env`]: synthetic non-stationary bandit generators and a CSV
//!   log-replay environment.
//! - [`agents`]: ensemble, sequence-ensemble and predictive-ensemble agents,
//!   plus exact Kalman-filtered Thompson and predictive sampling.
//! - [`theory`]: closed-form information terms, regret-bound evaluators and a
//!   Monte Carlo mutual-information oracle.
//! - [`harness`]: config parsing, seeded multi-run experiments, CSV/JSON/SVG
//!   output and the command-line front end.

pub mod agents;
pub mod env;
pub mod error;
pub mod exec;
pub mod harness;
pub mod nn;
pub mod rng;
pub mod theory;

pub use error::{Error, Result};
pub use exec::ExecMode;
