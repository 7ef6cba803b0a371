//! Bayesian evidence and Bayes-factor estimation for Gibbs random fields.
//!
//! The crate covers Ising lattices (first- and second-order neighbourhoods)
//! and exponential random graph models with edge and two-star statistics.
//! Posterior sampling uses the exchange algorithm, which only ever needs
//! sufficient statistics of simulated auxiliary data. A tempered population
//! of exchange chains additionally yields path-wise estimates of the
//! likelihood normalizing constant, from which the evidence and nested Bayes
//! factors are assembled. Exact oracles (enumeration, column transfer,
//! density of states, grid integration) and an ABC model-choice baseline are
//! included for validation.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, configuration
//! and the command line live in the `grf-evidence-cli` companion crate.
#![cfg_attr(not(test), no_std)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod abc;
pub mod bridge;
pub mod diagnostics;
pub mod ergm;
mod error;
pub mod evidence;
pub mod exchange;
pub mod ising;
pub mod kde;
pub mod math;
pub mod model;
pub mod population;
pub mod rng;
pub mod sampler;

pub use error::{Error, Result};
pub use model::{
    log_prior_density, log_q, sample_prior, temper, Domain, GaussianPrior, LogPartition,
    ModelFamily, ModelSpec, ParamVector, SuffStat,
};
pub use rng::RandomStream;
