//! Multi-objective Bayesian optimization with a learned Pareto set model.

pub mod archive;
pub mod config;
pub mod error;
pub mod export;
pub mod gp;
pub(crate) mod linalg;
pub mod metrics;
pub mod moo;
pub mod problems;
pub mod psm;
pub mod runner;
pub mod sampling;
pub mod scalarization;
pub mod service;
pub mod warmstart;

pub use error::{Error, Result};
