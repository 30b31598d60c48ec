//! Bayesian ideal point estimation from legislative roll-call votes.

pub mod app;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod logistic;
pub mod mcmc;
pub mod model;
pub mod posterior;
pub mod rollcall;
pub mod stats;
pub mod svg;
pub mod synthetic;

pub use error::{Error, Result};
