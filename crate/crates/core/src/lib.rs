//! Safe Bayesian optimization with multiple constraints over finite
//! parameter domains.

pub mod bench;
pub mod contexts;
pub mod domain;
pub mod error;
pub mod experiment;
pub mod gp;
pub mod optimizer;
pub mod oracle;
pub mod rng;

pub use error::{Error, Result};
