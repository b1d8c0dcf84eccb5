//! Cross-sample prediction churn: measurement, reduction methods and reporting.

pub mod bo;
pub mod dataio;
pub mod error;
pub mod methods;
pub mod metrics;
pub mod nn;
pub mod protocol;
pub mod report;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
