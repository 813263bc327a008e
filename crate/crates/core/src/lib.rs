//! Polynomial chaos propagation of parametric uncertainty, density fitting
//! from moments, and likelihood-based parameter identification.

pub mod basis;
pub mod density;
pub mod error;
pub mod gpc;
pub mod integrate;
pub mod mle;
pub mod models;
pub mod multiindex;
pub mod parallel;
pub mod transform;

pub use error::{Error, Result};

/// Library version embedded in run summaries.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
