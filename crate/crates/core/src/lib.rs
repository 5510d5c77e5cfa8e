//! Finite-dimensional quantum measurement laboratory.

pub mod correlate;
pub mod error;
pub mod linop;
pub mod models;
pub mod quantum;
pub mod random;
pub mod report;
pub mod scheme;
pub mod transformer;
pub mod verdict;

pub use error::{QmError, Result};
pub use verdict::Verdict;
