//! Multipartite Bell polynomials with complex roots-of-unity outcomes.
//!
//! The crate builds Bell polynomials for any number of parties, settings and
//! outcomes, computes classical bounds by exhaustive enumeration of
//! deterministic strategies, and certifies quantum values as the largest
//! eigenvalue of the assembled Bell operator.

pub mod classical;
pub mod error;
pub mod linalg;
pub mod numeric;
pub mod operators;
pub mod poly;
pub mod probability;
pub mod quantum;
pub mod report;
pub mod search;
pub mod states;

pub use error::{Error, Result};
pub use linalg::{CMatrix, CVector, C64};
