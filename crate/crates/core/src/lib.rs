//! Weighted preferential-attachment model of coauthorship.
//!
//! * [`model`]: laws of initial weights, author counts and bonuses.
//! * [`engine`]: exact simulation of the weight system.
//! * [`limit_discrete`]: limiting weight distribution for integer weights.
//! * [`limit_continuous`]: limiting tail function for continuous weights.
//! * [`analysis`]: distances, exponent estimators and ensemble pooling.

pub mod analysis;
pub mod engine;
pub mod limit_continuous;
pub mod limit_discrete;
pub mod model;
mod quadrature;

pub use limit_discrete::{ExponentCheck, SolverError};
