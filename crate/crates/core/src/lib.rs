//! Estimation and testing for a continuous score measured at a landmark
//! time in the presence of truncation by a terminal event.

pub mod data;
pub mod error;
pub mod estimators;
pub mod nuisance;
pub mod numfmt;
pub mod numerics;
pub mod simulation;
pub mod testing;

pub use error::{Error, Result};
