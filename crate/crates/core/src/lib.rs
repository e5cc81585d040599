//! Simulation of spectrally positive stable processes with marked jumps,
//! local-time estimators built from jump marks, and the analytic functions
//! used to check them.

pub mod error;
pub mod estimators;
pub mod marks;
pub mod quad;
pub mod restricted;
pub mod sampling;
pub mod specfun;
pub mod stablepath;

pub use error::{Error, Result};
