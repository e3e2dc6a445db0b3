//! Max-stable and r-Pareto models for spatial extremes.
//!
//! Three spectral families are provided: Brown–Resnick, skewed Brown–Resnick
//! and truncated extremal-t. Each exposes its exponent function, intensity and
//! partial derivatives in closed form, exact simulation of max-stable and
//! r-Pareto fields, and spectral-likelihood fitting of threshold exceedances.

pub mod commands;
pub mod dist;
pub mod dependence;
pub mod error;
pub mod inference;
pub mod io;
pub mod linalg;
pub mod model;
pub mod oracle;
pub mod rng;
pub mod simulate;

pub use error::{Error, Result};
