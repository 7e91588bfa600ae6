pub mod control;
pub mod entropy;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod inequalities;
pub mod simulate;
pub mod spectral;
pub mod stats;
pub mod stochastics;

pub use error::{Error, Result};
