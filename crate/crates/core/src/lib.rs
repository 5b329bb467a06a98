//! Conformal-Lagrangian solver for two-dimensional free-boundary Oldroyd-B
//! flow, with splash detection and stability experiments.

pub mod calibration;
pub mod compat;
pub mod conformal;
pub mod error;
pub mod fields;
pub mod flux;
pub mod geometry;
pub mod grid;
pub mod linear;
pub mod output;
pub mod params;
pub mod picard;
pub mod scenario;
pub mod sobolev;
pub mod sparse;
pub mod splash;
pub mod stress;
pub mod tensor;

pub use error::{Error, Result};
