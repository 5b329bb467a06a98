use thiserror::Error;

use crate::picard::ContractionReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter at {path}: {msg}")]
    Param { path: String, msg: String },

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("point ({x}, {y}) lies outside the grid")]
    OutOfDomain { x: f64, y: f64 },

    #[error("point ({x}, {y}) lies on the branch cut")]
    BranchCut { x: f64, y: f64 },

    #[error("conformal jacobian is singular at ({x}, {y})")]
    SingularJacobian { x: f64, y: f64 },

    #[error("flux folded at node {node}: det(grad X) = {det:e}")]
    MeshFold { node: usize, det: f64 },

    #[error("linear solve failed: {msg} (condition estimate {condition:e})")]
    Solver { msg: String, condition: f64 },

    #[error("incompatible data: {0}")]
    Compatibility(String),

    #[error("picard iteration did not contract after {sweeps} sweeps")]
    NoContraction {
        sweeps: usize,
        report: Box<ContractionReport>,
    },

    #[error("horizon {horizon} exceeds the admissible bound {max}")]
    HorizonExceeded { horizon: f64, max: f64 },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("config error at {pointer}: {msg}")]
    Config { pointer: String, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(path: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Param {
            path: path.into(),
            msg: msg.into(),
        }
    }

    pub(crate) fn config(pointer: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config {
            pointer: pointer.into(),
            msg: msg.into(),
        }
    }
}
