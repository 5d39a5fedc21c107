//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("evaluation point at distance {dist:.6e} from the center is inside or on the sphere (radius {radius:.6e})")]
    PointInsideScatterer { dist: f64, radius: f64 },

    #[error("source at distance {dist:.6e} from the center is inside or on the sphere (radius {radius:.6e})")]
    SourceInsideScatterer { dist: f64, radius: f64 },

    #[error(
        "series truncation failed: tail term {tail:.3e} above tolerance {tol:.3e} at order {order}"
    )]
    TruncationFailure { tail: f64, tol: f64, order: usize },

    #[error("modal denominator magnitude {magnitude:.3e} below guard at order {order}; near-resonant configuration")]
    ModalResonance { order: usize, magnitude: f64 },

    #[error("inadmissible source ball: j_{witness}(kR) = {value:.3e} for kR = {kr:.6}")]
    InadmissibleBall { witness: usize, value: f64, kr: f64 },

    #[error("geometry collision: {0}")]
    GeometryCollision(String),

    #[error("inconsistent phaseless data: {0}")]
    InconsistentData(String),

    #[error("empty valid set: every entry is below the amplitude floor")]
    EmptyValidSet,

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for the CLI: 1 validation, 2 numerical, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidConfig(_)
            | Error::InadmissibleBall { .. }
            | Error::GeometryCollision { .. }
            | Error::PointInsideScatterer { .. }
            | Error::SourceInsideScatterer { .. }
            | Error::Parse(_) => 1,
            Error::TruncationFailure { .. }
            | Error::ModalResonance { .. }
            | Error::InconsistentData(_)
            | Error::EmptyValidSet => 2,
            Error::Io(_) => 3,
        }
    }
}
