use alloc::boxed::Box;
use core::fmt;

use crate::nonlinear::SchemeTrace;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone)]
pub enum Error {
    /// Two objects that must share a spatial dimension do not.
    DimMismatch { expected: usize, found: usize },
    /// Parallel arrays with different lengths.
    LengthMismatch { expected: usize, found: usize },
    /// A coordinate or weight is NaN or infinite.
    NonFinite { what: &'static str, index: usize },
    /// A push-forward map produced a non-finite position.
    NonFiniteMap { index: usize },
    /// A test function produced a non-finite value at a particle.
    NonFiniteField { index: usize },
    InvalidParameter { name: &'static str, reason: &'static str },
    /// The flat-norm linear program could not certify optimality.
    LpFailure { primal: f64, dual: f64 },
    TooManyParticles { count: usize, limit: usize },
    EmptyGrid,
    BudgetZero,
    WrongDimension { expected: usize, found: usize },
    HOutOfRange(f64),
    /// A trajectory left the representable region.
    BlowUp { time: f64 },
    GridMismatch,
    NoConvergence { max_iter: usize, trace: Box<SchemeTrace> },
    CalibrationFailure { interval: usize, rate: f64 },
    TooFewIterations { positive: usize },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::LengthMismatch { expected, found } => {
                write!(f, "length mismatch: expected {expected}, found {found}")
            }
            Error::NonFinite { what, index } => write!(f, "non-finite {what} at index {index}"),
            Error::NonFiniteMap { index } => {
                write!(f, "map produced a non-finite position for particle {index}")
            }
            Error::NonFiniteField { index } => {
                write!(f, "field is not finite at particle {index}")
            }
            Error::InvalidParameter { name, reason } => write!(f, "invalid {name}: {reason}"),
            Error::LpFailure { primal, dual } => write!(
                f,
                "flat-norm LP not certified: primal {primal:e}, dual {dual:e}"
            ),
            Error::TooManyParticles { count, limit } => {
                write!(f, "{count} particles exceed the limit of {limit}")
            }
            Error::EmptyGrid => f.write_str("sampling grid is empty"),
            Error::BudgetZero => f.write_str("optimizer budget must be positive"),
            Error::WrongDimension { expected, found } => {
                write!(f, "operation needs dimension {expected}, got {found}")
            }
            Error::HOutOfRange(h) => write!(f, "perturbation parameter {h} outside (-1/2, 1/2)"),
            Error::BlowUp { time } => write!(f, "trajectory blew up at t = {time}"),
            Error::GridMismatch => f.write_str("curves live on different time grids"),
            Error::NoConvergence { max_iter, trace } => write!(
                f,
                "fixed-point scheme did not converge in {max_iter} iterations (last distance {:e})",
                trace.distances.last().copied().unwrap_or(f64::NAN)
            ),
            Error::CalibrationFailure { interval, rate } => write!(
                f,
                "weight calibration failed on interval {interval} (rate {rate:e})"
            ),
            Error::TooFewIterations { positive } => write!(
                f,
                "contraction fit needs at least 3 positive distances, got {positive}"
            ),
        }
    }
}

impl core::error::Error for Error {}
