use core::fmt;

use crate::vec2::Vec2;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A singular kernel was evaluated at its source point.
    Singularity { at: Vec2 },
    InvalidParameter {
        name: &'static str,
        reason: &'static str,
    },
    LengthMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    /// Zero pivot encountered while factoring.
    SingularMatrix { column: usize },
    IllConditioned { condition: f64 },
    /// A point of the discretized large circle coincides with a source.
    CircleOverlap { circle_index: usize, source_index: usize },
    DegenerateGeometry(&'static str),
    /// Mean force-aligned velocity on the circle is too small to normalize by.
    DegenerateMean { mean: f64 },
    InfeasibleBounds { r_min: f64, r_max: f64 },
    NonFiniteVelocity { index: usize, method: &'static str },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Singularity { at } => {
                write!(f, "singular kernel evaluated at its source ({}, {})", at.x, at.y)
            }
            Error::InvalidParameter { name, reason } => write!(f, "invalid `{name}`: {reason}"),
            Error::LengthMismatch {
                what,
                expected,
                found,
            } => write!(f, "{what}: expected length {expected}, found {found}"),
            Error::SingularMatrix { column } => {
                write!(f, "matrix is singular (zero pivot in column {column})")
            }
            Error::IllConditioned { condition } => {
                write!(f, "matrix is ill-conditioned (1-norm condition estimate {condition:e})")
            }
            Error::CircleOverlap {
                circle_index,
                source_index,
            } => write!(
                f,
                "large-circle point {circle_index} coincides with source point {source_index}"
            ),
            Error::DegenerateGeometry(what) => write!(f, "degenerate geometry: {what}"),
            Error::DegenerateMean { mean } => {
                write!(f, "mean circle velocity {mean:e} is too small to normalize by")
            }
            Error::InfeasibleBounds { r_min, r_max } => write!(
                f,
                "no admissible radius: lower bound {r_min:e} exceeds upper bound {r_max:e}"
            ),
            Error::NonFiniteVelocity { index, method } => {
                write!(f, "non-finite velocity at point {index} (method {method})")
            }
        }
    }
}

impl core::error::Error for Error {}
