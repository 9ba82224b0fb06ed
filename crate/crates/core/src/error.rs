use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An array or matrix had the wrong extent along a named axis.
    Shape {
        what: &'static str,
        axis: &'static str,
        expected: usize,
        found: usize,
    },
    /// Input data violates a precondition (empty, too short, non-finite...).
    Data(String),
    /// A configuration value is out of range or inconsistent.
    Config(String),
    /// A graph or distance matrix is not symmetric.
    Asymmetric { row: usize, col: usize },
    /// Backward pass requested without a recorded forward pass.
    EmptyTape,
    /// The horizon of a model does not match what was requested.
    Horizon { model: usize, requested: usize },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Shape {
                what,
                axis,
                expected,
                found,
            } => write!(
                f,
                "{what}: axis `{axis}` has extent {found}, expected {expected}"
            ),
            Error::Data(msg) => write!(f, "data error: {msg}"),
            Error::Config(msg) => write!(f, "config error: {msg}"),
            Error::Asymmetric { row, col } => {
                write!(f, "matrix is not symmetric at ({row}, {col})")
            }
            Error::EmptyTape => write!(f, "backward called before any forward pass was recorded"),
            Error::Horizon { model, requested } => write!(
                f,
                "model was trained for horizon {model} but horizon {requested} was requested"
            ),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}

pub(crate) fn shape_check(
    what: &'static str,
    axis: &'static str,
    expected: usize,
    found: usize,
) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::Shape {
            what,
            axis,
            expected,
            found,
        })
    }
}
