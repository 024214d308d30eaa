use alloc::string::String;
use core::fmt;

/// Errors raised by the algorithmic core.
#[derive(Clone, Debug, PartialEq)]
pub enum Error {
    /// A pixel coordinate falls outside the raster.
    Coordinate { x: usize, y: usize, width: usize, height: usize },
    /// A parameter set violates its invariants.
    Config(String),
    /// A value could not be quantized to a bit string.
    Encoding(String),
    /// A bit string has the wrong length for the requested layout.
    Decoding { expected: usize, found: usize },
    /// Two bit strings of different length were compared.
    Affinity { left: usize, right: usize },
    /// A clone rank outside `1..=n`.
    Rank(usize),
    /// Vector lengths disagree.
    Shape { expected: usize, found: usize },
    /// The objective returned NaN or an infinity.
    Objective(f64),
    /// The model has not been trained yet.
    State(&'static str),
    /// Input data is missing or inconsistent.
    Input(String),
    /// A linear system could not be solved.
    Singular,
}

pub type Result<T> = core::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Coordinate { x, y, width, height } => {
                write!(f, "pixel ({x}, {y}) is outside the {width}x{height} raster")
            }
            Error::Config(msg) => write!(f, "invalid configuration: {msg}"),
            Error::Encoding(msg) => write!(f, "encoding error: {msg}"),
            Error::Decoding { expected, found } => {
                write!(f, "bit string has {found} bits, expected {expected}")
            }
            Error::Affinity { left, right } => {
                write!(f, "cannot compare bit strings of length {left} and {right}")
            }
            Error::Rank(i) => write!(f, "clone rank {i} is out of range"),
            Error::Shape { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::Objective(v) => write!(f, "objective returned non-finite value {v}"),
            Error::State(msg) => write!(f, "invalid state: {msg}"),
            Error::Input(msg) => write!(f, "invalid input: {msg}"),
            Error::Singular => f.write_str("linear system is singular"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}
