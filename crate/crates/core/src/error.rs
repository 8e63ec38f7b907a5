use alloc::boxed::Box;
use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A precondition on an argument was violated.
    InvalidArgument(String),
    /// Strict palette decode hit a pixel that is not one of the nine class colours.
    Decode { x: usize, y: usize, rgb: [u8; 3] },
    /// A scene script line could not be parsed (1-based line number).
    Syntax { line: usize, message: String },
    /// A scene script parsed but breaks an invariant.
    Validation(String),
    /// The segmentation source failed for the request issued at `frame`.
    Segmentation { frame: usize, message: String },
    /// A tracker step failed.
    Step { frame: usize, source: Box<Error> },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::Decode { x, y, rgb } => write!(
                f,
                "pixel ({x}, {y}) has off-palette colour ({}, {}, {})",
                rgb[0], rgb[1], rgb[2]
            ),
            Error::Syntax { line, message } => write!(f, "line {line}: {message}"),
            Error::Validation(msg) => write!(f, "validation error: {msg}"),
            Error::Segmentation { frame, message } => {
                write!(f, "segmentation of frame {frame} failed: {message}")
            }
            Error::Step { frame, source } => write!(f, "step at frame {frame} failed: {source}"),
        }
    }
}

impl core::error::Error for Error {
    fn source(&self) -> Option<&(dyn core::error::Error + 'static)> {
        match self {
            Error::Step { source, .. } => Some(source.as_ref()),
            _ => None,
        }
    }
}
