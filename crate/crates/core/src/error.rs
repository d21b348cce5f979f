use alloc::string::String;
use core::fmt;

/// Errors raised by the step functions and the frame codec.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A step was requested with `dt <= 0` (or a non-finite `dt`).
    NonPositiveDt(f64),
    Frame(FrameError),
    /// An analysis precondition does not hold.
    Analysis(&'static str),
    Config(ConfigError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameError {
    Length(usize),
    Sync(u8),
    Checksum {
        expected: u8,
        found: u8,
    },
    /// Bits outside the documented command field were set.
    ReservedBits(u16),
}

/// A configuration problem, located by a dotted field path such as
/// `plant.band` or `neural.delays.ru3_ms`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self { path: path.into(), message: message.into() }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::NonPositiveDt(dt) => write!(f, "time step must be positive, got {dt} ms"),
            Error::Frame(e) => write!(f, "motor frame: {e}"),
            Error::Analysis(msg) => write!(f, "analysis: {msg}"),
            Error::Config(e) => e.fmt(f),
        }
    }
}

impl fmt::Display for FrameError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FrameError::Length(n) => write!(f, "expected 5 bytes, got {n}"),
            FrameError::Sync(b) => write!(f, "bad sync byte 0x{b:02X}"),
            FrameError::Checksum { expected, found } => {
                write!(f, "checksum mismatch: expected 0x{expected:02X}, found 0x{found:02X}")
            }
            FrameError::ReservedBits(bits) => write!(f, "reserved bits set: 0x{bits:04X}"),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

impl From<FrameError> for Error {
    fn from(e: FrameError) -> Self {
        Error::Frame(e)
    }
}

impl From<ConfigError> for Error {
    fn from(e: ConfigError) -> Self {
        Error::Config(e)
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}
#[cfg(feature = "std")]
impl std::error::Error for FrameError {}
#[cfg(feature = "std")]
impl std::error::Error for ConfigError {}

pub(crate) fn check_dt(dt: f64) -> Result<(), Error> {
    if dt > 0.0 && dt.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositiveDt(dt))
    }
}
