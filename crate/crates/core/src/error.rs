use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: file not found", path.display())]
    MissingFile { path: PathBuf },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: malformed header: {reason}", path.display())]
    MalformedHeader { path: PathBuf, reason: String },

    #[error("{}: unsupported magic number {magic:?} (expected P5 or P6)", path.display())]
    UnsupportedFormat { path: PathBuf, magic: String },

    #[error("{}: malformed kernel file: {reason}", path.display())]
    KernelFormat { path: PathBuf, reason: String },

    #[error("expected 1 or 3 channels, got {0}")]
    ChannelCount(usize),

    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("image of size {dims:?} is too small: {reason}")]
    ImageTooSmall { dims: (usize, usize), reason: String },

    #[error("kernel of size {kernel:?} does not fit a {grid:?} grid")]
    KernelTooLarge {
        kernel: (usize, usize),
        grid: (usize, usize),
    },

    #[error("dimensions {dims:?} are not divisible by scale {scale}")]
    NotDivisible { dims: (usize, usize), scale: usize },

    #[error("inverse transform left an imaginary residue of {residue:e} (real magnitude {magnitude:e})")]
    NonHermitian { residue: f64, magnitude: f64 },

    #[error("denominator spectrum vanishes: min modulus {min_modulus:e} at frequency {frequency:?}")]
    SingularDenominator {
        min_modulus: f64,
        frequency: (usize, usize),
    },

    #[error("optimization diverged at iteration {iteration}: {what}")]
    Diverged { iteration: usize, what: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("external resolver exited with code {code:?}: {stderr}")]
    ResolverExit { code: Option<i32>, stderr: String },

    #[error("external resolver timed out after {seconds} s")]
    ResolverTimeout { seconds: f64 },

    #[error("external resolver produced {found:?}, expected {expected:?}")]
    ResolverOutput {
        expected: (usize, usize),
        found: (usize, usize),
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        let path = path.into();
        if source.kind() == std::io::ErrorKind::NotFound {
            Error::MissingFile { path }
        } else {
            Error::Io { path, source }
        }
    }

    /// True for failures of the numerics (as opposed to bad input or I/O).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonHermitian { .. } | Error::SingularDenominator { .. } | Error::Diverged { .. }
        )
    }
}
