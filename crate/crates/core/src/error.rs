use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed CSV at line {line}: {reason}")]
    MalformedCsv { line: u64, reason: String },

    #[error("duplicate wavelength {wavelength} nm at line {line}")]
    DuplicateWavelength { line: u64, wavelength: f64 },

    #[error("wavelength {wavelength} nm at line {line} is not greater than the previous row")]
    UnsortedWavelength { line: u64, wavelength: f64 },

    #[error("source spectrum covers {source_start}..{source_end} nm but the grid needs {grid_start}..{grid_end} nm")]
    InsufficientCoverage {
        source_start: f64,
        source_end: f64,
        grid_start: f64,
        grid_end: f64,
    },

    #[error("invalid wavelength grid: {0}")]
    InvalidGrid(String),

    #[error("matrix has numerical rank {rank}, expected {expected}")]
    RankDeficient { rank: usize, expected: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("spectra live on different wavelength grids")]
    GridMismatch,

    #[error("filter transmittance must be strictly positive, got {value} at index {index}")]
    NonPositiveFilter { index: usize, value: f64 },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("finite-difference step {h} leaves the positive orthant at index {index}")]
    StepTooLarge { index: usize, h: f64 },

    #[error("bad basis specification: {0}")]
    BadBasisSpec(String),

    #[error("linear system is singular or indefinite (alpha = {alpha})")]
    SingularSystem { alpha: f64 },

    #[error("line search found no ascent direction at the first iteration")]
    NoAscent,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{}: {source}", path.display())]
    File {
        path: PathBuf,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn in_file(self, path: impl Into<PathBuf>) -> Self {
        Error::File {
            path: path.into(),
            source: Box::new(self),
        }
    }
}
