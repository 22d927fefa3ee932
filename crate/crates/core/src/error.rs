use thiserror::Error;

/// Errors produced by the simulation, training and I/O layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("operation not supported in {0} domain")]
    UnsupportedDomain(&'static str),

    #[error("particles {i} and {j} overlap (center distance {distance}, contact at {contact})")]
    Overlap {
        i: usize,
        j: usize,
        distance: f64,
        contact: f64,
    },

    #[error("invalid truncation order {0}; expected 1, 2 or 3")]
    InvalidOrder(usize),

    #[error("sampler could not satisfy `{constraint}` after {attempts} attempts (sample {sample})")]
    Sampler {
        constraint: &'static str,
        sample: usize,
        attempts: usize,
    },

    #[error("cutoff {r_cut} exceeds half the periodic box edge {edge}; minimum image is ambiguous")]
    AmbiguousImage { r_cut: f64, edge: f64 },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("training failed at epoch {epoch}, batch {batch}: {reason}")]
    Training {
        epoch: usize,
        batch: usize,
        reason: String,
    },

    #[error("simulation aborted at step {step}: {source}")]
    Simulation {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("worker failure: {0}")]
    Worker(String),

    #[error("{path}:{line}: {reason}")]
    Parse {
        path: String,
        line: usize,
        reason: String,
    },

    #[error("unsupported model format version {found} (expected {expected})")]
    FormatVersion { found: u32, expected: u32 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
