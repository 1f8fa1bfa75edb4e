use thiserror::Error;

/// Errors produced by the simulation and calibration pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("point lies behind the device (depth {depth:.6} m)")]
    BehindDevice { depth: f64 },

    #[error("degenerate configuration: {0}")]
    Degenerate(String),

    #[error("underdetermined: {needed} correspondences required, got {got}")]
    Underdetermined { needed: usize, got: usize },

    #[error("no convergence after {iterations} iterations (best rms {best_rms:.3e})")]
    Convergence {
        iterations: usize,
        best_rms: f64,
        best_params: Vec<f64>,
    },

    #[error("decomposition failed: {0}")]
    Decomposition(String),

    #[error("pan/tilt state ({alpha:.6}, {beta:.6}) rad exceeds mechanical limit {limit:.6} rad")]
    Limit { alpha: f64, beta: f64, limit: f64 },

    #[error("no checkerboard corner is visible")]
    EmptyObservation,

    #[error("eye lies on the screen plane (e_z = 0)")]
    EyeOnScreenPlane,

    #[error("corner sets share no index")]
    EmptyIntersection,

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },

    #[error("schema: {0}")]
    Schema(String),

    #[error("image format: {0}")]
    Image(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// Stable machine-readable code, used as the CLI error prefix.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "E_INVALID_ARGUMENT",
            Error::BehindDevice { .. } => "E_BEHIND_DEVICE",
            Error::Degenerate(_) => "E_DEGENERATE",
            Error::Underdetermined { .. } => "E_UNDERDETERMINED",
            Error::Convergence { .. } => "E_CONVERGENCE",
            Error::Decomposition(_) => "E_DECOMPOSITION",
            Error::Limit { .. } => "E_LIMIT",
            Error::EmptyObservation => "E_EMPTY_OBSERVATION",
            Error::EyeOnScreenPlane => "E_EYE_ON_SCREEN",
            Error::EmptyIntersection => "E_EMPTY_INTERSECTION",
            Error::Stage { source, .. } => source.code(),
            Error::Io { .. } => "E_IO",
            Error::Json { .. } => "E_SCHEMA",
            Error::Schema(_) => "E_SCHEMA",
            Error::Image(_) => "E_IMAGE",
        }
    }

    pub(crate) fn at_stage(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Error {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    pub fn json(context: impl Into<String>, source: serde_json::Error) -> Error {
        Error::Json {
            context: context.into(),
            source,
        }
    }
}
