use thiserror::Error;

use crate::config::ConfigError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite state derivative (component {index})")]
    NonFiniteDerivative { index: usize },

    #[error("rotation matrix is not orthonormal (|RᵀR - I|_F = {error:.3e})")]
    NotOrthonormal { error: f64 },

    #[error("mass matrix is singular or ill-conditioned (condition estimate {condition:.3e})")]
    IllConditioned { condition: f64 },

    #[error("leg constraint force is pulling on the ground (λ = {lambda:.6})")]
    ConstraintPulling { lambda: f64 },

    #[error("effective gravity is not positive: thrust {thrust:.4} N against weight {weight:.4} N")]
    NonPositiveEffectiveGravity { thrust: f64, weight: f64 },

    #[error("degenerate pendulum: CoM coincides with the centre of pressure")]
    DegeneratePendulum,

    #[error("invalid input `{name}`: {reason}")]
    InvalidInput { name: &'static str, reason: String },

    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

/// One parameter-constraint violation, keyed by its dotted config path.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub key: String,
    pub message: String,
    /// 1-based line in the source file, when known.
    pub line: Option<usize>,
}

impl Violation {
    pub fn new(key: impl Into<String>, message: impl Into<String>) -> Self {
        Violation { key: key.into(), message: message.into(), line: None }
    }
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.line {
            Some(line) => write!(f, "{} (line {line}): {}", self.key, self.message),
            None => write!(f, "{}: {}", self.key, self.message),
        }
    }
}
