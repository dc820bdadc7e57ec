use thiserror::Error;

/// Errors raised by the tomography library.
#[derive(Debug, Error)]
pub enum TomoError {
    #[error("matrix is not Hermitian (max |h - h^dag| = {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("matrix trace is {trace}, expected 1")]
    NotUnitTrace { trace: f64 },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")]
    NotPositive { min_eigenvalue: f64 },

    #[error("{n_qubits} qubits requested, at most {max} supported")]
    DimensionTooLarge { n_qubits: usize, max: usize },

    #[error("{name} = {value} is out of range {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("Gram matrix is singular (smallest eigenvalue {min_eigenvalue:.3e}); measurement set is not informationally complete")]
    SingularGram { min_eigenvalue: f64 },

    #[error("{copies} copies cannot cover {count} measurement bases")]
    InsufficientCopies { copies: u64, count: usize },

    #[error("parse error in `{field}`: {message}")]
    Parse { field: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl TomoError {
    pub(crate) fn parse(field: impl Into<String>, message: impl Into<String>) -> Self {
        TomoError::Parse {
            field: field.into(),
            message: message.into(),
        }
    }

    /// True for failures of the numerical contract (as opposed to bad input data).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            TomoError::NotHermitian { .. }
                | TomoError::NotUnitTrace { .. }
                | TomoError::NotPositive { .. }
                | TomoError::SingularGram { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, TomoError>;

/// Decodes JSON, naming the path of the offending field on failure.
pub(crate) fn decode_json<T: serde::de::DeserializeOwned>(text: &str, what: &str) -> Result<T> {
    let mut de = serde_json::Deserializer::from_str(text);
    let value = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        let field = if path == "." {
            what.to_string()
        } else {
            format!("{what}: {path}")
        };
        TomoError::parse(field, e.into_inner().to_string())
    })?;
    de.end()
        .map_err(|e| TomoError::parse(what, e.to_string()))?;
    Ok(value)
}
