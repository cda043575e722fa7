use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] itkm_core::Error),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, LabError>;

impl LabError {
    pub fn config(msg: impl Into<String>) -> Self {
        LabError::Config(msg.into())
    }

    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        LabError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    /// Process exit code: 2 for invalid configuration, 3 for numerical
    /// failures, 1 for anything else (i/o).
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Config(_) => 2,
            LabError::Core(e) if e.is_numerical() => 3,
            LabError::Core(_) => 2,
            LabError::Io { .. } | LabError::Csv(_) => 1,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(LabError::config("x").exit_code(), 2);
        assert_eq!(LabError::from(itkm_core::Error::Numerical("x".into())).exit_code(), 3);
        assert_eq!(LabError::from(itkm_core::Error::InvalidInput("x".into())).exit_code(), 2);
        let io = std::io::Error::new(std::io::ErrorKind::PermissionDenied, "no");
        assert_eq!(LabError::io(std::path::Path::new("/x"), io).exit_code(), 1);
    }
}
