use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{0}")]
    Validation(String),
    #[error(transparent)]
    Core(#[from] copdep_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: u64, msg: String },
    #[error("missing upstream artifact {}: run stage `{stage}` first", path.display())]
    MissingUpstream { stage: &'static str, path: PathBuf },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// 1 for invalid input or configuration, 2 for numerical failure.
    pub fn exit_code(&self) -> u8 {
        use copdep_core::Error as E;
        match self {
            Error::Core(E::Degenerate(_) | E::NonConvergence(_) | E::Infeasible(_)) => 2,
            _ => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
