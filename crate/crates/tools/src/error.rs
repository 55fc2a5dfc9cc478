use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum ToolError {
    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("missing input {}: {hint}", path.display())]
    MissingInput { path: PathBuf, hint: String },

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{context}: {source}")]
    Numerical {
        context: String,
        #[source]
        source: geneo_core::Error,
    },

    #[error("csv output {}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl ToolError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        if source.kind() == std::io::ErrorKind::NotFound {
            return ToolError::MissingInput {
                path: path.to_path_buf(),
                hint: "file not found".into(),
            };
        }
        ToolError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn numerical(context: impl Into<String>) -> impl FnOnce(geneo_core::Error) -> Self {
        let context = context.into();
        move |source| ToolError::Numerical { context, source }
    }
}
