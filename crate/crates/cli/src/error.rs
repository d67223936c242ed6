use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Malformed TOML or a key the schema does not know.
    #[error("{file}{line}:{col}: {message}", file = file_prefix(.file))]
    Parse {
        file: Option<String>,
        line: usize,
        col: usize,
        message: String,
    },

    /// Well-formed but semantically invalid configuration.
    #[error("{0}")]
    Config(String),

    /// An integration left the physical region.
    #[error("{0}")]
    Numerical(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

fn file_prefix(file: &Option<String>) -> String {
    file.as_ref().map(|f| format!("{f}:")).unwrap_or_default()
}

impl CliError {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } | CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }

    pub(crate) fn invalid(section: &str, e: antiblockade::Error) -> Self {
        CliError::Config(format!("[{section}] {e}"))
    }

    pub(crate) fn in_file(self, path: &Path) -> Self {
        match self {
            CliError::Parse {
                line, col, message, ..
            } => CliError::Parse {
                file: Some(path.display().to_string()),
                line,
                col,
                message,
            },
            other => other,
        }
    }
}

impl From<antiblockade::Error> for CliError {
    fn from(e: antiblockade::Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Config(e.to_string())
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.into())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        let parse = CliError::Parse {
            file: None,
            line: 1,
            col: 2,
            message: "x".into(),
        };
        assert_eq!(parse.exit_code(), 2);
        assert_eq!(parse.to_string(), "1:2: x");
        let quality = antiblockade::Error::IntegrationQuality {
            step: 3,
            reason: "trace".into(),
        };
        assert_eq!(CliError::from(quality).exit_code(), 3);
        assert_eq!(
            CliError::from(antiblockade::Error::InvalidParameters("p".into())).exit_code(),
            2
        );
    }
}
