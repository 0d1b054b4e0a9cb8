use std::fmt;

/// Failures of a CLI command. Configuration problems map to exit code 2,
/// everything else to exit code 1.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid config{}: {message}", PathSuffix(path))]
    Config { path: String, message: String },

    #[error("{context}: {source}")]
    Solver {
        context: String,
        #[source]
        source: bilevel::Error,
    },

    #[error("{method} aborted: {reason}")]
    Aborted { method: String, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            _ => 1,
        }
    }

    pub(crate) fn solver(context: impl Into<String>) -> impl FnOnce(bilevel::Error) -> CliError {
        let context = context.into();
        move |source| CliError::Solver { context, source }
    }
}

struct PathSuffix<'a>(&'a str);

impl fmt::Display for PathSuffix<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            Ok(())
        } else {
            write!(f, " at `{}`", self.0)
        }
    }
}
