//! CLI error taxonomy mapped to exit codes, with one-line JSON diagnostics.

use serde::Serialize;

#[derive(Debug)]
pub enum CliError {
    /// Bad invocation or bad input data: unknown flag, missing file,
    /// malformed JSON, schema violation. Exit code 1.
    Usage { message: String, path: Option<String> },
    /// The computation itself failed: non-convergence, infeasible
    /// transport. Exit code 2.
    Numerical { message: String },
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError::Usage { message: message.into(), path: None }
    }

    pub fn usage_at(message: impl Into<String>, path: impl Into<String>) -> Self {
        CliError::Usage { message: message.into(), path: Some(path.into()) }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        CliError::Numerical { message: message.into() }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage { .. } => 1,
            CliError::Numerical { .. } => 2,
        }
    }

    /// One line of JSON on stderr: `{"error":"usage","message":...,"path":...}`.
    pub fn report(&self) {
        #[derive(Serialize)]
        struct Line<'a> {
            error: &'static str,
            message: &'a str,
            #[serde(skip_serializing_if = "Option::is_none")]
            path: Option<&'a str>,
        }
        let line = match self {
            CliError::Usage { message, path } => {
                Line { error: "usage", message, path: path.as_deref() }
            }
            CliError::Numerical { message } => {
                Line { error: "numerical", message, path: None }
            }
        };
        eprintln!("{}", serde_json::to_string(&line).expect("error line serializes"));
    }
}

/// Core errors surfacing through the CLI: transport and convergence failures
/// are numerical, everything else is a problem with the inputs.
impl From<wbary_core::Error> for CliError {
    fn from(e: wbary_core::Error) -> Self {
        match e {
            wbary_core::Error::Transport(_) | wbary_core::Error::NonConvergence(_) => {
                CliError::numerical(e.to_string())
            }
            _ => CliError::usage(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
