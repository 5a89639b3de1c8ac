use std::fmt;
use std::path::Path;

use intraday_core::Error;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Input,
    Numerical,
}

/// A failed run: exit code 2 for bad inputs, 3 for numerical breakdowns.
#[derive(Debug)]
pub struct Failure {
    pub kind: Kind,
    pub message: String,
}

impl Failure {
    pub fn input(message: impl Into<String>) -> Self {
        Self {
            kind: Kind::Input,
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            Kind::Input => 2,
            Kind::Numerical => 3,
        }
    }

    /// `{"error": {"code": .., "kind": .., "message": ..}}`
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Body<'a> {
            code: i32,
            kind: Kind,
            message: &'a str,
        }
        serde_json::json!({ "error": Body { code: self.exit_code(), kind: self.kind, message: &self.message } })
            .to_string()
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Self {
            kind: if e.is_input_error() { Kind::Input } else { Kind::Numerical },
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::input(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Self::input(e.to_string())
    }
}

pub type CliResult<T> = Result<T, Failure>;

/// Prefixes I/O and format errors with the file they came from.
pub trait Context<T> {
    fn at(self, path: &Path) -> CliResult<T>;
}

impl<T, E: Into<Failure>> Context<T> for Result<T, E> {
    fn at(self, path: &Path) -> CliResult<T> {
        self.map_err(|e| {
            let f: Failure = e.into();
            let shown = path.display().to_string();
            if f.message.starts_with(&shown) {
                f
            } else {
                Failure {
                    kind: f.kind,
                    message: format!("{shown}: {}", f.message),
                }
            }
        })
    }
}
