use std::fmt;

use serde::Serialize;
use thiserror::Error;

/// A 1-based line/column position in a source text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl Pos {
    pub fn new(line: u32, col: u32) -> Self {
        Pos { line, col }
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Error)]
pub enum CalError {
    #[error("{pos}: lexical error: {message}")]
    Lex { pos: Pos, message: String },
    #[error("{pos}: syntax error: expected {}, found {found}", expected.join(" or "))]
    Syntax {
        pos: Pos,
        expected: Vec<String>,
        found: String,
    },
    #[error("{pos}: {message}")]
    Semantic { pos: Pos, message: String },
    #[error("aggregation error: {0}")]
    Aggregation(String),
    #[error("{path}:{line}: {message}")]
    Input {
        path: String,
        line: usize,
        message: String,
    },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CalError {
    pub fn pos(&self) -> Option<Pos> {
        match self {
            CalError::Lex { pos, .. }
            | CalError::Syntax { pos, .. }
            | CalError::Semantic { pos, .. } => Some(*pos),
            _ => None,
        }
    }

    /// Prefix positional errors with the name of the file they came from.
    pub fn in_file(self, path: &str) -> CalError {
        match self {
            CalError::Lex { .. } | CalError::Syntax { .. } | CalError::Semantic { .. } => {
                let pos = self.pos().unwrap_or_default();
                let full = self.to_string();
                let message = full
                    .strip_prefix(&format!("{pos}: "))
                    .map(|m| format!("column {}: {m}", pos.col))
                    .unwrap_or(full);
                CalError::Input {
                    path: path.to_string(),
                    line: pos.line as usize,
                    message,
                }
            }
            other => other,
        }
    }
}

pub type Result<T, E = CalError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Info,
    Warning,
    Error,
}

/// A non-fatal finding attached to evaluation, checking or aggregation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pos: Option<Pos>,
    pub message: String,
}

impl Diagnostic {
    pub fn warning(message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Warning,
            pos: None,
            message: message.into(),
        }
    }

    pub fn info(message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Info,
            pos: None,
            message: message.into(),
        }
    }

    pub fn error(message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Error,
            pos: None,
            message: message.into(),
        }
    }

    pub fn at(mut self, pos: Pos) -> Self {
        self.pos = Some(pos);
        self
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Info => "info",
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        match self.pos {
            Some(p) => write!(f, "{sev}: {p}: {}", self.message),
            None => write!(f, "{sev}: {}", self.message),
        }
    }
}

/// Remove repeated diagnostics, keeping the first occurrence of each.
pub fn dedup_diagnostics(diags: &mut Vec<Diagnostic>) {
    let mut kept: Vec<Diagnostic> = Vec::with_capacity(diags.len());
    for d in diags.drain(..) {
        if !kept.contains(&d) {
            kept.push(d);
        }
    }
    *diags = kept;
}
