//! Shared plumbing for the JSON document formats (graphs, coloring families,
//! realization problems, instance specs, traces, witnesses).
//!
//! Parsing is split into two failure classes: `Parse` for malformed JSON and
//! `Schema` for well-formed JSON that violates a document's constraints.
//! Both carry position or field diagnostics where available.

use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DocumentError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("schema violation{}: {message}", position.as_ref().map(|(l, c)| format!(" at line {l}, column {c}")).unwrap_or_default())]
    Schema {
        position: Option<(usize, usize)>,
        message: String,
    },
}

impl DocumentError {
    pub fn schema(message: impl Into<String>) -> Self {
        DocumentError::Schema {
            position: None,
            message: message.into(),
        }
    }
}

pub(crate) fn from_json_str<T: DeserializeOwned>(text: &str) -> Result<T, DocumentError> {
    serde_json::from_str(text).map_err(|e| {
        let (line, column) = (e.line(), e.column());
        if e.is_syntax() || e.is_eof() {
            DocumentError::Parse {
                line,
                column,
                message: e.to_string(),
            }
        } else {
            DocumentError::Schema {
                position: Some((line, column)),
                message: e.to_string(),
            }
        }
    })
}

pub(crate) fn to_json_string<T: Serialize>(value: &T) -> String {
    let mut out = serde_json::to_string_pretty(value).expect("document serialization is infallible");
    out.push('\n');
    out
}
