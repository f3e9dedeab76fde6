//! Structured-text document loading.
//!
//! Every input document (models, fixtures, pipeline configs) is accepted in
//! two renderings: TOML for hand editing and JSON as the canonical
//! interchange form. The rendering is picked from the file extension, or
//! sniffed from the first non-blank character for in-memory text.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Toml,
    Json,
}

impl Format {
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => Format::Json,
            _ => Format::Toml,
        }
    }

    pub fn sniff(text: &str) -> Format {
        match text.trim_start().chars().next() {
            Some('{') => Format::Json,
            _ => Format::Toml,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum DocError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed document: {0}")]
    Malformed(String),
}

pub fn parse<T: DeserializeOwned>(text: &str, format: Format) -> Result<T, DocError> {
    match format {
        Format::Json => serde_json::from_str(text).map_err(|e| DocError::Malformed(e.to_string())),
        Format::Toml => toml::from_str(text).map_err(|e| DocError::Malformed(e.to_string())),
    }
}

pub fn read<T: DeserializeOwned>(path: &Path) -> Result<T, DocError> {
    let text = read_text(path)?;
    parse(&text, Format::from_path(path))
}

pub fn read_text(path: &Path) -> Result<String, DocError> {
    std::fs::read_to_string(path).map_err(|source| DocError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Pretty JSON with a trailing newline. Key order follows struct field order.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut out = serde_json::to_string_pretty(value).expect("serializable value");
    out.push('\n');
    out
}
