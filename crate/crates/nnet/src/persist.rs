//! Versioned JSON model files. Floats are written in shortest round-trip
//! form, so a reloaded model reproduces inference outputs bit for bit.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const FORMAT_NAME: &str = "codemix-model";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum PersistError {
    #[error("cannot access model file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed model file {path}: {source}")]
    Format {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("model file {path} holds a {found} model, expected {expected}")]
    WrongKind {
        path: String,
        found: String,
        expected: String,
    },
    #[error("model file {path} has unsupported format {format} v{version}")]
    Unsupported {
        path: String,
        format: String,
        version: u32,
    },
}

#[derive(Serialize, Deserialize)]
struct Envelope<T> {
    format: String,
    version: u32,
    kind: String,
    model: T,
}

pub fn to_json<T: Serialize>(kind: &str, model: &T) -> serde_json::Result<String> {
    serde_json::to_string(&Envelope {
        format: FORMAT_NAME.to_string(),
        version: FORMAT_VERSION,
        kind: kind.to_string(),
        model,
    })
}

pub fn from_json<T: DeserializeOwned>(
    kind: &str,
    json: &str,
    path: &str,
) -> Result<T, PersistError> {
    let env: Envelope<serde_json::Value> =
        serde_json::from_str(json).map_err(|source| PersistError::Format {
            path: path.to_string(),
            source,
        })?;
    if env.format != FORMAT_NAME || env.version != FORMAT_VERSION {
        return Err(PersistError::Unsupported {
            path: path.to_string(),
            format: env.format,
            version: env.version,
        });
    }
    if env.kind != kind {
        return Err(PersistError::WrongKind {
            path: path.to_string(),
            found: env.kind,
            expected: kind.to_string(),
        });
    }
    serde_json::from_value(env.model).map_err(|source| PersistError::Format {
        path: path.to_string(),
        source,
    })
}

pub fn save<T: Serialize>(path: &Path, kind: &str, model: &T) -> Result<(), PersistError> {
    let display = path.display().to_string();
    let json = to_json(kind, model).map_err(|source| PersistError::Format {
        path: display.clone(),
        source,
    })?;
    fs::write(path, json).map_err(|source| PersistError::Io {
        path: display,
        source,
    })
}

pub fn load<T: DeserializeOwned>(path: &Path, kind: &str) -> Result<T, PersistError> {
    let display = path.display().to_string();
    let json = fs::read_to_string(path).map_err(|source| PersistError::Io {
        path: display.clone(),
        source,
    })?;
    from_json(kind, &json, &display)
}
