//! Shared helpers for the line-oriented input files.

use std::fs;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
}

impl DataError {
    pub fn parse(path: &str, line: usize, message: impl Into<String>) -> Self {
        DataError::Parse {
            path: path.to_string(),
            line,
            message: message.into(),
        }
    }

    pub fn invalid(path: &str, message: impl Into<String>) -> Self {
        DataError::Invalid {
            path: path.to_string(),
            message: message.into(),
        }
    }
}

pub fn read_text(path: &Path) -> Result<String, DataError> {
    fs::read_to_string(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Non-blank lines with 1-based line numbers. Comment lines start with `# `
/// (or are a lone `#`), so `#<TAB>...` is still data.
pub fn data_lines(content: &str) -> impl Iterator<Item = (usize, &str)> {
    content
        .lines()
        .enumerate()
        .map(|(n, l)| (n + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !is_comment(l))
}

fn is_comment(line: &str) -> bool {
    line == "#" || line.starts_with("# ")
}

/// Splits a two-column TSV line.
pub fn two_columns<'a>(
    line: &'a str,
    path: &str,
    line_no: usize,
) -> Result<(&'a str, &'a str), DataError> {
    let mut cols = line.split('\t');
    match (cols.next(), cols.next(), cols.next()) {
        (Some(a), Some(b), None) if !a.trim().is_empty() && !b.trim().is_empty() => {
            Ok((a.trim(), b.trim()))
        }
        _ => Err(DataError::parse(
            path,
            line_no,
            format!("expected two tab-separated fields, got `{line}`"),
        )),
    }
}
