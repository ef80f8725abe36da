//! Embedding store file: a header line, then one row per key.
//!
//! ```text
//! {"format_version":1,"dim":4,"encoder_name":"all-MiniLM-L6-v2"}
//! {"key":"statute:s1","vector":[0.1,0.2,0.3,0.4]}
//! ```
//!
//! Components are written rounded to 9 significant digits, which round-trips
//! 32-bit encoder outputs.

use std::io::BufRead;
use std::path::Path;
use std::sync::LazyLock;

use lexanalogy_core::vector::{EmbeddingKey, EmbeddingStore};
use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{create, finish, numbered_lines, open, write_json_line};
use crate::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    format_version: u32,
    dim: usize,
    encoder_name: String,
}

#[derive(Deserialize)]
struct RawRow {
    key: String,
    vector: Vec<serde_json::Value>,
}

#[derive(Serialize)]
struct RowOut<'a> {
    key: String,
    vector: &'a [f64],
}

static KEY_FIELD: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r#""key"\s*:\s*"([^"]*)""#).expect("static regex"));
static NON_FINITE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)\b(nan|inf|infinity)\b|\d[eE]\+?\d{3,}").expect("static regex")
});

/// Rounds to 9 significant digits.
pub fn round9(x: f64) -> f64 {
    format!("{x:.8e}").parse().unwrap_or(x)
}

pub fn load_store(path: &Path) -> Result<EmbeddingStore> {
    read_store(open(path)?, path)
}

pub fn read_store<R: BufRead>(reader: R, path: &Path) -> Result<EmbeddingStore> {
    let mut lines = numbered_lines(reader, path);
    let (line, text) = lines
        .next()
        .transpose()?
        .ok_or_else(|| Error::record(path, 1, "missing header"))?;
    let header: Header = serde_json::from_str(&text)
        .map_err(|e| Error::record(path, line, format!("malformed header: {e}")))?;
    if header.format_version != FORMAT_VERSION {
        return Err(Error::record(
            path,
            line,
            format!("unsupported format_version {}", header.format_version),
        ));
    }
    let mut store = EmbeddingStore::new(header.dim, header.encoder_name)
        .map_err(|e| Error::record(path, line, format!("malformed header: {e}")))?;

    for item in lines {
        let (line, text) = item?;
        let at = |source| Error::AtLine {
            path: path.into(),
            line,
            source,
        };
        let row: RawRow = match serde_json::from_str(&text) {
            Ok(r) => r,
            Err(e) => {
                // bare NaN / 1e999 make the line invalid JSON; still name the key
                if let Some(key) = KEY_FIELD.captures(&text).map(|c| c[1].to_string()) {
                    if NON_FINITE.is_match(&text) || e.to_string().contains("out of range") {
                        return Err(at(lexanalogy_core::Error::NonFinite { key }));
                    }
                    return Err(Error::record(
                        path,
                        line,
                        format!("malformed row {key:?}: {e}"),
                    ));
                }
                return Err(Error::record(path, line, format!("malformed row: {e}")));
            }
        };
        let key: EmbeddingKey = row.key.parse().map_err(at)?;
        let vector = row
            .vector
            .iter()
            .map(|v| v.as_f64())
            .collect::<Option<Vec<f64>>>()
            .ok_or_else(|| {
                at(lexanalogy_core::Error::NonFinite {
                    key: row.key.clone(),
                })
            })?;
        store.insert(key, vector).map_err(at)?;
    }
    Ok(store)
}

pub fn save_store(store: &EmbeddingStore, path: &Path) -> Result<()> {
    let mut w = create(path)?;
    let header = Header {
        format_version: FORMAT_VERSION,
        dim: store.dim(),
        encoder_name: store.encoder_name().to_string(),
    };
    write_json_line(&mut w, &header, path)?;
    for (key, vector) in store.iter() {
        let rounded: Vec<f64> = vector.iter().copied().map(round9).collect();
        write_json_line(
            &mut w,
            &RowOut {
                key: key.to_string(),
                vector: &rounded,
            },
            path,
        )?;
    }
    finish(w, path)
}
