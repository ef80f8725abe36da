//! Line-delimited file formats. Every reader reports 1-based line numbers;
//! blank lines are ignored.

pub mod corpus;
pub mod entail;
pub mod predictions;
pub mod quads;
pub mod report;
pub mod scores;
pub mod store;
pub mod threshold;

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::{Error, Result};

pub(crate) fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

pub(crate) fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

/// Non-blank lines with their 1-based numbers.
pub(crate) fn numbered_lines<'a, R: BufRead + 'a>(
    reader: R,
    path: &'a Path,
) -> impl Iterator<Item = Result<(usize, String)>> + 'a {
    reader
        .lines()
        .enumerate()
        .filter_map(move |(i, line)| match line {
            Ok(l) if l.trim().is_empty() => None,
            Ok(l) => Some(Ok((i + 1, l))),
            Err(e) => Some(Err(Error::io(path, e))),
        })
}

pub(crate) fn write_json_line<W: Write, T: Serialize>(
    w: &mut W,
    row: &T,
    path: &Path,
) -> Result<()> {
    serde_json::to_writer(&mut *w, row).map_err(|e| Error::io(path, e.into()))?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))
}

pub(crate) fn finish<W: Write>(mut w: W, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes rows as JSON lines to `path`.
pub fn write_jsonl<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = create(path)?;
    for row in rows {
        write_json_line(&mut w, &row, path)?;
    }
    finish(w, path)
}
