//! Score dump: `{quad_id, method, value}` per line.

use std::path::Path;

use lexanalogy_core::analogy::AnalogyScore;
use serde::{Deserialize, Serialize};

use super::{numbered_lines, open, write_jsonl};
use crate::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScoreRow {
    quad_id: String,
    method: String,
    value: f64,
}

pub fn write_scores(scores: &[AnalogyScore], path: &Path) -> Result<()> {
    write_jsonl(
        path,
        scores.iter().map(|s| ScoreRow {
            quad_id: s.quad_id.clone(),
            method: s.method.as_str().into(),
            value: s.value,
        }),
    )
}

pub fn read_scores(path: &Path) -> Result<Vec<AnalogyScore>> {
    numbered_lines(open(path)?, path)
        .map(|item| {
            let (line, text) = item?;
            let row: ScoreRow = serde_json::from_str(&text)
                .map_err(|e| Error::record(path, line, format!("malformed score: {e}")))?;
            let method = row.method.parse().map_err(|_| {
                Error::record(path, line, format!("unknown method {:?}", row.method))
            })?;
            Ok(AnalogyScore {
                quad_id: row.quad_id,
                method,
                value: row.value,
            })
        })
        .collect()
}
