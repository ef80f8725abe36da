//! External analogy predictions, `{quad_id, label}` per line with `label`
//! one of `0`, `1`, or `null` for an explicit abstention.

use std::io::BufRead;
use std::path::Path;

use lexanalogy_core::analogy::ExternalPredictions;
use lexanalogy_core::AnalogyLabel;
use serde::{Deserialize, Serialize};

use super::{numbered_lines, open, write_jsonl};
use crate::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PredictionRow {
    quad_id: String,
    label: Option<serde_json::Value>,
}

pub fn import_external_predictions(path: &Path) -> Result<ExternalPredictions> {
    read_predictions_from(open(path)?, path)
}

pub fn read_predictions_from<R: BufRead>(reader: R, path: &Path) -> Result<ExternalPredictions> {
    let mut preds = ExternalPredictions::new();
    for item in numbered_lines(reader, path) {
        let (line, text) = item?;
        let at = |source| Error::AtLine {
            path: path.into(),
            line,
            source,
        };
        let row: PredictionRow = serde_json::from_str(&text)
            .map_err(|e| Error::record(path, line, format!("malformed prediction: {e}")))?;
        let label = match &row.label {
            None => None,
            Some(v) => Some(
                v.as_u64()
                    .ok_or_else(|| lexanalogy_core::Error::UnknownLabel(v.to_string()))
                    .and_then(AnalogyLabel::from_bit)
                    .map_err(at)?,
            ),
        };
        preds.insert(row.quad_id, label).map_err(at)?;
    }
    Ok(preds)
}

pub fn write_predictions<'a>(
    rows: impl IntoIterator<Item = (&'a str, Option<AnalogyLabel>)>,
    path: &Path,
) -> Result<()> {
    write_jsonl(
        path,
        rows.into_iter().map(|(id, label)| PredictionRow {
            quad_id: id.to_string(),
            label: label.map(|l| l.as_bit().into()),
        }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn read(text: &str) -> Result<ExternalPredictions> {
        read_predictions_from(Cursor::new(text), Path::new("p.jsonl"))
    }

    #[test]
    fn three_rows() {
        let p = read(
            "{\"quad_id\":\"a\",\"label\":1}\n{\"quad_id\":\"b\",\"label\":0}\n{\"quad_id\":\"c\",\"label\":null}\n",
        )
        .unwrap();
        assert_eq!(p.len(), 3);
        assert_eq!(p.get("a"), Some(Some(AnalogyLabel::Analogy)));
        assert_eq!(p.get("c"), Some(None));
    }

    #[test]
    fn duplicate_and_unknown() {
        let err = read("{\"quad_id\":\"q42\",\"label\":1}\n{\"quad_id\":\"q42\",\"label\":0}\n")
            .unwrap_err()
            .to_string();
        assert!(err.contains("q42") && err.contains(":2:"), "{err}");
        let err = read("{\"quad_id\":\"q\",\"label\":2}")
            .unwrap_err()
            .to_string();
        assert!(err.contains("unknown label"), "{err}");
        assert!(read("{\"quad_id\":\"q\",\"label\":\"yes\"}").is_err());
    }
}
