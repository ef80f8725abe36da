//! Hand-written chain-of-thought exemplars. The bundled set ships in
//! `assets/cot_exemplars.jsonl`; an edited copy can be loaded from a path.

use std::io::BufRead;
use std::path::Path;

use lexanalogy_core::prompt::{CotExemplar, PairText};
use lexanalogy_core::AnalogyLabel;
use serde::Deserialize;

use crate::formats::{numbered_lines, open};
use crate::{Error, Result};

pub const BUNDLED: &str = include_str!("../assets/cot_exemplars.jsonl");

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Row {
    statute_1: String,
    #[serde(default)]
    context_1: String,
    hypothesis_1: String,
    statute_2: String,
    #[serde(default)]
    context_2: String,
    hypothesis_2: String,
    reasoning: String,
    answer: String,
}

pub fn bundled() -> Vec<CotExemplar> {
    parse(
        BUNDLED.as_bytes(),
        Path::new("<bundled cot_exemplars.jsonl>"),
    )
    .expect("bundled exemplars parse")
}

pub fn load(path: &Path) -> Result<Vec<CotExemplar>> {
    parse(open(path)?, path)
}

fn parse<R: BufRead>(reader: R, path: &Path) -> Result<Vec<CotExemplar>> {
    numbered_lines(reader, path)
        .map(|item| {
            let (line, text) = item?;
            let row: Row = serde_json::from_str(&text)
                .map_err(|e| Error::record(path, line, format!("malformed exemplar: {e}")))?;
            let answer = match row.answer.to_ascii_lowercase().as_str() {
                "yes" => AnalogyLabel::Analogy,
                "no" => AnalogyLabel::NotAnalogy,
                other => {
                    return Err(Error::record(
                        path,
                        line,
                        format!("answer {other:?} is not yes/no"),
                    ))
                }
            };
            Ok(CotExemplar {
                first: PairText {
                    statute: row.statute_1,
                    context: row.context_1,
                    hypothesis: row.hypothesis_1,
                },
                second: PairText {
                    statute: row.statute_2,
                    context: row.context_2,
                    hypothesis: row.hypothesis_2,
                },
                reasoning: row.reasoning,
                answer,
            })
        })
        .collect()
}
