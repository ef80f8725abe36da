//! Corpus file: one JSON object per line, statutes first.
//!
//! ```text
//! {"kind":"statute","id":"s151_b","section_label":"151(b)","text":"..."}
//! {"kind":"case","id":"s151_b_pos","statute_id":"s151_b","context":"...","hypothesis":"...","gold":"entailment","split":"train"}
//! ```

use std::io::{BufRead, Write};
use std::path::Path;

use lexanalogy_core::corpus::{Case, Corpus, CorpusBuilder, Split, Statute};
use lexanalogy_core::EntailmentLabel;
use serde::{Deserialize, Serialize};

use super::{create, finish, numbered_lines, open, write_json_line};
use crate::{Error, Result};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Record {
    kind: String,
    id: String,
    section_label: Option<String>,
    text: Option<String>,
    statute_id: Option<serde_json::Value>,
    context: Option<String>,
    hypothesis: Option<String>,
    gold: Option<String>,
    split: Option<String>,
}

#[derive(Serialize)]
struct StatuteOut<'a> {
    kind: &'static str,
    id: &'a str,
    section_label: &'a str,
    text: &'a str,
}

#[derive(Serialize)]
struct CaseOut<'a> {
    kind: &'static str,
    id: &'a str,
    statute_id: &'a str,
    context: &'a str,
    hypothesis: &'a str,
    gold: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    split: Option<&'static str>,
}

pub fn parse_corpus(path: &Path) -> Result<Corpus> {
    read_corpus(open(path)?, path)
}

/// Parses corpus records from `reader`; `path` is only used in messages.
pub fn read_corpus<R: BufRead>(reader: R, path: &Path) -> Result<Corpus> {
    let mut builder = CorpusBuilder::new();
    let mut seen_case = false;
    for item in numbered_lines(reader, path) {
        let (line, text) = item?;
        let bad = |msg: String| Error::record(path, line, msg);
        let rec: Record =
            serde_json::from_str(&text).map_err(|e| bad(format!("malformed record: {e}")))?;
        match rec.kind.as_str() {
            "statute" => {
                if seen_case {
                    return Err(bad(format!("statute {:?} appears after a case", rec.id)));
                }
                let text = rec
                    .text
                    .ok_or_else(|| bad(format!("statute {:?} has no text", rec.id)))?;
                let section_label = rec.section_label.unwrap_or_else(|| rec.id.clone());
                builder
                    .add_statute(Statute {
                        id: rec.id,
                        section_label,
                        text,
                    })
                    .map_err(|e| bad(e.to_string()))?;
            }
            "case" => {
                seen_case = true;
                let id = rec.id;
                let statute_id = match rec.statute_id {
                    Some(serde_json::Value::String(s)) => s,
                    Some(serde_json::Value::Array(_)) => {
                        return Err(bad(format!(
                            "case {id:?} cites several statutes; exactly one is allowed"
                        )))
                    }
                    Some(other) => return Err(bad(format!("case {id:?}: bad statute_id {other}"))),
                    None => return Err(bad(format!("case {id:?} has no statute_id"))),
                };
                let hypothesis = rec
                    .hypothesis
                    .ok_or_else(|| bad(format!("case {id:?} has no hypothesis")))?;
                let gold: EntailmentLabel = rec
                    .gold
                    .ok_or_else(|| bad(format!("case {id:?} has no gold label")))?
                    .parse()
                    .map_err(|e| bad(format!("case {id:?}: {e}")))?;
                let split = rec
                    .split
                    .map(|s| s.parse::<Split>())
                    .transpose()
                    .map_err(|e| bad(format!("case {id:?}: {e}")))?;
                builder
                    .add_case(
                        Case {
                            id,
                            statute_id,
                            context: rec.context.unwrap_or_default(),
                            hypothesis,
                            gold,
                        },
                        split,
                    )
                    .map_err(|e| bad(e.to_string()))?;
            }
            other => return Err(bad(format!("unknown record kind {other:?}"))),
        }
    }
    Ok(builder.finish()?)
}

pub fn write_corpus(corpus: &Corpus, path: &Path) -> Result<()> {
    let mut w = create(path)?;
    write_corpus_to(corpus, &mut w, path)?;
    finish(w, path)
}

pub fn write_corpus_to<W: Write>(corpus: &Corpus, w: &mut W, path: &Path) -> Result<()> {
    for s in corpus.statutes() {
        let row = StatuteOut {
            kind: "statute",
            id: &s.id,
            section_label: &s.section_label,
            text: &s.text,
        };
        write_json_line(w, &row, path)?;
    }
    for c in corpus.cases() {
        let row = CaseOut {
            kind: "case",
            id: &c.id,
            statute_id: &c.statute_id,
            context: &c.context,
            hypothesis: &c.hypothesis,
            gold: c.gold.as_str(),
            split: corpus.split_of(&c.id).map(Split::as_str),
        };
        write_json_line(w, &row, path)?;
    }
    Ok(())
}
