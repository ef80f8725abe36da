//! Quadruple dataset file, `{quad_id, s1, c1, s2, c2, label}` per line, and
//! the expanded variant with the full statute and case texts inlined.

use std::io::BufRead;
use std::path::Path;

use lexanalogy_core::corpus::Corpus;
use lexanalogy_core::quadgen::{quad_id, PairRef, Quadruple};
use lexanalogy_core::AnalogyLabel;
use serde::{Deserialize, Serialize};

use super::{create, finish, numbered_lines, open, write_json_line};
use crate::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct QuadRow {
    quad_id: String,
    s1: String,
    c1: String,
    s2: String,
    c2: String,
    label: u64,
}

#[derive(Serialize)]
struct ExpandedRow<'a> {
    quad_id: String,
    statute_1: &'a str,
    case_1: String,
    statute_2: &'a str,
    case_2: String,
    label: u8,
}

pub fn write_quads(quads: &[Quadruple], path: &Path) -> Result<()> {
    let mut w = create(path)?;
    for q in quads {
        let row = QuadRow {
            quad_id: q.quad_id(),
            s1: q.first.statute_id.clone(),
            c1: q.first.case_id.clone(),
            s2: q.second.statute_id.clone(),
            c2: q.second.case_id.clone(),
            label: q.label.as_bit().into(),
        };
        write_json_line(&mut w, &row, path)?;
    }
    finish(w, path)
}

pub fn read_quads(path: &Path) -> Result<Vec<Quadruple>> {
    read_quads_from(open(path)?, path)
}

pub fn read_quads_from<R: BufRead>(reader: R, path: &Path) -> Result<Vec<Quadruple>> {
    numbered_lines(reader, path)
        .map(|item| {
            let (line, text) = item?;
            let row: QuadRow = serde_json::from_str(&text)
                .map_err(|e| Error::record(path, line, format!("malformed quadruple: {e}")))?;
            let first = PairRef::new(row.s1, row.c1);
            let second = PairRef::new(row.s2, row.c2);
            if quad_id(&first, &second) != row.quad_id {
                return Err(Error::record(
                    path,
                    line,
                    format!("quad_id {:?} does not match its pair ids", row.quad_id),
                ));
            }
            let label = AnalogyLabel::from_bit(row.label).map_err(|source| Error::AtLine {
                path: path.into(),
                line,
                source,
            })?;
            Ok(Quadruple {
                first,
                second,
                label,
            })
        })
        .collect()
}

/// Case text as one string: context, a space, hypothesis.
pub fn case_text(context: &str, hypothesis: &str) -> String {
    if context.is_empty() {
        hypothesis.to_string()
    } else {
        format!("{context} {hypothesis}")
    }
}

pub fn write_expanded(quads: &[Quadruple], corpus: &Corpus, path: &Path) -> Result<()> {
    let lookup = |p: &PairRef| -> Result<(&str, String)> {
        let case = corpus
            .case(&p.case_id)
            .ok_or_else(|| lexanalogy_core::Error::UnknownCase(p.case_id.clone()))?;
        let statute = corpus
            .statute(&p.statute_id)
            .ok_or_else(|| lexanalogy_core::Error::UnknownStatute(p.statute_id.clone()))?;
        Ok((&statute.text, case_text(&case.context, &case.hypothesis)))
    };
    let mut w = create(path)?;
    for q in quads {
        let (statute_1, case_1) = lookup(&q.first)?;
        let (statute_2, case_2) = lookup(&q.second)?;
        let row = ExpandedRow {
            quad_id: q.quad_id(),
            statute_1,
            case_1,
            statute_2,
            case_2,
            label: q.label.as_bit(),
        };
        write_json_line(&mut w, &row, path)?;
    }
    finish(w, path)
}
