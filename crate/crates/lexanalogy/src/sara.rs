//! One-way converter from a SARA-style file tree to a [`Corpus`].
//!
//! Expected layout under the root directory:
//!
//! ```text
//! statutes/<statute_id>        statute text (any extension, id = file stem)
//! cases/<case_id>.pl           "% Text" and "% Question" sections, "% " line prefixes
//! splits/{train,dev,test}      one case id per line
//! ```
//!
//! The question ends with the label token `Entailment` or `Contradiction`
//! unless an `% Answer` section gives it. Cases without such a label (the
//! numerical ones) are skipped. A case belongs to the statute whose id is
//! the longest prefix of the case id followed by `_`. The hypothesis is the
//! last sentence of text and question together; the context is everything
//! before it.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use lexanalogy_core::corpus::{Case, Corpus, CorpusBuilder, Split, Statute};
use lexanalogy_core::EntailmentLabel;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConvertSummary {
    pub statutes: usize,
    pub cases: usize,
    /// Case ids skipped because they carry no entailment label.
    pub skipped: Vec<String>,
}

pub fn convert_sara(root: &Path) -> Result<(Corpus, ConvertSummary)> {
    let mut builder = CorpusBuilder::new();
    let statute_files = list_dir(&root.join("statutes"))?;
    let mut statute_ids = Vec::new();
    for path in &statute_files {
        let id = stem(path);
        let text = read(path)?.split_whitespace().collect::<Vec<_>>().join(" ");
        builder.add_statute(Statute {
            section_label: section_label(&id),
            id: id.clone(),
            text,
        })?;
        statute_ids.push(id);
    }

    let mut membership: BTreeMap<String, Split> = BTreeMap::new();
    let mut ordered: Vec<String> = Vec::new();
    for split in Split::ALL {
        let path = root.join("splits").join(split.as_str());
        if !path.exists() {
            continue;
        }
        for (i, line) in read(&path)?.lines().enumerate() {
            let id = line.trim().trim_end_matches(".pl").to_string();
            if id.is_empty() {
                continue;
            }
            if let Some(prev) = membership.insert(id.clone(), split) {
                return Err(Error::record(
                    &path,
                    i + 1,
                    format!("case {id:?} already listed in split {prev}"),
                ));
            }
            ordered.push(id);
        }
    }

    let case_dir = root.join("cases");
    let mut case_files: BTreeMap<String, PathBuf> = list_dir(&case_dir)?
        .into_iter()
        .map(|p| (stem(&p), p))
        .collect();
    let mut skipped = Vec::new();
    let mut cases = 0;
    let unsplit: Vec<String> = case_files
        .keys()
        .filter(|id| !membership.contains_key(*id))
        .cloned()
        .collect();
    for id in ordered.iter().chain(&unsplit) {
        let path = case_files.remove(id).ok_or_else(|| {
            Error::Usage(format!(
                "split lists case {id:?} but cases/{id}.pl is missing"
            ))
        })?;
        let sections = sections(&read(&path)?);
        let Some(parsed) = parse_case(&sections) else {
            log::info!("skipping {id}: no entailment label");
            skipped.push(id.clone());
            continue;
        };
        let statute_id = link_statute(id, &statute_ids).ok_or_else(|| {
            Error::record(
                &path,
                1,
                format!("no statute id is a prefix of case {id:?}"),
            )
        })?;
        builder.add_case(
            Case {
                id: id.clone(),
                statute_id: statute_id.to_string(),
                context: parsed.context,
                hypothesis: parsed.hypothesis,
                gold: parsed.gold,
            },
            membership.get(id).copied(),
        )?;
        cases += 1;
    }
    let corpus = builder.finish()?;
    Ok((
        corpus,
        ConvertSummary {
            statutes: statute_ids.len(),
            cases,
            skipped,
        },
    ))
}

struct ParsedCase {
    context: String,
    hypothesis: String,
    gold: EntailmentLabel,
}

fn parse_case(sections: &BTreeMap<String, String>) -> Option<ParsedCase> {
    let text = sections.get("text").map_or("", String::as_str);
    let question = sections.get("question")?.trim();
    let (question, trailing) = match question.rsplit_once(char::is_whitespace) {
        Some((q, last)) => (q.trim_end(), last),
        None => (question, ""),
    };
    let label_of = |s: &str| {
        s.trim_matches(|c: char| !c.is_alphanumeric())
            .to_lowercase()
            .parse()
            .ok()
    };
    let (question, gold) = match sections.get("answer").and_then(|a| label_of(a)) {
        Some(g) => match label_of(trailing) {
            Some(_) => (question.to_string(), g),
            None => (format!("{question} {trailing}").trim().to_string(), g),
        },
        None => (question.to_string(), label_of(trailing)?),
    };
    let full = format!("{} {}", text.trim(), question).trim().to_string();
    let (context, hypothesis) = split_last_sentence(&full);
    Some(ParsedCase {
        context: context.to_string(),
        hypothesis: hypothesis.to_string(),
        gold,
    })
}

/// Splits off the last sentence. A sentence ends at `.`, `!` or `?`
/// followed by whitespace.
pub fn split_last_sentence(text: &str) -> (&str, &str) {
    let text = text.trim();
    let body = text.trim_end_matches(['.', '!', '?']);
    let bytes = body.as_bytes();
    for i in (1..bytes.len()).rev() {
        if bytes[i].is_ascii_whitespace() && matches!(bytes[i - 1], b'.' | b'!' | b'?') {
            return (text[..i].trim_end(), text[i..].trim_start());
        }
    }
    ("", text)
}

/// `% Name` header lines open sections; other lines drop their `%` prefix.
fn sections(source: &str) -> BTreeMap<String, String> {
    let mut out: BTreeMap<String, String> = BTreeMap::new();
    let mut current: Option<String> = None;
    for line in source.lines() {
        let Some(rest) = line.trim_start().strip_prefix('%') else {
            current = None;
            continue;
        };
        let rest = rest.trim();
        let lower = rest.to_lowercase();
        if matches!(
            lower.as_str(),
            "text" | "question" | "answer" | "facts" | "test"
        ) {
            current = Some(lower);
            continue;
        }
        if let Some(name) = &current {
            let entry = out.entry(name.clone()).or_default();
            if !rest.is_empty() {
                if !entry.is_empty() {
                    entry.push(' ');
                }
                entry.push_str(rest);
            }
        }
    }
    out
}

fn link_statute<'a>(case_id: &str, statute_ids: &'a [String]) -> Option<&'a str> {
    statute_ids
        .iter()
        .filter(|s| {
            case_id
                .strip_prefix(s.as_str())
                .is_some_and(|rest| rest.starts_with('_'))
        })
        .max_by_key(|s| s.len())
        .map(String::as_str)
}

/// `s3306_b_2_C` becomes `3306(b)(2)(C)`.
pub fn section_label(id: &str) -> String {
    let mut parts = id.trim_start_matches('s').split('_');
    let mut label = parts.next().unwrap_or_default().to_string();
    for p in parts {
        label.push('(');
        label.push_str(p);
        label.push(')');
    }
    label
}

fn list_dir(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .map(|entry| entry.map(|e| e.path()).map_err(|e| Error::io(dir, e)))
        .collect::<Result<Vec<_>>>()?;
    files.retain(|p| p.is_file());
    files.sort();
    Ok(files)
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}
