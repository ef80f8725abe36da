//! Analogy prompts for completion models and parsing of their Yes/No
//! replies.
//!
//! A quadruple renders as
//!
//! ```text
//! Statute 1: <statute text>
//! Case 1: Premise: <context> Hypothesis 1: <hypothesis>
//! Statute 2: <statute text>
//! Case 2: Premise: <context> Hypothesis 2: <hypothesis>
//! Question: Is Statute 1 to Case 1 as Statute 2 is to Case 2?
//! ```
//!
//! followed by an `A:` line. Exemplar blocks come first, separated by blank
//! lines, and carry their answer on the `A:` line.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use crate::corpus::Corpus;
use crate::label::AnalogyLabel;
use crate::quadgen::{PairRef, QuadRef, Quadruple};
use crate::retrieval::tokenize;
use crate::{Error, Result};

pub const QUESTION: &str = "Question: Is Statute 1 to Case 1 as Statute 2 is to Case 2?";
pub const ZERO_COT_TRIGGER: &str = "Let's think step by step";
/// Number of hand-written chain-of-thought exemplars a CoT prompt carries.
pub const COT_EXEMPLARS: usize = 6;

/// Texts of one statute-case pair as shown to the model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairText {
    pub statute: String,
    pub context: String,
    pub hypothesis: String,
}

impl PairText {
    pub fn lookup(corpus: &Corpus, pair: &PairRef) -> Result<Self> {
        let case = corpus
            .case(&pair.case_id)
            .ok_or_else(|| Error::UnknownCase(pair.case_id.clone()))?;
        let statute = corpus
            .statute(&pair.statute_id)
            .ok_or_else(|| Error::UnknownStatute(pair.statute_id.clone()))?;
        Ok(PairText {
            statute: statute.text.clone(),
            context: case.context.clone(),
            hypothesis: case.hypothesis.clone(),
        })
    }
}

/// A hand-written worked example: a quadruple, the reasoning, the answer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CotExemplar {
    pub first: PairText,
    pub second: PairText,
    pub reasoning: String,
    pub answer: AnalogyLabel,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PromptKind {
    ZeroShot,
    /// Labeled training quadruples shown before the question.
    FewShot(Vec<Quadruple>),
    HandCraftedCoT(Vec<CotExemplar>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PromptSpec {
    pub kind: PromptKind,
    /// End the prompt with the zero-shot chain-of-thought trigger.
    pub zero_cot: bool,
}

impl PromptSpec {
    pub fn zero_shot() -> Self {
        PromptSpec {
            kind: PromptKind::ZeroShot,
            zero_cot: false,
        }
    }

    pub fn few_shot(exemplars: Vec<Quadruple>) -> Result<Self> {
        if exemplars.is_empty() {
            return Err(Error::NoExemplars);
        }
        Ok(PromptSpec {
            kind: PromptKind::FewShot(exemplars),
            zero_cot: false,
        })
    }

    pub fn hand_crafted_cot(exemplars: Vec<CotExemplar>) -> Result<Self> {
        if exemplars.len() != COT_EXEMPLARS {
            return Err(Error::CotExemplarCount(exemplars.len()));
        }
        Ok(PromptSpec {
            kind: PromptKind::HandCraftedCoT(exemplars),
            zero_cot: false,
        })
    }

    pub fn with_zero_cot(mut self, on: bool) -> Self {
        self.zero_cot = on;
        self
    }
}

fn yes_no(label: AnalogyLabel) -> &'static str {
    match label {
        AnalogyLabel::Analogy => "Yes",
        AnalogyLabel::NotAnalogy => "No",
    }
}

fn write_case(out: &mut String, n: u8, text: &PairText) {
    let _ = write!(out, "Case {n}: ");
    if !text.context.is_empty() {
        let _ = write!(out, "Premise: {} ", text.context);
    }
    let _ = write!(out, "Hypothesis {n}: {}", text.hypothesis);
}

fn write_block(out: &mut String, first: &PairText, second: &PairText) {
    let _ = writeln!(out, "Statute 1: {}", first.statute);
    write_case(out, 1, first);
    let _ = writeln!(out);
    let _ = writeln!(out, "Statute 2: {}", second.statute);
    write_case(out, 2, second);
    let _ = writeln!(out);
    let _ = writeln!(out, "{QUESTION}");
}

/// Renders the prompt for `quad`. Pure: the same inputs give the same bytes.
pub fn build_prompt(spec: &PromptSpec, quad: QuadRef<'_>, corpus: &Corpus) -> Result<String> {
    let mut out = String::new();
    match &spec.kind {
        PromptKind::ZeroShot => {}
        PromptKind::FewShot(exemplars) => {
            if exemplars.is_empty() {
                return Err(Error::NoExemplars);
            }
            let asked = quad.quad_id();
            let asked_swapped = quad.swapped().quad_id();
            for ex in exemplars {
                let id = ex.quad_id();
                if id == asked || id == asked_swapped {
                    return Err(Error::ExemplarOverlap(id));
                }
                let first = PairText::lookup(corpus, &ex.first)?;
                let second = PairText::lookup(corpus, &ex.second)?;
                write_block(&mut out, &first, &second);
                let _ = write!(out, "A: {}\n\n", yes_no(ex.label));
            }
        }
        PromptKind::HandCraftedCoT(exemplars) => {
            if exemplars.len() != COT_EXEMPLARS {
                return Err(Error::CotExemplarCount(exemplars.len()));
            }
            for ex in exemplars {
                write_block(&mut out, &ex.first, &ex.second);
                let answer = match ex.answer {
                    AnalogyLabel::Analogy => "yes",
                    AnalogyLabel::NotAnalogy => "no",
                };
                let _ = write!(
                    out,
                    "A: {} Therefore, the answer is {answer}.\n\n",
                    ex.reasoning.trim()
                );
            }
        }
    }
    let first = PairText::lookup(corpus, quad.first)?;
    let second = PairText::lookup(corpus, quad.second)?;
    write_block(&mut out, &first, &second);
    out.push_str("A:");
    if spec.zero_cot {
        out.push(' ');
        out.push_str(ZERO_COT_TRIGGER);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Yes,
    No,
    Abstain,
}

impl Verdict {
    pub fn label(self) -> Option<AnalogyLabel> {
        match self {
            Verdict::Yes => Some(AnalogyLabel::Analogy),
            Verdict::No => Some(AnalogyLabel::NotAnalogy),
            Verdict::Abstain => None,
        }
    }

    fn from_word(w: &str) -> Option<Self> {
        match w {
            "yes" => Some(Verdict::Yes),
            "no" => Some(Verdict::No),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedVerdict {
    pub verdict: Verdict,
    pub raw: String,
}

/// Reads a Yes/No out of free text. Case-insensitive rules, first match
/// wins:
///
/// 1. the last "the answer is yes|no";
/// 2. a leading "yes"/"no" word, ignoring whitespace and punctuation;
/// 3. the last standalone "yes"/"no" word.
///
/// Anything else is an abstention. Never fails.
pub fn parse_verdict(raw: &str) -> ParsedVerdict {
    let verdict = answer_phrase(raw)
        .or_else(|| {
            let words = tokenize(raw);
            words
                .first()
                .and_then(|w| Verdict::from_word(w))
                .or_else(|| words.iter().rev().find_map(|w| Verdict::from_word(w)))
        })
        .unwrap_or(Verdict::Abstain);
    ParsedVerdict {
        verdict,
        raw: raw.into(),
    }
}

fn answer_phrase(raw: &str) -> Option<Verdict> {
    // Work on words so spacing and case do not matter.
    let words = tokenize(raw);
    words.windows(4).rev().find_map(|w| match w {
        [a, b, c, d] if a == "the" && b == "answer" && c == "is" => Verdict::from_word(d),
        _ => None,
    })
}
