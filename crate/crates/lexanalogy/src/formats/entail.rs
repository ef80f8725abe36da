//! Entailment prediction dump, one query pair per line with its votes.

use std::path::Path;

use lexanalogy_core::pipeline::EntailmentPrediction;
use lexanalogy_core::retrieval::{Backend, FieldView};
use lexanalogy_core::EntailmentLabel;
use serde::Serialize;

use super::write_jsonl;
use crate::Result;

#[derive(Serialize)]
struct VoteRow<'a> {
    rank: usize,
    statute_id: &'a str,
    case_id: &'a str,
    retrieval_score: f64,
    verdict: u8,
    transferred: &'static str,
}

#[derive(Serialize)]
struct PredictionRow<'a> {
    case_id: &'a str,
    statute_id: &'a str,
    predicted: &'static str,
    gold: &'static str,
    k: usize,
    backend: &'static str,
    view: &'static str,
    votes: Vec<VoteRow<'a>>,
    abstentions: Vec<String>,
    tie_broken: bool,
}

pub struct RunInfo {
    pub k: usize,
    pub backend: Backend,
    pub view: FieldView,
}

/// `golds` must be aligned with `predictions`.
pub fn write_entailment(
    predictions: &[EntailmentPrediction],
    golds: &[EntailmentLabel],
    info: &RunInfo,
    path: &Path,
) -> Result<()> {
    write_jsonl(
        path,
        predictions
            .iter()
            .zip(golds)
            .map(|(p, gold)| PredictionRow {
                case_id: &p.query.case_id,
                statute_id: &p.query.statute_id,
                predicted: p.predicted.as_str(),
                gold: gold.as_str(),
                k: info.k,
                backend: info.backend.as_str(),
                view: info.view.as_str(),
                votes: p
                    .votes
                    .iter()
                    .map(|v| VoteRow {
                        rank: v.rank,
                        statute_id: &v.neighbor.statute_id,
                        case_id: &v.neighbor.case_id,
                        retrieval_score: v.retrieval_score,
                        verdict: v.verdict.as_bit(),
                        transferred: v.transferred.as_str(),
                    })
                    .collect(),
                abstentions: p.abstained.iter().map(|a| a.key()).collect(),
                tie_broken: p.tie_broken,
            }),
    )
}
