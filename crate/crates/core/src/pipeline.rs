//! Entailment by retrieval and analogy: retrieve k prototype pairs, classify
//! each (query, prototype) quadruple, map the verdict through the
//! prototype's gold label, and take the majority.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::analogy::QuadClassifier;
use crate::corpus::{Corpus, Split};
use crate::eval::{accuracy, EvalReport};
use crate::label::{AnalogyLabel, EntailmentLabel};
use crate::quadgen::{PairRef, QuadRef};
use crate::retrieval::{QueryPair, Retriever};
use crate::{Error, Result};

/// Analogy keeps the prototype's label, not-analogy flips it.
pub fn transfer_label(neighbor_gold: EntailmentLabel, verdict: AnalogyLabel) -> EntailmentLabel {
    match verdict {
        AnalogyLabel::Analogy => neighbor_gold,
        AnalogyLabel::NotAnalogy => neighbor_gold.opposite(),
    }
}

/// What to do when abstentions leave the vote tied.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum TieBreak {
    /// Take the transferred label of the best-ranked voting neighbor.
    #[default]
    HighestRanked,
    Fail,
}

impl TieBreak {
    pub fn as_str(self) -> &'static str {
        match self {
            TieBreak::HighestRanked => "highest-ranked",
            TieBreak::Fail => "fail",
        }
    }
}

impl FromStr for TieBreak {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "highest-ranked" => Ok(TieBreak::HighestRanked),
            "fail" => Ok(TieBreak::Fail),
            other => Err(Error::UnknownLabel(other.into())),
        }
    }
}

impl fmt::Display for TieBreak {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PipelineConfig {
    k: usize,
    pub tie_break: TieBreak,
    /// Skip prototypes citing the query's own statute. Off by default.
    pub exclude_same_statute: bool,
}

impl PipelineConfig {
    /// `k` must be odd and positive.
    pub fn new(k: usize) -> Result<Self> {
        if k == 0 || k.is_multiple_of(2) {
            return Err(Error::InvalidK(k));
        }
        Ok(PipelineConfig {
            k,
            tie_break: TieBreak::default(),
            exclude_same_statute: false,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }
}

/// Labeled prototype pairs, normally the train split.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrototypePool {
    pairs: Vec<PairRef>,
    golds: BTreeMap<PairRef, EntailmentLabel>,
}

impl PrototypePool {
    pub fn from_split(corpus: &Corpus, split: Split) -> Result<Self> {
        let mut pairs = Vec::new();
        let mut golds = BTreeMap::new();
        for case in corpus.split_cases(split) {
            let p = case.pair_ref();
            golds.insert(p.clone(), case.gold);
            pairs.push(p);
        }
        if pairs.is_empty() {
            return Err(Error::EmptyPool);
        }
        Ok(PrototypePool { pairs, golds })
    }

    pub fn pairs(&self) -> &[PairRef] {
        &self.pairs
    }

    pub fn gold(&self, pair: &PairRef) -> Option<EntailmentLabel> {
        self.golds.get(pair).copied()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vote {
    pub neighbor: PairRef,
    /// 1-based retrieval rank.
    pub rank: usize,
    pub retrieval_score: f64,
    pub verdict: AnalogyLabel,
    pub transferred: EntailmentLabel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntailmentPrediction {
    pub query: PairRef,
    pub predicted: EntailmentLabel,
    /// Voting neighbors in rank order.
    pub votes: Vec<Vote>,
    /// Neighbors whose classifier abstained, in rank order.
    pub abstained: Vec<PairRef>,
    pub tie_broken: bool,
}

impl EntailmentPrediction {
    pub fn abstentions(&self) -> usize {
        self.abstained.len()
    }
}

/// Majority over rank-ordered votes. Returns the label and whether the tie
/// rule decided it.
pub fn tally(votes: &[Vote], tie_break: TieBreak) -> Result<Option<(EntailmentLabel, bool)>> {
    if votes.is_empty() {
        return Ok(None);
    }
    let entail = votes
        .iter()
        .filter(|v| v.transferred == EntailmentLabel::Entailment)
        .count();
    let contra = votes.len() - entail;
    Ok(Some(match entail.cmp(&contra) {
        core::cmp::Ordering::Greater => (EntailmentLabel::Entailment, false),
        core::cmp::Ordering::Less => (EntailmentLabel::Contradiction, false),
        core::cmp::Ordering::Equal => match tie_break {
            TieBreak::HighestRanked => (votes[0].transferred, true),
            TieBreak::Fail => return Err(Error::UnresolvedTie(votes[0].neighbor.key())),
        },
    }))
}

pub struct Pipeline<'a, C> {
    pub config: PipelineConfig,
    pub retriever: &'a Retriever<'a>,
    pub pool: &'a PrototypePool,
    pub classifier: C,
}

/// Predictions for a split, aligned with their gold labels.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub predictions: Vec<EntailmentPrediction>,
    pub golds: Vec<EntailmentLabel>,
    pub report: EvalReport,
}

impl<C: QuadClassifier> Pipeline<'_, C> {
    /// Quadruples are oriented `(query, prototype)`. The query itself is
    /// never its own prototype.
    pub fn predict(&self, query: &QueryPair) -> Result<EntailmentPrediction> {
        let exclude_statute = self.config.exclude_same_statute;
        let hits = self
            .retriever
            .retrieve_where(query, self.config.k, |p| {
                *p != query.pair && !(exclude_statute && p.statute_id == query.pair.statute_id)
            })?
            .hits;

        let mut votes = Vec::with_capacity(hits.len());
        let mut abstained = Vec::new();
        for (i, hit) in hits.into_iter().enumerate() {
            let gold = self
                .pool
                .gold(&hit.pair)
                .ok_or_else(|| Error::UnknownCase(hit.pair.key()))?;
            match self
                .classifier
                .verdict(QuadRef::new(&query.pair, &hit.pair))?
            {
                Some(verdict) => votes.push(Vote {
                    rank: i + 1,
                    retrieval_score: hit.score,
                    transferred: transfer_label(gold, verdict),
                    verdict,
                    neighbor: hit.pair,
                }),
                None => abstained.push(hit.pair),
            }
        }
        let (predicted, tie_broken) = tally(&votes, self.config.tie_break)?
            .ok_or_else(|| Error::AllAbstained(query.pair.key()))?;
        Ok(EntailmentPrediction {
            query: query.pair.clone(),
            predicted,
            votes,
            abstained,
            tie_broken,
        })
    }

    /// Predicts every pair of `split`; gold labels are read only after all
    /// predictions are made.
    pub fn run_all(&self, corpus: &Corpus, split: Split) -> Result<RunOutcome> {
        let predictions = corpus
            .split_ids(split)
            .iter()
            .map(|id| self.predict(&QueryPair::from_corpus(corpus, id)?))
            .collect::<Result<Vec<_>>>()?;
        let golds: Vec<EntailmentLabel> = corpus.split_cases(split).map(|c| c.gold).collect();
        let report = accuracy(
            predictions
                .iter()
                .map(|p| p.predicted)
                .zip(golds.iter().copied()),
        )?;
        Ok(RunOutcome {
            predictions,
            golds,
            report,
        })
    }
}
