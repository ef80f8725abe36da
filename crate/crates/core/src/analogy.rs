//! Quadruple scoring (vector offsets and pair concatenation), threshold
//! calibration, and the interchangeable analogy classifiers.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::label::AnalogyLabel;
use crate::quadgen::QuadRef;
use crate::retrieval::FieldView;
use crate::vector::{cosine, offset, EmbeddingKey, EmbeddingStore};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ScoreMethod {
    QuadrupleOffset,
    PairConcat,
    External,
}

impl ScoreMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            ScoreMethod::QuadrupleOffset => "quadruple_offset",
            ScoreMethod::PairConcat => "pair_concat",
            ScoreMethod::External => "external",
        }
    }

    /// Closed range of valid score values.
    pub fn range(self) -> (f64, f64) {
        match self {
            ScoreMethod::QuadrupleOffset | ScoreMethod::PairConcat => (-1.0, 1.0),
            ScoreMethod::External => (0.0, 1.0),
        }
    }
}

impl FromStr for ScoreMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quadruple_offset" | "offset" => Ok(ScoreMethod::QuadrupleOffset),
            "pair_concat" | "pair" => Ok(ScoreMethod::PairConcat),
            "external" => Ok(ScoreMethod::External),
            other => Err(Error::UnknownLabel(other.into())),
        }
    }
}

impl fmt::Display for ScoreMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalogyScore {
    pub quad_id: String,
    pub method: ScoreMethod,
    pub value: f64,
}

/// `cos(f(S1) - f(C1), f(S2) - f(C2))`, with case vectors read under
/// `case_view` (`ch` unless configured otherwise).
pub fn score_quadruple_offset(
    store: &EmbeddingStore,
    quad: QuadRef<'_>,
    case_view: FieldView,
) -> Result<AnalogyScore> {
    let relation = |statute_id: &str, case_id: &str| -> Result<Vec<f64>> {
        let s = store.get(&EmbeddingKey::Statute(statute_id.into()))?;
        let c = store.get(&EmbeddingKey::case(case_id, case_view))?;
        offset(s, c)
    };
    let g1 = relation(&quad.first.statute_id, &quad.first.case_id)?;
    let g2 = relation(&quad.second.statute_id, &quad.second.case_id)?;
    Ok(AnalogyScore {
        quad_id: quad.quad_id(),
        method: ScoreMethod::QuadrupleOffset,
        value: cosine(&g1, &g2)?,
    })
}

/// `cos(f(S1 + C1), f(S2 + C2))` over the `pair:<sid>:<cid>:concat` rows.
pub fn score_pair_concat(store: &EmbeddingStore, quad: QuadRef<'_>) -> Result<AnalogyScore> {
    let a = store.get(&EmbeddingKey::pair(
        quad.first.statute_id.clone(),
        quad.first.case_id.clone(),
    ))?;
    let b = store.get(&EmbeddingKey::pair(
        quad.second.statute_id.clone(),
        quad.second.case_id.clone(),
    ))?;
    Ok(AnalogyScore {
        quad_id: quad.quad_id(),
        method: ScoreMethod::PairConcat,
        value: cosine(a, b)?,
    })
}

/// `Analogy` iff `score > threshold`; a score equal to the threshold is
/// `NotAnalogy`.
pub fn decide(score: f64, threshold: f64) -> AnalogyLabel {
    if score > threshold {
        AnalogyLabel::Analogy
    } else {
        AnalogyLabel::NotAnalogy
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdModel {
    pub method: ScoreMethod,
    pub threshold: f64,
    pub dev_accuracy: f64,
}

/// Picks the accuracy-maximizing threshold for the `score > threshold` rule.
///
/// Candidates are the midpoints between consecutive distinct scores plus one
/// sentinel below the minimum and one above the maximum, so the optimum is
/// exact for the given set. Ties go to the smallest threshold.
pub fn calibrate_threshold(
    method: ScoreMethod,
    scores: &[(f64, AnalogyLabel)],
) -> Result<ThresholdModel> {
    let positives = scores
        .iter()
        .filter(|(_, l)| *l == AnalogyLabel::Analogy)
        .count();
    if positives == 0 || positives == scores.len() {
        return Err(Error::SingleClass);
    }

    let mut sorted: Vec<(f64, AnalogyLabel)> = scores.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));

    // Sweep upward. Below the lowest score every item is called Analogy;
    // passing a block of equal scores turns that block into NotAnalogy.
    let n = sorted.len();
    let mut correct = positives;
    let lowest = sorted[0].0;
    let mut best = (lowest - 1.0, correct);
    let mut i = 0;
    while i < n {
        let value = sorted[i].0;
        while i < n && sorted[i].0 == value {
            match sorted[i].1 {
                AnalogyLabel::Analogy => correct -= 1,
                AnalogyLabel::NotAnalogy => correct += 1,
            }
            i += 1;
        }
        let threshold = if i < n {
            value + (sorted[i].0 - value) / 2.0
        } else {
            value + 1.0
        };
        if correct > best.1 {
            best = (threshold, correct);
        }
    }
    Ok(ThresholdModel {
        method,
        threshold: best.0,
        dev_accuracy: best.1 as f64 / n as f64,
    })
}

/// Externally produced verdicts keyed by quad id. `None` records an explicit
/// abstention.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExternalPredictions {
    labels: BTreeMap<String, Option<AnalogyLabel>>,
}

impl ExternalPredictions {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, quad_id: String, label: Option<AnalogyLabel>) -> Result<()> {
        if self.labels.contains_key(&quad_id) {
            return Err(Error::DuplicatePrediction(quad_id));
        }
        self.labels.insert(quad_id, label);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn get(&self, quad_id: &str) -> Option<Option<AnalogyLabel>> {
        self.labels.get(quad_id).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Option<AnalogyLabel>)> + '_ {
        self.labels.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

/// Anything that can pass a verdict on an oriented quadruple. `Ok(None)` is
/// an abstention.
pub trait QuadClassifier {
    fn verdict(&self, quad: QuadRef<'_>) -> Result<Option<AnalogyLabel>>;
}

pub enum AnalogyClassifier<'a> {
    OffsetThreshold {
        store: &'a EmbeddingStore,
        model: ThresholdModel,
        case_view: FieldView,
    },
    PairThreshold {
        store: &'a EmbeddingStore,
        model: ThresholdModel,
    },
    External(ExternalPredictions),
}

impl AnalogyClassifier<'_> {
    /// Like [`QuadClassifier::verdict`] but abstentions are an error.
    pub fn classify(&self, quad: QuadRef<'_>) -> Result<AnalogyLabel> {
        self.verdict(quad)?
            .ok_or_else(|| Error::Abstained(quad.quad_id()))
    }
}

impl QuadClassifier for AnalogyClassifier<'_> {
    fn verdict(&self, quad: QuadRef<'_>) -> Result<Option<AnalogyLabel>> {
        match self {
            AnalogyClassifier::OffsetThreshold {
                store,
                model,
                case_view,
            } => {
                let s = score_quadruple_offset(store, quad, *case_view)?;
                Ok(Some(decide(s.value, model.threshold)))
            }
            AnalogyClassifier::PairThreshold { store, model } => {
                let s = score_pair_concat(store, quad)?;
                Ok(Some(decide(s.value, model.threshold)))
            }
            AnalogyClassifier::External(preds) => {
                let id = quad.quad_id();
                preds.get(&id).ok_or(Error::MissingPrediction(id))
            }
        }
    }
}

impl<T: QuadClassifier + ?Sized> QuadClassifier for &T {
    fn verdict(&self, quad: QuadRef<'_>) -> Result<Option<AnalogyLabel>> {
        (**self).verdict(quad)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadgen::PairRef;
    use AnalogyLabel::*;

    fn store_with(rows: &[(&str, &[f64])]) -> EmbeddingStore {
        let mut st = EmbeddingStore::new(rows[0].1.len(), "toy").unwrap();
        for (k, v) in rows {
            st.insert(k.parse().unwrap(), v.to_vec()).unwrap();
        }
        st
    }

    fn pairs() -> (PairRef, PairRef) {
        (PairRef::new("s1", "c1"), PairRef::new("s2", "c2"))
    }

    #[test]
    fn offset_parallel_and_orthogonal() {
        let (p1, p2) = pairs();
        let q = QuadRef::new(&p1, &p2);
        let st = store_with(&[
            ("statute:s1", &[1.0, 0.0]),
            ("case:c1:ch", &[0.0, 0.0]),
            ("statute:s2", &[2.0, 0.0]),
            ("case:c2:ch", &[0.0, 0.0]),
        ]);
        let s = score_quadruple_offset(&st, q, FieldView::ContextHypothesis).unwrap();
        assert_eq!(s.value, 1.0);
        assert_eq!(s.quad_id, "s1:c1::s2:c2");

        let st = store_with(&[
            ("statute:s1", &[1.0, 0.0]),
            ("case:c1:ch", &[0.0, 0.0]),
            ("statute:s2", &[0.0, 1.0]),
            ("case:c2:ch", &[0.0, 0.0]),
        ]);
        let s = score_quadruple_offset(&st, q, FieldView::ContextHypothesis).unwrap();
        assert_eq!(s.value, 0.0);
    }

    #[test]
    fn offset_three_dims() {
        // offsets (1,0,-1) and (-1,2,-1): dot is 0
        let (p1, p2) = pairs();
        let st = store_with(&[
            ("statute:s1", &[2.0, 1.0, 0.0]),
            ("case:c1:ch", &[1.0, 1.0, 1.0]),
            ("statute:s2", &[0.0, 2.0, 1.0]),
            ("case:c2:ch", &[1.0, 0.0, 2.0]),
        ]);
        let s = score_quadruple_offset(&st, QuadRef::new(&p1, &p2), FieldView::ContextHypothesis)
            .unwrap();
        assert!(s.value.abs() < 1e-12);
    }

    #[test]
    fn offset_errors() {
        let (p1, p2) = pairs();
        let q = QuadRef::new(&p1, &p2);
        let st = store_with(&[
            ("statute:s1", &[1.0, 0.0]),
            ("case:c1:ch", &[1.0, 0.0]),
            ("statute:s2", &[2.0, 0.0]),
            ("case:c2:ch", &[0.0, 0.0]),
        ]);
        assert_eq!(
            score_quadruple_offset(&st, q, FieldView::ContextHypothesis),
            Err(Error::ZeroNorm)
        );
        assert!(matches!(
            score_quadruple_offset(&st, q, FieldView::Hypothesis),
            Err(Error::MissingKey {
                scheme: "case:h",
                ..
            })
        ));
    }

    #[test]
    fn pair_concat_cases() {
        let (p1, p2) = pairs();
        let q = QuadRef::new(&p1, &p2);
        for (b, want) in [([1.0, 2.0], 1.0), ([-2.0, 1.0], 0.0), ([-1.0, -2.0], -1.0)] {
            let st = store_with(&[
                ("pair:s1:c1:concat", &[1.0, 2.0]),
                ("pair:s2:c2:concat", &b),
            ]);
            let s = score_pair_concat(&st, q).unwrap();
            assert!((s.value - want).abs() < 1e-12, "{b:?}");
            assert_eq!(s.method, ScoreMethod::PairConcat);
        }
    }

    #[test]
    fn separable_calibration() {
        let m = calibrate_threshold(
            ScoreMethod::QuadrupleOffset,
            &[
                (-0.5, NotAnalogy),
                (-0.1, NotAnalogy),
                (0.3, Analogy),
                (0.8, Analogy),
            ],
        )
        .unwrap();
        assert!((m.threshold - 0.1).abs() < 1e-12);
        assert_eq!(m.dev_accuracy, 1.0);
    }

    #[test]
    fn interleaved_calibration_is_chance() {
        let scores: Vec<_> = (0..10)
            .map(|i| {
                (
                    i as f64 / 10.0,
                    if i % 2 == 0 { NotAnalogy } else { Analogy },
                )
            })
            .collect();
        // N A N A ...: cutting just above the lowest N gains one item
        let m = calibrate_threshold(ScoreMethod::PairConcat, &scores).unwrap();
        assert_eq!(m.dev_accuracy, 0.6);

        // A N A N ... N with equal counts: nothing beats chance
        let scores: Vec<_> = (0..10)
            .map(|i| {
                (
                    i as f64 / 10.0,
                    if i % 2 == 0 { Analogy } else { NotAnalogy },
                )
            })
            .collect();
        let m = calibrate_threshold(ScoreMethod::PairConcat, &scores).unwrap();
        assert_eq!(m.dev_accuracy, 0.5);
        // smallest optimal threshold is the low sentinel
        assert!(m.threshold < 0.0);
    }

    #[test]
    fn calibration_needs_both_classes() {
        assert_eq!(
            calibrate_threshold(ScoreMethod::PairConcat, &[(0.1, Analogy), (0.2, Analogy)]),
            Err(Error::SingleClass)
        );
        assert_eq!(
            calibrate_threshold(ScoreMethod::PairConcat, &[]),
            Err(Error::SingleClass)
        );
    }

    #[test]
    fn tied_scores_move_together() {
        let m = calibrate_threshold(
            ScoreMethod::PairConcat,
            &[(0.5, Analogy), (0.5, NotAnalogy), (0.9, Analogy)],
        )
        .unwrap();
        assert_eq!(m.dev_accuracy, 2.0 / 3.0);
        assert!(m.threshold < 0.5);
    }

    #[test]
    fn decision_boundary() {
        assert_eq!(decide(0.9, 0.1), Analogy);
        assert_eq!(decide(0.1, 0.1), NotAnalogy);
        assert_eq!(decide(-0.2, 0.1), NotAnalogy);
    }

    #[test]
    fn external_lookup() {
        let (p1, p2) = pairs();
        let q = QuadRef::new(&p1, &p2);
        let mut preds = ExternalPredictions::new();
        preds.insert(q.quad_id(), Some(Analogy)).unwrap();
        assert_eq!(
            preds.insert(q.quad_id(), Some(NotAnalogy)),
            Err(Error::DuplicatePrediction(q.quad_id()))
        );
        let c = AnalogyClassifier::External(preds);
        assert_eq!(c.classify(q).unwrap(), Analogy);
        assert_eq!(
            c.classify(q.swapped()),
            Err(Error::MissingPrediction("s2:c2::s1:c1".into()))
        );

        let mut preds = ExternalPredictions::new();
        preds.insert(q.quad_id(), None).unwrap();
        let c = AnalogyClassifier::External(preds);
        assert_eq!(c.verdict(q).unwrap(), None);
        assert_eq!(c.classify(q), Err(Error::Abstained(q.quad_id())));
    }

    #[test]
    fn threshold_classifiers() {
        let (p1, p2) = pairs();
        let q = QuadRef::new(&p1, &p2);
        let st = store_with(&[
            ("pair:s1:c1:concat", &[1.0, 0.0]),
            ("pair:s2:c2:concat", &[1.0, 1.0]),
        ]);
        let model = |t| ThresholdModel {
            method: ScoreMethod::PairConcat,
            threshold: t,
            dev_accuracy: 1.0,
        };
        let lo = AnalogyClassifier::PairThreshold {
            store: &st,
            model: model(0.5),
        };
        let hi = AnalogyClassifier::PairThreshold {
            store: &st,
            model: model(0.9),
        };
        assert_eq!(lo.classify(q).unwrap(), Analogy);
        assert_eq!(hi.classify(q).unwrap(), NotAnalogy);
    }
}
