//! Analogy quadruples: every unordered pair of distinct statute-case pairs
//! within one split, labeled by whether the two pairs share a gold label.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::corpus::{Corpus, Split};
use crate::label::{AnalogyLabel, EntailmentLabel};
use crate::{Error, Result};

/// A statute-case pair. Ordering is lexicographic on `(statute_id, case_id)`
/// and is the canonical pair ordering everywhere.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PairRef {
    pub statute_id: String,
    pub case_id: String,
}

impl PairRef {
    pub fn new(statute_id: impl Into<String>, case_id: impl Into<String>) -> Self {
        PairRef {
            statute_id: statute_id.into(),
            case_id: case_id.into(),
        }
    }

    /// `"{statute_id}:{case_id}"`.
    pub fn key(&self) -> String {
        format!("{}:{}", self.statute_id, self.case_id)
    }
}

impl fmt::Display for PairRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.statute_id, self.case_id)
    }
}

/// An unlabeled, oriented quadruple `(S1, C1, S2, C2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadRef<'a> {
    pub first: &'a PairRef,
    pub second: &'a PairRef,
}

impl<'a> QuadRef<'a> {
    pub fn new(first: &'a PairRef, second: &'a PairRef) -> Self {
        QuadRef { first, second }
    }

    pub fn quad_id(&self) -> String {
        quad_id(self.first, self.second)
    }

    pub fn swapped(self) -> QuadRef<'a> {
        QuadRef {
            first: self.second,
            second: self.first,
        }
    }
}

pub fn quad_id(first: &PairRef, second: &PairRef) -> String {
    format!("{first}::{second}")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Quadruple {
    pub first: PairRef,
    pub second: PairRef,
    pub label: AnalogyLabel,
}

impl Quadruple {
    pub fn refs(&self) -> QuadRef<'_> {
        QuadRef::new(&self.first, &self.second)
    }

    pub fn quad_id(&self) -> String {
        quad_id(&self.first, &self.second)
    }

    pub fn same_statute(&self) -> bool {
        self.first.statute_id == self.second.statute_id
    }
}

pub fn label_quadruple(a: EntailmentLabel, b: EntailmentLabel) -> AnalogyLabel {
    if a == b {
        AnalogyLabel::Analogy
    } else {
        AnalogyLabel::NotAnalogy
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GenerateOptions {
    /// Drop quadruples whose two pairs cite the same statute.
    pub exclude_same_statute: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadDataset {
    pub split: Split,
    pub quads: Vec<Quadruple>,
    pub options: GenerateOptions,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct QuadStats {
    pub total: usize,
    pub positives: usize,
    pub negatives: usize,
    pub same_statute: usize,
}

/// All `C(N, 2)` quadruples of a split (minus exclusions), first pair
/// canonically smaller than the second, in canonical order.
pub fn generate(corpus: &Corpus, split: Split, options: GenerateOptions) -> Result<QuadDataset> {
    let mut pairs: Vec<(PairRef, EntailmentLabel)> = corpus
        .split_cases(split)
        .map(|c| (c.pair_ref(), c.gold))
        .collect();
    if pairs.is_empty() {
        return Err(Error::EmptySplit(split));
    }
    pairs.sort_by(|a, b| a.0.cmp(&b.0));

    let n = pairs.len();
    let mut quads = Vec::with_capacity(n * (n - 1) / 2);
    for (i, (first, gold_a)) in pairs.iter().enumerate() {
        for (second, gold_b) in &pairs[i + 1..] {
            if options.exclude_same_statute && first.statute_id == second.statute_id {
                continue;
            }
            quads.push(Quadruple {
                first: first.clone(),
                second: second.clone(),
                label: label_quadruple(*gold_a, *gold_b),
            });
        }
    }
    Ok(QuadDataset {
        split,
        quads,
        options,
    })
}

impl QuadDataset {
    pub fn stats(&self) -> QuadStats {
        stats(&self.quads)
    }
}

pub fn stats(quads: &[Quadruple]) -> QuadStats {
    let mut s = QuadStats::default();
    for q in quads {
        s.total += 1;
        match q.label {
            AnalogyLabel::Analogy => s.positives += 1,
            AnalogyLabel::NotAnalogy => s.negatives += 1,
        }
        if q.same_statute() {
            s.same_statute += 1;
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::fixtures::{case, sized, small, statute};
    use crate::corpus::CorpusBuilder;
    use alloc::collections::BTreeSet;
    use EntailmentLabel::*;

    fn choose2(n: usize) -> usize {
        n * n.saturating_sub(1) / 2
    }

    fn split_with(e: usize, k: usize) -> Corpus {
        let mut b = CorpusBuilder::new();
        b.add_statute(statute("s0")).unwrap();
        for i in 0..e + k {
            let gold = if i < e { Entailment } else { Contradiction };
            b.add_case(case(&format!("c{i:03}"), "s0", gold), Some(Split::Train))
                .unwrap();
        }
        b.finish().unwrap()
    }

    #[test]
    fn labeling_rule() {
        assert_eq!(
            label_quadruple(Entailment, Entailment),
            AnalogyLabel::Analogy
        );
        assert_eq!(
            label_quadruple(Entailment, Contradiction),
            AnalogyLabel::NotAnalogy
        );
        assert_eq!(
            label_quadruple(Contradiction, Contradiction),
            AnalogyLabel::Analogy
        );
        for a in [Entailment, Contradiction] {
            for b in [Entailment, Contradiction] {
                assert_eq!(label_quadruple(a, b), label_quadruple(b, a));
            }
        }
    }

    #[test]
    fn two_plus_two() {
        let ds = generate(&split_with(2, 2), Split::Train, GenerateOptions::default()).unwrap();
        let s = ds.stats();
        assert_eq!((s.total, s.positives, s.negatives), (6, 2, 4));
    }

    #[test]
    fn three_plus_two() {
        let ds = generate(&split_with(3, 2), Split::Train, GenerateOptions::default()).unwrap();
        let s = ds.stats();
        assert_eq!((s.total, s.positives, s.negatives), (10, 4, 6));
        assert_eq!(s.same_statute, 10);
    }

    #[test]
    fn empty_stats() {
        assert_eq!(stats(&[]), QuadStats::default());
    }

    #[test]
    fn full_sized_splits() {
        let c = sized(158, 38, 80);
        let opts = GenerateOptions::default();
        assert_eq!(generate(&c, Split::Train, opts).unwrap().quads.len(), 12403);
        assert_eq!(generate(&c, Split::Dev, opts).unwrap().quads.len(), 703);
        assert_eq!(generate(&c, Split::Test, opts).unwrap().quads.len(), 3160);
    }

    #[test]
    fn canonical_and_unique() {
        let ds = generate(&small(), Split::Train, GenerateOptions::default()).unwrap();
        assert_eq!(ds.quads.len(), 6);
        let ids: BTreeSet<_> = ds.quads.iter().map(Quadruple::quad_id).collect();
        assert_eq!(ids.len(), 6);
        assert!(ds.quads.iter().all(|q| q.first < q.second));
        assert_eq!(ds.quads[0].quad_id(), "s1:c1::s1:c2");
    }

    #[test]
    fn exclusion_drops_same_statute() {
        let c = small();
        let ds = generate(
            &c,
            Split::Train,
            GenerateOptions {
                exclude_same_statute: true,
            },
        )
        .unwrap();
        // s1 has c1,c2 and s2 has c3,c4: two same-statute quads dropped
        assert_eq!(ds.quads.len(), 4);
        assert_eq!(ds.stats().same_statute, 0);
    }

    #[test]
    fn empty_split_errors() {
        let c = sized(3, 0, 1);
        assert_eq!(
            generate(&c, Split::Dev, GenerateOptions::default()),
            Err(Error::EmptySplit(Split::Dev))
        );
    }

    #[test]
    fn counting_law_by_enumeration() {
        for e in 0..=30usize {
            for k in 0..=30usize {
                if e + k == 0 {
                    continue;
                }
                let ds =
                    generate(&split_with(e, k), Split::Train, GenerateOptions::default()).unwrap();
                let s = ds.stats();
                assert_eq!(s.total, choose2(e + k));
                assert_eq!(s.positives, choose2(e) + choose2(k));
                assert_eq!(s.negatives, e * k);
                if e == k {
                    assert_eq!(s.negatives - s.positives, e);
                }
            }
        }
    }
}
