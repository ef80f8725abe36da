//! In-memory corpus of statutes and statute-linked cases, split into
//! train / dev / test.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::label::EntailmentLabel;
use crate::quadgen::PairRef;
use crate::sampling::sample_indices;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Dev, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        }
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "dev" => Ok(Split::Dev),
            "test" => Ok(Split::Test),
            other => Err(Error::UnknownSplit(other.into())),
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Statute {
    pub id: String,
    /// Human-readable section path such as `151(b)`.
    pub section_label: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Case {
    pub id: String,
    pub statute_id: String,
    /// Facts preceding the hypothesis; may be empty.
    pub context: String,
    pub hypothesis: String,
    pub gold: EntailmentLabel,
}

impl Case {
    pub fn pair_ref(&self) -> PairRef {
        PairRef::new(self.statute_id.clone(), self.id.clone())
    }
}

/// A broken corpus invariant, reported as data by [`Corpus::validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    /// Id of the offending record.
    pub record: String,
    pub rule: Rule,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Rule {
    DuplicateStatuteId,
    DuplicateCaseId,
    /// Ids must be non-empty and free of `:` and whitespace, since they are
    /// embedded in pair keys and embedding keys.
    MalformedId,
    EmptyStatuteText,
    EmptyHypothesis,
    DanglingStatute(String),
    UnknownSplitMember(Split),
    RepeatedInSplit(Split),
    InSeveralSplits(Vec<Split>),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r = &self.record;
        match &self.rule {
            Rule::DuplicateStatuteId => write!(f, "statute {r:?}: duplicate id"),
            Rule::DuplicateCaseId => write!(f, "case {r:?}: duplicate id"),
            Rule::MalformedId => write!(f, "{r:?}: id is empty or contains ':' or whitespace"),
            Rule::EmptyStatuteText => write!(f, "statute {r:?}: empty text"),
            Rule::EmptyHypothesis => write!(f, "case {r:?}: empty hypothesis"),
            Rule::DanglingStatute(sid) => write!(f, "case {r:?}: unknown statute {sid:?}"),
            Rule::UnknownSplitMember(s) => write!(f, "{s} split: unknown case {r:?}"),
            Rule::RepeatedInSplit(s) => write!(f, "{s} split: case {r:?} listed twice"),
            Rule::InSeveralSplits(splits) => {
                write!(f, "case {r:?} is in several splits:")?;
                for s in splits {
                    write!(f, " {s}")?;
                }
                Ok(())
            }
        }
    }
}

fn id_ok(id: &str) -> bool {
    !id.is_empty() && !id.chars().any(|c| c == ':' || c.is_whitespace())
}

/// Statutes and cases in record order, plus ordered split membership.
///
/// Immutable once built; [`Corpus::resplit_test_to_dev`] returns a new value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    statutes: Vec<Statute>,
    cases: Vec<Case>,
    splits: BTreeMap<Split, Vec<String>>,
    statute_index: BTreeMap<String, usize>,
    case_index: BTreeMap<String, usize>,
}

impl Corpus {
    /// Assembles a corpus without checking anything; pair with
    /// [`Corpus::validate`].
    pub fn from_parts(
        statutes: Vec<Statute>,
        cases: Vec<Case>,
        splits: BTreeMap<Split, Vec<String>>,
    ) -> Self {
        let mut statute_index = BTreeMap::new();
        for (i, s) in statutes.iter().enumerate() {
            statute_index.entry(s.id.clone()).or_insert(i);
        }
        let mut case_index = BTreeMap::new();
        for (i, c) in cases.iter().enumerate() {
            case_index.entry(c.id.clone()).or_insert(i);
        }
        let mut splits = splits;
        for split in Split::ALL {
            splits.entry(split).or_default();
        }
        Corpus {
            statutes,
            cases,
            splits,
            statute_index,
            case_index,
        }
    }

    pub fn statutes(&self) -> &[Statute] {
        &self.statutes
    }

    pub fn cases(&self) -> &[Case] {
        &self.cases
    }

    pub fn statute(&self, id: &str) -> Option<&Statute> {
        self.statute_index.get(id).map(|&i| &self.statutes[i])
    }

    pub fn case(&self, id: &str) -> Option<&Case> {
        self.case_index.get(id).map(|&i| &self.cases[i])
    }

    pub fn split_ids(&self, split: Split) -> &[String] {
        self.splits.get(&split).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Cases of a split, in split order. Unknown ids are skipped; a
    /// validated corpus has none.
    pub fn split_cases(&self, split: Split) -> impl Iterator<Item = &Case> + '_ {
        self.split_ids(split).iter().filter_map(|id| self.case(id))
    }

    /// Split a case belongs to, if any (first match in canonical order).
    pub fn split_of(&self, case_id: &str) -> Option<Split> {
        Split::ALL
            .into_iter()
            .find(|s| self.split_ids(*s).iter().any(|id| id == case_id))
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut push = |record: &str, rule: Rule| {
            out.push(Violation {
                record: record.into(),
                rule,
            })
        };

        let mut seen = BTreeSet::new();
        for s in &self.statutes {
            if !seen.insert(s.id.as_str()) {
                push(&s.id, Rule::DuplicateStatuteId);
            }
            if !id_ok(&s.id) {
                push(&s.id, Rule::MalformedId);
            }
            if s.text.trim().is_empty() {
                push(&s.id, Rule::EmptyStatuteText);
            }
        }

        let mut seen = BTreeSet::new();
        for c in &self.cases {
            if !seen.insert(c.id.as_str()) {
                push(&c.id, Rule::DuplicateCaseId);
            }
            if !id_ok(&c.id) {
                push(&c.id, Rule::MalformedId);
            }
            if self.statute(&c.statute_id).is_none() {
                push(&c.id, Rule::DanglingStatute(c.statute_id.clone()));
            }
            if c.hypothesis.trim().is_empty() {
                push(&c.id, Rule::EmptyHypothesis);
            }
        }

        let mut membership: BTreeMap<&str, Vec<Split>> = BTreeMap::new();
        for (&split, ids) in &self.splits {
            let mut in_split = BTreeSet::new();
            for id in ids {
                if self.case(id).is_none() {
                    push(id, Rule::UnknownSplitMember(split));
                }
                if !in_split.insert(id.as_str()) {
                    push(id, Rule::RepeatedInSplit(split));
                    continue;
                }
                membership.entry(id).or_default().push(split);
            }
        }
        // one violation per shared id
        for (id, splits) in membership {
            if splits.len() > 1 {
                push(id, Rule::InSeveralSplits(splits));
            }
        }
        out
    }

    /// Moves `n` test cases, drawn without replacement with the seeded
    /// sampler, to the dev split. Split lists keep case record order.
    pub fn resplit_test_to_dev(&self, n: usize, seed: u64) -> Result<Corpus> {
        let test = self.split_ids(Split::Test);
        if n > test.len() {
            return Err(Error::ResplitTooLarge {
                requested: n,
                available: test.len(),
            });
        }
        let picked = sample_indices(test.len(), n, seed)?;
        let moved: BTreeSet<&str> = picked.iter().map(|&i| test[i].as_str()).collect();

        let dev_members: BTreeSet<&str> = self
            .split_ids(Split::Dev)
            .iter()
            .map(String::as_str)
            .chain(moved.iter().copied())
            .collect();
        let record_order = |members: &BTreeSet<&str>| -> Vec<String> {
            self.cases
                .iter()
                .filter(|c| members.contains(c.id.as_str()))
                .map(|c| c.id.clone())
                .collect()
        };
        let new_dev = record_order(&dev_members);
        let new_test: Vec<String> = test
            .iter()
            .filter(|id| !moved.contains(id.as_str()))
            .cloned()
            .collect();

        let mut splits = self.splits.clone();
        splits.insert(Split::Dev, new_dev);
        splits.insert(Split::Test, new_test);
        Ok(Corpus::from_parts(
            self.statutes.clone(),
            self.cases.clone(),
            splits,
        ))
    }
}

/// Incremental construction used by parsers: rejects duplicates and
/// dangling statute links as records arrive, then validates the whole.
#[derive(Debug, Default)]
pub struct CorpusBuilder {
    statutes: Vec<Statute>,
    cases: Vec<Case>,
    splits: BTreeMap<Split, Vec<String>>,
    statute_ids: BTreeSet<String>,
    case_ids: BTreeSet<String>,
}

impl CorpusBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_statute(&mut self, statute: Statute) -> Result<()> {
        if !self.statute_ids.insert(statute.id.clone()) {
            return Err(Error::DuplicateId(statute.id));
        }
        self.statutes.push(statute);
        Ok(())
    }

    pub fn add_case(&mut self, case: Case, split: Option<Split>) -> Result<()> {
        if !self.statute_ids.contains(&case.statute_id) {
            return Err(Error::DanglingStatute {
                case_id: case.id,
                statute_id: case.statute_id,
            });
        }
        if !self.case_ids.insert(case.id.clone()) {
            return Err(Error::DuplicateId(case.id));
        }
        if let Some(split) = split {
            self.splits.entry(split).or_default().push(case.id.clone());
        }
        self.cases.push(case);
        Ok(())
    }

    pub fn finish(self) -> Result<Corpus> {
        let corpus = Corpus::from_parts(self.statutes, self.cases, self.splits);
        let violations = corpus.validate();
        if violations.is_empty() {
            Ok(corpus)
        } else {
            Err(Error::Invalid(violations))
        }
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;
    use alloc::format;
    use alloc::string::ToString;

    pub fn statute(id: &str) -> Statute {
        Statute {
            id: id.into(),
            section_label: id.trim_start_matches('s').to_string(),
            text: format!("Text of section {id}."),
        }
    }

    pub fn case(id: &str, sid: &str, gold: EntailmentLabel) -> Case {
        Case {
            id: id.into(),
            statute_id: sid.into(),
            context: format!("Facts of {id}."),
            hypothesis: format!("Section {sid} applies in {id}."),
            gold,
        }
    }

    /// 3 statutes, 6 cases: train 4, dev 1, test 1.
    pub fn small() -> Corpus {
        use EntailmentLabel::*;
        let mut b = CorpusBuilder::new();
        for s in ["s1", "s2", "s3"] {
            b.add_statute(statute(s)).unwrap();
        }
        let rows = [
            ("c1", "s1", Entailment, Split::Train),
            ("c2", "s1", Contradiction, Split::Train),
            ("c3", "s2", Entailment, Split::Train),
            ("c4", "s2", Contradiction, Split::Train),
            ("c5", "s3", Entailment, Split::Dev),
            ("c6", "s3", Contradiction, Split::Test),
        ];
        for (id, sid, gold, split) in rows {
            b.add_case(case(id, sid, gold), Some(split)).unwrap();
        }
        b.finish().unwrap()
    }

    /// One statute per case, `counts` cases per split, alternating labels.
    pub fn sized(train: usize, dev: usize, test: usize) -> Corpus {
        let mut b = CorpusBuilder::new();
        let mut k = 0;
        for (split, count) in [
            (Split::Train, train),
            (Split::Dev, dev),
            (Split::Test, test),
        ] {
            for _ in 0..count {
                let sid = format!("s{k:04}");
                b.add_statute(statute(&sid)).unwrap();
                let gold = if k % 2 == 0 {
                    EntailmentLabel::Entailment
                } else {
                    EntailmentLabel::Contradiction
                };
                b.add_case(case(&format!("c{k:04}"), &sid, gold), Some(split))
                    .unwrap();
                k += 1;
            }
        }
        b.finish().unwrap()
    }
}
