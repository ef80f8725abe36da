#![allow(dead_code)]

use lexanalogy_core::analogy::QuadClassifier;
use lexanalogy_core::corpus::{Case, Corpus, CorpusBuilder, Split, Statute};
use lexanalogy_core::quadgen::{label_quadruple, QuadRef};
use lexanalogy_core::{AnalogyLabel, EntailmentLabel, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const WORDS: &[&str] = &[
    "alice",
    "bob",
    "charlie",
    "paid",
    "wages",
    "income",
    "spouse",
    "dependent",
    "exemption",
    "return",
    "joint",
    "employer",
    "section",
    "applies",
    "year",
    "cash",
    "service",
    "home",
    "retirement",
    "insurance",
    "deduction",
    "married",
    "support",
    "relative",
];

fn sentence(rng: &mut ChaCha8Rng, len: usize) -> String {
    let words: Vec<&str> = (0..len)
        .map(|_| WORDS[rng.random_range(0..WORDS.len())])
        .collect();
    format!("{}.", words.join(" "))
}

/// Random corpus with `statutes` statutes and the given split sizes.
pub fn synthetic(statutes: usize, sizes: [usize; 3], seed: u64) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = CorpusBuilder::new();
    for s in 0..statutes {
        let len = rng.random_range(5..15);
        b.add_statute(Statute {
            id: format!("s{s:02}"),
            section_label: format!("{s}"),
            text: sentence(&mut rng, len),
        })
        .unwrap();
    }
    let mut k = 0;
    for (split, count) in Split::ALL.into_iter().zip(sizes) {
        for _ in 0..count {
            let sid = format!("s{:02}", rng.random_range(0..statutes));
            let gold = if rng.random_bool(0.5) {
                EntailmentLabel::Entailment
            } else {
                EntailmentLabel::Contradiction
            };
            let (cl, hl) = (rng.random_range(0..12), rng.random_range(3..8));
            let context = if cl == 0 {
                String::new()
            } else {
                sentence(&mut rng, cl)
            };
            b.add_case(
                Case {
                    id: format!("c{k:03}"),
                    statute_id: sid,
                    context,
                    hypothesis: sentence(&mut rng, hl),
                    gold,
                },
                Some(split),
            )
            .unwrap();
            k += 1;
        }
    }
    b.finish().unwrap()
}

/// Verdicts from the gold labels of both pairs.
pub struct Oracle<'a> {
    pub corpus: &'a Corpus,
    pub invert: bool,
}

impl QuadClassifier for Oracle<'_> {
    fn verdict(&self, quad: QuadRef<'_>) -> Result<Option<AnalogyLabel>> {
        let gold = |id: &str| self.corpus.case(id).unwrap().gold;
        let label = label_quadruple(gold(&quad.first.case_id), gold(&quad.second.case_id));
        Ok(Some(if self.invert { label.flipped() } else { label }))
    }
}

/// Verdicts from a hash of the quad id; never looks at labels.
pub struct Hashed {
    pub salt: u64,
    pub invert: bool,
}

impl QuadClassifier for Hashed {
    fn verdict(&self, quad: QuadRef<'_>) -> Result<Option<AnalogyLabel>> {
        let mut h = self.salt ^ 0xcbf2_9ce4_8422_2325;
        for b in quad.quad_id().bytes() {
            h = (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3);
        }
        let label = if h >> 63 == 1 {
            AnalogyLabel::Analogy
        } else {
            AnalogyLabel::NotAnalogy
        };
        Ok(Some(if self.invert { label.flipped() } else { label }))
    }
}
