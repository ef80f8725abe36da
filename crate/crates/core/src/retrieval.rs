//! Prototype retrieval: from-scratch Okapi BM25 and dense dot-product search
//! over a chosen field view of each statute-case pair.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;
use core::str::FromStr;

use crate::corpus::Corpus;
use crate::quadgen::PairRef;
use crate::vector::{dot, EmbeddingKey, EmbeddingStore};
use crate::{Error, Result};

/// Which parts of a pair are rendered for retrieval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FieldView {
    Hypothesis,
    ContextHypothesis,
    StatuteContextHypothesis,
}

impl FieldView {
    pub const ALL: [FieldView; 3] = [
        FieldView::Hypothesis,
        FieldView::ContextHypothesis,
        FieldView::StatuteContextHypothesis,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FieldView::Hypothesis => "h",
            FieldView::ContextHypothesis => "ch",
            FieldView::StatuteContextHypothesis => "sch",
        }
    }

    /// Statute, context, hypothesis in that order, newline-separated.
    /// Parts that are empty (an empty context) are skipped.
    pub fn render(self, statute: &str, context: &str, hypothesis: &str) -> String {
        let parts: &[&str] = match self {
            FieldView::Hypothesis => &[hypothesis],
            FieldView::ContextHypothesis => &[context, hypothesis],
            FieldView::StatuteContextHypothesis => &[statute, context, hypothesis],
        };
        let mut out = String::new();
        for part in parts.iter().filter(|p| !p.is_empty()) {
            if !out.is_empty() {
                out.push('\n');
            }
            out.push_str(part);
        }
        out
    }
}

impl FromStr for FieldView {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "h" | "H" => Ok(FieldView::Hypothesis),
            "ch" | "CH" => Ok(FieldView::ContextHypothesis),
            "sch" | "SCH" => Ok(FieldView::StatuteContextHypothesis),
            other => Err(Error::UnknownView(other.into())),
        }
    }
}

impl fmt::Display for FieldView {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A pair to classify. Carries its texts but no gold label, so nothing
/// downstream of retrieval can peek at the answer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryPair {
    pub pair: PairRef,
    pub statute_text: String,
    pub context: String,
    pub hypothesis: String,
}

impl QueryPair {
    pub fn from_corpus(corpus: &Corpus, case_id: &str) -> Result<Self> {
        let case = corpus
            .case(case_id)
            .ok_or_else(|| Error::UnknownCase(case_id.into()))?;
        let statute = corpus
            .statute(&case.statute_id)
            .ok_or_else(|| Error::UnknownStatute(case.statute_id.clone()))?;
        Ok(QueryPair {
            pair: case.pair_ref(),
            statute_text: statute.text.clone(),
            context: case.context.clone(),
            hypothesis: case.hypothesis.clone(),
        })
    }

    pub fn render(&self, view: FieldView) -> String {
        view.render(&self.statute_text, &self.context, &self.hypothesis)
    }
}

/// Lowercases and splits on every maximal run of non-alphanumeric
/// characters. Digits are kept.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.chars().flat_map(char::to_lowercase).collect())
        .collect()
}

pub const ENGLISH_STOPWORDS: &[&str] = &[
    "a",
    "about",
    "above",
    "after",
    "again",
    "against",
    "all",
    "am",
    "an",
    "and",
    "any",
    "are",
    "as",
    "at",
    "be",
    "because",
    "been",
    "before",
    "being",
    "below",
    "between",
    "both",
    "but",
    "by",
    "can",
    "did",
    "do",
    "does",
    "doing",
    "down",
    "during",
    "each",
    "few",
    "for",
    "from",
    "further",
    "had",
    "has",
    "have",
    "having",
    "he",
    "her",
    "here",
    "hers",
    "herself",
    "him",
    "himself",
    "his",
    "how",
    "i",
    "if",
    "in",
    "into",
    "is",
    "it",
    "its",
    "itself",
    "just",
    "me",
    "more",
    "most",
    "my",
    "myself",
    "no",
    "nor",
    "not",
    "now",
    "of",
    "off",
    "on",
    "once",
    "only",
    "or",
    "other",
    "our",
    "ours",
    "ourselves",
    "out",
    "over",
    "own",
    "s",
    "same",
    "she",
    "should",
    "so",
    "some",
    "such",
    "t",
    "than",
    "that",
    "the",
    "their",
    "theirs",
    "them",
    "themselves",
    "then",
    "there",
    "these",
    "they",
    "this",
    "those",
    "through",
    "to",
    "too",
    "under",
    "until",
    "up",
    "very",
    "was",
    "we",
    "were",
    "what",
    "when",
    "where",
    "which",
    "while",
    "who",
    "whom",
    "why",
    "will",
    "with",
    "you",
    "your",
    "yours",
    "yourself",
    "yourselves",
];

type Stemmer = Arc<dyn Fn(&str) -> String + Send + Sync>;

/// Tokenizer plus optional stopword removal and stemming. The default is
/// plain [`tokenize`].
#[derive(Clone, Default)]
pub struct Analyzer {
    stopwords: BTreeSet<String>,
    stemmer: Option<Stemmer>,
}

impl Analyzer {
    pub fn plain() -> Self {
        Self::default()
    }

    pub fn with_stopwords<I, S>(mut self, words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.stopwords.extend(words.into_iter().map(Into::into));
        self
    }

    pub fn with_english_stopwords(self) -> Self {
        self.with_stopwords(ENGLISH_STOPWORDS.iter().copied())
    }

    pub fn with_stemmer(mut self, stem: impl Fn(&str) -> String + Send + Sync + 'static) -> Self {
        self.stemmer = Some(Arc::new(stem));
        self
    }

    pub fn analyze(&self, text: &str) -> Vec<String> {
        tokenize(text)
            .into_iter()
            .filter(|t| !self.stopwords.contains(t))
            .map(|t| match &self.stemmer {
                Some(stem) => stem(&t),
                None => t,
            })
            .collect()
    }
}

impl fmt::Debug for Analyzer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Analyzer")
            .field("stopwords", &self.stopwords.len())
            .field("stemmer", &self.stemmer.is_some())
            .finish()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Bm25Params {
    pub fn new(k1: f64, b: f64) -> Result<Self> {
        if !(k1 > 0.0 && k1.is_finite() && (0.0..=1.0).contains(&b)) {
            return Err(Error::InvalidBm25Params { k1, b });
        }
        Ok(Bm25Params { k1, b })
    }
}

impl Default for Bm25Params {
    fn default() -> Self {
        Bm25Params { k1: 1.2, b: 0.75 }
    }
}

/// Okapi BM25 statistics over a fixed pool of documents.
///
/// `idf(t) = ln(1 + (N - df + 0.5) / (df + 0.5))`, which stays positive for
/// every indexed term even when `df > N / 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Bm25Index {
    params: Bm25Params,
    docs: Vec<PairRef>,
    doc_index: BTreeMap<PairRef, usize>,
    doc_terms: Vec<BTreeMap<String, u32>>,
    doc_len: Vec<usize>,
    df: BTreeMap<String, usize>,
    total_len: usize,
}

impl Bm25Index {
    pub fn from_tokens(docs: Vec<(PairRef, Vec<String>)>, params: Bm25Params) -> Result<Self> {
        if docs.is_empty() {
            return Err(Error::EmptyPool);
        }
        let mut index = Bm25Index {
            params,
            docs: Vec::new(),
            doc_index: BTreeMap::new(),
            doc_terms: Vec::new(),
            doc_len: Vec::new(),
            df: BTreeMap::new(),
            total_len: 0,
        };
        for (pair, tokens) in docs {
            index.add_document(pair, tokens)?;
        }
        Ok(index)
    }

    /// Appends one document; only `N`, `df` and `avgdl` of the existing
    /// documents change.
    pub fn add_document(&mut self, pair: PairRef, tokens: Vec<String>) -> Result<()> {
        if self.doc_index.contains_key(&pair) {
            return Err(Error::DuplicateId(pair.key()));
        }
        let mut tf: BTreeMap<String, u32> = BTreeMap::new();
        for t in &tokens {
            *tf.entry(t.clone()).or_insert(0) += 1;
        }
        for term in tf.keys() {
            *self.df.entry(term.clone()).or_insert(0) += 1;
        }
        self.doc_index.insert(pair.clone(), self.docs.len());
        self.docs.push(pair);
        self.doc_len.push(tokens.len());
        self.total_len += tokens.len();
        self.doc_terms.push(tf);
        Ok(())
    }

    pub fn params(&self) -> Bm25Params {
        self.params
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn docs(&self) -> &[PairRef] {
        &self.docs
    }

    pub fn avgdl(&self) -> f64 {
        self.total_len as f64 / self.docs.len() as f64
    }

    pub fn df(&self, term: &str) -> usize {
        self.df.get(term).copied().unwrap_or(0)
    }

    pub fn doc_len(&self, doc: &PairRef) -> Option<usize> {
        self.doc_index.get(doc).map(|&i| self.doc_len[i])
    }

    pub fn tf(&self, doc: &PairRef, term: &str) -> Option<u32> {
        self.doc_index
            .get(doc)
            .map(|&i| self.doc_terms[i].get(term).copied().unwrap_or(0))
    }

    /// Zero for terms absent from the index.
    pub fn idf(&self, term: &str) -> f64 {
        let df = self.df(term);
        if df == 0 {
            return 0.0;
        }
        let n = self.docs.len() as f64;
        let df = df as f64;
        libm::log(1.0 + (n - df + 0.5) / (df + 0.5))
    }

    pub fn score(&self, query: &[String], doc: &PairRef) -> Result<f64> {
        let i = *self
            .doc_index
            .get(doc)
            .ok_or_else(|| Error::UnknownCase(doc.key()))?;
        Ok(self.score_at(query, i))
    }

    fn score_at(&self, query: &[String], i: usize) -> f64 {
        let Bm25Params { k1, b } = self.params;
        let terms = &self.doc_terms[i];
        let norm = 1.0 - b + b * self.doc_len[i] as f64 / self.avgdl();
        query
            .iter()
            .map(|t| match terms.get(t) {
                Some(&tf) => {
                    let tf = tf as f64;
                    self.idf(t) * tf * (k1 + 1.0) / (tf + k1 * norm)
                }
                None => 0.0,
            })
            .sum()
    }
}

/// Indexes the rendered `view` text of each pair.
pub fn build_bm25(
    pairs: &[PairRef],
    corpus: &Corpus,
    view: FieldView,
    analyzer: &Analyzer,
    params: Bm25Params,
) -> Result<Bm25Index> {
    let docs = pairs
        .iter()
        .map(|p| {
            let q = QueryPair::from_corpus(corpus, &p.case_id)?;
            Ok((p.clone(), analyzer.analyze(&q.render(view))))
        })
        .collect::<Result<Vec<_>>>()?;
    Bm25Index::from_tokens(docs, params)
}

/// Pool vectors read from the store under the view's `case:<cid>:<view>` key.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseIndex {
    view: FieldView,
    entries: Vec<(PairRef, Vec<f64>)>,
}

impl DenseIndex {
    pub fn build(pairs: &[PairRef], store: &EmbeddingStore, view: FieldView) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::EmptyPool);
        }
        let entries = pairs
            .iter()
            .map(|p| {
                let v = store.get(&EmbeddingKey::case(p.case_id.clone(), view))?;
                Ok((p.clone(), v.to_vec()))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(DenseIndex { view, entries })
    }

    pub fn view(&self) -> FieldView {
        self.view
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hit {
    pub pair: PairRef,
    pub score: f64,
}

/// Top-k hits, best first.
#[derive(Debug, Clone, PartialEq)]
pub struct RetrievalResult {
    pub hits: Vec<Hit>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Backend {
    Bm25,
    Dense,
}

impl Backend {
    pub fn as_str(self) -> &'static str {
        match self {
            Backend::Bm25 => "bm25",
            Backend::Dense => "dense",
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub enum Retriever<'a> {
    Bm25 {
        index: Bm25Index,
        analyzer: Analyzer,
        view: FieldView,
    },
    Dense {
        index: DenseIndex,
        store: &'a EmbeddingStore,
    },
}

impl<'a> Retriever<'a> {
    pub fn bm25(
        pool: &[PairRef],
        corpus: &Corpus,
        view: FieldView,
        analyzer: Analyzer,
        params: Bm25Params,
    ) -> Result<Self> {
        let index = build_bm25(pool, corpus, view, &analyzer, params)?;
        Ok(Retriever::Bm25 {
            index,
            analyzer,
            view,
        })
    }

    pub fn dense(pool: &[PairRef], store: &'a EmbeddingStore, view: FieldView) -> Result<Self> {
        Ok(Retriever::Dense {
            index: DenseIndex::build(pool, store, view)?,
            store,
        })
    }

    pub fn backend(&self) -> Backend {
        match self {
            Retriever::Bm25 { .. } => Backend::Bm25,
            Retriever::Dense { .. } => Backend::Dense,
        }
    }

    pub fn view(&self) -> FieldView {
        match self {
            Retriever::Bm25 { view, .. } => *view,
            Retriever::Dense { index, .. } => index.view,
        }
    }

    pub fn pool_size(&self) -> usize {
        match self {
            Retriever::Bm25 { index, .. } => index.len(),
            Retriever::Dense { index, .. } => index.len(),
        }
    }

    pub fn retrieve(&self, query: &QueryPair, k: usize) -> Result<RetrievalResult> {
        self.retrieve_where(query, k, |_| true)
    }

    /// Top-k among pool pairs accepted by `keep`. Ties go to the smaller
    /// pair under canonical ordering.
    pub fn retrieve_where(
        &self,
        query: &QueryPair,
        k: usize,
        keep: impl Fn(&PairRef) -> bool,
    ) -> Result<RetrievalResult> {
        let mut hits: Vec<Hit> = match self {
            Retriever::Bm25 {
                index,
                analyzer,
                view,
            } => {
                let tokens = analyzer.analyze(&query.render(*view));
                index
                    .docs
                    .iter()
                    .enumerate()
                    .filter(|(_, p)| keep(p))
                    .map(|(i, p)| Hit {
                        pair: p.clone(),
                        score: index.score_at(&tokens, i),
                    })
                    .collect()
            }
            Retriever::Dense { index, store } => {
                let q = store.get(&EmbeddingKey::case(query.pair.case_id.clone(), index.view))?;
                index
                    .entries
                    .iter()
                    .filter(|(p, _)| keep(p))
                    .map(|(p, v)| {
                        Ok(Hit {
                            pair: p.clone(),
                            score: dot(q, v)?,
                        })
                    })
                    .collect::<Result<_>>()?
            }
        };
        if k > hits.len() {
            return Err(Error::KTooLarge {
                k,
                pool: hits.len(),
            });
        }
        hits.sort_by(|a, b| match b.score.total_cmp(&a.score) {
            Ordering::Equal => a.pair.cmp(&b.pair),
            o => o,
        });
        hits.truncate(k);
        Ok(RetrievalResult { hits })
    }
}
