use alloc::string::String;
use alloc::vec::Vec;

use crate::corpus::{Split, Violation};

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("unknown label token {0:?}")]
    UnknownLabel(String),
    #[error("unknown split name {0:?}")]
    UnknownSplit(String),
    #[error("unknown field view {0:?} (expected h, ch or sch)")]
    UnknownView(String),
    #[error("duplicate id {0:?}")]
    DuplicateId(String),
    #[error("case {case_id:?} references unknown statute {statute_id:?}")]
    DanglingStatute { case_id: String, statute_id: String },
    #[error("unknown case {0:?}")]
    UnknownCase(String),
    #[error("unknown statute {0:?}")]
    UnknownStatute(String),
    #[error("corpus has {} invariant violation(s); first: {}", .0.len(), .0[0])]
    Invalid(Vec<Violation>),
    #[error("cannot move {requested} cases out of a test split of {available}")]
    ResplitTooLarge { requested: usize, available: usize },
    #[error("split {0} is empty")]
    EmptySplit(Split),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },
    #[error("vector for {key:?} has {found} components, store dim is {expected}")]
    RowDimMismatch {
        key: String,
        expected: usize,
        found: usize,
    },
    #[error("vector for {key:?} has a non-finite component")]
    NonFinite { key: String },
    #[error("duplicate embedding key {0:?}")]
    DuplicateKey(String),
    #[error("malformed embedding key {0:?}")]
    BadKey(String),
    #[error("missing embedding {key:?} ({scheme} scheme)")]
    MissingKey { key: String, scheme: &'static str },
    #[error("zero-norm vector")]
    ZeroNorm,
    #[error("embedding dim must be positive")]
    ZeroDim,

    #[error("no external prediction for quadruple {0:?}")]
    MissingPrediction(String),
    #[error("duplicate prediction for quadruple {0:?}")]
    DuplicatePrediction(String),
    #[error("classifier abstained on quadruple {0:?}")]
    Abstained(String),
    #[error("calibration needs at least one score of each label")]
    SingleClass,

    #[error("retrieval pool is empty")]
    EmptyPool,
    #[error("k = {k} exceeds pool size {pool}")]
    KTooLarge { k: usize, pool: usize },
    #[error("k must be a positive odd number, got {0}")]
    InvalidK(usize),
    #[error("invalid BM25 parameters k1={k1}, b={b}")]
    InvalidBm25Params { k1: f64, b: f64 },
    #[error("every neighbor abstained for {0:?}")]
    AllAbstained(String),
    #[error("vote tied for {0:?} and tie-breaking is disabled")]
    UnresolvedTie(String),

    #[error("few-shot prompts need at least one exemplar")]
    NoExemplars,
    #[error("hand-crafted chain-of-thought prompts need exactly 6 exemplars, got {0}")]
    CotExemplarCount(usize),
    #[error("exemplar {0:?} is the quadruple being asked about")]
    ExemplarOverlap(String),

    #[error("evaluation input is empty")]
    EmptyInput,
    #[error("cannot draw {size} items from {n}")]
    SampleTooLarge { size: usize, n: usize },
}
