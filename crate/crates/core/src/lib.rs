//! Statute/case entailment recast as analogy over quadruples of
//! statute-case pairs.
//!
//! This crate is `no_std` (with `alloc`) and holds every algorithmic piece:
//! the corpus model, quadruple generation, vector-offset scoring and
//! threshold calibration, BM25 and dense retrieval, label transfer with
//! majority voting, prompt rendering and verdict parsing, and the evaluation
//! helpers. File formats, HTTP and the command line live in the `lexanalogy`
//! crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod analogy;
pub mod corpus;
mod error;
pub mod eval;
pub mod label;
pub mod pipeline;
pub mod prompt;
pub mod quadgen;
pub mod retrieval;
pub mod sampling;
pub mod vector;

pub use error::{Error, Result};
pub use label::{AnalogyLabel, BinaryLabel, EntailmentLabel};
