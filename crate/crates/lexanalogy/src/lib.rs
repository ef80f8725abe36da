//! File formats, SARA conversion, the LLM bridge and the `lexanalogy`
//! command line, on top of [`lexanalogy_core`].

pub mod cli;
pub mod config;
pub mod cot;
mod error;
pub mod formats;
pub mod llm;
pub mod sara;

pub use error::{Error, Result};
pub use lexanalogy_core as core;
