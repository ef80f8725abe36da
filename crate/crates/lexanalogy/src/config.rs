//! Run configuration file (TOML). Every value can be overridden by the
//! matching command-line flag; a flag that disagrees with the file wins and
//! a warning is logged.
//!
//! ```toml
//! [paths]
//! corpus = "data/sara.jsonl"
//! store = "data/store.jsonl"
//! output_dir = "out"
//!
//! [quadgen]
//! exclude_same_statute = false
//!
//! [retrieval]
//! backend = "dense"
//! k = 3
//! view = "sch"
//! k1 = 1.2
//! b = 0.75
//!
//! [classifier]
//! kind = "offset"
//! threshold_model = "out/threshold.json"
//! case_view = "ch"
//!
//! [llm]
//! base_url = "https://example.invalid/v1/completions"
//! model = "some-model"
//! api_key_env = "LEXANALOGY_API_KEY"
//!
//! [seeds]
//! resplit = 7
//! eval = 7
//! ```

use std::fmt::Display;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::llm::LlmEndpointConfig;
use crate::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub paths: PathsConfig,
    pub quadgen: QuadgenConfig,
    pub retrieval: RetrievalConfig,
    pub classifier: ClassifierConfig,
    pub llm: Option<LlmEndpointConfig>,
    pub seeds: SeedsConfig,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    pub corpus: Option<PathBuf>,
    pub store: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadgenConfig {
    pub exclude_same_statute: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetrievalConfig {
    pub backend: Option<String>,
    pub k: Option<usize>,
    pub view: Option<String>,
    pub k1: Option<f64>,
    pub b: Option<f64>,
    pub stopwords: Option<bool>,
    pub stem: Option<bool>,
    pub exclude_same_statute: Option<bool>,
    pub tie_break: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierConfig {
    pub kind: Option<String>,
    pub threshold_model: Option<PathBuf>,
    pub predictions: Option<PathBuf>,
    pub case_view: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeedsConfig {
    pub resplit: Option<u64>,
    pub eval: Option<u64>,
    pub exemplars: Option<u64>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> std::result::Result<Self, toml::de::Error> {
        toml::from_str(text)
    }
}

/// Flag value if given, else the config value, else `None`. Logs a warning
/// when both are given and differ.
pub fn merge<T: PartialEq + Display>(name: &str, flag: Option<T>, config: Option<T>) -> Option<T> {
    match (flag, config) {
        (Some(f), Some(c)) => {
            if f != c {
                log::warn!("--{name} {f} overrides config value {c}");
            }
            Some(f)
        }
        (f, c) => f.or(c),
    }
}

/// Like [`merge`] for paths.
pub fn merge_path(name: &str, flag: Option<PathBuf>, config: Option<PathBuf>) -> Option<PathBuf> {
    merge(name, flag.map(DisplayPath), config.map(DisplayPath)).map(|p| p.0)
}

#[derive(PartialEq)]
struct DisplayPath(PathBuf);

impl Display for DisplayPath {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.display().fmt(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections() {
        let c = RunConfig::parse(
            "[paths]\ncorpus = \"c.jsonl\"\n[retrieval]\nk = 5\nbackend = \"dense\"\n[llm]\nmodel = \"m\"\n[seeds]\neval = 3\n",
        )
        .unwrap();
        assert_eq!(c.paths.corpus, Some(PathBuf::from("c.jsonl")));
        assert_eq!(c.retrieval.k, Some(5));
        assert_eq!(c.llm.unwrap().model, "m");
        assert_eq!(c.seeds.eval, Some(3));
    }

    #[test]
    fn rejects_unknown_keys() {
        assert!(RunConfig::parse("[retrieval]\nkay = 3\n").is_err());
    }

    #[test]
    fn flag_wins() {
        assert_eq!(merge("k", Some(3), Some(5)), Some(3));
        assert_eq!(merge("k", None, Some(5)), Some(5));
        assert_eq!(merge::<usize>("k", None, None), None);
    }
}
