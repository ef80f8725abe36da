//! The `lexanalogy` command line.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use lexanalogy_core::analogy::{
    calibrate_threshold, score_pair_concat, score_quadruple_offset, AnalogyClassifier,
    AnalogyScore, QuadClassifier, ScoreMethod,
};
use lexanalogy_core::corpus::{Corpus, Split};
use lexanalogy_core::eval::{accuracy, majority_baseline, sampled_accuracy};
use lexanalogy_core::pipeline::{Pipeline, PipelineConfig, PrototypePool, TieBreak};
use lexanalogy_core::prompt::{build_prompt, parse_verdict, PromptSpec, Verdict};
use lexanalogy_core::quadgen::{generate, GenerateOptions, Quadruple};
use lexanalogy_core::retrieval::{Analyzer, Backend, Bm25Params, FieldView, QueryPair, Retriever};
use lexanalogy_core::sampling::sample_indices;
use lexanalogy_core::vector::EmbeddingStore;
use lexanalogy_core::{AnalogyLabel, EntailmentLabel};
use serde::{Deserialize, Serialize};

use crate::config::{merge, merge_path, RunConfig};
use crate::formats::corpus::{parse_corpus, write_corpus};
use crate::formats::entail::{write_entailment, RunInfo};
use crate::formats::predictions::{import_external_predictions, write_predictions};
use crate::formats::quads::{read_quads, write_expanded, write_quads};
use crate::formats::report::{write_report, Report};
use crate::formats::scores::{read_scores, write_scores};
use crate::formats::store::load_store;
use crate::formats::threshold::{read_threshold_model, write_threshold_model};
use crate::formats::{numbered_lines, open, write_jsonl};
use crate::llm::{complete_all, Completion, HttpCompletion, LlmEndpointConfig, RateLimiter};
use crate::{cot, sara, Error, Result};

#[derive(Debug, Parser)]
#[command(
    name = "lexanalogy",
    version,
    about = "Statute/case entailment as analogy: corpus tools, quadruples, scoring, retrieval and voting",
    after_help = "Exit codes: 0 success, 1 usage error, 2 data error, 3 external-service failure.\nLog verbosity follows RUST_LOG (default: info)."
)]
pub struct Cli {
    /// Run configuration file (TOML). Flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convert a SARA-style file tree into a corpus file
    ConvertSara(ConvertSaraArgs),
    /// Check a corpus (and optionally a store) and list every violation
    Validate(ValidateArgs),
    /// Move n randomly chosen test cases to dev
    Resplit(ResplitArgs),
    /// Generate the analogy quadruples of one split
    Quadgen(QuadgenArgs),
    /// Score quadruples with a cosine method
    Score(ScoreArgs),
    /// Fit a decision threshold on scored dev quadruples
    Calibrate(CalibrateArgs),
    /// Classify quadruples as analogy / not analogy
    Classify(ClassifyArgs),
    /// Retrieve the k nearest prototype pairs for each query pair
    Retrieve(RetrieveArgs),
    /// Predict entailment by retrieval, analogy verdicts and majority vote
    Entail(EntailArgs),
    /// Evaluate predictions and write a report
    Eval(EvalArgs),
    /// Render analogy prompts without calling any endpoint
    PromptGen(PromptGenArgs),
    /// Send analogy prompts to a completion endpoint and parse the verdicts
    LlmRun(LlmRunArgs),
    /// Run entail over a grid of k, view and backend, one report per cell
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct ConvertSaraArgs {
    /// Root of the SARA tree (statutes/, cases/, splits/)
    #[arg(long, value_name = "DIR")]
    pub sara_dir: PathBuf,
    /// Output corpus file
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CorpusArg {
    /// Corpus file [config: paths.corpus]
    #[arg(long, value_name = "FILE")]
    pub corpus: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StoreArg {
    /// Embedding store file [config: paths.store]
    #[arg(long, value_name = "FILE")]
    pub store: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub corpus: CorpusArg,
    #[command(flatten)]
    pub store: StoreArg,
}

#[derive(Debug, Args)]
pub struct ResplitArgs {
    #[command(flatten)]
    pub corpus: CorpusArg,
    /// Number of test cases to move
    #[arg(long, default_value_t = 20)]
    pub n: usize,
    /// Sampling seed [config: seeds.resplit, default 7]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output corpus file
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct QuadgenArgs {
    #[command(flatten)]
    pub corpus: CorpusArg,
    /// Split to expand: train, dev or test
    #[arg(long)]
    pub split: String,
    /// Drop quadruples whose two pairs cite the same statute [config: quadgen.exclude_same_statute]
    #[arg(long)]
    pub exclude_same_statute: bool,
    /// Output quadruple file
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Also write the quadruples with full texts inlined
    #[arg(long, value_name = "FILE")]
    pub expanded: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[command(flatten)]
    pub store: StoreArg,
    /// Quadruple file to score
    #[arg(long, value_name = "FILE")]
    pub quads: PathBuf,
    /// Scoring method: offset or pair
    #[arg(long, default_value = "offset")]
    pub method: String,
    /// Case vector view for the offset method: h, ch or sch [config: classifier.case_view, default ch]
    #[arg(long)]
    pub case_view: Option<String>,
    /// Output score file
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    /// Score file (one method only)
    #[arg(long, value_name = "FILE")]
    pub scores: PathBuf,
    /// Quadruple file holding the gold analogy labels
    #[arg(long, value_name = "FILE")]
    pub quads: PathBuf,
    /// Output threshold model
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ClassifierArgs {
    /// Analogy classifier: offset, pair or external [config: classifier.kind, default offset]
    #[arg(long)]
    pub classifier: Option<String>,
    /// Threshold model for offset / pair [config: classifier.threshold_model]
    #[arg(long, value_name = "FILE")]
    pub threshold_model: Option<PathBuf>,
    /// Predictions file for external [config: classifier.predictions]
    #[arg(long, value_name = "FILE")]
    pub predictions: Option<PathBuf>,
    /// Case vector view for offset: h, ch or sch [config: classifier.case_view, default ch]
    #[arg(long)]
    pub case_view: Option<String>,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub store: StoreArg,
    #[command(flatten)]
    pub classifier: ClassifierArgs,
    /// Quadruple file to classify
    #[arg(long, value_name = "FILE")]
    pub quads: PathBuf,
    /// Output predictions file
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RetrievalArgs {
    /// Retrieval backend: bm25 or dense [config: retrieval.backend, default bm25]
    #[arg(long)]
    pub backend: Option<String>,
    /// Number of neighbors [config: retrieval.k, default 3]
    #[arg(long)]
    pub k: Option<usize>,
    /// Field view: h, ch or sch [config: retrieval.view, default sch]
    #[arg(long)]
    pub view: Option<String>,
    /// BM25 k1 [config: retrieval.k1, default 1.2]
    #[arg(long)]
    pub k1: Option<f64>,
    /// BM25 b [config: retrieval.b, default 0.75]
    #[arg(long)]
    pub b: Option<f64>,
    /// Remove English stopwords before BM25 [config: retrieval.stopwords]
    #[arg(long)]
    pub stopwords: bool,
    /// Apply the English Snowball stemmer before BM25 [config: retrieval.stem]
    #[arg(long)]
    pub stem: bool,
}

#[derive(Debug, Args)]
pub struct RetrieveArgs {
    #[command(flatten)]
    pub corpus: CorpusArg,
    #[command(flatten)]
    pub store: StoreArg,
    #[command(flatten)]
    pub retrieval: RetrievalArgs,
    /// Split holding the query pairs
    #[arg(long, default_value = "test")]
    pub split: String,
    /// Split holding the prototype pool
    #[arg(long, default_value = "train")]
    pub pool_split: String,
    /// Output file of ranked neighbors
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct VoteArgs {
    /// Tie rule when abstentions leave an even vote: highest-ranked or fail [config: retrieval.tie_break]
    #[arg(long)]
    pub tie_break: Option<String>,
    /// Ignore prototypes citing the query's statute [config: retrieval.exclude_same_statute]
    #[arg(long)]
    pub exclude_same_statute: bool,
    /// Split to predict
    #[arg(long, default_value = "test")]
    pub split: String,
}

#[derive(Debug, Args)]
pub struct EntailArgs {
    #[command(flatten)]
    pub corpus: CorpusArg,
    #[command(flatten)]
    pub store: StoreArg,
    #[command(flatten)]
    pub retrieval: RetrievalArgs,
    #[command(flatten)]
    pub classifier: ClassifierArgs,
    #[command(flatten)]
    pub vote: VoteArgs,
    /// Output prediction dump
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Also write an accuracy + majority-baseline report
    #[arg(long, value_name = "FILE")]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Entailment prediction dump written by `entail`
    #[arg(
        long,
        value_name = "FILE",
        conflicts_with = "analogy",
        required_unless_present = "analogy"
    )]
    pub entail: Option<PathBuf>,
    /// Analogy predictions file (needs --quads for gold labels)
    #[arg(long, value_name = "FILE", requires = "quads")]
    pub analogy: Option<PathBuf>,
    /// Quadruple file with gold labels for --analogy
    #[arg(long, value_name = "FILE")]
    pub quads: Option<PathBuf>,
    /// Include the majority baseline
    #[arg(long)]
    pub baseline: bool,
    /// Sampled protocol as SETSxSIZE, e.g. 5x100
    #[arg(long, value_name = "MxN")]
    pub sampled: Option<String>,
    /// Seed for --sampled; set i uses seed + i [config: seeds.eval, default 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output report (stdout when absent)
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PromptArgs {
    #[command(flatten)]
    pub corpus: CorpusArg,
    /// Quadruples to render
    #[arg(long, value_name = "FILE")]
    pub quads: PathBuf,
    /// Prompt kind: zero, few or cot
    #[arg(long, default_value = "zero")]
    pub kind: String,
    /// Number of few-shot exemplars
    #[arg(long, default_value_t = 3)]
    pub shots: usize,
    /// Quadruple file the few-shot exemplars are drawn from (normally train)
    #[arg(long, value_name = "FILE")]
    pub exemplars: Option<PathBuf>,
    /// Comma-separated quad ids to use as few-shot exemplars instead of sampling
    #[arg(long, value_delimiter = ',')]
    pub exemplar_ids: Vec<String>,
    /// Seed for drawing few-shot exemplars [config: seeds.exemplars, default 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Chain-of-thought exemplar file (default: the bundled six)
    #[arg(long, value_name = "FILE")]
    pub cot_exemplars: Option<PathBuf>,
    /// End each prompt with the zero-shot chain-of-thought trigger
    #[arg(long)]
    pub zero_cot: bool,
    /// Only render the first N quadruples
    #[arg(long)]
    pub limit: Option<usize>,
}

#[derive(Debug, Args)]
pub struct PromptGenArgs {
    #[command(flatten)]
    pub prompt: PromptArgs,
    /// Output file of {quad_id, prompt} lines
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EndpointArgs {
    /// URL the completion request is POSTed to [config: llm.base_url]
    #[arg(long)]
    pub base_url: Option<String>,
    /// Model name [config: llm.model]
    #[arg(long)]
    pub model: Option<String>,
    /// Sampling temperature [config: llm.temperature, default 0]
    #[arg(long)]
    pub temperature: Option<f64>,
    /// Maximum completion tokens [config: llm.max_tokens, default 256]
    #[arg(long)]
    pub max_tokens: Option<u32>,
    /// Environment variable holding the API key [config: llm.api_key_env]
    #[arg(long)]
    pub api_key_env: Option<String>,
    /// Attempts per request [config: llm.max_attempts, default 5]
    #[arg(long)]
    pub max_attempts: Option<u32>,
    /// Base of the exponential backoff in milliseconds [config: llm.backoff_base_ms, default 500]
    #[arg(long)]
    pub backoff_ms: Option<u64>,
    /// Concurrent requests [config: llm.max_in_flight, default 4]
    #[arg(long)]
    pub max_in_flight: Option<usize>,
    /// Request rate limit per second, 0 for none [config: llm.requests_per_second]
    #[arg(long)]
    pub rps: Option<f64>,
    /// Request/response log file [config: llm.log_path]
    #[arg(long, value_name = "FILE")]
    pub log: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LlmRunArgs {
    #[command(flatten)]
    pub prompt: PromptArgs,
    #[command(flatten)]
    pub endpoint: EndpointArgs,
    /// Output predictions file ({quad_id, label}, null for abstentions)
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Also write {quad_id, verdict, raw} with the raw completions
    #[arg(long, value_name = "FILE")]
    pub verdicts: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub corpus: CorpusArg,
    #[command(flatten)]
    pub store: StoreArg,
    #[command(flatten)]
    pub classifier: ClassifierArgs,
    #[command(flatten)]
    pub vote: VoteArgs,
    /// Values of k
    #[arg(long, value_delimiter = ',', default_value = "1,3,5,7,9")]
    pub ks: Vec<usize>,
    /// Field views
    #[arg(long, value_delimiter = ',', default_value = "h,ch,sch")]
    pub views: Vec<String>,
    /// Backends
    #[arg(long, value_delimiter = ',', default_value = "bm25,dense")]
    pub backends: Vec<String>,
    /// BM25 k1
    #[arg(long, default_value_t = 1.2)]
    pub k1: f64,
    /// BM25 b
    #[arg(long, default_value_t = 0.75)]
    pub b: f64,
    /// Directory for the per-cell reports and sweep.tsv [config: paths.output_dir]
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Errors are printed to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: Cli) -> Result<()> {
    let config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let ctx = Ctx { config };
    match cli.command {
        Command::ConvertSara(a) => ctx.convert_sara(a),
        Command::Validate(a) => ctx.validate(a),
        Command::Resplit(a) => ctx.resplit(a),
        Command::Quadgen(a) => ctx.quadgen(a),
        Command::Score(a) => ctx.score(a),
        Command::Calibrate(a) => ctx.calibrate(a),
        Command::Classify(a) => ctx.classify(a),
        Command::Retrieve(a) => ctx.retrieve(a),
        Command::Entail(a) => ctx.entail(a),
        Command::Eval(a) => ctx.eval(a),
        Command::PromptGen(a) => ctx.prompt_gen(a),
        Command::LlmRun(a) => ctx.llm_run(a),
        Command::Sweep(a) => ctx.sweep(a),
    }
}

fn parse<T: FromStr>(what: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Usage(format!("invalid {what} {value:?}")))
}

fn parse_backend(value: &str) -> Result<Backend> {
    match value {
        "bm25" => Ok(Backend::Bm25),
        "dense" => Ok(Backend::Dense),
        other => Err(Error::Usage(format!(
            "invalid backend {other:?} (bm25 or dense)"
        ))),
    }
}

fn flag(on: bool) -> Option<bool> {
    on.then_some(true)
}

struct Resolved {
    backend: Backend,
    k: usize,
    view: FieldView,
    params: Bm25Params,
    analyzer: Analyzer,
}

struct Ctx {
    config: RunConfig,
}

impl Ctx {
    fn corpus(&self, arg: &CorpusArg) -> Result<Corpus> {
        let path = merge_path(
            "corpus",
            arg.corpus.clone(),
            self.config.paths.corpus.clone(),
        )
        .ok_or_else(|| Error::Usage("--corpus is required".into()))?;
        let corpus = parse_corpus(&path)?;
        log::info!(
            "loaded {}: {} statutes, {} cases (train {}, dev {}, test {})",
            path.display(),
            corpus.statutes().len(),
            corpus.cases().len(),
            corpus.split_ids(Split::Train).len(),
            corpus.split_ids(Split::Dev).len(),
            corpus.split_ids(Split::Test).len(),
        );
        Ok(corpus)
    }

    fn store_path(&self, arg: &StoreArg) -> Option<PathBuf> {
        merge_path("store", arg.store.clone(), self.config.paths.store.clone())
    }

    fn store(&self, arg: &StoreArg) -> Result<Option<EmbeddingStore>> {
        self.store_path(arg)
            .map(|path| {
                let store = load_store(&path)?;
                log::info!(
                    "loaded {}: {} vectors of dim {} ({})",
                    path.display(),
                    store.len(),
                    store.dim(),
                    store.encoder_name()
                );
                Ok(store)
            })
            .transpose()
    }

    fn require_store(&self, arg: &StoreArg) -> Result<EmbeddingStore> {
        self.store(arg)?
            .ok_or_else(|| Error::Usage("--store is required".into()))
    }

    fn case_view(&self, flag: &Option<String>) -> Result<FieldView> {
        let v = merge(
            "case-view",
            flag.clone(),
            self.config.classifier.case_view.clone(),
        );
        v.map_or(Ok(FieldView::ContextHypothesis), |v| parse("case view", &v))
    }

    fn retrieval(&self, a: &RetrievalArgs) -> Result<Resolved> {
        let c = &self.config.retrieval;
        let backend = merge("backend", a.backend.clone(), c.backend.clone())
            .map_or(Ok(Backend::Bm25), |b| parse_backend(&b))?;
        let k = merge("k", a.k, c.k).unwrap_or(3);
        let view = merge("view", a.view.clone(), c.view.clone())
            .map_or(Ok(FieldView::StatuteContextHypothesis), |v| {
                parse("view", &v)
            })?;
        let k1 = merge("k1", a.k1, c.k1).unwrap_or(1.2);
        let b = merge("b", a.b, c.b).unwrap_or(0.75);
        let params = Bm25Params::new(k1, b)?;
        let mut analyzer = Analyzer::plain();
        if merge("stopwords", flag(a.stopwords), c.stopwords).unwrap_or(false) {
            analyzer = analyzer.with_english_stopwords();
        }
        if merge("stem", flag(a.stem), c.stem).unwrap_or(false) {
            analyzer = with_stemmer(analyzer);
        }
        Ok(Resolved {
            backend,
            k,
            view,
            params,
            analyzer,
        })
    }

    fn pipeline_config(&self, k: usize, a: &VoteArgs) -> Result<PipelineConfig> {
        let c = &self.config.retrieval;
        let mut pc = PipelineConfig::new(k)?;
        if let Some(t) = merge("tie-break", a.tie_break.clone(), c.tie_break.clone()) {
            pc.tie_break = parse::<TieBreak>("tie-break rule", &t)?;
        }
        pc.exclude_same_statute = merge(
            "exclude-same-statute",
            flag(a.exclude_same_statute),
            c.exclude_same_statute,
        )
        .unwrap_or(false);
        Ok(pc)
    }

    fn classifier<'s>(
        &self,
        a: &ClassifierArgs,
        store: Option<&'s EmbeddingStore>,
    ) -> Result<AnalogyClassifier<'s>> {
        let c = &self.config.classifier;
        let kind = merge("classifier", a.classifier.clone(), c.kind.clone())
            .unwrap_or_else(|| "offset".into());
        let method: ScoreMethod = parse("classifier", &kind)?;
        if method == ScoreMethod::External {
            let path = merge_path("predictions", a.predictions.clone(), c.predictions.clone())
                .ok_or_else(|| {
                    Error::Usage("--predictions is required for the external classifier".into())
                })?;
            let preds = import_external_predictions(&path)?;
            log::info!("loaded {} external predictions", preds.len());
            return Ok(AnalogyClassifier::External(preds));
        }
        let store = store.ok_or_else(|| {
            Error::Usage(format!("--store is required for the {kind} classifier"))
        })?;
        let path = merge_path(
            "threshold-model",
            a.threshold_model.clone(),
            c.threshold_model.clone(),
        )
        .ok_or_else(|| {
            Error::Usage(format!(
                "--threshold-model is required for the {kind} classifier"
            ))
        })?;
        let model = read_threshold_model(&path)?;
        if model.method != method {
            return Err(Error::Usage(format!(
                "threshold model {} was calibrated for {}, not {}",
                path.display(),
                model.method,
                method
            )));
        }
        Ok(match method {
            ScoreMethod::QuadrupleOffset => AnalogyClassifier::OffsetThreshold {
                store,
                model,
                case_view: self.case_view(&a.case_view)?,
            },
            _ => AnalogyClassifier::PairThreshold { store, model },
        })
    }

    fn convert_sara(&self, a: ConvertSaraArgs) -> Result<()> {
        let (corpus, summary) = sara::convert_sara(&a.sara_dir)?;
        write_corpus(&corpus, &a.out)?;
        log::info!(
            "wrote {}: {} statutes, {} cases, {} skipped without an entailment label",
            a.out.display(),
            summary.statutes,
            summary.cases,
            summary.skipped.len()
        );
        Ok(())
    }

    fn validate(&self, a: ValidateArgs) -> Result<()> {
        let corpus = match self.corpus(&a.corpus) {
            Ok(c) => c,
            Err(Error::Core(lexanalogy_core::Error::Invalid(violations))) => {
                for v in &violations {
                    println!("{v}");
                }
                return Err(Error::Core(lexanalogy_core::Error::Invalid(violations)));
            }
            Err(e) => return Err(e),
        };
        if let Some(store) = self.store(&a.store)? {
            let unresolved = store.unresolved_keys(&corpus);
            for key in &unresolved {
                println!("store key {key}: id does not resolve in the corpus");
            }
            if !unresolved.is_empty() {
                return Err(Error::record(
                    self.store_path(&a.store).unwrap_or_default(),
                    0,
                    format!("{} keys do not resolve in the corpus", unresolved.len()),
                ));
            }
        }
        println!("ok");
        Ok(())
    }

    fn resplit(&self, a: ResplitArgs) -> Result<()> {
        let corpus = self.corpus(&a.corpus)?;
        let seed = merge("seed", a.seed, self.config.seeds.resplit).unwrap_or(7);
        let moved = corpus.resplit_test_to_dev(a.n, seed)?;
        write_corpus(&moved, &a.out)?;
        log::info!(
            "moved {} test cases to dev (seed {seed}): train {}, dev {}, test {}",
            a.n,
            moved.split_ids(Split::Train).len(),
            moved.split_ids(Split::Dev).len(),
            moved.split_ids(Split::Test).len()
        );
        Ok(())
    }

    fn quadgen(&self, a: QuadgenArgs) -> Result<()> {
        let corpus = self.corpus(&a.corpus)?;
        let split: Split = parse("split", &a.split)?;
        let exclude = merge(
            "exclude-same-statute",
            flag(a.exclude_same_statute),
            self.config.quadgen.exclude_same_statute,
        )
        .unwrap_or(false);
        let ds = generate(
            &corpus,
            split,
            GenerateOptions {
                exclude_same_statute: exclude,
            },
        )?;
        write_quads(&ds.quads, &a.out)?;
        if let Some(path) = &a.expanded {
            write_expanded(&ds.quads, &corpus, path)?;
        }
        let s = ds.stats();
        log::info!(
            "{split}: {} quadruples ({} analogy, {} not analogy, {} same-statute) -> {}",
            s.total,
            s.positives,
            s.negatives,
            s.same_statute,
            a.out.display()
        );
        Ok(())
    }

    fn score(&self, a: ScoreArgs) -> Result<()> {
        let store = self.require_store(&a.store)?;
        let quads = read_quads(&a.quads)?;
        let method: ScoreMethod = parse("method", &a.method)?;
        let case_view = self.case_view(&a.case_view)?;
        let scores = quads
            .iter()
            .map(|q| match method {
                ScoreMethod::QuadrupleOffset => score_quadruple_offset(&store, q.refs(), case_view),
                ScoreMethod::PairConcat => score_pair_concat(&store, q.refs()),
                ScoreMethod::External => Err(lexanalogy_core::Error::UnknownLabel(
                    "external scores are imported, not computed".into(),
                )),
            })
            .collect::<std::result::Result<Vec<AnalogyScore>, _>>()?;
        write_scores(&scores, &a.out)?;
        log::info!("scored {} quadruples with {method}", scores.len());
        Ok(())
    }

    fn calibrate(&self, a: CalibrateArgs) -> Result<()> {
        let scores = read_scores(&a.scores)?;
        let gold = gold_by_id(&read_quads(&a.quads)?);
        let method = scores
            .first()
            .map(|s| s.method)
            .ok_or(lexanalogy_core::Error::EmptyInput)?;
        let mut pairs = Vec::with_capacity(scores.len());
        for s in &scores {
            if s.method != method {
                return Err(Error::Usage(format!(
                    "{} mixes methods {method} and {}",
                    a.scores.display(),
                    s.method
                )));
            }
            let label = gold
                .get(s.quad_id.as_str())
                .ok_or_else(|| lexanalogy_core::Error::MissingPrediction(s.quad_id.clone()))?;
            pairs.push((s.value, *label));
        }
        let model = calibrate_threshold(method, &pairs)?;
        write_threshold_model(&model, &a.out)?;
        log::info!(
            "{method}: threshold {} with dev accuracy {} over {} quadruples",
            model.threshold,
            model.dev_accuracy,
            pairs.len()
        );
        Ok(())
    }

    fn classify(&self, a: ClassifyArgs) -> Result<()> {
        let store = self.store(&a.store)?;
        let classifier = self.classifier(&a.classifier, store.as_ref())?;
        let quads = read_quads(&a.quads)?;
        let mut rows = Vec::with_capacity(quads.len());
        for q in &quads {
            rows.push((q.quad_id(), classifier.verdict(q.refs())?));
        }
        write_predictions(rows.iter().map(|(id, l)| (id.as_str(), *l)), &a.out)?;
        let answered: Vec<(AnalogyLabel, AnalogyLabel)> = rows
            .iter()
            .zip(&quads)
            .filter_map(|((_, l), q)| l.map(|l| (l, q.label)))
            .collect();
        if let Ok(r) = accuracy(answered) {
            log::info!(
                "accuracy against quadruple labels: {} ({}/{})",
                r.accuracy,
                r.correct,
                r.n
            );
        }
        Ok(())
    }

    fn retriever<'s>(
        &self,
        r: &Resolved,
        backend: Backend,
        view: FieldView,
        pool: &PrototypePool,
        corpus: &Corpus,
        store: Option<&'s EmbeddingStore>,
    ) -> Result<Retriever<'s>> {
        Ok(match backend {
            Backend::Bm25 => {
                Retriever::bm25(pool.pairs(), corpus, view, r.analyzer.clone(), r.params)?
            }
            Backend::Dense => {
                let store = store.ok_or_else(|| {
                    Error::Usage("--store is required for the dense backend".into())
                })?;
                Retriever::dense(pool.pairs(), store, view)?
            }
        })
    }

    fn retrieve(&self, a: RetrieveArgs) -> Result<()> {
        #[derive(Serialize)]
        struct Row<'a> {
            query_case_id: &'a str,
            rank: usize,
            statute_id: &'a str,
            case_id: &'a str,
            score: f64,
        }
        let corpus = self.corpus(&a.corpus)?;
        let store = self.store(&a.store)?;
        let r = self.retrieval(&a.retrieval)?;
        let pool = PrototypePool::from_split(&corpus, parse("pool split", &a.pool_split)?)?;
        let retriever = self.retriever(&r, r.backend, r.view, &pool, &corpus, store.as_ref())?;
        let split: Split = parse("split", &a.split)?;
        let mut results = Vec::new();
        for id in corpus.split_ids(split) {
            let query = QueryPair::from_corpus(&corpus, id)?;
            let hits = retriever
                .retrieve_where(&query, r.k, |p| *p != query.pair)?
                .hits;
            results.push((id.clone(), hits));
        }
        write_jsonl(
            &a.out,
            results.iter().flat_map(|(id, hits)| {
                hits.iter().enumerate().map(move |(i, h)| Row {
                    query_case_id: id,
                    rank: i + 1,
                    statute_id: &h.pair.statute_id,
                    case_id: &h.pair.case_id,
                    score: h.score,
                })
            }),
        )?;
        log::info!(
            "retrieved top {} of {} prototypes for {} queries ({} / {})",
            r.k,
            pool.len(),
            results.len(),
            r.backend,
            r.view
        );
        Ok(())
    }

    fn entail(&self, a: EntailArgs) -> Result<()> {
        let r = self.retrieval(&a.retrieval)?;
        let pc = self.pipeline_config(r.k, &a.vote)?;
        let corpus = self.corpus(&a.corpus)?;
        let store = self.store(&a.store)?;
        let classifier = self.classifier(&a.classifier, store.as_ref())?;
        let pool = PrototypePool::from_split(&corpus, Split::Train)?;
        let retriever = self.retriever(&r, r.backend, r.view, &pool, &corpus, store.as_ref())?;
        let split: Split = parse("split", &a.vote.split)?;
        let pipeline = Pipeline {
            config: pc,
            retriever: &retriever,
            pool: &pool,
            classifier: &classifier,
        };
        let outcome = pipeline.run_all(&corpus, split)?;
        let info = RunInfo {
            k: r.k,
            backend: r.backend,
            view: r.view,
        };
        write_entailment(&outcome.predictions, &outcome.golds, &info, &a.out)?;
        log::info!(
            "{split}: accuracy {} ({}/{}) with {} k={} view={}",
            outcome.report.accuracy,
            outcome.report.correct,
            outcome.report.n,
            r.backend,
            r.k,
            r.view
        );
        if let Some(path) = &a.report {
            let report = Report {
                accuracy: Some(outcome.report),
                baseline: Some(majority_baseline(&outcome.golds)?),
                ..Report::default()
            }
            .with_meta("backend", r.backend)
            .with_meta("k", r.k)
            .with_meta("view", r.view)
            .with_meta("split", split);
            write_report(&report, path)?;
        }
        Ok(())
    }

    fn eval(&self, a: EvalArgs) -> Result<()> {
        let report = match (&a.entail, &a.analogy) {
            (Some(path), _) => {
                let pairs = read_entail_dump(path)?;
                self.eval_pairs(&a, &pairs)?
                    .with_meta("input", path.display())
                    .with_meta("kind", "entailment")
            }
            (None, Some(path)) => {
                let quads = read_quads(a.quads.as_ref().expect("clap requires --quads"))?;
                let preds = import_external_predictions(path)?;
                let mut pairs = Vec::with_capacity(quads.len());
                let mut abstained = 0usize;
                for q in &quads {
                    let id = q.quad_id();
                    match preds.get(&id) {
                        Some(Some(l)) => pairs.push((l, q.label)),
                        Some(None) => abstained += 1,
                        None => return Err(lexanalogy_core::Error::MissingPrediction(id).into()),
                    }
                }
                self.eval_pairs(&a, &pairs)?
                    .with_meta("input", path.display())
                    .with_meta("kind", "analogy")
                    .with_meta("abstained", abstained)
            }
            (None, None) => return Err(Error::Usage("--entail or --analogy is required".into())),
        };
        match &a.out {
            Some(path) => write_report(&report, path)?,
            None => print!("{}", report.render()),
        }
        if let Some(acc) = &report.accuracy {
            log::info!("accuracy: {} ({}/{})", acc.accuracy, acc.correct, acc.n);
        }
        Ok(())
    }

    /// Accuracy, and the baseline and sampled sections when requested.
    /// The baseline is computed over the answered items.
    fn eval_pairs<L: lexanalogy_core::BinaryLabel>(
        &self,
        a: &EvalArgs,
        pairs: &[(L, L)],
    ) -> Result<Report> {
        let mut report = Report {
            accuracy: Some(accuracy(pairs.iter().copied())?),
            ..Report::default()
        };
        if a.baseline {
            let golds: Vec<L> = pairs.iter().map(|p| p.1).collect();
            report.baseline = Some(majority_baseline(&golds)?);
        }
        if let Some(spec) = &a.sampled {
            report.sampled = Some(self.sampled(pairs, spec, a.seed)?);
        }
        Ok(report)
    }

    fn sampled<L: lexanalogy_core::BinaryLabel>(
        &self,
        pairs: &[(L, L)],
        spec: &str,
        seed: Option<u64>,
    ) -> Result<lexanalogy_core::eval::SampledEvalReport> {
        let (m, n) = spec
            .split_once(['x', 'X'])
            .and_then(|(m, n)| Some((m.parse().ok()?, n.parse().ok()?)))
            .ok_or_else(|| Error::Usage(format!("--sampled expects SETSxSIZE, got {spec:?}")))?;
        let seed = merge("seed", seed, self.config.seeds.eval).unwrap_or(0);
        Ok(sampled_accuracy(pairs, m, n, seed)?)
    }

    fn prompts(&self, a: &PromptArgs) -> Result<(Vec<Quadruple>, Vec<String>)> {
        let corpus = self.corpus(&a.corpus)?;
        let mut quads = read_quads(&a.quads)?;
        if let Some(limit) = a.limit {
            quads.truncate(limit);
        }
        let spec = match a.kind.as_str() {
            "zero" => PromptSpec::zero_shot(),
            "few" => PromptSpec::few_shot(self.few_shot_exemplars(a)?)?,
            "cot" => PromptSpec::hand_crafted_cot(match &a.cot_exemplars {
                Some(path) => cot::load(path)?,
                None => cot::bundled(),
            })?,
            other => {
                return Err(Error::Usage(format!(
                    "invalid prompt kind {other:?} (zero, few or cot)"
                )))
            }
        }
        .with_zero_cot(a.zero_cot);
        let prompts = quads
            .iter()
            .map(|q| build_prompt(&spec, q.refs(), &corpus))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Ok((quads, prompts))
    }

    fn few_shot_exemplars(&self, a: &PromptArgs) -> Result<Vec<Quadruple>> {
        let path = a
            .exemplars
            .as_ref()
            .ok_or_else(|| Error::Usage("--exemplars is required for few-shot prompts".into()))?;
        let pool = read_quads(path)?;
        if !a.exemplar_ids.is_empty() {
            return a
                .exemplar_ids
                .iter()
                .map(|id| {
                    pool.iter()
                        .find(|q| q.quad_id() == *id)
                        .cloned()
                        .ok_or_else(|| {
                            Error::Usage(format!("exemplar {id:?} is not in {}", path.display()))
                        })
                })
                .collect();
        }
        let seed = merge("seed", a.seed, self.config.seeds.exemplars).unwrap_or(0);
        let picks = sample_indices(pool.len(), a.shots, seed)?;
        Ok(picks.into_iter().map(|i| pool[i].clone()).collect())
    }

    fn prompt_gen(&self, a: PromptGenArgs) -> Result<()> {
        #[derive(Serialize)]
        struct Row<'a> {
            quad_id: String,
            prompt: &'a str,
        }
        let (quads, prompts) = self.prompts(&a.prompt)?;
        write_jsonl(
            &a.out,
            quads.iter().zip(&prompts).map(|(q, p)| Row {
                quad_id: q.quad_id(),
                prompt: p,
            }),
        )?;
        log::info!("rendered {} prompts -> {}", prompts.len(), a.out.display());
        Ok(())
    }

    fn endpoint(&self, a: &EndpointArgs) -> LlmEndpointConfig {
        let c = self.config.llm.clone().unwrap_or_default();
        let given = self.config.llm.is_some();
        let pick = |name: &str, f: Option<String>, v: String| {
            merge(name, f, given.then_some(v.clone())).unwrap_or(v)
        };
        LlmEndpointConfig {
            base_url: pick("base-url", a.base_url.clone(), c.base_url.clone()),
            model: pick("model", a.model.clone(), c.model.clone()),
            api_key_env: pick("api-key-env", a.api_key_env.clone(), c.api_key_env.clone()),
            temperature: merge("temperature", a.temperature, given.then_some(c.temperature))
                .unwrap_or(c.temperature),
            max_tokens: merge("max-tokens", a.max_tokens, given.then_some(c.max_tokens))
                .unwrap_or(c.max_tokens),
            max_attempts: merge(
                "max-attempts",
                a.max_attempts,
                given.then_some(c.max_attempts),
            )
            .unwrap_or(c.max_attempts),
            backoff_base_ms: merge(
                "backoff-ms",
                a.backoff_ms,
                given.then_some(c.backoff_base_ms),
            )
            .unwrap_or(c.backoff_base_ms),
            max_in_flight: merge(
                "max-in-flight",
                a.max_in_flight,
                given.then_some(c.max_in_flight),
            )
            .unwrap_or(c.max_in_flight),
            requests_per_second: merge("rps", a.rps, given.then_some(c.requests_per_second))
                .unwrap_or(c.requests_per_second),
            log_path: merge_path("log", a.log.clone(), c.log_path.clone()),
            timeout_secs: c.timeout_secs,
        }
    }

    fn llm_run(&self, a: LlmRunArgs) -> Result<()> {
        #[derive(Serialize)]
        struct VerdictRow<'a> {
            quad_id: &'a str,
            verdict: &'static str,
            raw: &'a str,
        }
        let endpoint = self.endpoint(&a.endpoint);
        // Key and config problems surface before any prompt is rendered or sent.
        let client = HttpCompletion::new(endpoint.clone())?;
        let (quads, prompts) = self.prompts(&a.prompt)?;
        log::info!(
            "sending {} prompts to {} ({})",
            prompts.len(),
            endpoint.base_url,
            endpoint.model
        );
        let limiter = RateLimiter::new(endpoint.requests_per_second);
        let client: &dyn Completion = &client;
        let results = complete_all(client, &prompts, endpoint.max_in_flight, &limiter);

        let mut ids = Vec::new();
        let mut parsed = Vec::new();
        let mut first_error = None;
        let mut failed = 0usize;
        for (q, r) in quads.iter().zip(results) {
            match r {
                Ok(raw) => {
                    ids.push(q.quad_id());
                    parsed.push(parse_verdict(&raw));
                }
                Err(e) => {
                    failed += 1;
                    log::error!("{}: {e}", q.quad_id());
                    first_error.get_or_insert(e);
                }
            }
        }
        write_predictions(
            ids.iter()
                .zip(&parsed)
                .map(|(id, p)| (id.as_str(), p.verdict.label())),
            &a.out,
        )?;
        if let Some(path) = &a.verdicts {
            write_jsonl(
                path,
                ids.iter().zip(&parsed).map(|(id, p)| VerdictRow {
                    quad_id: id,
                    verdict: match p.verdict {
                        Verdict::Yes => "yes",
                        Verdict::No => "no",
                        Verdict::Abstain => "abstain",
                    },
                    raw: &p.raw,
                }),
            )?;
        }
        let abstained = parsed
            .iter()
            .filter(|p| p.verdict == Verdict::Abstain)
            .count();
        log::info!(
            "{} verdicts ({} abstentions), {} failed requests",
            parsed.len(),
            abstained,
            failed
        );
        match first_error {
            Some(e) => Err(e.into()),
            None => Ok(()),
        }
    }

    fn sweep(&self, a: SweepArgs) -> Result<()> {
        let corpus = self.corpus(&a.corpus)?;
        let store = self.store(&a.store)?;
        let classifier = self.classifier(&a.classifier, store.as_ref())?;
        let pool = PrototypePool::from_split(&corpus, Split::Train)?;
        let split: Split = parse("split", &a.vote.split)?;
        let out_dir = merge_path(
            "out-dir",
            a.out_dir.clone(),
            self.config.paths.output_dir.clone(),
        )
        .ok_or_else(|| Error::Usage("--out-dir is required".into()))?;
        let configs =
            a.ks.iter()
                .map(|&k| self.pipeline_config(k, &a.vote))
                .collect::<Result<Vec<_>>>()?;
        let resolved = Resolved {
            backend: Backend::Bm25,
            k: 1,
            view: FieldView::StatuteContextHypothesis,
            params: Bm25Params::new(a.k1, a.b)?,
            analyzer: Analyzer::plain(),
        };
        let mut table = String::from("backend\tview\tk\taccuracy\tcorrect\tn\n");
        for backend in &a.backends {
            let backend = parse_backend(backend)?;
            for view in &a.views {
                let view: FieldView = parse("view", view)?;
                let retriever =
                    self.retriever(&resolved, backend, view, &pool, &corpus, store.as_ref())?;
                for pc in &configs {
                    let pipeline = Pipeline {
                        config: *pc,
                        retriever: &retriever,
                        pool: &pool,
                        classifier: &classifier,
                    };
                    let outcome = pipeline.run_all(&corpus, split)?;
                    let k = pc.k();
                    let acc = &outcome.report;
                    let _ = writeln!(
                        table,
                        "{backend}\t{view}\t{k}\t{}\t{}\t{}",
                        acc.accuracy, acc.correct, acc.n
                    );
                    log::info!("{backend} {view} k={k}: {}", acc.accuracy);
                    let report = Report {
                        accuracy: Some(outcome.report),
                        baseline: Some(majority_baseline(&outcome.golds)?),
                        ..Report::default()
                    }
                    .with_meta("backend", backend)
                    .with_meta("k", k)
                    .with_meta("view", view)
                    .with_meta("split", split);
                    write_report(&report, &out_dir.join(format!("{backend}_{view}_k{k}.txt")))?;
                }
            }
        }
        let path = out_dir.join("sweep.tsv");
        std::fs::write(&path, table).map_err(|e| Error::io(&path, e))
    }
}

fn with_stemmer(analyzer: Analyzer) -> Analyzer {
    let stemmer = rust_stemmers::Stemmer::create(rust_stemmers::Algorithm::English);
    analyzer.with_stemmer(move |w| stemmer.stem(w).into_owned())
}

fn gold_by_id(quads: &[Quadruple]) -> std::collections::HashMap<String, AnalogyLabel> {
    quads.iter().map(|q| (q.quad_id(), q.label)).collect()
}

/// `(predicted, gold)` pairs from an `entail` prediction dump.
fn read_entail_dump(path: &Path) -> Result<Vec<(EntailmentLabel, EntailmentLabel)>> {
    #[derive(Deserialize)]
    struct Row {
        predicted: String,
        gold: String,
    }
    numbered_lines(open(path)?, path)
        .map(|item| {
            let (line, text) = item?;
            let row: Row = serde_json::from_str(&text)
                .map_err(|e| Error::record(path, line, format!("malformed prediction: {e}")))?;
            let label = |s: &str| {
                s.parse::<EntailmentLabel>()
                    .map_err(|source| Error::AtLine {
                        path: path.into(),
                        line,
                        source,
                    })
            };
            Ok((label(&row.predicted)?, label(&row.gold)?))
        })
        .collect()
}
