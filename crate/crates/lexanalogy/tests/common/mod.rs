#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lexanalogy::core::corpus::{Case, Corpus, CorpusBuilder, Split, Statute};
use lexanalogy::core::retrieval::{tokenize, FieldView};
use lexanalogy::core::vector::{EmbeddingKey, EmbeddingStore};
use lexanalogy::core::EntailmentLabel;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_lexanalogy")
}

pub fn run(args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests")
        .join(name)
}

const NAMES: &[&str] = &[
    "Alice", "Bob", "Charlie", "Dana", "Erin", "Frank", "Gina", "Hank",
];
const FACTS: &[&str] = &[
    "{a} paid {b} ${n} for work done in {y}.",
    "{a} and {b} have been married since {y}.",
    "{b} has no income for {y}.",
    "{a} paid ${n} into a retirement fund for {b} in {y}.",
    "{b} lived with {a} for all of {y}.",
    "{a} received ${n} in wages in {y}.",
    "{a} and {b} filed a joint return for {y}.",
    "{b} was a nonresident alien in {y}.",
];
const STATUTES: &[(&str, &str)] = &[
    ("s63_c", "Section 63. Taxable income defined (c) Standard deduction. The basic standard deduction is doubled for a joint return."),
    ("s151_b", "Section 151. Personal exemptions (b) Taxpayer and spouse. An exemption for the spouse if no joint return is made and the spouse has no gross income."),
    ("s152_d", "Section 152. Dependent defined (d) Qualifying relative. An individual with gross income below the exemption amount who receives over half of their support from the taxpayer."),
    ("s3306_a_3", "Section 3306. Definitions (a) Employer (3) Domestic service. A person who paid cash wages of $1,000 or more for domestic service in a calendar quarter."),
    ("s3306_b", "Section 3306. Definitions (b) Wages. All remuneration for employment, including benefits paid in any medium other than cash."),
    ("s3306_b_2_C", "Section 3306. Definitions (b) Wages (2) Payments under a plan established by an employer on account of (C) death are excluded."),
    ("s6013_a", "Section 6013. Joint returns (a) A husband and wife may make a single return jointly unless either is a nonresident alien."),
    ("s7703_a", "Section 7703. Marital status (a) An individual legally separated under a decree of divorce is not considered married."),
];

fn fill(rng: &mut ChaCha8Rng, template: &str) -> String {
    let a = NAMES[rng.random_range(0..NAMES.len())];
    let b = NAMES[rng.random_range(0..NAMES.len())];
    template
        .replace("{a}", a)
        .replace("{b}", b)
        .replace("{n}", &rng.random_range(100..90_000).to_string())
        .replace("{y}", &rng.random_range(2012..2020).to_string())
}

struct CaseDraft {
    sid: &'static str,
    context: String,
    hypothesis: String,
    gold: EntailmentLabel,
}

fn draft(rng: &mut ChaCha8Rng) -> CaseDraft {
    let (sid, _) = STATUTES[rng.random_range(0..STATUTES.len())];
    let facts = rng.random_range(0..4);
    let context: Vec<String> = (0..facts)
        .map(|_| {
            let template = FACTS[rng.random_range(0..FACTS.len())];
            fill(rng, template)
        })
        .collect();
    let label = sid
        .trim_start_matches('s')
        .replacen('_', "(", 1)
        .replace('_', ")(");
    let label = if label.contains('(') {
        format!("{label})")
    } else {
        label
    };
    let hypothesis = fill(
        rng,
        &format!("Section {label} applies to {{a}} for the year {{y}}."),
    );
    let gold = if rng.random_bool(0.5) {
        EntailmentLabel::Entailment
    } else {
        EntailmentLabel::Contradiction
    };
    CaseDraft {
        sid,
        context: context.join(" "),
        hypothesis,
        gold,
    }
}

/// Corpus over the eight fixture statutes with random tax-flavoured cases.
pub fn synthetic(sizes: [usize; 3], seed: u64) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = CorpusBuilder::new();
    for (id, text) in STATUTES {
        b.add_statute(Statute {
            id: (*id).into(),
            section_label: id.trim_start_matches('s').into(),
            text: (*text).into(),
        })
        .unwrap();
    }
    let mut k = 0;
    for (split, count) in Split::ALL.into_iter().zip(sizes) {
        for _ in 0..count {
            let d = draft(&mut rng);
            b.add_case(
                Case {
                    id: format!("{}_{k:03}", d.sid),
                    statute_id: d.sid.into(),
                    context: d.context,
                    hypothesis: d.hypothesis,
                    gold: d.gold,
                },
                Some(split),
            )
            .unwrap();
            k += 1;
        }
    }
    b.finish().unwrap()
}

/// Writes a SARA-shaped tree (statutes/, cases/*.pl, splits/) with the given
/// split sizes plus `numeric` cases that carry no entailment label.
pub fn write_sara_tree(root: &Path, sizes: [usize; 3], numeric: usize, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for dir in ["statutes", "cases", "splits"] {
        std::fs::create_dir_all(root.join(dir)).unwrap();
    }
    for (id, text) in STATUTES {
        std::fs::write(root.join("statutes").join(id), format!("{text}\n")).unwrap();
    }
    let mut k = 0;
    for (split, count) in Split::ALL.into_iter().zip(sizes) {
        let mut listing = String::new();
        for i in 0..count + if split == Split::Test { numeric } else { 0 } {
            let d = draft(&mut rng);
            let id = format!("{}_{k:03}", d.sid);
            let mut src = String::from("% Text\n");
            if !d.context.is_empty() {
                let _ = writeln!(src, "% {}", d.context);
            }
            src.push_str("\n% Question\n");
            if i < count {
                let token = match d.gold {
                    EntailmentLabel::Entailment => "Entailment",
                    EntailmentLabel::Contradiction => "Contradiction",
                };
                let _ = writeln!(src, "% {} {token}", d.hypothesis);
            } else {
                let _ = writeln!(
                    src,
                    "% How much tax does Alice owe in 2017? ${}",
                    rng.random_range(0..9999)
                );
            }
            src.push_str("% Facts\n:- discontiguous s151/3.\n");
            std::fs::write(root.join("cases").join(format!("{id}.pl")), src).unwrap();
            let _ = writeln!(listing, "{id}");
            k += 1;
        }
        std::fs::write(root.join("splits").join(split.as_str()), listing).unwrap();
    }
}

pub const BOW_DIM: usize = 32;

/// Deterministic bag-of-words embedding: each token adds +-1 to a hashed
/// coordinate, plus a constant bias coordinate so no text maps to zero.
pub fn bow(text: &str) -> Vec<f64> {
    let mut v = vec![0.0; BOW_DIM];
    v[0] = 1.0;
    for t in tokenize(text) {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in t.bytes() {
            h = (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3);
        }
        let i = 1 + (h % (BOW_DIM as u64 - 1)) as usize;
        v[i] += if h >> 63 == 1 { 1.0 } else { -1.0 };
    }
    v
}

/// Every key scheme for every statute and case of `corpus`.
pub fn bow_store(corpus: &Corpus) -> EmbeddingStore {
    let mut store = EmbeddingStore::new(BOW_DIM, "hashed-bow-32").unwrap();
    for s in corpus.statutes() {
        store
            .insert(EmbeddingKey::Statute(s.id.clone()), bow(&s.text))
            .unwrap();
    }
    for c in corpus.cases() {
        let statute = &corpus.statute(&c.statute_id).unwrap().text;
        for view in FieldView::ALL {
            let text = view.render(statute, &c.context, &c.hypothesis);
            store
                .insert(EmbeddingKey::case(&c.id, view), bow(&text))
                .unwrap();
        }
        let case_text = if c.context.is_empty() {
            c.hypothesis.clone()
        } else {
            format!("{} {}", c.context, c.hypothesis)
        };
        store
            .insert(
                EmbeddingKey::pair(&c.statute_id, &c.id),
                bow(&format!("{statute} {case_text}")),
            )
            .unwrap();
    }
    store
}

pub const GOLDEN_DIR: &str = "golden";

/// Renders every golden prompt from the fixture corpus: zero-shot with and
/// without the step-by-step trigger, three-shot and hand-crafted CoT.
pub fn golden_prompts() -> Vec<(&'static str, String)> {
    use lexanalogy::core::prompt::{build_prompt, PromptSpec};
    use lexanalogy::core::quadgen::{generate, GenerateOptions, PairRef, QuadRef};

    let corpus =
        lexanalogy::formats::corpus::parse_corpus(&fixture("fixtures/prompt_corpus.jsonl"))
            .unwrap();
    let wages = PairRef::new("s3306_b_2_C", "s3306_b_2_C_pos");
    let employer = PairRef::new("s3306_a_3", "s3306_a_3_pos");
    let quad = QuadRef::new(&wages, &employer);

    let train = generate(&corpus, Split::Train, GenerateOptions::default())
        .unwrap()
        .quads;
    let shots = [
        "s3306_a_3:s3306_a_3_neg::s7703_a:s7703_a_neg",
        "s3306_b_2_C:s3306_b_2_C_neg::s7703_a:s7703_a_pos",
        "s3306_a_3:s3306_a_3_pos::s7703_a:s7703_a_pos",
    ]
    .map(|id| {
        train
            .iter()
            .find(|q| q.quad_id() == id)
            .expect("exemplar quad")
            .clone()
    });

    let render = |spec: PromptSpec| build_prompt(&spec, quad, &corpus).unwrap();
    vec![
        ("zero_shot.txt", render(PromptSpec::zero_shot())),
        (
            "zero_shot_step.txt",
            render(PromptSpec::zero_shot().with_zero_cot(true)),
        ),
        (
            "few_shot_3.txt",
            render(PromptSpec::few_shot(shots.to_vec()).unwrap()),
        ),
        (
            "cot.txt",
            render(PromptSpec::hand_crafted_cot(lexanalogy::cot::bundled()).unwrap()),
        ),
    ]
}

/// Completions in the three styles the verdict parser has to handle, with
/// the expected verdict.
pub fn sample_completions() -> [(&'static str, lexanalogy::core::prompt::Verdict); 3] {
    use lexanalogy::core::prompt::Verdict;
    [
        (
            "Statute 1 excludes payments made on account of death from wages, and Case 1 asks about a life insurance payment, so the hypothesis holds. Statute 2 makes a person an employer after paying $1,000 in cash for domestic service, and Case 2 shows Bob paying $4200 for such service, so that hypothesis holds too. Therefore, the answer is yes, Statute 1 is to Case 1 as Statute 2 is to Case 2.",
            Verdict::Yes,
        ),
        ("Yes, Statute 1 is to Case 1 as Statute 2 is to Case 2.", Verdict::Yes),
        (
            "No, Statute 1 does not directly apply to Case 1 in the way Statute 2 applies to Case 2, since the payments differ in kind.",
            Verdict::No,
        ),
    ]
}

/// Compares `actual` with the golden file, or rewrites it when BLESS=1.
pub fn check_golden(dir: &str, name: &str, actual: &str) -> Result<(), String> {
    let path = fixture(dir).join(name);
    if std::env::var_os("BLESS").is_some_and(|v| v == "1") {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, actual).unwrap();
        return Ok(());
    }
    let expected = std::fs::read_to_string(&path)
        .map_err(|e| format!("{}: {e} (run with BLESS=1 to create)", path.display()))?;
    if expected == actual {
        Ok(())
    } else {
        let line = expected
            .lines()
            .zip(actual.lines())
            .position(|(a, b)| a != b)
            .map_or_else(|| "length".to_string(), |i| format!("line {}", i + 1));
        Err(format!("{} differs at {line}", path.display()))
    }
}

/// Minimal HTTP/1.1 server answering each connection with the next scripted
/// `(status, body)`; records every request body it receives.
pub struct StubServer {
    pub url: String,
    pub requests: std::sync::Arc<std::sync::Mutex<Vec<String>>>,
    handle: Option<std::thread::JoinHandle<()>>,
}

impl StubServer {
    pub fn start(script: Vec<(u16, String)>) -> StubServer {
        use std::io::{BufRead, BufReader, Read, Write};
        let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/v1/completions", listener.local_addr().unwrap());
        let requests = std::sync::Arc::new(std::sync::Mutex::new(Vec::new()));
        let seen = requests.clone();
        let handle = std::thread::spawn(move || {
            for (status, body) in script {
                let (stream, _) = listener.accept().unwrap();
                let mut reader = BufReader::new(stream);
                let mut length = 0;
                loop {
                    let mut line = String::new();
                    reader.read_line(&mut line).unwrap();
                    let line = line.trim_end();
                    if line.is_empty() {
                        break;
                    }
                    if let Some((name, value)) = line.split_once(':') {
                        if name.eq_ignore_ascii_case("content-length") {
                            length = value.trim().parse().unwrap();
                        }
                    }
                }
                let mut request = vec![0; length];
                reader.read_exact(&mut request).unwrap();
                seen.lock()
                    .unwrap()
                    .push(String::from_utf8(request).unwrap());
                let mut stream = reader.into_inner();
                write!(
                    stream,
                    "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                    body.len()
                )
                .unwrap();
                stream.flush().unwrap();
            }
        });
        StubServer {
            url,
            requests,
            handle: Some(handle),
        }
    }

    /// Waits for the script to be used up.
    pub fn join(mut self) -> Vec<String> {
        self.handle.take().unwrap().join().unwrap();
        self.requests.lock().unwrap().clone()
    }
}

pub fn completion_body(text: &str) -> String {
    serde_json::json!({"choices": [{"text": text}]}).to_string()
}

/// Corpus and matching bag-of-words store written under `dir`.
pub struct Workspace {
    pub dir: tempfile::TempDir,
    pub corpus: PathBuf,
    pub store: PathBuf,
}

impl Workspace {
    pub fn new(sizes: [usize; 3], seed: u64) -> Workspace {
        let dir = tempfile::tempdir().unwrap();
        let corpus = synthetic(sizes, seed);
        let corpus_path = dir.path().join("corpus.jsonl");
        let store_path = dir.path().join("store.jsonl");
        lexanalogy::formats::corpus::write_corpus(&corpus, &corpus_path).unwrap();
        lexanalogy::formats::store::save_store(&bow_store(&corpus), &store_path).unwrap();
        Workspace {
            dir,
            corpus: corpus_path,
            store: store_path,
        }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    pub fn arg(&self, name: &str) -> String {
        self.path(name).display().to_string()
    }

    /// Runs the binary with `{corpus}`, `{store}` and `{dir}` substituted.
    pub fn run(&self, args: &[&str]) -> Output {
        let owned: Vec<String> = args
            .iter()
            .map(|a| {
                a.replace("{corpus}", &self.corpus.display().to_string())
                    .replace("{store}", &self.store.display().to_string())
                    .replace("{dir}", &self.dir.path().display().to_string())
            })
            .collect();
        let refs: Vec<&str> = owned.iter().map(String::as_str).collect();
        run(&refs)
    }

    /// Like [`Workspace::run`] but panics with stderr on a non-zero exit.
    pub fn ok(&self, args: &[&str]) -> Output {
        let out = self.run(args);
        assert!(
            out.status.success(),
            "{args:?} exited {:?}: {}",
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        );
        out
    }

    pub fn read(&self, name: &str) -> String {
        std::fs::read_to_string(self.path(name)).unwrap()
    }
}
