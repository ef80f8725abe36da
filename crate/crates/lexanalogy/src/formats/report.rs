//! Evaluation report: flat `key=value` lines. Lines starting with `#` are
//! comments. Floats are written in shortest round-trip form so a report
//! re-parses to the same values.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use lexanalogy_core::eval::{EvalReport, SampledEvalReport};
use lexanalogy_core::sampling::PRNG_NAME;

use crate::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    /// Free-form run description, written under `meta.`.
    pub meta: BTreeMap<String, String>,
    pub accuracy: Option<EvalReport>,
    pub baseline: Option<EvalReport>,
    pub sampled: Option<SampledEvalReport>,
}

impl Report {
    pub fn with_meta(mut self, key: &str, value: impl ToString) -> Self {
        self.meta.insert(key.to_string(), value.to_string());
        self
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str("# lexanalogy evaluation report\n");
        if self.sampled.is_some() {
            out.push_str("# sampled.std is the population standard deviation over the sets\n");
        }
        let _ = writeln!(out, "format_version={FORMAT_VERSION}");
        for (k, v) in &self.meta {
            let _ = writeln!(out, "meta.{k}={}", escape(v));
        }
        if let Some(r) = &self.accuracy {
            render_eval(&mut out, "accuracy", r);
        }
        if let Some(r) = &self.baseline {
            render_eval(&mut out, "baseline", r);
        }
        if let Some(s) = &self.sampled {
            let _ = writeln!(out, "sampled.prng={PRNG_NAME}");
            out.push_str("sampled.seed_derivation=seed+i\n");
            out.push_str("sampled.std_kind=population\n");
            let _ = writeln!(out, "sampled.sets={}", s.sets);
            let _ = writeln!(out, "sampled.set_size={}", s.set_size);
            let _ = writeln!(out, "sampled.seed={}", s.seed);
            let per_set: Vec<String> = s.per_set.iter().map(f64::to_string).collect();
            let _ = writeln!(out, "sampled.per_set={}", per_set.join(","));
            let _ = writeln!(out, "sampled.mean={}", s.mean);
            let _ = writeln!(out, "sampled.std={}", s.std);
        }
        out
    }

    pub fn parse(text: &str, path: &Path) -> Result<Report> {
        let mut map = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::record(path, i + 1, "expected key=value"))?;
            if map.insert(k.to_string(), (i + 1, v.to_string())).is_some() {
                return Err(Error::record(path, i + 1, format!("duplicate key {k:?}")));
            }
        }
        let mut fields = Fields { map, path };
        let version: u32 = fields.take("format_version")?;
        if version != FORMAT_VERSION {
            return Err(Error::record(
                path,
                1,
                format!("unsupported format_version {version}"),
            ));
        }
        let meta_keys: Vec<String> = fields
            .map
            .keys()
            .filter(|k| k.starts_with("meta."))
            .cloned()
            .collect();
        let mut meta = BTreeMap::new();
        for key in meta_keys {
            let (_, v) = fields.map.remove(&key).unwrap();
            meta.insert(key["meta.".len()..].to_string(), unescape(&v));
        }
        let accuracy = parse_eval(&mut fields, "accuracy")?;
        let baseline = parse_eval(&mut fields, "baseline")?;
        let sampled = if fields.map.contains_key("sampled.sets") {
            let prng: String = fields.take("sampled.prng")?;
            if prng != PRNG_NAME {
                return Err(fields.error("sampled.prng", format!("unknown generator {prng:?}")));
            }
            let _: String = fields.take("sampled.seed_derivation")?;
            let _: String = fields.take("sampled.std_kind")?;
            let per_set: String = fields.take("sampled.per_set")?;
            let per_set = per_set
                .split(',')
                .map(|x| x.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::record(path, 0, format!("sampled.per_set: {e}")))?;
            Some(SampledEvalReport {
                sets: fields.take("sampled.sets")?,
                set_size: fields.take("sampled.set_size")?,
                seed: fields.take("sampled.seed")?,
                per_set,
                mean: fields.take("sampled.mean")?,
                std: fields.take("sampled.std")?,
            })
        } else {
            None
        };
        if let Some((k, (line, _))) = fields.map.iter().next() {
            return Err(Error::record(path, *line, format!("unknown key {k:?}")));
        }
        Ok(Report {
            meta,
            accuracy,
            baseline,
            sampled,
        })
    }
}

pub fn write_report(report: &Report, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, report.render()).map_err(|e| Error::io(path, e))
}

pub fn read_report(path: &Path) -> Result<Report> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Report::parse(&text, path)
}

fn render_eval(out: &mut String, prefix: &str, r: &EvalReport) {
    let _ = writeln!(out, "{prefix}.n={}", r.n);
    let _ = writeln!(out, "{prefix}.correct={}", r.correct);
    let _ = writeln!(out, "{prefix}.value={}", r.accuracy);
    let _ = writeln!(out, "{prefix}.labels={},{}", r.labels[0], r.labels[1]);
    for (g, gold) in r.labels.iter().enumerate() {
        for (p, pred) in r.labels.iter().enumerate() {
            let _ = writeln!(
                out,
                "{prefix}.confusion.{gold}.{pred}={}",
                r.confusion[g][p]
            );
        }
    }
}

fn parse_eval(fields: &mut Fields<'_>, prefix: &str) -> Result<Option<EvalReport>> {
    if !fields.map.contains_key(&format!("{prefix}.n")) {
        return Ok(None);
    }
    let labels: String = fields.take(&format!("{prefix}.labels"))?;
    let labels: [String; 2] = match labels.split_once(',') {
        Some((a, b)) => [a.to_string(), b.to_string()],
        None => return Err(fields.error(&format!("{prefix}.n"), "labels needs two names")),
    };
    let mut confusion = [[0usize; 2]; 2];
    for g in 0..2 {
        for p in 0..2 {
            confusion[g][p] =
                fields.take(&format!("{prefix}.confusion.{}.{}", labels[g], labels[p]))?;
        }
    }
    Ok(Some(EvalReport {
        n: fields.take(&format!("{prefix}.n"))?,
        correct: fields.take(&format!("{prefix}.correct"))?,
        accuracy: fields.take(&format!("{prefix}.value"))?,
        labels,
        confusion,
    }))
}

struct Fields<'p> {
    map: BTreeMap<String, (usize, String)>,
    path: &'p Path,
}

impl Fields<'_> {
    fn take<T: std::str::FromStr>(&mut self, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        let (line, v) = self
            .map
            .remove(key)
            .ok_or_else(|| Error::record(self.path, 0, format!("missing key {key:?}")))?;
        v.parse()
            .map_err(|e| Error::record(self.path, line, format!("{key}: {e}")))
    }

    fn error(&self, key: &str, message: impl std::fmt::Display) -> Error {
        let line = self.map.get(key).map_or(0, |(l, _)| *l);
        Error::record(self.path, line, format!("{key}: {message}"))
    }
}

fn escape(v: &str) -> String {
    v.replace('\\', "\\\\").replace('\n', "\\n")
}

fn unescape(v: &str) -> String {
    let mut out = String::with_capacity(v.len());
    let mut chars = v.chars();
    while let Some(c) = chars.next() {
        if c == '\\' {
            match chars.next() {
                Some('n') => out.push('\n'),
                Some(other) => out.push(other),
                None => out.push('\\'),
            }
        } else {
            out.push(c);
        }
    }
    out
}
