//! Experiment configuration: a TOML file with the sections `[dataset]`,
//! `[preprocess]`, `[split]`, `[esn]`, `[eval]`, `[ensemble]` and `[run]`.
//! Unknown sections and keys are rejected by name.

use std::path::{Path, PathBuf};

use toml::{Table, Value};

use crate::datasets::{gen_arma, gen_sine, load_csv, mackey_glass, MgParams, PreprocessKind};
use crate::distributions::derive_stream;
use crate::ensemble::{EnsembleKind, OnDiverged};
use crate::error::{Error, Result};
use crate::reservoir::EsnConfig;
use crate::ts::{SplitSpec, TimeSeries};

#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSpec {
    MackeyGlass { n: usize, params: MgParams },
    Arma { n: usize, trend: bool, burn_in: usize, seed: u64 },
    Sine { n: usize, trend: bool },
    Csv { path: PathBuf },
}

impl DatasetSpec {
    pub fn name(&self) -> String {
        match self {
            DatasetSpec::MackeyGlass { .. } => "mackey-glass".into(),
            DatasetSpec::Arma { trend: false, .. } => "arma".into(),
            DatasetSpec::Arma { trend: true, .. } => "arma-trend".into(),
            DatasetSpec::Sine { trend: false, .. } => "sine".into(),
            DatasetSpec::Sine { trend: true, .. } => "sine-trend".into(),
            DatasetSpec::Csv { path } => path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "csv".into()),
        }
    }

    pub fn build(&self) -> Result<TimeSeries> {
        let series = match self {
            DatasetSpec::MackeyGlass { n, params } => mackey_glass(*n, params)?,
            DatasetSpec::Arma { n, trend, burn_in, seed } => {
                gen_arma(*n, *trend, *burn_in, &mut derive_stream(*seed, 0))?
            }
            DatasetSpec::Sine { n, trend } => gen_sine(*n, *trend)?,
            DatasetSpec::Csv { path } => load_csv(path)?,
        };
        Ok(series.with_name(self.name()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMode {
    /// Free-running prediction over the first `horizon` test samples.
    Generative { horizon: usize },
    /// One-step-ahead prediction with true inputs over `horizon` samples.
    Guided { horizon: usize },
}

impl EvalMode {
    pub fn horizon(&self) -> usize {
        match self {
            EvalMode::Generative { horizon } | EvalMode::Guided { horizon } => *horizon,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSpec {
    pub kind: EnsembleKind,
    pub members: usize,
    /// When non-empty, the ensemble size is chosen per seed by
    /// cross-validation over this grid instead of `members`.
    pub m_grid: Vec<usize>,
    pub folds: usize,
    pub on_diverged: OnDiverged,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dataset: DatasetSpec,
    pub preprocess: Option<PreprocessKind>,
    pub split: SplitSpec,
    /// `master_seed` and `washout_len` are overridden per run.
    pub esn: EsnConfig,
    pub mode: EvalMode,
    pub ensemble: Option<EnsembleSpec>,
    pub repeats: usize,
    pub base_seed: u64,
    pub compare_distributions: bool,
    pub label: String,
    pub output_dir: PathBuf,
    pub tracking: bool,
}

impl ExperimentConfig {
    /// Master seed of repeat `r`.
    pub fn seed_of(&self, r: usize) -> u64 {
        self.base_seed.wrapping_add(r as u64)
    }

    pub fn validate(&self) -> Result<()> {
        if self.repeats == 0 {
            return Err(Error::config("run.repeats", "must be at least 1"));
        }
        let h = self.mode.horizon();
        if h == 0 || h > self.split.test_len {
            return Err(Error::config(
                "eval.horizon",
                format!("must lie in 1..={} (split.test)", self.split.test_len),
            ));
        }
        if self.split.train_len < 1 {
            return Err(Error::config("split.train", "must be at least 1"));
        }
        if let Some(e) = &self.ensemble {
            if e.members == 0 {
                return Err(Error::config("ensemble.members", "must be at least 1"));
            }
            if !e.m_grid.is_empty() && e.folds < 2 {
                return Err(Error::config("ensemble.folds", "must be at least 2"));
            }
            if e.m_grid.contains(&0) {
                return Err(Error::config("ensemble.m_grid", "sizes must be positive"));
            }
        }
        if self.label.is_empty() || self.label.contains([',', '|', '/', '\n']) {
            return Err(Error::config("run.label", "must be non-empty without `,`, `|` or `/`"));
        }
        self.esn.validate().map_err(|e| match e {
            Error::Config { key, msg } => Error::config(format!("esn.{key}"), msg),
            other => other,
        })
    }
}

/// Typed access to one TOML section with key tracking.
struct Section<'a> {
    name: &'static str,
    table: Option<&'a Table>,
}

impl<'a> Section<'a> {
    fn key(&self, k: &str) -> String {
        format!("{}.{k}", self.name)
    }

    fn get(&self, k: &str) -> Option<&'a Value> {
        self.table.and_then(|t| t.get(k))
    }

    fn check_keys(&self, allowed: &[&str]) -> Result<()> {
        if let Some(t) = self.table {
            for k in t.keys() {
                if !allowed.contains(&k.as_str()) {
                    return Err(Error::config(self.key(k), "unknown key"));
                }
            }
        }
        Ok(())
    }

    fn str(&self, k: &str) -> Result<Option<&'a str>> {
        match self.get(k) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s)),
            Some(_) => Err(Error::config(self.key(k), "expected a string")),
        }
    }

    fn uint(&self, k: &str) -> Result<Option<u64>> {
        match self.get(k) {
            None => Ok(None),
            Some(Value::Integer(i)) if *i >= 0 => Ok(Some(*i as u64)),
            Some(_) => Err(Error::config(self.key(k), "expected a non-negative integer")),
        }
    }

    fn usize(&self, k: &str) -> Result<Option<usize>> {
        Ok(self.uint(k)?.map(|v| v as usize))
    }

    fn float(&self, k: &str) -> Result<Option<f64>> {
        match self.get(k) {
            None => Ok(None),
            Some(Value::Float(f)) => Ok(Some(*f)),
            Some(Value::Integer(i)) => Ok(Some(*i as f64)),
            Some(_) => Err(Error::config(self.key(k), "expected a number")),
        }
    }

    fn bool(&self, k: &str) -> Result<Option<bool>> {
        match self.get(k) {
            None => Ok(None),
            Some(Value::Boolean(b)) => Ok(Some(*b)),
            Some(_) => Err(Error::config(self.key(k), "expected true or false")),
        }
    }

    fn require<T>(&self, k: &str, v: Option<T>) -> Result<T> {
        v.ok_or_else(|| Error::config(self.key(k), "missing"))
    }
}

const SECTIONS: [&str; 7] = ["dataset", "preprocess", "split", "esn", "eval", "ensemble", "run"];

fn section<'a>(root: &'a Table, name: &'static str) -> Result<Section<'a>> {
    match root.get(name) {
        None => Ok(Section { name, table: None }),
        Some(Value::Table(t)) => Ok(Section { name, table: Some(t) }),
        Some(_) => Err(Error::config(name, "expected a section")),
    }
}

fn parse_dataset(s: &Section, base: &Path) -> Result<DatasetSpec> {
    let generator = s.require("generator", s.str("generator")?)?;
    let n = || -> Result<usize> { s.require("n", s.usize("n")?) };
    let spec = match generator {
        "mackey-glass" | "mg" => {
            s.check_keys(&["generator", "n", "tau", "a_num", "b_lin", "exponent", "dt", "stride", "history"])?;
            let d = MgParams::default();
            let params = MgParams {
                tau: s.float("tau")?.unwrap_or(d.tau),
                a_num: s.float("a_num")?.unwrap_or(d.a_num),
                b_lin: s.float("b_lin")?.unwrap_or(d.b_lin),
                exponent: s.float("exponent")?.unwrap_or(d.exponent),
                dt: s.float("dt")?.unwrap_or(d.dt),
                stride: s.usize("stride")?.unwrap_or(d.stride),
                history: s.float("history")?.unwrap_or(d.history),
            };
            params
                .validate()
                .map_err(|e| Error::config("dataset", e.to_string()))?;
            DatasetSpec::MackeyGlass { n: n()?, params }
        }
        "arma" => {
            s.check_keys(&["generator", "n", "trend", "burn_in", "seed"])?;
            DatasetSpec::Arma {
                n: n()?,
                trend: s.bool("trend")?.unwrap_or(false),
                burn_in: s.usize("burn_in")?.unwrap_or(0),
                seed: s.uint("seed")?.unwrap_or(0),
            }
        }
        "sine" => {
            s.check_keys(&["generator", "n", "trend"])?;
            DatasetSpec::Sine {
                n: n()?,
                trend: s.bool("trend")?.unwrap_or(false),
            }
        }
        "csv" => {
            s.check_keys(&["generator", "path"])?;
            let p = PathBuf::from(s.require("path", s.str("path")?)?);
            DatasetSpec::Csv {
                path: if p.is_absolute() { p } else { base.join(p) },
            }
        }
        other => {
            return Err(Error::config(
                "dataset.generator",
                format!("unknown generator `{other}` (mackey-glass, arma, sine, csv)"),
            ))
        }
    };
    Ok(spec)
}

fn esn_value(key: &str, v: &Value) -> Result<String> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Integer(i) => Ok(i.to_string()),
        Value::Float(f) => Ok(f.to_string()),
        Value::Boolean(b) => Ok(b.to_string()),
        _ => Err(Error::config(format!("esn.{key}"), "expected a scalar")),
    }
}

/// Parse a configuration; relative CSV paths resolve against `base`.
pub fn parse_config(text: &str, base: &Path) -> Result<ExperimentConfig> {
    let root: Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::config("<file>", e.message().to_string()))?;
    for k in root.keys() {
        if !SECTIONS.contains(&k.as_str()) {
            return Err(Error::config(k.as_str(), "unknown section"));
        }
    }

    let dataset = parse_dataset(&section(&root, "dataset")?, base)?;

    let pre = section(&root, "preprocess")?;
    pre.check_keys(&["kind"])?;
    let preprocess = match pre.str("kind")? {
        None | Some("none") => None,
        Some(k) => Some(
            k.parse::<PreprocessKind>()
                .map_err(|e| Error::config("preprocess.kind", e.to_string()))?,
        ),
    };

    let sp = section(&root, "split")?;
    sp.check_keys(&["washout", "train", "test"])?;
    let split = SplitSpec::new(
        sp.usize("washout")?.unwrap_or(100),
        sp.require("train", sp.usize("train")?)?,
        sp.require("test", sp.usize("test")?)?,
    );

    let mut esn = EsnConfig::default();
    if let Some(t) = section(&root, "esn")?.table {
        for (k, v) in t {
            if matches!(k.as_str(), "washout_len" | "master_seed") {
                return Err(Error::config(
                    format!("esn.{k}"),
                    "set by split.washout / run.seed",
                ));
            }
            esn.set(k, &esn_value(k, v)?).map_err(|e| match e {
                Error::Config { key, msg } => Error::config(format!("esn.{key}"), msg),
                other => other,
            })?;
        }
    }
    esn.washout_len = split.washout_len;

    let ev = section(&root, "eval")?;
    ev.check_keys(&["mode", "horizon"])?;
    let horizon = ev.usize("horizon")?.unwrap_or(500.min(split.test_len));
    let mode = match ev.str("mode")?.unwrap_or("generative") {
        "generative" => EvalMode::Generative { horizon },
        "guided" => EvalMode::Guided { horizon },
        other => return Err(Error::config("eval.mode", format!("unknown mode `{other}`"))),
    };

    let en = section(&root, "ensemble")?;
    en.check_keys(&["kind", "members", "m_grid", "folds", "on_diverged"])?;
    let ensemble = match en.table {
        None => None,
        Some(_) => {
            let kind = en
                .require("kind", en.str("kind")?)?
                .parse()
                .map_err(|e: Error| Error::config("ensemble.kind", e.to_string()))?;
            let m_grid = match en.get("m_grid") {
                None => Vec::new(),
                Some(Value::Array(a)) => a
                    .iter()
                    .map(|v| match v {
                        Value::Integer(i) if *i > 0 => Ok(*i as usize),
                        _ => Err(Error::config("ensemble.m_grid", "expected positive integers")),
                    })
                    .collect::<Result<_>>()?,
                Some(_) => return Err(Error::config("ensemble.m_grid", "expected an array")),
            };
            Some(EnsembleSpec {
                kind,
                members: match en.usize("members")? {
                    Some(m) => m,
                    None => match m_grid.iter().max() {
                        Some(&m) => m,
                        None => return Err(Error::config("ensemble.members", "missing")),
                    },
                },
                m_grid,
                folds: en.usize("folds")?.unwrap_or(3),
                on_diverged: match en.str("on_diverged")? {
                    None => OnDiverged::default(),
                    Some(s) => s
                        .parse()
                        .map_err(|e: Error| Error::config("ensemble.on_diverged", e.to_string()))?,
                },
            })
        }
    };

    let run = section(&root, "run")?;
    run.check_keys(&["repeats", "seed", "compare_distributions", "label", "output_dir", "tracking"])?;
    let output_dir = PathBuf::from(run.str("output_dir")?.unwrap_or("out"));
    let cfg = ExperimentConfig {
        dataset,
        preprocess,
        split,
        esn,
        mode,
        ensemble,
        repeats: run.usize("repeats")?.unwrap_or(1),
        base_seed: run.uint("seed")?.unwrap_or(0),
        compare_distributions: run.bool("compare_distributions")?.unwrap_or(false),
        label: run.str("label")?.unwrap_or("esn").to_string(),
        output_dir: if output_dir.is_absolute() { output_dir } else { base.join(output_dir) },
        tracking: run.bool("tracking")?.unwrap_or(true),
    };
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_config(&text, base)
}
