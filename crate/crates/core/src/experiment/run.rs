//! Experiment execution and the command bodies behind the `esn` binary.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::datasets::{fit_preprocess, fmt_f64, save_columns, Preprocessor};
use crate::distributions::CanonicalLaw;
use crate::ensemble::{
    load_ensemble, predict_ensemble, save_ensemble, select_m_cv, train_bagging_with,
    train_perturbation_ensemble, bootstrap_stream, BootstrapSample, Ensemble, EnsembleKind,
    OnDiverged, PredictMode,
};
use crate::error::{Error, Result};
use crate::reservoir::{init_esn, load_model, save_model, EsnConfig, EsnModel};
use crate::ts::{mae_slice, mse_slice, rmse_slice, signed_error_reduction, split, TimeSeries};

use super::config::{EnsembleSpec, EvalMode, ExperimentConfig};
use super::report::{MetricsReport, ReportRow};

/// Training and test segments, both in the preprocessed space.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub dataset: String,
    pub train: TimeSeries,
    pub test: TimeSeries,
    pub preprocessor: Option<Preprocessor>,
}

/// Build the dataset, split it, and fit the preprocessing on the training
/// segment only.
pub fn prepare_data(cfg: &ExperimentConfig) -> Result<PreparedData> {
    let series = cfg.dataset.build()?;
    let (train, test) = split(&series, &cfg.split)?;
    let preprocessor = cfg
        .preprocess
        .map(|kind| fit_preprocess(kind, &train))
        .transpose()?;
    let (train, test) = match &preprocessor {
        Some(p) => (p.apply(&train)?, p.apply(&test)?),
        None => (train, test),
    };
    Ok(PreparedData {
        dataset: cfg.dataset.name(),
        train,
        test,
        preprocessor,
    })
}

/// Inputs for guided evaluation over the first `horizon` test samples: the
/// last training sample followed by the test samples before the last target.
pub fn guided_inputs(train: &TimeSeries, test: &TimeSeries, horizon: usize) -> Result<TimeSeries> {
    let last = *train
        .values()
        .last()
        .ok_or_else(|| Error::usage("empty training segment"))?;
    let mut v = Vec::with_capacity(horizon);
    v.push(last);
    v.extend_from_slice(&test.values()[..horizon.saturating_sub(1)]);
    TimeSeries::new("guided-inputs", v)
}

/// Predicted trajectory of one row, kept for the tracking files.
#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    pub label: String,
    pub seed: u64,
    pub prediction: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvRow {
    pub label: String,
    pub seed: u64,
    pub m: usize,
    pub score: f64,
    pub chosen: bool,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: MetricsReport,
    pub target: Vec<f64>,
    pub tracks: Vec<Track>,
    pub cv: Vec<CvRow>,
}

#[derive(Default)]
struct Cell {
    rows: Vec<ReportRow>,
    tracks: Vec<Track>,
    cv: Vec<CvRow>,
}

struct Scorer<'a> {
    dataset: &'a str,
    target: &'a [f64],
}

impl Scorer<'_> {
    /// A row from a prediction outcome; divergence is recorded, anything
    /// else aborts the run.
    fn row(&self, label: &str, seed: u64, outcome: &Result<TimeSeries>) -> Option<ReportRow> {
        match outcome {
            Ok(y) => Some(ReportRow::ok(
                self.dataset,
                label,
                seed,
                mse_slice(y.values(), self.target).ok()?,
                mae_slice(y.values(), self.target).ok()?,
                rmse_slice(y.values(), self.target).ok()?,
            )),
            Err(e) => e
                .diverged_at()
                .map(|step| ReportRow::diverged(self.dataset, label, seed, step)),
        }
    }
}

fn ensemble_label(base: &str, spec: &EnsembleSpec) -> String {
    if spec.m_grid.is_empty() {
        format!("{base}+{}{}", spec.kind, spec.members)
    } else {
        format!("{base}+{}-cv", spec.kind)
    }
}

/// Single baseline and, when configured, the ensemble for one seed and law.
fn run_cell(
    cfg: &ExperimentConfig,
    data: &PreparedData,
    mode: PredictMode<'_>,
    seed: u64,
    law: Option<CanonicalLaw>,
) -> Result<Cell> {
    let mut esn: EsnConfig = cfg.esn.clone();
    esn.master_seed = seed;
    if let Some(law) = law {
        esn.w_in_spec = law.spec();
        esn.w_spec = law.spec();
    }
    let base_label = law.map_or(cfg.label.as_str(), |l| l.label());
    let target = &data.test.values()[..cfg.mode.horizon()];
    let scorer = Scorer {
        dataset: &data.dataset,
        target,
    };
    let mut cell = Cell::default();
    let push = |cell: &mut Cell, label: &str, outcome: Result<TimeSeries>| -> Result<ReportRow> {
        let Some(row) = scorer.row(label, seed, &outcome) else {
            return Err(outcome.err().unwrap_or_else(|| {
                Error::Dimension("prediction and target lengths differ".into())
            }));
        };
        if let Ok(y) = outcome {
            cell.tracks.push(Track {
                label: label.to_string(),
                seed,
                prediction: y.into_values(),
            });
        }
        Ok(row)
    };

    let Some(spec) = &cfg.ensemble else {
        let outcome = init_esn(&esn)
            .and_then(|m| m.train(&data.train))
            .and_then(|m| mode.run(&m));
        let row = push(&mut cell, base_label, outcome)?;
        cell.rows.push(row);
        return Ok(cell);
    };

    let ens_label = ensemble_label(base_label, spec);
    let m = if spec.m_grid.is_empty() {
        spec.members
    } else {
        let cv = select_m_cv(
            spec.kind,
            &esn,
            &data.train,
            &spec.m_grid,
            spec.folds,
            cfg.mode.horizon(),
        )?;
        for &(m, score) in &cv.curve {
            cell.cv.push(CvRow {
                label: ens_label.clone(),
                seed,
                m,
                score,
                chosen: m == cv.chosen,
            });
        }
        cv.chosen
    };

    let trained: Result<(EsnModel, Ensemble)> = match spec.kind {
        EnsembleKind::Bagging => train_bagging_with(&esn, &data.train, m, |member, n| {
            BootstrapSample::draw(n, &mut bootstrap_stream(&esn, member))
        })
        .map(|fit| (fit.baseline, fit.ensemble)),
        EnsembleKind::Perturbation => {
            train_perturbation_ensemble(&esn, &data.train, m).map(|e| (e.members()[0].clone(), e))
        }
    };
    let (baseline, ensemble) = match trained {
        Ok((b, e)) => (Ok(b), Ok(e)),
        Err(e) if e.is_divergence() => (init_esn(&esn).and_then(|m| m.train(&data.train)), Err(e)),
        Err(e) => return Err(e),
    };

    let base_out = baseline.and_then(|b| mode.run(&b));
    let base_row = push(&mut cell, base_label, base_out)?;

    let ens_row = match ensemble.and_then(|e| predict_ensemble(&e, mode, spec.on_diverged)) {
        Ok(p) => {
            let (ens_mse, bound) = p.jensen(target)?;
            let mut row = push(&mut cell, &ens_label, Ok(p.output))?;
            debug_assert_eq!(row.mse, Some(ens_mse));
            row.jensen_bound = Some(bound);
            row.error_reduction = base_row
                .mse
                .filter(|e| *e > 0.0)
                .map(|e| signed_error_reduction(e, ens_mse))
                .transpose()?;
            row
        }
        Err(e) => push(&mut cell, &ens_label, Err(e))?,
    };
    cell.rows.push(base_row);
    cell.rows.push(ens_row);
    Ok(cell)
}

/// Run every `(repeat, law)` cell of the experiment.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let data = prepare_data(cfg)?;
    let horizon = cfg.mode.horizon();
    let inputs = guided_inputs(&data.train, &data.test, horizon)?;
    let mode = match cfg.mode {
        EvalMode::Generative { horizon } => PredictMode::Generative(horizon),
        EvalMode::Guided { .. } => PredictMode::Guided(&inputs),
    };
    let laws: Vec<Option<CanonicalLaw>> = if cfg.compare_distributions {
        CanonicalLaw::ALL.iter().copied().map(Some).collect()
    } else {
        vec![None]
    };
    let jobs: Vec<(u64, Option<CanonicalLaw>)> = (0..cfg.repeats)
        .flat_map(|r| laws.iter().map(move |l| (cfg.seed_of(r), *l)))
        .collect();
    let cells = jobs
        .par_iter()
        .map(|&(seed, law)| run_cell(cfg, &data, mode, seed, law))
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::new();
    let mut tracks = Vec::new();
    let mut cv = Vec::new();
    for c in cells {
        rows.extend(c.rows);
        tracks.extend(c.tracks);
        cv.extend(c.cv);
    }
    tracks.sort_by(|a, b| (&a.label, a.seed).cmp(&(&b.label, b.seed)));
    cv.sort_by(|a, b| (&a.label, a.seed, a.m).cmp(&(&b.label, b.seed, b.m)));
    Ok(RunOutput {
        report: MetricsReport::new(rows)?,
        target: data.test.values()[..horizon].to_vec(),
        tracks,
        cv,
    })
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Run the experiment and write `report.csv`, `report.md`, optional
/// `cv.csv` and, when tracking is on, one `tracking/<dataset>_<label>_seed<s>.csv`
/// per non-diverged row.
pub fn cmd_run(cfg: &ExperimentConfig, out_dir: &Path) -> Result<MetricsReport> {
    let out = run_experiment(cfg)?;
    out.report.write(out_dir)?;
    let dataset = cfg.dataset.name();
    if !out.cv.is_empty() {
        let mut text = String::from("dataset,label,seed,m,cv_mse,chosen\n");
        for r in &out.cv {
            let _ = writeln!(
                text,
                "{dataset},{},{},{},{},{}",
                r.label,
                r.seed,
                r.m,
                fmt_f64(r.score),
                r.chosen
            );
        }
        write_text(&out_dir.join("cv.csv"), &text)?;
    }
    if cfg.tracking {
        let dir = out_dir.join("tracking");
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        for t in &out.tracks {
            let mut text = String::from("step,target,prediction\n");
            for (i, (y, p)) in out.target.iter().zip(&t.prediction).enumerate() {
                let _ = writeln!(text, "{i},{},{}", fmt_f64(*y), fmt_f64(*p));
            }
            let name = format!("{dataset}_{}_seed{}.csv", t.label, t.seed);
            write_text(&dir.join(name), &text)?;
        }
    }
    Ok(out.report)
}

/// What `cmd_train` wrote.
#[derive(Debug, Clone, PartialEq)]
pub enum Trained {
    Model(PathBuf),
    Ensemble { manifest: PathBuf, members: usize },
}

/// Train on the first repeat's seed and save a model, or an ensemble
/// manifest when `[ensemble]` is configured. The model works in the
/// preprocessed space.
pub fn cmd_train(cfg: &ExperimentConfig, out: &Path) -> Result<Trained> {
    cfg.validate()?;
    let data = prepare_data(cfg)?;
    let mut esn = cfg.esn.clone();
    esn.master_seed = cfg.seed_of(0);
    match &cfg.ensemble {
        None => {
            let model = init_esn(&esn)?.train(&data.train)?;
            save_model(out, &model)?;
            Ok(Trained::Model(out.to_path_buf()))
        }
        Some(spec) => {
            let m = if spec.m_grid.is_empty() {
                spec.members
            } else {
                select_m_cv(spec.kind, &esn, &data.train, &spec.m_grid, spec.folds, cfg.mode.horizon())?.chosen
            };
            let e = crate::ensemble::train_ensemble(spec.kind, &esn, &data.train, m)?;
            save_ensemble(out, &e)?;
            Ok(Trained::Ensemble {
                manifest: out.to_path_buf(),
                members: e.len(),
            })
        }
    }
}

/// A model file or an ensemble manifest.
pub enum Predictor {
    Model(EsnModel),
    Ensemble(Ensemble),
}

impl Predictor {
    /// Manifests are recognised by their leading `kind =` line.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let first = text
            .lines()
            .map(str::trim)
            .find(|l| !l.is_empty() && !l.starts_with('#'))
            .unwrap_or("");
        if first.starts_with("kind") {
            Ok(Predictor::Ensemble(load_ensemble(path)?))
        } else {
            Ok(Predictor::Model(load_model(path)?))
        }
    }

    pub fn predict(&self, mode: PredictMode<'_>, on_diverged: OnDiverged) -> Result<TimeSeries> {
        match self {
            Predictor::Model(m) => mode.run(m),
            Predictor::Ensemble(e) => predict_ensemble(e, mode, on_diverged).map(|p| p.output),
        }
    }
}

/// Predict with a saved model or ensemble and write a `prediction` column.
pub fn cmd_predict(
    model: &Path,
    mode: PredictMode<'_>,
    on_diverged: OnDiverged,
    out: &Path,
) -> Result<TimeSeries> {
    let y = Predictor::load(model)?.predict(mode, on_diverged)?;
    save_columns(out, &["prediction"], &[y.values()])?;
    Ok(y)
}

/// `n`, min, max and mean of a series, as `cmd_gen` prints them.
pub fn summary(series: &TimeSeries) -> String {
    let v = series.values();
    let min = v.iter().copied().fold(f64::INFINITY, f64::min);
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = crate::ts::compensated_sum(v.iter().copied()) / v.len() as f64;
    format!("n={} min={min:.6} max={max:.6} mean={mean:.6}", v.len())
}

/// Merge report CSVs and write the combined `report.csv` / `report.md`.
pub fn cmd_report_merge(inputs: &[PathBuf], out_dir: &Path) -> Result<MetricsReport> {
    if inputs.is_empty() {
        return Err(Error::usage("report-merge needs at least one report.csv"));
    }
    let reports = inputs
        .iter()
        .map(MetricsReport::load)
        .collect::<Result<Vec<_>>>()?;
    let merged = MetricsReport::merge(reports)?;
    merged.write(out_dir)?;
    Ok(merged)
}
