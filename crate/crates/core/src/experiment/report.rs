//! Per-run metrics, their CSV form (full precision) and a markdown summary
//! at four significant figures.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::datasets::fmt_f64;
use crate::distributions::CanonicalLaw;
use crate::error::{Error, Result};

/// One `(dataset, label, seed)` outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub dataset: String,
    pub label: String,
    pub seed: u64,
    /// `None` when the run diverged.
    pub mse: Option<f64>,
    pub mae: Option<f64>,
    pub rmse: Option<f64>,
    pub diverged_at: Option<usize>,
    /// Weighted mean member MSE, for ensemble rows.
    pub jensen_bound: Option<f64>,
    /// Signed reduction in percent against the single baseline of the same seed.
    pub error_reduction: Option<f64>,
}

impl ReportRow {
    pub fn ok(dataset: &str, label: &str, seed: u64, mse: f64, mae: f64, rmse: f64) -> Self {
        Self {
            dataset: dataset.into(),
            label: label.into(),
            seed,
            mse: Some(mse),
            mae: Some(mae),
            rmse: Some(rmse),
            diverged_at: None,
            jensen_bound: None,
            error_reduction: None,
        }
    }

    pub fn diverged(dataset: &str, label: &str, seed: u64, step: usize) -> Self {
        Self {
            dataset: dataset.into(),
            label: label.into(),
            seed,
            mse: None,
            mae: None,
            rmse: None,
            diverged_at: Some(step),
            jensen_bound: None,
            error_reduction: None,
        }
    }
}

/// Summary statistics of one label's finite MSEs.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub dataset: String,
    pub label: String,
    pub runs: usize,
    pub diverged: usize,
    pub median: Option<f64>,
    pub mean: Option<f64>,
    /// Sample standard deviation; needs two finite runs.
    pub std: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReductionSummary {
    pub dataset: String,
    pub label: String,
    pub seeds: usize,
    pub positive: usize,
    pub median: Option<f64>,
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

fn mean_std(values: &[f64]) -> (Option<f64>, Option<f64>) {
    if values.is_empty() {
        return (None, None);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = (values.len() > 1)
        .then(|| (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt());
    (Some(mean), std)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricsReport {
    rows: Vec<ReportRow>,
}

const HEADER: [&str; 9] = [
    "dataset",
    "label",
    "seed",
    "mse",
    "mae",
    "rmse",
    "diverged_at",
    "jensen_bound",
    "error_reduction",
];

impl MetricsReport {
    /// Rows are kept ordered by `(dataset, label, seed)`; a repeated key is an error.
    pub fn new(mut rows: Vec<ReportRow>) -> Result<Self> {
        rows.sort_by(|a, b| (&a.dataset, &a.label, a.seed).cmp(&(&b.dataset, &b.label, b.seed)));
        for w in rows.windows(2) {
            if (&w[0].dataset, &w[0].label, w[0].seed) == (&w[1].dataset, &w[1].label, w[1].seed) {
                return Err(Error::usage(format!(
                    "duplicate report row ({}, {}, seed {})",
                    w[0].dataset, w[0].label, w[0].seed
                )));
            }
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[ReportRow] {
        &self.rows
    }

    pub fn any_diverged(&self) -> bool {
        self.rows.iter().any(|r| r.diverged_at.is_some())
    }

    pub fn merge(reports: impl IntoIterator<Item = MetricsReport>) -> Result<Self> {
        Self::new(reports.into_iter().flat_map(|r| r.rows).collect())
    }

    pub fn aggregates(&self) -> Vec<Aggregate> {
        let mut groups: BTreeMap<(&str, &str), Vec<&ReportRow>> = BTreeMap::new();
        for r in &self.rows {
            groups.entry((&r.dataset, &r.label)).or_default().push(r);
        }
        groups
            .into_iter()
            .map(|((dataset, label), rows)| {
                let finite: Vec<f64> = rows.iter().filter_map(|r| r.mse).collect();
                let (mean, std) = mean_std(&finite);
                Aggregate {
                    dataset: dataset.into(),
                    label: label.into(),
                    runs: rows.len(),
                    diverged: rows.iter().filter(|r| r.diverged_at.is_some()).count(),
                    median: median(&finite),
                    mean,
                    std,
                }
            })
            .collect()
    }

    pub fn reductions(&self) -> Vec<ReductionSummary> {
        let mut groups: BTreeMap<(&str, &str), Vec<f64>> = BTreeMap::new();
        for r in &self.rows {
            if let Some(v) = r.error_reduction {
                groups.entry((&r.dataset, &r.label)).or_default().push(v);
            }
        }
        groups
            .into_iter()
            .map(|((dataset, label), v)| ReductionSummary {
                dataset: dataset.into(),
                label: label.into(),
                seeds: v.len(),
                positive: v.iter().filter(|x| **x > 0.0).count(),
                median: median(&v),
            })
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
        let mut out = HEADER.join(",");
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                r.dataset,
                r.label,
                r.seed,
                opt(r.mse),
                opt(r.mae),
                opt(r.rmse),
                r.diverged_at.map(|s| s.to_string()).unwrap_or_default(),
                opt(r.jensen_bound),
                opt(r.error_reduction),
            );
        }
        out
    }

    pub fn from_csv(text: &str, origin: &Path) -> Result<Self> {
        let err = |line: usize, msg: String| Error::Parse {
            path: origin.to_path_buf(),
            line,
            msg,
        };
        let mut reader = csv::ReaderBuilder::new().from_reader(text.as_bytes());
        let headers = reader.headers().map_err(|e| err(1, e.to_string()))?.clone();
        if headers.iter().collect::<Vec<_>>() != HEADER {
            return Err(err(1, format!("unexpected header, want `{}`", HEADER.join(","))));
        }
        let mut rows = Vec::new();
        for (i, rec) in reader.records().enumerate() {
            let line = i + 2;
            let rec = rec.map_err(|e| err(line, e.to_string()))?;
            let num = |j: usize| -> Result<Option<f64>> {
                let s = rec[j].trim();
                if s.is_empty() {
                    return Ok(None);
                }
                s.parse()
                    .map(Some)
                    .map_err(|_| err(line, format!("{}: cannot parse `{s}`", HEADER[j])))
            };
            let seed = rec[2]
                .trim()
                .parse()
                .map_err(|_| err(line, format!("seed: cannot parse `{}`", &rec[2])))?;
            let diverged_at = match rec[6].trim() {
                "" => None,
                s => Some(
                    s.parse()
                        .map_err(|_| err(line, format!("diverged_at: cannot parse `{s}`")))?,
                ),
            };
            rows.push(ReportRow {
                dataset: rec[0].to_string(),
                label: rec[1].to_string(),
                seed,
                mse: num(3)?,
                mae: num(4)?,
                rmse: num(5)?,
                diverged_at,
                jensen_bound: num(7)?,
                error_reduction: num(8)?,
            });
        }
        Self::new(rows)
    }

    pub fn to_markdown(&self) -> String {
        let sig = |v: Option<f64>| v.map(|x| format!("{x:.3e}")).unwrap_or_else(|| "-".into());
        let pct = |v: Option<f64>| v.map(|x| format!("{x:.2}%")).unwrap_or_else(|| "-".into());
        let mut out = String::from("# Metrics\n\n## Runs\n\n");
        out.push_str("| dataset | label | seed | mse | mae | rmse | diverged_at | jensen_bound | error_reduction |\n");
        out.push_str("|---|---|---|---|---|---|---|---|---|\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "| {} | {} | {} | {} | {} | {} | {} | {} | {} |",
                r.dataset,
                r.label,
                r.seed,
                sig(r.mse),
                sig(r.mae),
                sig(r.rmse),
                r.diverged_at.map(|s| s.to_string()).unwrap_or_else(|| "-".into()),
                sig(r.jensen_bound),
                pct(r.error_reduction),
            );
        }

        out.push_str("\n## Summary (MSE over non-diverged runs)\n\n");
        out.push_str("| dataset | label | runs | diverged | median | mean | std |\n");
        out.push_str("|---|---|---|---|---|---|---|\n");
        let aggregates = self.aggregates();
        for a in &aggregates {
            let _ = writeln!(
                out,
                "| {} | {} | {} | {} | {} | {} | {} |",
                a.dataset,
                a.label,
                a.runs,
                a.diverged,
                sig(a.median),
                sig(a.mean),
                sig(a.std)
            );
        }

        let reductions = self.reductions();
        if !reductions.is_empty() {
            out.push_str("\n## Error reduction\n\n");
            out.push_str("| dataset | label | seeds | positive | median |\n|---|---|---|---|---|\n");
            for r in &reductions {
                let _ = writeln!(
                    out,
                    "| {} | {} | {} | {} | {} |",
                    r.dataset,
                    r.label,
                    r.seeds,
                    r.positive,
                    pct(r.median)
                );
            }
        }

        let laws: Vec<&str> = CanonicalLaw::ALL.iter().map(|l| l.label()).collect();
        let mut grid: BTreeMap<&str, BTreeMap<&str, Option<f64>>> = BTreeMap::new();
        for a in &aggregates {
            if laws.contains(&a.label.as_str()) {
                grid.entry(&a.dataset).or_default().insert(&a.label, a.median);
            }
        }
        if !grid.is_empty() {
            out.push_str("\n## Median MSE by weight distribution\n\n| dataset |");
            for l in &laws {
                let _ = write!(out, " {l} |");
            }
            out.push_str("\n|---|");
            out.push_str(&"---|".repeat(laws.len()));
            out.push('\n');
            for (dataset, cells) in &grid {
                let _ = write!(out, "| {dataset} |");
                for l in &laws {
                    let _ = write!(out, " {} |", sig(cells.get(l).copied().flatten()));
                }
                out.push('\n');
            }
        }
        out
    }

    /// Write `report.csv` and `report.md` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (name, text) in [("report.csv", self.to_csv()), ("report.md", self.to_markdown())] {
            let path = dir.join(name);
            fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv(&text, path)
    }
}
