//! Ensembles of echo state networks: independently initialised members
//! (weight perturbation) and bootstrap-aggregated readouts (bagging).

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;

use crate::datasets::fmt_f64;
use crate::distributions::{derive_stream, RngStream};
use crate::error::{Error, Result};
use crate::reservoir::{init_member, load_model, save_model, stream, EsnConfig, EsnModel};
use crate::ts::{compensated_sum, mse_slice, TimeSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnsembleKind {
    Perturbation,
    Bagging,
}

impl fmt::Display for EnsembleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EnsembleKind::Perturbation => "perturbation",
            EnsembleKind::Bagging => "bagging",
        })
    }
}

impl FromStr for EnsembleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "perturbation" => Ok(EnsembleKind::Perturbation),
            "bagging" => Ok(EnsembleKind::Bagging),
            other => Err(Error::usage(format!("unknown ensemble kind `{other}`"))),
        }
    }
}

/// What to do when a member's prediction diverges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OnDiverged {
    #[default]
    Fail,
    /// Drop the diverged members and renormalise the remaining weights.
    DropAndRenormalize,
}

impl fmt::Display for OnDiverged {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OnDiverged::Fail => "fail",
            OnDiverged::DropAndRenormalize => "drop",
        })
    }
}

impl FromStr for OnDiverged {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "fail" => Ok(OnDiverged::Fail),
            "drop" | "drop-and-renormalize" => Ok(OnDiverged::DropAndRenormalize),
            other => Err(Error::usage(format!("unknown divergence policy `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum PredictMode<'a> {
    Generative(usize),
    Guided(&'a TimeSeries),
}

impl PredictMode<'_> {
    pub fn run(&self, model: &EsnModel) -> Result<TimeSeries> {
        match self {
            PredictMode::Generative(n) => model.predict_generative(*n),
            PredictMode::Guided(inputs) => model.predict_guided(inputs),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    members: Vec<EsnModel>,
    weights: Vec<f64>,
    kind: EnsembleKind,
}

fn check_weights(weights: &[f64]) -> Result<()> {
    if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
        return Err(Error::usage("ensemble weights must be finite and >= 0"));
    }
    let total = compensated_sum(weights.iter().copied());
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::usage(format!("ensemble weights sum to {total}, not 1")));
    }
    Ok(())
}

impl Ensemble {
    pub fn new(members: Vec<EsnModel>, weights: Vec<f64>, kind: EnsembleKind) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::usage("an ensemble needs at least one member"));
        }
        if members.len() != weights.len() {
            return Err(Error::LengthMismatch {
                left: members.len(),
                right: weights.len(),
            });
        }
        check_weights(&weights)?;
        if let Some(i) = members.iter().position(|m| !m.is_trained()) {
            return Err(Error::Member {
                index: i,
                source: Box::new(Error::Untrained),
            });
        }
        Ok(Self { members, weights, kind })
    }

    /// Equal weights `1 / M`.
    pub fn uniform(members: Vec<EsnModel>, kind: EnsembleKind) -> Result<Self> {
        let m = members.len().max(1);
        Self::new(members, vec![1.0 / m as f64; m], kind)
    }

    pub fn members(&self) -> &[EsnModel] {
        &self.members
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn kind(&self) -> EnsembleKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Row indices drawn with replacement, kept in time order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BootstrapSample {
    indices: Vec<usize>,
    source_len: usize,
}

impl BootstrapSample {
    /// `n` draws with replacement from `0..n`.
    pub fn draw(n: usize, rng: &mut RngStream) -> Self {
        let mut indices: Vec<usize> = (0..n).map(|_| rng.below(n as u64) as usize).collect();
        indices.sort_unstable();
        Self { indices, source_len: n }
    }

    /// Every row exactly once; a bootstrap that changes nothing.
    pub fn all_rows(n: usize) -> Self {
        Self {
            indices: (0..n).collect(),
            source_len: n,
        }
    }

    pub fn from_indices(mut indices: Vec<usize>, source_len: usize) -> Result<Self> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= source_len) {
            return Err(Error::usage(format!("row {bad} out of range 0..{source_len}")));
        }
        indices.sort_unstable();
        Ok(Self { indices, source_len })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn source_len(&self) -> usize {
        self.source_len
    }

    /// Distinct rows over the number of source rows.
    pub fn unique_fraction(&self) -> f64 {
        if self.source_len == 0 {
            return 0.0;
        }
        let mut distinct = 0;
        for (i, v) in self.indices.iter().enumerate() {
            if i == 0 || self.indices[i - 1] != *v {
                distinct += 1;
            }
        }
        distinct as f64 / self.source_len as f64
    }
}

fn member_error(index: usize) -> impl Fn(Error) -> Error {
    move |e| Error::Member {
        index,
        source: Box::new(e),
    }
}

/// `m_members` independently initialised reservoirs, each trained on the
/// whole series.
pub fn train_perturbation_ensemble(config: &EsnConfig, series: &TimeSeries, m_members: usize) -> Result<Ensemble> {
    if m_members == 0 {
        return Err(Error::usage("an ensemble needs at least one member"));
    }
    let members = (0..m_members)
        .into_par_iter()
        .map(|i| {
            init_member(config, i as u64)
                .and_then(|m| m.train(series))
                .map_err(member_error(i))
        })
        .collect::<Result<Vec<_>>>()?;
    Ensemble::uniform(members, EnsembleKind::Perturbation)
}

/// Bagging ensemble together with the full-data readout of member 0, which
/// is the plain single model for the same seed.
pub struct BaggingFit {
    pub ensemble: Ensemble,
    pub baseline: EsnModel,
}

/// Bagged readouts: each member gets a fresh reservoir, harvests the whole
/// series and fits its readout on a time-ordered bootstrap of the rows.
pub fn train_bagging_ensemble(config: &EsnConfig, series: &TimeSeries, m_members: usize) -> Result<Ensemble> {
    train_bagging_with(config, series, m_members, |member, n| {
        BootstrapSample::draw(n, &mut bootstrap_stream(config, member))
    })
    .map(|fit| fit.ensemble)
}

/// The random stream member `member` draws its bootstrap from.
pub fn bootstrap_stream(config: &EsnConfig, member: u64) -> RngStream {
    derive_stream(config.master_seed, stream::id(member, stream::BOOTSTRAP))
}

/// Bagging with a caller-supplied row sampler `(member, rows) -> sample`.
pub fn train_bagging_with<F>(config: &EsnConfig, series: &TimeSeries, m_members: usize, sampler: F) -> Result<BaggingFit>
where
    F: Fn(u64, usize) -> BootstrapSample + Sync,
{
    if m_members == 0 {
        return Err(Error::usage("an ensemble needs at least one member"));
    }
    let fitted = (0..m_members)
        .into_par_iter()
        .map(|i| {
            let member = i as u64;
            let run = || -> Result<(EsnModel, Option<EsnModel>)> {
                let model = init_member(config, member)?;
                let harvest = model.harvest_states(series)?;
                let sample = sampler(member, harvest.columns());
                if sample.source_len() != harvest.columns() {
                    return Err(Error::usage("bootstrap drawn for a different row count"));
                }
                let baseline = if i == 0 {
                    Some(model.clone().fit(&harvest, None)?)
                } else {
                    None
                };
                Ok((model.fit(&harvest, Some(sample.indices()))?, baseline))
            };
            run().map_err(member_error(i))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut baseline = None;
    let mut members = Vec::with_capacity(m_members);
    for (m, b) in fitted {
        members.push(m);
        baseline = baseline.or(b);
    }
    Ok(BaggingFit {
        ensemble: Ensemble::uniform(members, EnsembleKind::Bagging)?,
        baseline: baseline.expect("member 0 always fits a baseline"),
    })
}

#[derive(Debug, Clone)]
pub struct EnsemblePrediction {
    pub output: TimeSeries,
    /// Per-member outputs; `None` for dropped members.
    pub member_outputs: Vec<Option<TimeSeries>>,
    /// Weights actually applied, zero for dropped members.
    pub weights: Vec<f64>,
    pub dropped: Vec<usize>,
}

impl EnsemblePrediction {
    /// `(MSE of the combined output, weighted mean of member MSEs)`; the
    /// first never exceeds the second by convexity.
    pub fn jensen(&self, target: &[f64]) -> Result<(f64, f64)> {
        let ens = mse_slice(self.output.values(), target)?;
        let mut terms = Vec::new();
        for (y, w) in self.member_outputs.iter().zip(&self.weights) {
            if let Some(y) = y {
                terms.push(w * mse_slice(y.values(), target)?);
            }
        }
        Ok((ens, compensated_sum(terms)))
    }
}

/// Weighted average of the member predictions. Generative members feed back
/// their own outputs.
pub fn predict_ensemble(e: &Ensemble, mode: PredictMode<'_>, on_diverged: OnDiverged) -> Result<EnsemblePrediction> {
    let results: Vec<Result<TimeSeries>> = e.members.par_iter().map(|m| mode.run(m)).collect();
    let mut member_outputs = Vec::with_capacity(results.len());
    let mut dropped = Vec::new();
    let mut first_divergence = None;
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(y) => member_outputs.push(Some(y)),
            Err(err) if err.is_divergence() && on_diverged == OnDiverged::DropAndRenormalize => {
                dropped.push(i);
                first_divergence.get_or_insert((i, err));
                member_outputs.push(None);
            }
            Err(err) => return Err(member_error(i)(err)),
        }
    }
    let kept: f64 = compensated_sum(
        e.weights
            .iter()
            .zip(&member_outputs)
            .filter(|(_, y)| y.is_some())
            .map(|(w, _)| *w),
    );
    if member_outputs.iter().all(Option::is_none) || !(kept > 0.0) {
        let (i, err) = first_divergence.expect("only divergence can drop members");
        return Err(member_error(i)(err));
    }
    let weights: Vec<f64> = e
        .weights
        .iter()
        .zip(&member_outputs)
        .map(|(w, y)| if y.is_some() { w / kept } else { 0.0 })
        .collect();
    let len = member_outputs.iter().flatten().next().map_or(0, |y| y.len());
    let mut out = vec![0.0; len];
    for (y, w) in member_outputs.iter().zip(&weights) {
        if let Some(y) = y {
            for (o, v) in out.iter_mut().zip(y.values()) {
                *o += w * v;
            }
        }
    }
    Ok(EnsemblePrediction {
        output: TimeSeries::new("ensemble", out)?,
        member_outputs,
        weights,
        dropped,
    })
}

/// Train an ensemble of the given kind.
pub fn train_ensemble(kind: EnsembleKind, config: &EsnConfig, series: &TimeSeries, m_members: usize) -> Result<Ensemble> {
    match kind {
        EnsembleKind::Perturbation => train_perturbation_ensemble(config, series, m_members),
        EnsembleKind::Bagging => train_bagging_ensemble(config, series, m_members),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvResult {
    pub chosen: usize,
    /// `(M, mean validation MSE)` in ascending `M`.
    pub curve: Vec<(usize, f64)>,
}

/// Choose the ensemble size by forward-chaining cross-validation.
///
/// The last `folds * horizon` samples form `folds` consecutive validation
/// blocks; fold `f` trains on everything before its block and predicts the
/// block generatively. Ensembles of size `M` are the first `M` members of
/// one ensemble of the largest size, which is exactly what training size
/// `M` alone would give. A diverged prediction scores infinity.
pub fn select_m_cv(
    kind: EnsembleKind,
    config: &EsnConfig,
    series: &TimeSeries,
    m_grid: &[usize],
    folds: usize,
    horizon: usize,
) -> Result<CvResult> {
    let mut grid: Vec<usize> = m_grid.to_vec();
    grid.sort_unstable();
    grid.dedup();
    if grid.is_empty() {
        return Err(Error::usage("ensemble size grid is empty"));
    }
    if grid[0] == 0 {
        return Err(Error::usage("ensemble sizes must be positive"));
    }
    if folds < 2 {
        return Err(Error::usage("cross-validation needs at least two folds"));
    }
    if horizon == 0 {
        return Err(Error::usage("validation horizon must be positive"));
    }
    let v = series.values();
    let held_out = folds * horizon;
    if v.len() < held_out + config.washout_len + 2 {
        return Err(Error::usage(format!(
            "series of length {} cannot hold {folds} folds of {horizon} after washout {}",
            v.len(),
            config.washout_len
        )));
    }
    let first_end = v.len() - held_out;
    let m_max = *grid.last().unwrap();

    let mut totals = vec![0.0; grid.len()];
    for f in 0..folds {
        let end = first_end + f * horizon;
        let train = series.slice(0, end)?;
        let target = &v[end..end + horizon];
        let e = train_ensemble(kind, config, &train, m_max)?;
        let outputs: Vec<Option<TimeSeries>> = e
            .members()
            .par_iter()
            .map(|m| match m.predict_generative(horizon) {
                Ok(y) => Ok(Some(y)),
                Err(err) if err.is_divergence() => Ok(None),
                Err(err) => Err(err),
            })
            .collect::<Result<_>>()?;
        for (g, &m) in grid.iter().enumerate() {
            let prefix = &outputs[..m];
            let score = if prefix.iter().any(Option::is_none) {
                f64::INFINITY
            } else {
                let mut avg = vec![0.0; horizon];
                for y in prefix.iter().flatten() {
                    for (a, v) in avg.iter_mut().zip(y.values()) {
                        *a += v / m as f64;
                    }
                }
                mse_slice(&avg, target)?
            };
            totals[g] += score / folds as f64;
        }
    }
    let curve: Vec<(usize, f64)> = grid.iter().copied().zip(totals).collect();
    let mut chosen = curve[0];
    for &(m, score) in &curve[1..] {
        if score < chosen.1 {
            chosen = (m, score);
        }
    }
    Ok(CvResult {
        chosen: chosen.0,
        curve,
    })
}

/// Write the manifest at `path` and one model file per member beside it.
///
/// ```text
/// kind = bagging
/// member = ens_member_0.esn 5.0000000000000000e-1
/// ```
pub fn save_ensemble(path: impl AsRef<Path>, e: &Ensemble) -> Result<()> {
    let path = path.as_ref();
    let dir = path.parent().unwrap_or(Path::new(""));
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "ensemble".into());
    let mut text = format!("kind = {}\n", e.kind);
    for (i, (m, w)) in e.members.iter().zip(&e.weights).enumerate() {
        let name = format!("{stem}_member_{i}.esn");
        save_model(dir.join(&name), m)?;
        text.push_str(&format!("member = {name} {}\n", fmt_f64(*w)));
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Read a manifest; member paths are relative to the manifest's directory.
pub fn load_ensemble(path: impl AsRef<Path>) -> Result<Ensemble> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let dir = path.parent().unwrap_or(Path::new(""));
    let err = |line: usize, msg: String| Error::Parse {
        path: PathBuf::from(path),
        line,
        msg,
    };
    let mut kind = None;
    let mut members = Vec::new();
    let mut weights = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(i + 1, format!("expected `key = value`, got `{line}`")))?;
        match key.trim() {
            "kind" => kind = Some(value.parse().map_err(|e: Error| err(i + 1, e.to_string()))?),
            "member" => {
                let mut parts = value.split_whitespace();
                let (Some(file), Some(w), None) = (parts.next(), parts.next(), parts.next()) else {
                    return Err(err(i + 1, "expected `member = <file> <weight>`".into()));
                };
                let w: f64 = w
                    .parse()
                    .map_err(|_| err(i + 1, format!("cannot parse weight `{w}`")))?;
                members.push(load_model(dir.join(file))?);
                weights.push(w);
            }
            other => return Err(err(i + 1, format!("unknown key `{other}`"))),
        }
    }
    let kind = kind.ok_or_else(|| err(0, "missing `kind`".into()))?;
    Ensemble::new(members, weights, kind)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::reservoir::init_esn;
    use proptest::prelude::*;

    fn config(seed: u64) -> EsnConfig {
        EsnConfig {
            n_res: 20,
            washout_len: 20,
            beta: 1e-4,
            master_seed: seed,
            ..EsnConfig::default()
        }
    }

    fn series(len: usize) -> TimeSeries {
        TimeSeries::new(
            "s",
            (0..len)
                .map(|t| {
                    let t = t as f64;
                    0.5 * (0.2 * t).sin() + 0.3 * (0.031 * t).cos()
                })
                .collect(),
        )
        .unwrap()
    }

    /// A model whose readout ignores the state and outputs `c`.
    fn constant_model(c: f64) -> EsnModel {
        let m = init_esn(&config(0)).unwrap().train(&series(60)).unwrap();
        let mut w = Matrix::zeros(1, 22);
        w.set(0, 0, c);
        m.with_readout(w).unwrap()
    }

    #[test]
    fn single_member_is_the_single_model() {
        let s = series(300);
        let e = train_perturbation_ensemble(&config(3), &s, 1).unwrap();
        let single = init_esn(&config(3)).unwrap().train(&s).unwrap();
        let p = predict_ensemble(&e, PredictMode::Generative(50), OnDiverged::Fail).unwrap();
        assert_eq!(p.output.values(), single.predict_generative(50).unwrap().values());
    }

    #[test]
    fn members_differ_and_ensembles_are_deterministic() {
        let s = series(300);
        let a = train_perturbation_ensemble(&config(5), &s, 5).unwrap();
        let b = train_perturbation_ensemble(&config(5), &s, 5).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.members()[0].w(), a.members()[1].w());
        let pa = predict_ensemble(&a, PredictMode::Generative(40), OnDiverged::Fail).unwrap();
        let pb = predict_ensemble(&b, PredictMode::Generative(40), OnDiverged::Fail).unwrap();
        assert_eq!(pa.output, pb.output);
    }

    #[test]
    fn constant_members_average() {
        let e = Ensemble::uniform(vec![constant_model(1.0), constant_model(3.0)], EnsembleKind::Perturbation).unwrap();
        let p = predict_ensemble(&e, PredictMode::Generative(10), OnDiverged::Fail).unwrap();
        assert!(p.output.values().iter().all(|v| *v == 2.0));
    }

    #[test]
    fn weights_are_validated() {
        let m = || constant_model(1.0);
        assert!(Ensemble::new(vec![m(), m()], vec![0.5, 0.4], EnsembleKind::Bagging).is_err());
        assert!(Ensemble::new(vec![m()], vec![1.0, 0.0], EnsembleKind::Bagging).is_err());
        assert!(Ensemble::new(vec![], vec![], EnsembleKind::Bagging).is_err());
        let untrained = init_esn(&config(0)).unwrap();
        assert!(matches!(
            Ensemble::uniform(vec![m(), untrained], EnsembleKind::Bagging),
            Err(Error::Member { index: 1, .. })
        ));
    }

    #[test]
    fn forced_full_bootstrap_gives_the_plain_model() {
        let s = series(300);
        let fit = train_bagging_with(&config(2), &s, 3, |_, n| BootstrapSample::all_rows(n)).unwrap();
        for (i, member) in fit.ensemble.members().iter().enumerate() {
            let plain = init_member(&config(2), i as u64).unwrap().train(&s).unwrap();
            assert_eq!(member, &plain);
        }
        assert_eq!(&fit.baseline, &fit.ensemble.members()[0]);
        assert_eq!(fit.baseline, init_esn(&config(2)).unwrap().train(&s).unwrap());
    }

    #[test]
    fn bagging_is_deterministic_and_resamples() {
        let s = series(300);
        let a = train_bagging_ensemble(&config(4), &s, 3).unwrap();
        let b = train_bagging_ensemble(&config(4), &s, 3).unwrap();
        assert_eq!(a, b);
        let plain = init_esn(&config(4)).unwrap().train(&s).unwrap();
        assert_ne!(a.members()[0].w_out(), plain.w_out());
        assert_eq!(a.members()[0].w(), plain.w());
    }

    #[test]
    fn unique_fraction_approaches_one_minus_inverse_e() {
        let mut rng = derive_stream(99, 7);
        let mean = (0..100)
            .map(|_| BootstrapSample::draw(10_000, &mut rng).unique_fraction())
            .sum::<f64>()
            / 100.0;
        assert!((0.622..=0.642).contains(&mean), "{mean}");
    }

    #[test]
    fn bootstrap_indices_are_sorted_and_in_range() {
        let b = BootstrapSample::draw(500, &mut derive_stream(1, 7));
        assert!(b.indices().windows(2).all(|w| w[0] <= w[1]));
        assert!(b.indices().iter().all(|i| *i < 500));
        assert_eq!(b.indices().len(), 500);
        assert!(BootstrapSample::from_indices(vec![3, 1, 9], 5).is_err());
        let f = BootstrapSample::from_indices(vec![3, 1, 1], 5).unwrap();
        assert_eq!(f.indices(), &[1, 1, 3]);
        assert_eq!(f.unique_fraction(), 0.4);
    }

    fn diverging_model() -> EsnModel {
        let m = init_esn(&config(0)).unwrap().train(&series(60)).unwrap();
        let mut w = Matrix::zeros(1, 22);
        w.set(0, 0, 1.0);
        w.set(0, 1, 2.0);
        m.with_readout(w).unwrap()
    }

    #[test]
    fn divergence_policy() {
        let e = Ensemble::uniform(
            vec![constant_model(1.0), diverging_model(), constant_model(3.0)],
            EnsembleKind::Perturbation,
        )
        .unwrap();
        match predict_ensemble(&e, PredictMode::Generative(100), OnDiverged::Fail) {
            Err(Error::Member { index: 1, source }) => assert!(source.is_divergence()),
            other => panic!("{other:?}"),
        }
        let p = predict_ensemble(&e, PredictMode::Generative(100), OnDiverged::DropAndRenormalize).unwrap();
        assert_eq!(p.dropped, vec![1]);
        assert!(p.output.values().iter().all(|v| (*v - 2.0).abs() < 1e-15));
        assert!((p.weights.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        let all_bad = Ensemble::uniform(vec![diverging_model()], EnsembleKind::Perturbation).unwrap();
        assert!(predict_ensemble(&all_bad, PredictMode::Generative(100), OnDiverged::DropAndRenormalize).is_err());
    }

    #[test]
    fn cv_grid_handling() {
        let s = series(400);
        let c = EsnConfig { n_res: 10, ..config(1) };
        let one = select_m_cv(EnsembleKind::Perturbation, &c, &s, &[1], 2, 30).unwrap();
        assert_eq!(one.chosen, 1);
        assert_eq!(one.curve.len(), 1);
        let a = select_m_cv(EnsembleKind::Bagging, &c, &s, &[1, 3, 2], 2, 30).unwrap();
        let b = select_m_cv(EnsembleKind::Bagging, &c, &s, &[3, 1, 2, 2, 3], 2, 30).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.curve.iter().map(|p| p.0).collect::<Vec<_>>(), vec![1, 2, 3]);
        assert!(select_m_cv(EnsembleKind::Bagging, &c, &s, &[], 2, 30).is_err());
        assert!(select_m_cv(EnsembleKind::Bagging, &c, &s, &[1], 1, 30).is_err());
        assert!(select_m_cv(EnsembleKind::Bagging, &c, &s, &[1], 2, 300).is_err());
    }

    #[test]
    fn manifest_roundtrip() {
        let s = series(200);
        let e = train_bagging_ensemble(&config(6), &s, 3).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ens.manifest");
        save_ensemble(&path, &e).unwrap();
        let back = load_ensemble(&path).unwrap();
        assert_eq!(back, e);
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("kind = bagging\n"));
        fs::write(&path, text.replace("kind = bagging", "kind = boosting")).unwrap();
        assert!(matches!(load_ensemble(&path), Err(Error::Parse { line: 1, .. })));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn jensen_bound_holds(seed in 0u64..500, m in 1usize..5, raw in proptest::collection::vec(0.01f64..1.0, 5)) {
            let s = series(250);
            let e = train_perturbation_ensemble(&config(seed), &s.slice(0, 200).unwrap(), m).unwrap();
            let total: f64 = raw[..m].iter().sum();
            let weights: Vec<f64> = raw[..m].iter().map(|w| w / total).collect();
            let w_sum: f64 = weights.iter().sum();
            let mut weights = weights;
            weights[0] += 1.0 - w_sum;
            let e = Ensemble::new(e.members().to_vec(), weights, EnsembleKind::Perturbation).unwrap();
            let p = match predict_ensemble(&e, PredictMode::Generative(50), OnDiverged::DropAndRenormalize) {
                Ok(p) => p,
                Err(err) if err.is_divergence() => return Ok(()),
                Err(err) => panic!("{err}"),
            };
            let (ens, bound) = p.jensen(&s.values()[200..250]).unwrap();
            prop_assert!(ens <= bound + 1e-12, "{} > {}", ens, bound);
        }

        #[test]
        fn member_order_does_not_matter(seed in 0u64..500) {
            let s = series(220);
            let e = train_perturbation_ensemble(&config(seed), &s, 4).unwrap();
            let weights = vec![0.1, 0.2, 0.3, 0.4];
            let fwd = Ensemble::new(e.members().to_vec(), weights.clone(), EnsembleKind::Perturbation).unwrap();
            let mut members = e.members().to_vec();
            members.reverse();
            let rev_w: Vec<f64> = weights.iter().rev().copied().collect();
            let rev = Ensemble::new(members, rev_w, EnsembleKind::Perturbation).unwrap();
            let a = predict_ensemble(&fwd, PredictMode::Generative(30), OnDiverged::Fail).unwrap();
            let b = predict_ensemble(&rev, PredictMode::Generative(30), OnDiverged::Fail).unwrap();
            for (x, y) in a.output.values().iter().zip(b.output.values()) {
                prop_assert!((x - y).abs() <= 1e-13 * x.abs().max(1.0), "{} vs {}", x, y);
            }
        }
    }
}
