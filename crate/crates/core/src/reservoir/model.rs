use crate::distributions::{derive_stream, sample, RngStream};
use crate::error::{Error, Result};
use crate::linalg::{
    dot, matvec_into, ridge_solve, scale_to_spectral_radius_with, Matrix, DEFAULT_SPECTRAL_MAX_ITER,
    DEFAULT_SPECTRAL_TOL,
};
use crate::ts::{mse_slice, TimeSeries};

use super::config::{EsnConfig, InitState, LeakMode};

/// Purpose codes of the per-member random streams.
pub mod stream {
    pub const W_IN: u64 = 0;
    pub const W: u64 = 1;
    pub const W_BACK: u64 = 2;
    pub const ALPHA: u64 = 3;
    pub const TAU: u64 = 4;
    pub const INIT_STATE: u64 = 5;
    pub const MASK: u64 = 6;
    pub const BOOTSTRAP: u64 = 7;
    pub const ALPHA_PREDICT: u64 = 8;
    pub const TAU_PREDICT: u64 = 9;
    pub const PER_MEMBER: u64 = 16;

    /// Stream id of `purpose` for ensemble member `member`. Member 0 uses the
    /// plain purpose codes, so a lone model and member 0 coincide.
    pub fn id(member: u64, purpose: u64) -> u64 {
        member * PER_MEMBER + purpose
    }
}

/// Regressors and targets collected by a teacher-forced run.
#[derive(Debug, Clone)]
pub struct Harvest {
    /// `(1 + K + N) x T`, one `[1; u(n); x(n)]` column per kept step.
    pub states: Matrix,
    /// `L x T`.
    pub targets: Matrix,
    pub final_state: Vec<f64>,
    pub last_input: f64,
}

impl Harvest {
    pub fn columns(&self) -> usize {
        self.states.cols()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EsnModel {
    pub(crate) config: EsnConfig,
    pub(crate) member: u64,
    pub(crate) w_in: Matrix,
    pub(crate) w: Matrix,
    pub(crate) w_back: Option<Matrix>,
    pub(crate) w_out: Option<Matrix>,
    pub(crate) last_state: Vec<f64>,
    pub(crate) last_input: f64,
}

/// Per-run sources of the dynamic leaking rate and state noise.
struct Perturbations {
    alpha: Option<RngStream>,
    tau: Option<RngStream>,
    noise: Vec<f64>,
}

impl Perturbations {
    fn new(model: &EsnModel, alpha_purpose: u64, tau_purpose: u64) -> Self {
        let c = &model.config;
        let seed = c.master_seed;
        let alpha = matches!(c.leak, LeakMode::Dynamic { .. })
            .then(|| derive_stream(seed, stream::id(model.member, alpha_purpose)));
        let tau = c
            .state_noise
            .map(|_| derive_stream(seed, stream::id(model.member, tau_purpose)));
        let noise = if tau.is_some() { vec![0.0; c.n_res] } else { Vec::new() };
        Self { alpha, tau, noise }
    }

    fn next(&mut self, config: &EsnConfig) -> (f64, Option<&[f64]>) {
        let alpha = match (config.leak, self.alpha.as_mut()) {
            (LeakMode::Fixed(a), _) => a,
            (LeakMode::Dynamic { lo, hi }, Some(rng)) => rng.uniform_in(lo, hi),
            (LeakMode::Dynamic { lo, .. }, None) => lo,
        };
        let tau = match (config.state_noise, self.tau.as_mut()) {
            (Some(noise), Some(rng)) => {
                for t in self.noise.iter_mut() {
                    *t = noise.law.draw(noise.scale, rng);
                }
                Some(self.noise.as_slice())
            }
            _ => None,
        };
        (alpha, tau)
    }
}

/// Initial reservoir state.
pub fn init_state(config: &EsnConfig, rng: &mut RngStream) -> Vec<f64> {
    let n = config.n_res;
    match config.init_state {
        InitState::Zero => vec![0.0; n],
        InitState::GaussianPerturb { sigma } => (0..n).map(|_| sigma * rng.standard_normal()).collect(),
        InitState::UniformPerturb { lo, hi } => (0..n).map(|_| rng.uniform_in(lo, hi)).collect(),
    }
}

/// Random reservoir for `config` with the streams of member 0.
pub fn init_esn(config: &EsnConfig) -> Result<EsnModel> {
    init_member(config, 0)
}

/// Random reservoir built from the streams of ensemble member `member`.
pub fn init_member(config: &EsnConfig, member: u64) -> Result<EsnModel> {
    config.validate()?;
    let (n, k, l) = (config.n_res, config.k_in, config.l_out);
    let seed = config.master_seed;
    let rng = |purpose| derive_stream(seed, stream::id(member, purpose));

    let w_in_raw = sample(&config.w_in_spec, &mut rng(stream::W_IN), n * (1 + k))?;
    let w_in = Matrix::from_vec(n, 1 + k, w_in_raw)?.scaled(config.input_scaling);

    let mut w_raw = sample(&config.w_spec, &mut rng(stream::W), n * n)?;
    if config.density < 1.0 {
        apply_mask(&mut w_raw, config.density, &mut rng(stream::MASK))?;
    }
    let w_raw = Matrix::from_vec(n, n, w_raw)?;
    let (w, _) =
        scale_to_spectral_radius_with(&w_raw, config.rho, DEFAULT_SPECTRAL_TOL, DEFAULT_SPECTRAL_MAX_ITER)
            .map_err(|e| match e {
                Error::CannotScale(msg) => Error::CannotScale(format!(
                    "{msg}; raise density ({}) or n_res ({n})",
                    config.density
                )),
                other => other,
            })?;

    let w_back = if config.feedback {
        let raw = sample(&config.w_in_spec, &mut rng(stream::W_BACK), n * l)?;
        Some(Matrix::from_vec(n, l, raw)?.scaled(config.input_scaling))
    } else {
        None
    };

    Ok(EsnModel {
        config: config.clone(),
        member,
        w_in,
        w,
        w_back,
        w_out: None,
        last_state: vec![0.0; n],
        last_input: 0.0,
    })
}

/// Zero all but `floor(density * len)` entries, chosen uniformly.
fn apply_mask(values: &mut [f64], density: f64, rng: &mut RngStream) -> Result<()> {
    let len = values.len();
    let keep = (density * len as f64).floor() as usize;
    if keep == 0 {
        return Err(Error::CannotScale(format!(
            "density {density} leaves no nonzero reservoir entry; raise density or n_res"
        )));
    }
    // partial Fisher-Yates: the first `keep` slots of `order` are the kept entries
    let mut order: Vec<u32> = (0..len as u32).collect();
    for i in 0..keep {
        let j = i + rng.below((len - i) as u64) as usize;
        order.swap(i, j);
    }
    let mut kept = vec![false; len];
    for &i in &order[..keep] {
        kept[i as usize] = true;
    }
    for (v, keep) in values.iter_mut().zip(kept) {
        if !keep {
            *v = 0.0;
        }
    }
    Ok(())
}

impl EsnModel {
    pub fn config(&self) -> &EsnConfig {
        &self.config
    }

    pub fn member(&self) -> u64 {
        self.member
    }

    pub fn w_in(&self) -> &Matrix {
        &self.w_in
    }

    pub fn w(&self) -> &Matrix {
        &self.w
    }

    pub fn w_back(&self) -> Option<&Matrix> {
        self.w_back.as_ref()
    }

    pub fn w_out(&self) -> Option<&Matrix> {
        self.w_out.as_ref()
    }

    pub fn is_trained(&self) -> bool {
        self.w_out.is_some()
    }

    pub fn last_state(&self) -> &[f64] {
        &self.last_state
    }

    /// Final training input, the first input of a generative continuation.
    pub fn last_input(&self) -> f64 {
        self.last_input
    }

    /// Replace the readout, e.g. with an externally fitted one.
    pub fn with_readout(mut self, w_out: Matrix) -> Result<EsnModel> {
        let c = &self.config;
        if w_out.rows() != c.l_out || w_out.cols() != 1 + c.k_in + c.n_res {
            return Err(Error::Dimension(format!(
                "readout must be {}x{}, got {}x{}",
                c.l_out,
                1 + c.k_in + c.n_res,
                w_out.rows(),
                w_out.cols()
            )));
        }
        self.w_out = Some(w_out);
        Ok(self)
    }

    fn check_univariate(&self) -> Result<()> {
        if self.config.k_in != 1 || self.config.l_out != 1 {
            return Err(Error::Dimension(
                "series operations need k_in = l_out = 1".into(),
            ));
        }
        Ok(())
    }

    /// One state update, in place. `pre` is scratch of length N.
    #[allow(clippy::too_many_arguments)]
    fn step(
        &self,
        x: &mut [f64],
        pre: &mut [f64],
        u: &[f64],
        y_prev: &[f64],
        alpha: f64,
        tau: Option<&[f64]>,
        step: usize,
    ) -> Result<()> {
        matvec_into(&self.w, x, pre);
        let limit = self.config.divergence_limit;
        for (i, p) in pre.iter_mut().enumerate() {
            let w_in = self.w_in.row(i);
            let mut a = *p + w_in[0] + dot(&w_in[1..], u);
            if let Some(wb) = &self.w_back {
                a += dot(wb.row(i), y_prev);
            }
            if let Some(t) = tau {
                a += t[i];
            }
            if !(a.abs() <= limit) {
                return Err(Error::DivergedState { step });
            }
            *p = a;
        }
        for (xi, a) in x.iter_mut().zip(pre.iter()) {
            *xi = (1.0 - alpha) * *xi + alpha * a.tanh();
        }
        Ok(())
    }

    /// `x = (1 - alpha) x_prev + alpha tanh(W_in [1; u] + W x_prev + W_back y_prev + tau)`.
    pub fn update_state(
        &self,
        x_prev: &[f64],
        u: &[f64],
        y_prev: Option<&[f64]>,
        alpha: f64,
        tau: Option<&[f64]>,
    ) -> Result<Vec<f64>> {
        let c = &self.config;
        if x_prev.len() != c.n_res || u.len() != c.k_in {
            return Err(Error::Dimension(format!(
                "state {} / input {} vs n_res {} / k_in {}",
                x_prev.len(),
                u.len(),
                c.n_res,
                c.k_in
            )));
        }
        if tau.is_some_and(|t| t.len() != c.n_res) {
            return Err(Error::Dimension("noise vector must have length n_res".into()));
        }
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::usage(format!("leaking rate must lie in (0, 1], got {alpha}")));
        }
        let zeros = vec![0.0; c.l_out];
        let y_prev = y_prev.unwrap_or(&zeros);
        if y_prev.len() != c.l_out {
            return Err(Error::Dimension("previous output must have length l_out".into()));
        }
        let mut x = x_prev.to_vec();
        let mut pre = vec![0.0; c.n_res];
        self.step(&mut x, &mut pre, u, y_prev, alpha, tau, 0)?;
        Ok(x)
    }

    /// Teacher-forced run with `u(n) = series[n]` and target `series[n + 1]`;
    /// the first `washout_len` steps are discarded.
    pub fn harvest_states(&self, series: &TimeSeries) -> Result<Harvest> {
        self.check_univariate()?;
        let v = series.values();
        let washout = self.config.washout_len;
        if v.len() < washout + 2 {
            return Err(Error::usage(format!(
                "series of length {} is too short for washout {washout}",
                v.len()
            )));
        }
        let n = self.config.n_res;
        let cols = v.len() - 1 - washout;
        let d = 2 + n;
        let mut states = vec![0.0; d * cols];
        let mut targets = Vec::with_capacity(cols);

        let mut x = init_state(
            &self.config,
            &mut derive_stream(self.config.master_seed, stream::id(self.member, stream::INIT_STATE)),
        );
        let mut pre = vec![0.0; n];
        let mut perturb = Perturbations::new(self, stream::ALPHA, stream::TAU);
        for t in 0..v.len() - 1 {
            let u = [v[t]];
            let y_prev = if t == 0 { [0.0] } else { [v[t]] };
            let (alpha, tau) = perturb.next(&self.config);
            self.step(&mut x, &mut pre, &u, &y_prev, alpha, tau, t)?;
            if t >= washout {
                let c = t - washout;
                states[c] = 1.0;
                states[cols + c] = v[t];
                for (i, xi) in x.iter().enumerate() {
                    states[(2 + i) * cols + c] = *xi;
                }
                targets.push(v[t + 1]);
            }
        }
        Ok(Harvest {
            states: Matrix::from_vec(d, cols, states)?,
            targets: Matrix::from_vec(1, cols, targets)?,
            final_state: x,
            last_input: v[v.len() - 1],
        })
    }

    /// Fit the readout on `series` with ridge regression.
    pub fn train(self, series: &TimeSeries) -> Result<EsnModel> {
        let harvest = self.harvest_states(series)?;
        self.fit(&harvest, None)
    }

    /// Fit the readout on a harvest, optionally on a subset (with repeats)
    /// of its columns.
    pub fn fit(mut self, harvest: &Harvest, columns: Option<&[usize]>) -> Result<EsnModel> {
        if harvest.states.rows() != 1 + self.config.k_in + self.config.n_res {
            return Err(Error::Dimension("harvest does not match this reservoir".into()));
        }
        let w_out = match columns {
            None => ridge_solve(&harvest.states, &harvest.targets, self.config.beta)?,
            Some(idx) => ridge_solve(
                &harvest.states.select_columns(idx)?,
                &harvest.targets.select_columns(idx)?,
                self.config.beta,
            )?,
        };
        self.w_out = Some(w_out);
        self.last_state = harvest.final_state.clone();
        self.last_input = harvest.last_input;
        Ok(self)
    }

    /// Mean squared one-step error of the readout over a harvest.
    pub fn training_mse(&self, harvest: &Harvest) -> Result<f64> {
        let w_out = self.w_out.as_ref().ok_or(Error::Untrained)?;
        let s = &harvest.states;
        let fitted: Vec<f64> = (0..s.cols())
            .map(|j| (0..s.rows()).map(|i| w_out.get(0, i) * s.get(i, j)).sum())
            .collect();
        mse_slice(&fitted, harvest.targets.row(0))
    }

    fn readout(&self, w_out: &Matrix, u: f64, x: &[f64]) -> f64 {
        let row = w_out.row(0);
        row[0] + row[1] * u + dot(&row[2..], x)
    }

    /// Free-running continuation: each output becomes the next input.
    pub fn predict_generative(&self, n_steps: usize) -> Result<TimeSeries> {
        self.check_univariate()?;
        let w_out = self.w_out.as_ref().ok_or(Error::Untrained)?;
        if n_steps == 0 {
            return Err(Error::usage("need at least one prediction step"));
        }
        let limit = self.config.divergence_limit;
        let mut x = self.last_state.clone();
        let mut pre = vec![0.0; self.config.n_res];
        let mut perturb = Perturbations::new(self, stream::ALPHA_PREDICT, stream::TAU_PREDICT);
        let mut u = self.last_input;
        let mut out = Vec::with_capacity(n_steps);
        for t in 0..n_steps {
            let (alpha, tau) = perturb.next(&self.config);
            self.step(&mut x, &mut pre, &[u], &[u], alpha, tau, t)?;
            let y = self.readout(w_out, u, &x);
            if !(y.abs() <= limit) {
                return Err(Error::DivergedPrediction { step: t, value: y });
            }
            out.push(y);
            u = y;
        }
        TimeSeries::new("generative", out)
    }

    /// One-step-ahead outputs with the true input supplied at every step,
    /// continuing from the end of training.
    pub fn predict_guided(&self, inputs: &TimeSeries) -> Result<TimeSeries> {
        self.check_univariate()?;
        let w_out = self.w_out.as_ref().ok_or(Error::Untrained)?;
        let limit = self.config.divergence_limit;
        let mut x = self.last_state.clone();
        let mut pre = vec![0.0; self.config.n_res];
        let mut perturb = Perturbations::new(self, stream::ALPHA_PREDICT, stream::TAU_PREDICT);
        let mut out = Vec::with_capacity(inputs.len());
        for (t, &u) in inputs.values().iter().enumerate() {
            let (alpha, tau) = perturb.next(&self.config);
            self.step(&mut x, &mut pre, &[u], &[u], alpha, tau, t)?;
            let y = self.readout(w_out, u, &x);
            if !(y.abs() <= limit) {
                return Err(Error::DivergedPrediction { step: t, value: y });
            }
            out.push(y);
        }
        TimeSeries::new("guided", out)
    }
}
