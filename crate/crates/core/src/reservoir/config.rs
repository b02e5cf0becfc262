use std::fmt;
use std::str::FromStr;

use crate::distributions::{NoiseLaw, WeightSpec};
use crate::error::{Error, Result};

/// Leaking-rate schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LeakMode {
    Fixed(f64),
    /// Per-step rate drawn uniformly from `[lo, hi]`.
    Dynamic { lo: f64, hi: f64 },
}

/// Initial reservoir state before the first update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitState {
    Zero,
    GaussianPerturb { sigma: f64 },
    UniformPerturb { lo: f64, hi: f64 },
}

/// Per-step additive perturbation of the reservoir pre-activation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateNoise {
    pub law: NoiseLaw,
    pub scale: f64,
}

impl StateNoise {
    pub const DEFAULT_SCALE: f64 = 1e-4;
}

/// Hyperparameters of one echo state network.
#[derive(Debug, Clone, PartialEq)]
pub struct EsnConfig {
    pub k_in: usize,
    pub n_res: usize,
    pub l_out: usize,
    pub w_in_spec: WeightSpec,
    pub w_spec: WeightSpec,
    pub input_scaling: f64,
    /// Fraction of nonzero reservoir entries.
    pub density: f64,
    /// Target spectral radius of the reservoir matrix.
    pub rho: f64,
    pub leak: LeakMode,
    pub state_noise: Option<StateNoise>,
    pub init_state: InitState,
    pub feedback: bool,
    pub beta: f64,
    pub washout_len: usize,
    pub master_seed: u64,
    /// Bound on `|y|` and on the pre-activation sup-norm.
    pub divergence_limit: f64,
}

impl Default for EsnConfig {
    fn default() -> Self {
        Self {
            k_in: 1,
            n_res: 1000,
            l_out: 1,
            w_in_spec: WeightSpec::uniform_preset(),
            w_spec: WeightSpec::uniform_preset(),
            input_scaling: 1.0,
            density: 1.0,
            rho: 1.25,
            leak: LeakMode::Fixed(0.3),
            state_noise: None,
            init_state: InitState::Zero,
            feedback: false,
            beta: 1e-8,
            washout_len: 100,
            master_seed: 0,
            divergence_limit: 1e6,
        }
    }
}

fn in_unit_interval(a: f64) -> bool {
    a > 0.0 && a <= 1.0
}

impl EsnConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_in == 0 || self.n_res == 0 || self.l_out == 0 {
            return Err(Error::config("n_res", "layer sizes must be positive"));
        }
        self.w_in_spec
            .validate()
            .map_err(|e| Error::config("w_in_spec", e.to_string()))?;
        self.w_spec
            .validate()
            .map_err(|e| Error::config("w_spec", e.to_string()))?;
        if !(self.input_scaling > 0.0) || !self.input_scaling.is_finite() {
            return Err(Error::config("input_scaling", "must be positive"));
        }
        if !in_unit_interval(self.density) {
            return Err(Error::config("density", "must lie in (0, 1]"));
        }
        if !(self.rho > 0.0) || !self.rho.is_finite() {
            return Err(Error::config("rho", "must be positive"));
        }
        match self.leak {
            LeakMode::Fixed(a) if !in_unit_interval(a) => {
                return Err(Error::config("leak", "leaking rate must lie in (0, 1]"))
            }
            LeakMode::Dynamic { lo, hi } if !(in_unit_interval(lo) && in_unit_interval(hi) && lo <= hi) => {
                return Err(Error::config("leak", "dynamic bounds must satisfy 0 < lo <= hi <= 1"))
            }
            _ => {}
        }
        if let Some(noise) = self.state_noise {
            if !(noise.scale >= 0.0) || !noise.scale.is_finite() {
                return Err(Error::config("state_noise", "scale must be >= 0"));
            }
        }
        match self.init_state {
            InitState::GaussianPerturb { sigma } if !(sigma >= 0.0) || !sigma.is_finite() => {
                return Err(Error::config("init_state", "sigma must be >= 0"))
            }
            InitState::UniformPerturb { lo, hi } if !(lo.is_finite() && hi.is_finite() && lo <= hi) => {
                return Err(Error::config("init_state", "uniform bounds must satisfy lo <= hi"))
            }
            _ => {}
        }
        if !(self.beta >= 0.0) || !self.beta.is_finite() {
            return Err(Error::config("beta", "must be >= 0"));
        }
        if !(self.divergence_limit > 0.0) {
            return Err(Error::config("divergence_limit", "must be positive"));
        }
        Ok(())
    }

    /// Key/value rendering shared by model files and experiment configs.
    pub fn to_pairs(&self) -> Vec<(&'static str, String)> {
        vec![
            ("k_in", self.k_in.to_string()),
            ("n_res", self.n_res.to_string()),
            ("l_out", self.l_out.to_string()),
            ("w_in_spec", self.w_in_spec.to_string()),
            ("w_spec", self.w_spec.to_string()),
            ("input_scaling", self.input_scaling.to_string()),
            ("density", self.density.to_string()),
            ("rho", self.rho.to_string()),
            ("leak", self.leak.to_string()),
            (
                "state_noise",
                self.state_noise
                    .map_or_else(|| "none".to_string(), |n| format!("{}({})", n.law, n.scale)),
            ),
            ("init_state", self.init_state.to_string()),
            ("feedback", self.feedback.to_string()),
            ("beta", self.beta.to_string()),
            ("washout_len", self.washout_len.to_string()),
            ("master_seed", self.master_seed.to_string()),
            ("divergence_limit", self.divergence_limit.to_string()),
        ]
    }

    /// Set one key from its textual value. Errors name the key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let wrap = |e: Error| Error::config(key, e.to_string());
        let value = value.trim();
        match key {
            "k_in" => self.k_in = parse(key, value)?,
            "n_res" => self.n_res = parse(key, value)?,
            "l_out" => self.l_out = parse(key, value)?,
            "w_in_spec" => self.w_in_spec = value.parse().map_err(wrap)?,
            "w_spec" => self.w_spec = value.parse().map_err(wrap)?,
            "weights" => {
                let spec: WeightSpec = value.parse().map_err(wrap)?;
                self.w_in_spec = spec;
                self.w_spec = spec;
            }
            "input_scaling" => self.input_scaling = parse(key, value)?,
            "density" => self.density = parse(key, value)?,
            "rho" => self.rho = parse(key, value)?,
            "leak" => self.leak = value.parse().map_err(wrap)?,
            "state_noise" => {
                self.state_noise = if value == "none" {
                    None
                } else {
                    let (law, args) = call_args(value).map_err(wrap)?;
                    let scale = match args.as_slice() {
                        [] => StateNoise::DEFAULT_SCALE,
                        [s] => parse(key, s)?,
                        _ => return Err(Error::config(key, "expected law(scale)")),
                    };
                    Some(StateNoise {
                        law: law.parse().map_err(wrap)?,
                        scale,
                    })
                }
            }
            "init_state" => self.init_state = value.parse().map_err(wrap)?,
            "feedback" => self.feedback = parse(key, value)?,
            "beta" => self.beta = parse(key, value)?,
            "washout_len" => self.washout_len = parse(key, value)?,
            "master_seed" => self.master_seed = parse(key, value)?,
            "divergence_limit" => self.divergence_limit = parse(key, value)?,
            other => return Err(Error::config(other, "unknown key")),
        }
        Ok(())
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::config(key, format!("cannot parse `{value}`")))
}

/// Split `name(a,b,...)` into the name and trimmed arguments; a bare word
/// has no arguments.
fn call_args(s: &str) -> Result<(&str, Vec<&str>)> {
    let s = s.trim();
    match s.find('(') {
        None => Ok((s, Vec::new())),
        Some(open) => {
            let inner = s[open + 1..]
                .strip_suffix(')')
                .ok_or_else(|| Error::usage(format!("`{s}` is missing `)`")))?;
            let args = if inner.trim().is_empty() {
                Vec::new()
            } else {
                inner.split(',').map(str::trim).collect()
            };
            Ok((s[..open].trim(), args))
        }
    }
}

fn num(s: &str) -> Result<f64> {
    s.parse()
        .map_err(|_| Error::usage(format!("cannot parse `{s}` as a number")))
}

impl fmt::Display for LeakMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LeakMode::Fixed(a) => write!(f, "{a}"),
            LeakMode::Dynamic { lo, hi } => write!(f, "dynamic({lo},{hi})"),
        }
    }
}

impl FromStr for LeakMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, args) = call_args(s)?;
        match (name, args.as_slice()) {
            ("dynamic", [lo, hi]) => Ok(LeakMode::Dynamic {
                lo: num(lo)?,
                hi: num(hi)?,
            }),
            ("fixed", [a]) => Ok(LeakMode::Fixed(num(a)?)),
            (a, []) => Ok(LeakMode::Fixed(num(a)?)),
            _ => Err(Error::usage(format!("cannot parse leaking rate `{s}`"))),
        }
    }
}

impl fmt::Display for InitState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitState::Zero => f.write_str("zero"),
            InitState::GaussianPerturb { sigma } => write!(f, "gaussian({sigma})"),
            InitState::UniformPerturb { lo, hi } => write!(f, "uniform({lo},{hi})"),
        }
    }
}

impl FromStr for InitState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, args) = call_args(s)?;
        match (name, args.as_slice()) {
            ("zero", []) => Ok(InitState::Zero),
            ("gaussian", [sigma]) => Ok(InitState::GaussianPerturb { sigma: num(sigma)? }),
            ("uniform", [lo, hi]) => Ok(InitState::UniformPerturb {
                lo: num(lo)?,
                hi: num(hi)?,
            }),
            _ => Err(Error::usage(format!("cannot parse initial state `{s}`"))),
        }
    }
}
