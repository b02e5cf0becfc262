//! Column scaling fitted on training data and applied to unseen data.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::ts::{compensated_sum, TimeSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PreprocessKind {
    /// `(x - min) / (max - min)`
    Cubitize,
    /// `(x - mean) / sd`, sample standard deviation
    Standardize,
    /// `(x - mean) / ||x - mean||_2`
    Unitize,
}

impl fmt::Display for PreprocessKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PreprocessKind::Cubitize => "cubitize",
            PreprocessKind::Standardize => "standardize",
            PreprocessKind::Unitize => "unitize",
        })
    }
}

impl FromStr for PreprocessKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "cubitize" => Ok(PreprocessKind::Cubitize),
            "standardize" => Ok(PreprocessKind::Standardize),
            "unitize" => Ok(PreprocessKind::Unitize),
            other => Err(Error::usage(format!("unknown preprocessing `{other}`"))),
        }
    }
}

/// A fitted affine transform `x -> (x - offset) / scale`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Preprocessor {
    pub kind: PreprocessKind,
    pub offset: f64,
    pub scale: f64,
}

fn mean(v: &[f64]) -> f64 {
    compensated_sum(v.iter().copied()) / v.len() as f64
}

/// Fit the transform statistics on `train`.
pub fn fit_preprocess(kind: PreprocessKind, train: &TimeSeries) -> Result<Preprocessor> {
    let v = train.values();
    let (offset, scale) = match kind {
        PreprocessKind::Cubitize => {
            let (lo, hi) = v
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(*x), b.max(*x)));
            if !(hi > lo) {
                return Err(Error::DegenerateScaling(format!(
                    "cubitize needs max > min, training series is constant ({lo})"
                )));
            }
            (lo, hi - lo)
        }
        PreprocessKind::Standardize => {
            if v.len() < 2 {
                return Err(Error::DegenerateScaling(
                    "standardize needs at least two samples".into(),
                ));
            }
            let m = mean(v);
            let ss = compensated_sum(v.iter().map(|x| (x - m) * (x - m)));
            let var = ss / (v.len() - 1) as f64;
            if !(var > 0.0) {
                return Err(Error::DegenerateScaling("standardize needs variance > 0".into()));
            }
            (m, var.sqrt())
        }
        PreprocessKind::Unitize => {
            let m = mean(v);
            let ss = compensated_sum(v.iter().map(|x| (x - m) * (x - m)));
            if !(ss > 0.0) {
                return Err(Error::DegenerateScaling("unitize needs a nonzero centred norm".into()));
            }
            (m, ss.sqrt())
        }
    };
    Ok(Preprocessor { kind, offset, scale })
}

impl Preprocessor {
    pub fn apply(&self, series: &TimeSeries) -> Result<TimeSeries> {
        let values = series.values().iter().map(|x| (x - self.offset) / self.scale).collect();
        TimeSeries::new(series.name(), values)
    }

    pub fn invert(&self, series: &TimeSeries) -> Result<TimeSeries> {
        let values = series.values().iter().map(|y| y * self.scale + self.offset).collect();
        TimeSeries::new(series.name(), values)
    }
}
