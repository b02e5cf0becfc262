//! Synthetic benchmark series: ARMA(1,1) with optional polynomial trend and
//! a sampled high-frequency sine with optional linear trend.

use std::f64::consts::PI;

use crate::distributions::RngStream;
use crate::error::{Error, Result};
use crate::ts::TimeSeries;

pub const ARMA_PHI: f64 = 0.81;
pub const ARMA_THETA: f64 = 0.72;

fn arma_trend(t: f64) -> f64 {
    let s = t / 1000.0;
    s + s * s
}

/// ARMA(1,1) recursion `X_t = e_t + phi X_{t-1} + theta e_{t-1} [+ trend(t)]`
/// driven by the given innovations `e_1, e_2, ...`, with `X_0 = e_0 = 0`.
///
/// The trend term sits inside the recursion, so it propagates through the
/// autoregressive part.
pub fn arma_from_innovations(innovations: &[f64], with_trend: bool) -> Result<TimeSeries> {
    if innovations.is_empty() {
        return Err(Error::usage("need at least one innovation"));
    }
    let mut x_prev = 0.0;
    let mut e_prev = 0.0;
    let mut out = Vec::with_capacity(innovations.len());
    for (i, &e) in innovations.iter().enumerate() {
        let t = (i + 1) as f64;
        let mut x = e + ARMA_PHI * x_prev + ARMA_THETA * e_prev;
        if with_trend {
            x += arma_trend(t);
        }
        out.push(x);
        x_prev = x;
        e_prev = e;
    }
    let name = if with_trend { "arma-trend" } else { "arma" };
    TimeSeries::new(name, out)
}

/// `n` ARMA(1,1) samples with standard Gaussian innovations; the first
/// `burn_in` generated values are discarded.
pub fn gen_arma(n: usize, with_trend: bool, burn_in: usize, rng: &mut RngStream) -> Result<TimeSeries> {
    if n == 0 {
        return Err(Error::usage("need at least one sample"));
    }
    let innovations: Vec<f64> = (0..n + burn_in).map(|_| rng.standard_normal()).collect();
    let full = arma_from_innovations(&innovations, with_trend)?;
    let name = full.name().to_string();
    TimeSeries::new(name, full.into_values().split_off(burn_in))
}

/// `X_t = sin((1 + t) pi^3) [+ t / 1000]` for `t = 1..=n`.
pub fn gen_sine(n: usize, with_trend: bool) -> Result<TimeSeries> {
    if n == 0 {
        return Err(Error::usage("need at least one sample"));
    }
    let pi3 = PI * PI * PI;
    let values = (1..=n)
        .map(|t| {
            let t = t as f64;
            let s = ((1.0 + t) * pi3).sin();
            if with_trend {
                s + t / 1000.0
            } else {
                s
            }
        })
        .collect();
    TimeSeries::new(if with_trend { "sine-trend" } else { "sine" }, values)
}
