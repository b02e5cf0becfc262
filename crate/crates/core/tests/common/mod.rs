//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use std::collections::VecDeque;

use esn_core::linalg::Matrix;

/// Forward Euler on the Mackey-Glass delay equation with default
/// parameters, `sub` steps per unit of time, sampled at integer times.
pub fn mg_euler(n: usize, sub: usize) -> Vec<f64> {
    let (tau, a, b, history) = (17.0, 0.2, -0.1, 1.2);
    let h = 1.0 / sub as f64;
    let lag = (tau * sub as f64).round() as usize;
    let mut past: VecDeque<f64> = std::iter::repeat(history).take(lag).collect();
    let mut x = history;
    let mut out = Vec::with_capacity(n);
    for i in 0..n * sub {
        if i % sub == 0 {
            out.push(x);
        }
        let d = past.pop_front().unwrap();
        past.push_back(x);
        x += h * (b * x + a * d / (1.0 + d.powi(10)));
    }
    out
}

/// Largest pointwise relative difference of `a` against `b`.
pub fn max_rel_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| ((x - y) / y).abs())
        .fold(0.0, f64::max)
}

/// Kolmogorov-Smirnov distance between a sample and a CDF.
pub fn ks_distance(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Arcsine CDF on `[lo, hi]`: `(2/pi) asin(sqrt((w - lo) / (hi - lo)))`.
pub fn arcsine_cdf(w: f64, lo: f64, hi: f64) -> f64 {
    let z = ((w - lo) / (hi - lo)).clamp(0.0, 1.0);
    2.0 / std::f64::consts::PI * z.sqrt().asin()
}

/// Spectral radius from a dense real Schur decomposition.
pub fn dense_radius(w: &Matrix) -> f64 {
    let m = nalgebra::DMatrix::from_row_slice(w.rows(), w.cols(), w.data());
    nalgebra::linalg::Schur::try_new(m, 1e-14, 100_000)
        .expect("dense Schur decomposition")
        .complex_eigenvalues()
        .iter()
        .map(|c| c.norm())
        .fold(0.0, f64::max)
}
