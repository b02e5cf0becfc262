//! Seeded sampling for reservoir weight laws.
//!
//! Streams are ChaCha8 generators. A master seed is expanded to the 256-bit
//! ChaCha key with SplitMix64, and the stream id selects ChaCha's 64-bit
//! stream (nonce) word, so `(master_seed, stream_id)` pairs never share a
//! keystream. Uniform doubles take the top 53 bits of each `u64`; Gaussian
//! draws use the Box–Muller transform on consecutive uniform pairs, emitting
//! both the cosine and the sine branch.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};

const TWO_POW_NEG_53: f64 = 1.0 / (1u64 << 53) as f64;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A reproducible random stream identified by `(master_seed, stream_id)`.
#[derive(Debug, Clone)]
pub struct RngStream {
    master_seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
    spare_normal: Option<f64>,
}

/// Derive the stream `stream_id` of `master_seed`.
pub fn derive_stream(master_seed: u64, stream_id: u64) -> RngStream {
    let mut state = master_seed;
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(stream_id);
    RngStream {
        master_seed,
        stream_id,
        rng,
        spare_normal: None,
    }
}

impl RngStream {
    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * TWO_POW_NEG_53
    }

    /// Uniform on `(0, 1]`.
    fn uniform_open_low(&mut self) -> f64 {
        1.0 - self.uniform()
    }

    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Standard normal via Box–Muller.
    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        let u1 = self.uniform_open_low();
        let u2 = self.uniform();
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = 2.0 * PI * u2;
        self.spare_normal = Some(radius * angle.sin());
        radius * angle.cos()
    }

    /// Unbiased integer in `[0, bound)` (Lemire's multiply-and-reject).
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "bound must be positive");
        let threshold = bound.wrapping_neg() % bound;
        loop {
            let m = (self.next_u64() as u128) * (bound as u128);
            if (m as u64) >= threshold {
                return (m >> 64) as u64;
            }
        }
    }
}

/// A random-weight law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightSpec {
    Uniform { lo: f64, hi: f64 },
    Gaussian { mean: f64, variance: f64 },
    Arcsine { lo: f64, hi: f64 },
}

impl WeightSpec {
    pub const UNIFORM_LO: f64 = -0.5;
    pub const UNIFORM_HI: f64 = 0.5;
    /// Variance of the canonical uniform law on a unit-width interval.
    pub const SAME_VARIANCE: f64 = 1.0 / 12.0;
    /// Variance putting three standard deviations at 0.5.
    pub const SAME_RANGE: f64 = 1.0 / 36.0;

    pub fn uniform_preset() -> Self {
        WeightSpec::Uniform {
            lo: Self::UNIFORM_LO,
            hi: Self::UNIFORM_HI,
        }
    }

    pub fn gaussian_same_variance() -> Self {
        WeightSpec::Gaussian {
            mean: 0.0,
            variance: Self::SAME_VARIANCE,
        }
    }

    pub fn gaussian_same_range() -> Self {
        WeightSpec::Gaussian {
            mean: 0.0,
            variance: Self::SAME_RANGE,
        }
    }

    pub fn arcsine_preset() -> Self {
        WeightSpec::Arcsine {
            lo: Self::UNIFORM_LO,
            hi: Self::UNIFORM_HI,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            WeightSpec::Uniform { lo, hi } | WeightSpec::Arcsine { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                    return Err(Error::usage(format!(
                        "weight law support needs finite lo < hi, got ({lo}, {hi})"
                    )));
                }
            }
            WeightSpec::Gaussian { mean, variance } => {
                if !(mean.is_finite() && variance.is_finite() && variance > 0.0) {
                    return Err(Error::usage(format!(
                        "gaussian law needs finite mean and variance > 0, got ({mean}, {variance})"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Population variance of the law.
    pub fn variance(&self) -> f64 {
        match *self {
            WeightSpec::Uniform { lo, hi } => (hi - lo).powi(2) / 12.0,
            WeightSpec::Gaussian { variance, .. } => variance,
            WeightSpec::Arcsine { lo, hi } => (hi - lo).powi(2) / 8.0,
        }
    }

    fn draw(&self, rng: &mut RngStream) -> f64 {
        match *self {
            WeightSpec::Uniform { lo, hi } => rng.uniform_in(lo, hi),
            WeightSpec::Gaussian { mean, variance } => mean + variance.sqrt() * rng.standard_normal(),
            WeightSpec::Arcsine { lo, hi } => arcsine_from_uniform(rng.uniform(), lo, hi - lo),
        }
    }
}

impl fmt::Display for WeightSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightSpec::Uniform { lo, hi } => write!(f, "uniform({lo},{hi})"),
            WeightSpec::Gaussian { mean, variance } => write!(f, "gaussian(mean={mean},var={variance})"),
            WeightSpec::Arcsine { lo, hi } => write!(f, "arcsine({lo},{hi})"),
        }
    }
}

fn parse_num(s: &str, what: &str) -> Result<f64> {
    let s = s.trim();
    // Accept simple fractions like 1/12 so presets can be written exactly.
    if let Some((num, den)) = s.split_once('/') {
        let n: f64 = parse_num(num, what)?;
        let d: f64 = parse_num(den, what)?;
        return Ok(n / d);
    }
    s.parse::<f64>()
        .map_err(|_| Error::usage(format!("cannot parse {what} `{s}` as a number")))
}

impl FromStr for WeightSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let spec = match s {
            "uniform" => WeightSpec::uniform_preset(),
            "arcsine" => WeightSpec::arcsine_preset(),
            "gaussian_same_variance" => WeightSpec::gaussian_same_variance(),
            "gaussian_same_range" => WeightSpec::gaussian_same_range(),
            _ => {
                let open = s
                    .find('(')
                    .ok_or_else(|| Error::usage(format!("unrecognised weight law `{s}`")))?;
                if !s.ends_with(')') {
                    return Err(Error::usage(format!("weight law `{s}` is missing `)`")));
                }
                let kind = s[..open].trim();
                let args: Vec<&str> = s[open + 1..s.len() - 1].split(',').collect();
                if args.len() != 2 {
                    return Err(Error::usage(format!("weight law `{s}` needs two parameters")));
                }
                match kind {
                    "uniform" | "arcsine" => {
                        let lo = parse_num(args[0], "lo")?;
                        let hi = parse_num(args[1], "hi")?;
                        if kind == "uniform" {
                            WeightSpec::Uniform { lo, hi }
                        } else {
                            WeightSpec::Arcsine { lo, hi }
                        }
                    }
                    "gaussian" => {
                        let mut mean = None;
                        let mut variance = None;
                        for arg in args {
                            let (key, value) = arg.split_once('=').ok_or_else(|| {
                                Error::usage(format!("gaussian parameter `{arg}` must be key=value"))
                            })?;
                            match key.trim() {
                                "mean" => mean = Some(parse_num(value, "mean")?),
                                "var" => variance = Some(parse_num(value, "var")?),
                                other => {
                                    return Err(Error::usage(format!(
                                        "unknown gaussian parameter `{other}`"
                                    )))
                                }
                            }
                        }
                        WeightSpec::Gaussian {
                            mean: mean.ok_or_else(|| Error::usage("gaussian law needs mean="))?,
                            variance: variance.ok_or_else(|| Error::usage("gaussian law needs var="))?,
                        }
                    }
                    other => return Err(Error::usage(format!("unrecognised weight law `{other}`"))),
                }
            }
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// The four canonical laws compared in distribution studies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CanonicalLaw {
    Uniform,
    GaussianSameVariance,
    GaussianSameRange,
    Arcsine,
}

impl CanonicalLaw {
    pub const ALL: [CanonicalLaw; 4] = [
        CanonicalLaw::Uniform,
        CanonicalLaw::GaussianSameVariance,
        CanonicalLaw::GaussianSameRange,
        CanonicalLaw::Arcsine,
    ];

    pub fn spec(self) -> WeightSpec {
        match self {
            CanonicalLaw::Uniform => WeightSpec::uniform_preset(),
            CanonicalLaw::GaussianSameVariance => WeightSpec::gaussian_same_variance(),
            CanonicalLaw::GaussianSameRange => WeightSpec::gaussian_same_range(),
            CanonicalLaw::Arcsine => WeightSpec::arcsine_preset(),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            CanonicalLaw::Uniform => "uniform",
            CanonicalLaw::GaussianSameVariance => "gaussian_same_variance",
            CanonicalLaw::GaussianSameRange => "gaussian_same_range",
            CanonicalLaw::Arcsine => "arcsine",
        }
    }
}

/// `n` draws from `spec`.
pub fn sample(spec: &WeightSpec, rng: &mut RngStream, n: usize) -> Result<Vec<f64>> {
    spec.validate()?;
    Ok((0..n).map(|_| spec.draw(rng)).collect())
}

/// Noise law for per-step state perturbation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseLaw {
    /// Zero-mean Gaussian with standard deviation `scale`.
    Gaussian,
    /// Uniform on `[-scale, scale]`.
    Uniform,
}

impl NoiseLaw {
    pub fn draw(self, scale: f64, rng: &mut RngStream) -> f64 {
        match self {
            NoiseLaw::Gaussian => scale * rng.standard_normal(),
            NoiseLaw::Uniform => rng.uniform_in(-scale, scale),
        }
    }
}

impl fmt::Display for NoiseLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NoiseLaw::Gaussian => "gaussian",
            NoiseLaw::Uniform => "uniform",
        })
    }
}

impl FromStr for NoiseLaw {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "gaussian" => Ok(NoiseLaw::Gaussian),
            "uniform" => Ok(NoiseLaw::Uniform),
            other => Err(Error::usage(format!("unknown noise law `{other}`"))),
        }
    }
}

/// Arcsine density on `[a, a + l]`: `1 / (pi * sqrt((w - a)(a + l - w)))`.
///
/// Zero outside the support; the endpoints themselves are singular.
pub fn arcsine_pdf(w: f64, a: f64, l: f64) -> Result<f64> {
    if !(l > 0.0) {
        return Err(Error::usage("arcsine support length must be positive"));
    }
    let b = a + l;
    if w == a || w == b {
        return Err(Error::EndpointSingularity(w));
    }
    if w < a || w > b {
        return Ok(0.0);
    }
    Ok(1.0 / (PI * ((w - a) * (b - w)).sqrt()))
}

/// Arcsine distribution function `(2/pi) asin(sqrt((w - a) / l))`, clamped to
/// 0 below the support and 1 above it.
pub fn arcsine_cdf(w: f64, a: f64, l: f64) -> Result<f64> {
    if !(l > 0.0) {
        return Err(Error::usage("arcsine support length must be positive"));
    }
    if w <= a {
        return Ok(0.0);
    }
    if w >= a + l {
        return Ok(1.0);
    }
    Ok(2.0 / PI * ((w - a) / l).sqrt().asin())
}

#[inline]
fn arcsine_from_uniform(u: f64, a: f64, l: f64) -> f64 {
    let s = (FRAC_PI_2 * u).sin();
    a + l * s * s
}

/// Inverse-CDF arcsine sampler: `a + l * sin^2(pi U / 2)`.
pub fn sample_arcsine_inverse(rng: &mut RngStream, n: usize, a: f64, l: f64) -> Result<Vec<f64>> {
    if !(l > 0.0 && l.is_finite() && a.is_finite()) {
        return Err(Error::usage("arcsine sampler needs finite a and l > 0"));
    }
    Ok((0..n).map(|_| arcsine_from_uniform(rng.uniform(), a, l)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_encode_the_constants() {
        assert_eq!(
            WeightSpec::uniform_preset(),
            WeightSpec::Uniform { lo: -0.5, hi: 0.5 }
        );
        assert_eq!(
            WeightSpec::gaussian_same_variance(),
            WeightSpec::Gaussian {
                mean: 0.0,
                variance: 1.0 / 12.0
            }
        );
        assert_eq!(
            WeightSpec::gaussian_same_range(),
            WeightSpec::Gaussian {
                mean: 0.0,
                variance: 1.0 / 36.0
            }
        );
        assert_eq!(
            WeightSpec::uniform_preset().variance(),
            WeightSpec::gaussian_same_variance().variance()
        );
        // three standard deviations reach the uniform support edge
        assert!((3.0 * WeightSpec::SAME_RANGE.sqrt() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn parse_and_display() {
        for s in ["uniform(-0.5,0.5)", "gaussian(mean=0,var=0.0833333)", "arcsine(-0.5,0.5)"] {
            let spec: WeightSpec = s.parse().unwrap();
            assert_eq!(spec.to_string(), s);
        }
        let g: WeightSpec = "gaussian(mean=0,var=1/36)".parse().unwrap();
        assert_eq!(g, WeightSpec::gaussian_same_range());
        assert!("uniform(1,0)".parse::<WeightSpec>().is_err());
        assert!("gaussian(mean=0,var=-1)".parse::<WeightSpec>().is_err());
        assert!("cauchy(0,1)".parse::<WeightSpec>().is_err());
        let round: WeightSpec = WeightSpec::gaussian_same_variance().to_string().parse().unwrap();
        assert_eq!(round, WeightSpec::gaussian_same_variance());
    }

    #[test]
    fn invalid_spec_is_rejected_by_sample() {
        let mut rng = derive_stream(1, 0);
        let bad = WeightSpec::Uniform { lo: 1.0, hi: 1.0 };
        assert!(sample(&bad, &mut rng, 3).is_err());
    }

    #[test]
    fn uniform_variance() {
        let mut rng = derive_stream(7, 0);
        let x = sample(&WeightSpec::uniform_preset(), &mut rng, 10_000).unwrap();
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (x.len() - 1) as f64;
        assert!((var - 1.0 / 12.0).abs() < 0.1 / 12.0, "{var}");
        assert!(x.iter().all(|v| (-0.5..=0.5).contains(v)));
    }

    #[test]
    fn gaussian_same_range_coverage() {
        let mut rng = derive_stream(11, 3);
        let x = sample(&WeightSpec::gaussian_same_range(), &mut rng, 10_000).unwrap();
        let inside = x.iter().filter(|v| v.abs() <= 0.5).count();
        assert!(inside as f64 / 1e4 >= 0.995, "{inside}");
    }

    #[test]
    fn pdf_examples() {
        let two_over_pi = 2.0 / PI;
        assert!((arcsine_pdf(0.0, -0.5, 1.0).unwrap() - two_over_pi).abs() < 1e-15);
        for w in [-0.4, 0.4] {
            let expected = 1.0 / (0.3 * PI);
            assert!((arcsine_pdf(w, -0.5, 1.0).unwrap() - expected).abs() < 1e-12);
        }
        assert!(matches!(
            arcsine_pdf(-0.5, -0.5, 1.0),
            Err(Error::EndpointSingularity(_))
        ));
        assert_eq!(arcsine_pdf(0.7, -0.5, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn pdf_integrates_to_one() {
        // Midpoint rule in the angle variable w = a + l sin^2(t), which
        // regularises the endpoint singularities.
        let (a, l, eps) = (-0.5_f64, 1.0_f64, 1e-6_f64);
        let n = 200_000;
        let lo = a + eps;
        let hi = a + l - eps;
        let t0 = ((lo - a) / l).sqrt().asin();
        let t1 = ((hi - a) / l).sqrt().asin();
        let h = (t1 - t0) / n as f64;
        let mut total = 0.0;
        for i in 0..n {
            let t = t0 + (i as f64 + 0.5) * h;
            let w = a + l * t.sin().powi(2);
            let dw = 2.0 * l * t.sin() * t.cos();
            total += arcsine_pdf(w, a, l).unwrap() * dw * h;
        }
        // the truncated interval misses 2 F(a + eps) of mass
        let expected = 1.0 - 2.0 * arcsine_cdf(a + eps, a, l).unwrap();
        assert!((total - expected).abs() < 1e-9, "{total} vs {expected}");
        assert!((total - 1.0).abs() < 2e-3, "{total}");
    }

    #[test]
    fn cdf_examples() {
        assert!((arcsine_cdf(0.0, -0.5, 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(arcsine_cdf(-0.5, -0.5, 1.0).unwrap(), 0.0);
        assert_eq!(arcsine_cdf(0.5, -0.5, 1.0).unwrap(), 1.0);
        assert!((arcsine_cdf(0.25, -0.5, 1.0).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(arcsine_cdf(-3.0, -0.5, 1.0).unwrap(), 0.0);
        assert_eq!(arcsine_cdf(3.0, -0.5, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn pdf_is_derivative_of_cdf() {
        let (a, l) = (-0.5, 1.0);
        let h = 2e-7;
        let mut w = a + 1e-3;
        while w < a + l - 1e-3 {
            let fd = (arcsine_cdf(w + h, a, l).unwrap() - arcsine_cdf(w - h, a, l).unwrap()) / (2.0 * h);
            let pdf = arcsine_pdf(w, a, l).unwrap();
            assert!((fd - pdf).abs() < 1e-6, "w={w} fd={fd} pdf={pdf}");
            w += 1e-3;
        }
    }

    #[test]
    fn inverse_sampler_boundaries() {
        assert_eq!(arcsine_from_uniform(0.0, -0.5, 1.0), -0.5);
        assert_eq!(arcsine_from_uniform(1.0, -0.5, 1.0), 0.5);
        assert!((arcsine_from_uniform(0.5, 2.0, 4.0) - 4.0).abs() < 1e-15);
    }

    #[test]
    fn inverse_sampler_mean() {
        let (a, l) = (1.0, 3.0);
        let n = 100_000;
        let mut rng = derive_stream(5, 9);
        let x = sample_arcsine_inverse(&mut rng, n, a, l).unwrap();
        let mean = x.iter().sum::<f64>() / n as f64;
        let se = (l * l / 8.0 / n as f64).sqrt();
        assert!((mean - (a + l / 2.0)).abs() < 3.0 * se, "{mean}");
        assert!(x.iter().all(|v| (a..=a + l).contains(v)));
    }

    #[test]
    fn streams_are_deterministic_and_distinct() {
        let mut a = derive_stream(42, 0);
        let mut b = derive_stream(42, 0);
        let mut c = derive_stream(42, 1);
        let xa: Vec<u64> = (0..100).map(|_| a.next_u64()).collect();
        let xb: Vec<u64> = (0..100).map(|_| b.next_u64()).collect();
        let xc: Vec<u64> = (0..100).map(|_| c.next_u64()).collect();
        assert_eq!(xa, xb);
        assert_ne!(xa, xc);
        assert_eq!(a.master_seed(), 42);
        assert_eq!(c.stream_id(), 1);
    }

    #[test]
    fn below_is_in_range() {
        let mut rng = derive_stream(3, 3);
        let mut seen = [0usize; 7];
        for _ in 0..7000 {
            seen[rng.below(7) as usize] += 1;
        }
        assert!(seen.iter().all(|&c| c > 800 && c < 1200), "{seen:?}");
    }
}
