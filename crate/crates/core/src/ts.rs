//! Univariate time series, error metrics and train/test splitting.

use crate::error::{Error, Result};

/// A named, non-empty sequence of finite samples at unit time step.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    name: String,
    values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(name: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::usage("time series must have at least one value"));
        }
        check_finite(&values)?;
        Ok(Self {
            name: name.into(),
            values,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Contiguous sub-range `[start, end)` as a new series.
    pub fn slice(&self, start: usize, end: usize) -> Result<TimeSeries> {
        if start >= end || end > self.values.len() {
            return Err(Error::usage(format!(
                "slice [{start}, {end}) out of range for length {}",
                self.values.len()
            )));
        }
        Ok(TimeSeries {
            name: self.name.clone(),
            values: self.values[start..end].to_vec(),
        })
    }
}

pub(crate) fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite { index }),
        None => Ok(()),
    }
}

/// Neumaier-compensated sum.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for x in iter {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

fn paired<'a>(y: &'a [f64], target: &'a [f64]) -> Result<impl Iterator<Item = f64> + 'a> {
    if y.len() != target.len() {
        return Err(Error::LengthMismatch {
            left: y.len(),
            right: target.len(),
        });
    }
    if y.is_empty() {
        return Err(Error::usage("metrics need at least one sample"));
    }
    check_finite(y)?;
    check_finite(target)?;
    Ok(y.iter().zip(target).map(|(a, b)| a - b))
}

/// Mean squared error on raw slices.
pub fn mse_slice(y: &[f64], target: &[f64]) -> Result<f64> {
    let n = y.len() as f64;
    Ok(compensated_sum(paired(y, target)?.map(|d| d * d)) / n)
}

/// Mean absolute error on raw slices.
pub fn mae_slice(y: &[f64], target: &[f64]) -> Result<f64> {
    let n = y.len() as f64;
    Ok(compensated_sum(paired(y, target)?.map(f64::abs)) / n)
}

pub fn rmse_slice(y: &[f64], target: &[f64]) -> Result<f64> {
    mse_slice(y, target).map(f64::sqrt)
}

pub fn mse(y: &TimeSeries, target: &TimeSeries) -> Result<f64> {
    mse_slice(&y.values, &target.values)
}

pub fn mae(y: &TimeSeries, target: &TimeSeries) -> Result<f64> {
    mae_slice(&y.values, &target.values)
}

pub fn rmse(y: &TimeSeries, target: &TimeSeries) -> Result<f64> {
    rmse_slice(&y.values, &target.values)
}

/// Relative error change in percent, `|(e_ensemble - e_single) / e_single| * 100`.
///
/// The magnitude is returned; whether it is a reduction is decided by the
/// caller comparing the two errors (see [`signed_error_reduction`]).
pub fn error_reduction(e_single: f64, e_ensemble: f64) -> Result<f64> {
    if e_single == 0.0 {
        return Err(Error::UndefinedReduction);
    }
    if !e_single.is_finite() || !e_ensemble.is_finite() {
        return Err(Error::usage("error reduction needs finite errors"));
    }
    Ok(((e_ensemble - e_single) / e_single).abs() * 100.0)
}

/// Percent reduction, positive when the ensemble improves on the single model.
pub fn signed_error_reduction(e_single: f64, e_ensemble: f64) -> Result<f64> {
    let magnitude = error_reduction(e_single, e_ensemble)?;
    Ok(if e_ensemble <= e_single {
        magnitude
    } else {
        -magnitude
    })
}

/// Washout / training / test lengths over one source series.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitSpec {
    pub washout_len: usize,
    pub train_len: usize,
    pub test_len: usize,
}

impl SplitSpec {
    pub fn new(washout_len: usize, train_len: usize, test_len: usize) -> Self {
        Self {
            washout_len,
            train_len,
            test_len,
        }
    }

    pub fn validate(&self, source_len: usize) -> Result<()> {
        if self.washout_len >= self.train_len {
            return Err(Error::usage(format!(
                "washout_len ({}) must be smaller than train_len ({})",
                self.washout_len, self.train_len
            )));
        }
        let needed = self.washout_len + self.train_len + self.test_len;
        if needed > source_len {
            return Err(Error::usage(format!(
                "split needs {needed} samples but the series has {source_len}"
            )));
        }
        Ok(())
    }

    /// Length of the training segment, washout included.
    pub fn train_segment_len(&self) -> usize {
        self.washout_len + self.train_len
    }
}

/// Training segment (washout included) and the test segment that follows it.
pub fn split(series: &TimeSeries, spec: &SplitSpec) -> Result<(TimeSeries, TimeSeries)> {
    spec.validate(series.len())?;
    if spec.test_len == 0 {
        return Err(Error::usage("test_len must be at least 1"));
    }
    let cut = spec.train_segment_len();
    let train = series.slice(0, cut)?.with_name(format!("{}-train", series.name));
    let test = series
        .slice(cut, cut + spec.test_len)?
        .with_name(format!("{}-test", series.name));
    Ok((train, test))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ts(v: &[f64]) -> TimeSeries {
        TimeSeries::new("t", v.to_vec()).unwrap()
    }

    #[test]
    fn metric_examples() {
        let a = ts(&[0.3, -1.2, 4.0]);
        assert_eq!(mse(&a, &a).unwrap(), 0.0);
        assert_eq!(mae(&a, &a).unwrap(), 0.0);
        assert_eq!(mse(&ts(&[0.0, 0.0]), &ts(&[1.0, 1.0])).unwrap(), 1.0);
        assert_eq!(mae(&ts(&[0.0, 0.0]), &ts(&[1.0, 1.0])).unwrap(), 1.0);
        assert_eq!(rmse(&ts(&[0.0, 0.0]), &ts(&[1.0, 1.0])).unwrap(), 1.0);
        let y = ts(&[1.0, 2.0, 3.0]);
        let t = ts(&[1.0, 1.0, 1.0]);
        assert!((mse(&y, &t).unwrap() - 5.0 / 3.0).abs() < 1e-15);
        assert!((mae(&y, &t).unwrap() - 1.0).abs() < 1e-15);
        assert!((rmse(&y, &t).unwrap() - (5.0_f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn metric_errors() {
        assert!(matches!(
            mse_slice(&[1.0], &[1.0, 2.0]),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(matches!(
            mse_slice(&[f64::NAN], &[1.0]),
            Err(Error::NonFinite { index: 0 })
        ));
        assert!(TimeSeries::new("x", vec![]).is_err());
        assert!(TimeSeries::new("x", vec![1.0, f64::INFINITY]).is_err());
    }

    #[test]
    fn reduction_examples() {
        let r = error_reduction(2.099e-5, 7.865e-6).unwrap();
        assert!((r - 62.53).abs() < 0.005, "{r}");
        assert_eq!(error_reduction(0.5, 0.5).unwrap(), 0.0);
        let r = error_reduction(0.0848, 0.0661).unwrap();
        assert!((r - 22.05).abs() < 0.005, "{r}");
        assert!(matches!(
            error_reduction(0.0, 1.0),
            Err(Error::UndefinedReduction)
        ));
        assert!(signed_error_reduction(1.0, 2.0).unwrap() < 0.0);
    }

    #[test]
    fn split_examples() {
        let s = ts(&(0..12).map(f64::from).collect::<Vec<_>>());
        let (train, test) = split(&s, &SplitSpec::new(2, 6, 4)).unwrap();
        assert_eq!(train.len(), 8);
        assert_eq!(test.len(), 4);
        assert_eq!(test.values()[0], s.values()[8]);
        assert!(split(&s, &SplitSpec::new(2, 6, 5)).is_err());
        let ten = s.slice(0, 10).unwrap();
        assert!(split(&ten, &SplitSpec::new(2, 6, 4)).is_err());
        assert!(split(&s, &SplitSpec::new(6, 6, 1)).is_err());
    }

    #[test]
    fn compensated_sum_beats_naive() {
        let mut v = vec![1.0];
        v.extend(std::iter::repeat(1e-16).take(10_000));
        let s = compensated_sum(v.iter().copied());
        assert!((s - (1.0 + 1e-12)).abs() < 1e-15);
    }

    fn series() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (1usize..200).prop_flat_map(|n| {
            (
                prop::collection::vec(-1e3..1e3f64, n),
                prop::collection::vec(-1e3..1e3f64, n),
            )
        })
    }

    proptest! {
        #[test]
        fn rmse_squared_is_mse((y, t) in series()) {
            let m = mse_slice(&y, &t).unwrap();
            let r = rmse_slice(&y, &t).unwrap();
            prop_assert!((r * r - m).abs() <= 1e-12 * m.max(f64::MIN_POSITIVE));
        }

        #[test]
        fn mse_symmetric((y, t) in series()) {
            prop_assert_eq!(mse_slice(&y, &t).unwrap(), mse_slice(&t, &y).unwrap());
        }

        #[test]
        fn mse_shift_invariant((y, t) in series(), c in -1e3..1e3f64) {
            // Shifting both series by the same constant leaves differences
            // unchanged whenever the shifted sums are exactly representable.
            let c = c.round();
            let ys: Vec<f64> = y.iter().map(|v| (v * 64.0).round() / 64.0).collect();
            let ts_: Vec<f64> = t.iter().map(|v| (v * 64.0).round() / 64.0).collect();
            let ya: Vec<f64> = ys.iter().map(|v| v + c).collect();
            let ta: Vec<f64> = ts_.iter().map(|v| v + c).collect();
            prop_assert_eq!(mse_slice(&ys, &ts_).unwrap(), mse_slice(&ya, &ta).unwrap());
        }

        #[test]
        fn mae_at_most_rmse((y, t) in series()) {
            prop_assert!(mae_slice(&y, &t).unwrap() <= rmse_slice(&y, &t).unwrap() * (1.0 + 1e-12));
        }

        #[test]
        fn reduction_roundtrip(e in 1e-8..1e3f64, r in 0.001..99.999f64) {
            let got = error_reduction(e, e * (1.0 - r / 100.0)).unwrap();
            prop_assert!((got - r).abs() < 1e-9);
        }
    }
}
