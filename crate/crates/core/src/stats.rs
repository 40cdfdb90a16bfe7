//! Small descriptive-statistics helpers shared by the report builders.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Neumaier-compensated sum.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Harmonic number `H_m = 1 + 1/2 + ... + 1/m`, summed smallest term first.
pub fn harmonic(m: usize) -> f64 {
    compensated_sum((1..=m).rev().map(|j| 1.0 / j as f64))
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation (n - 1 denominator); zero for a single value.
pub fn sample_sd(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mu = mean(values);
    let ss: f64 = values.iter().map(|v| (v - mu) * (v - mu)).sum();
    (ss / (n - 1) as f64).sqrt()
}

/// Empirical quantile with linear interpolation between order statistics.
/// `sorted` must be nondecreasing and nonempty; `q` in [0, 1].
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Mean, sd and the five-number quantile summary of a sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub sd: f64,
    /// Quantiles at 0%, 25%, 50%, 75%, 100%.
    pub quantiles: [f64; 5],
}

impl Summary {
    pub fn of(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyDraws);
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let quantiles = [0.0, 0.25, 0.5, 0.75, 1.0].map(|q| quantile_sorted(&sorted, q));
        Ok(Self {
            mean: mean(values),
            sd: sample_sd(values),
            quantiles,
        })
    }
}

/// Lag-1 sample autocorrelation; zero for constant or too-short series.
pub fn lag1_autocorrelation(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 3 {
        return 0.0;
    }
    let mu = mean(values);
    let denom: f64 = values.iter().map(|v| (v - mu) * (v - mu)).sum();
    if denom == 0.0 {
        return 0.0;
    }
    let num: f64 = values.windows(2).map(|w| (w[0] - mu) * (w[1] - mu)).sum();
    num / denom
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_sample() {
        let s = Summary::of(&[2.0, 2.0, 2.0]).unwrap();
        assert_eq!(s.mean, 2.0);
        assert_eq!(s.sd, 0.0);
        assert_eq!(s.quantiles, [2.0; 5]);
    }

    #[test]
    fn median_interpolates() {
        let s = Summary::of(&[4.0, 1.0, 3.0, 2.0]).unwrap();
        assert_eq!(s.quantiles[2], 2.5);
        assert_eq!(s.quantiles[0], 1.0);
        assert_eq!(s.quantiles[4], 4.0);
        assert_eq!(s.quantiles[1], 1.75);
    }

    #[test]
    fn empty_is_error() {
        assert!(matches!(Summary::of(&[]), Err(Error::EmptyDraws)));
    }

    #[test]
    fn harmonic_small() {
        assert!((harmonic(4) - 25.0 / 12.0).abs() < 1e-15);
        assert_eq!(harmonic(1), 1.0);
    }

    #[test]
    fn compensated_beats_naive() {
        let v = [1e16, 1.0, -1e16];
        assert_eq!(compensated_sum(v), 1.0);
    }
}
