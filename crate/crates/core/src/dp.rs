//! Dirichlet-process prior over the random measure `nu` on the bins
//! `(r-1, r]`, `r = 1..=m`, and the step-up shape it induces.
//!
//! On this finite partition a draw `nu ~ DP(M nu0)` is exactly a
//! `Dirichlet(M nu0_1, ..., M nu0_m)` vector. Mass beyond bin `m` is not
//! represented; only those bins enter the thresholds.

use rand::Rng;
use rand_distr::{Distribution, Exp, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats;

/// Tolerance on `|sum(probs) - 1|` for measures.
pub const MEASURE_SUM_TOL: f64 = 1e-9;

/// Redraw budget before a Dirichlet sample is declared degenerate.
pub const MAX_DRAW_ATTEMPTS: usize = 100;

/// Hyperprior draws at or below this are rejected and redrawn.
pub const MIN_MASS: f64 = 1e-12;

fn validate_probs(probs: &[f64]) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::InvalidMeasure("no bins".into()));
    }
    if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
        return Err(Error::InvalidMeasure(format!(
            "bin mass {p} is negative or not finite"
        )));
    }
    let sum = stats::compensated_sum(probs.iter().copied());
    if (sum - 1.0).abs() > MEASURE_SUM_TOL {
        return Err(Error::InvalidMeasure(format!("bin masses sum to {sum}")));
    }
    Ok(())
}

/// Prior mean `nu0` of the random measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureBaseline {
    probs: Vec<f64>,
    name: String,
}

impl MeasureBaseline {
    pub fn new(probs: Vec<f64>, name: impl Into<String>) -> Result<Self> {
        validate_probs(&probs)?;
        Ok(Self {
            probs,
            name: name.into(),
        })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

/// The Benjamini-Yekutieli measure `nu0(r-1, r] = 1 / (r H_m)`.
pub fn baseline_by(m: usize) -> MeasureBaseline {
    assert!(m >= 1, "baseline needs at least one bin");
    let h = stats::harmonic(m);
    MeasureBaseline {
        probs: (1..=m).map(|r| 1.0 / (r as f64 * h)).collect(),
        name: "by".into(),
    }
}

/// One realisation of `nu` on the bins.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomMeasure {
    probs: Vec<f64>,
}

impl RandomMeasure {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        validate_probs(&probs)?;
        Ok(Self { probs })
    }

    /// All mass on bin `bin` (1-based).
    pub fn point_mass(m: usize, bin: usize) -> Result<Self> {
        if bin == 0 || bin > m {
            return Err(Error::IndexOutOfRange { bin, m });
        }
        let mut probs = vec![0.0; m];
        probs[bin - 1] = 1.0;
        Ok(Self { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

/// `beta(r) = sum_{j <= r} j nu(j-1, j]`, stored for `r = 1..=m`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeSeq {
    betas: Vec<f64>,
}

impl ShapeSeq {
    pub fn new(betas: Vec<f64>) -> Result<Self> {
        if betas.is_empty() {
            return Err(Error::InvalidShape("empty".into()));
        }
        if betas[0] < 0.0 || betas.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidShape(
                "values must be finite and nonnegative".into(),
            ));
        }
        if betas.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidShape("must be nondecreasing".into()));
        }
        let m = betas.len() as f64;
        if betas[betas.len() - 1] > m * (1.0 + MEASURE_SUM_TOL) {
            return Err(Error::InvalidShape(format!("beta(m) exceeds m = {m}")));
        }
        Ok(Self { betas })
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn len(&self) -> usize {
        self.betas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.betas.is_empty()
    }
}

pub fn shape_from_measure(nu: &RandomMeasure) -> ShapeSeq {
    ShapeSeq {
        betas: prefix_shape(nu.probs()),
    }
}

pub(crate) fn prefix_shape(probs: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    probs
        .iter()
        .enumerate()
        .map(|(j, p)| {
            acc += (j + 1) as f64 * p;
            acc
        })
        .collect()
}

/// DP mass: fixed, or drawn per use from an exponential hyperprior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum MassSpec {
    Fixed { mass: f64 },
    Exponential { rate: f64 },
}

impl Default for MassSpec {
    fn default() -> Self {
        MassSpec::Exponential { rate: 1.0 }
    }
}

impl MassSpec {
    pub fn validate(&self) -> Result<()> {
        let (name, v) = match *self {
            MassSpec::Fixed { mass } => ("mass", mass),
            MassSpec::Exponential { rate } => ("rate", rate),
        };
        if v.is_finite() && v > 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "{name} must be positive, got {v}"
            )))
        }
    }
}

pub fn sample_mass<R: Rng + ?Sized>(spec: &MassSpec, rng: &mut R) -> Result<f64> {
    spec.validate()?;
    match *spec {
        MassSpec::Fixed { mass } => Ok(mass),
        MassSpec::Exponential { rate } => {
            let exp = Exp::new(rate).map_err(|e| Error::InvalidParameter(e.to_string()))?;
            loop {
                let m = exp.sample(rng);
                if m > MIN_MASS {
                    return Ok(m);
                }
            }
        }
    }
}

/// `ln X` for `X ~ Gamma(shape, 1)`.
///
/// Shapes below one use `X = Y U^(1/shape)` with `Y ~ Gamma(shape + 1, 1)`,
/// evaluated in log space: at shapes near 1e-6 the linear-space product
/// underflows to zero for almost every `U`.
pub(crate) fn ln_gamma_variate<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    if shape >= 1.0 {
        Gamma::new(shape, 1.0).expect("shape >= 1").sample(rng).ln()
    } else {
        let y = Gamma::new(shape + 1.0, 1.0)
            .expect("shape + 1 >= 1")
            .sample(rng);
        let u = 1.0 - rng.random::<f64>(); // (0, 1]
        y.ln() + u.ln() / shape
    }
}

/// Draws `nu ~ Dirichlet(M nu0_1, ..., M nu0_m)` by normalising gamma
/// variates in log space.
pub fn sample_measure<R: Rng + ?Sized>(
    mass: f64,
    base: &MeasureBaseline,
    rng: &mut R,
) -> Result<RandomMeasure> {
    if !(mass.is_finite() && mass > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "mass must be positive, got {mass}"
        )));
    }
    let m = base.len();
    if m == 1 {
        return Ok(RandomMeasure { probs: vec![1.0] });
    }
    let mut logs = vec![0.0; m];
    for _ in 0..MAX_DRAW_ATTEMPTS {
        let mut max = f64::NEG_INFINITY;
        for (l, &p0) in logs.iter_mut().zip(base.probs()) {
            let shape = mass * p0;
            *l = if shape > 0.0 {
                ln_gamma_variate(shape, rng)
            } else {
                f64::NEG_INFINITY
            };
            if *l > max {
                max = *l;
            }
        }
        if !max.is_finite() {
            continue;
        }
        let mut probs: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
        let total: f64 = probs.iter().sum();
        if !(total.is_finite() && total > 0.0) {
            continue;
        }
        for p in &mut probs {
            *p /= total;
        }
        return Ok(RandomMeasure { probs });
    }
    Err(Error::DegenerateDraw(MAX_DRAW_ATTEMPTS))
}

/// Expected number of distinct values among `m` draws: `sum_i M / (M + i - 1)`.
pub fn expected_clusters(mass: f64, m: usize) -> f64 {
    stats::compensated_sum((0..m).map(|i| mass / (mass + i as f64)))
}

/// `Var[nu(B_bin)] = nu0 (1 - nu0) / (M + 1)` for a 1-based `bin`.
/// `M = 0` is accepted as the `M -> 0+` limit.
pub fn measure_variance(mass: f64, base: &MeasureBaseline, bin: usize) -> Result<f64> {
    if !(mass.is_finite() && mass >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "mass must be nonnegative, got {mass}"
        )));
    }
    if bin == 0 || bin > base.len() {
        return Err(Error::IndexOutOfRange { bin, m: base.len() });
    }
    let p = base.probs()[bin - 1];
    Ok(p * (1.0 - p) / (mass + 1.0))
}

/// `max_r Var[nu(B_r)]` over all bins.
pub fn max_measure_variance(mass: f64, base: &MeasureBaseline) -> f64 {
    base.probs()
        .iter()
        .map(|p| p * (1.0 - p))
        .fold(0.0, f64::max)
        / (mass + 1.0)
}
