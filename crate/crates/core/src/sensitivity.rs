//! Prior-predictive sensitivity analysis of step-up procedures.
//!
//! Each Monte Carlo draw samples a mass `M` (fixed or from its hyperprior),
//! a measure `nu ~ DP(M nu0)` on the rank bins, and runs the step-up rule
//! with thresholds `(alpha / m) beta_nu(r)`. The spread of the resulting
//! discovery counts, and how often each p-value lands among the
//! discoveries, is the output.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classic::{self, check_alpha, MtpKind, MtpMethod};
use crate::dp::{self, MassSpec, MeasureBaseline};
use crate::error::{Error, Result};
use crate::pvalue::PValueSet;
use crate::rng::{self, Domain};
use crate::stats;

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityConfig {
    pub alpha: f64,
    pub draws: usize,
    pub mass: MassSpec,
    /// `None` selects the BY baseline for the input size.
    pub baseline: Option<MeasureBaseline>,
    pub seed: u64,
    /// Dirichlet weight draws for the weighted-Bonferroni comparison line.
    pub comparison_draws: usize,
}

impl Default for SensitivityConfig {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            draws: 1000,
            mass: MassSpec::default(),
            baseline: None,
            seed: 0,
            comparison_draws: 1000,
        }
    }
}

/// Discovery counts of the fixed procedures on the same input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub bonferroni: usize,
    pub weighted_bonferroni_mean: f64,
    pub weighted_bonferroni_sd: f64,
    pub sidak: usize,
    pub holm: usize,
    pub bh: usize,
    pub by: usize,
}

impl Comparison {
    pub fn compute(ps: &PValueSet, alpha: f64, wb_draws: usize, seed: u64) -> Result<Self> {
        let count = |kind| -> Result<usize> {
            Ok(classic::apply(&MtpMethod::new(kind, alpha)?, ps)?.count)
        };
        let wb = classic::weighted_bonferroni_mc(ps, alpha, wb_draws, seed)?;
        Ok(Self {
            bonferroni: count(MtpKind::Bonferroni)?,
            weighted_bonferroni_mean: wb.mean,
            weighted_bonferroni_sd: wb.sd,
            sidak: count(MtpKind::Sidak)?,
            holm: count(MtpKind::Holm)?,
            bh: count(MtpKind::BenjaminiHochberg)?,
            by: count(MtpKind::BenjaminiYekutieli)?,
        })
    }
}

/// Histogram bin over `[lo, hi)` on the integer discovery counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistBin {
    pub lo: usize,
    pub hi: usize,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityReport {
    pub m: usize,
    pub alpha: f64,
    pub r_samples: Vec<usize>,
    pub mass_draws: Vec<f64>,
    pub mean_r: f64,
    pub sd_r: f64,
    pub histogram: Vec<HistBin>,
    /// Probability of significance, aligned with the input order.
    pub sig_prob: Vec<f64>,
    pub comparison: Comparison,
}

/// Step-up discovery count for one draw of `(M, nu)`.
pub fn dp_discovery_count<R: Rng + ?Sized>(
    sorted: &[f64],
    alpha: f64,
    mass: &MassSpec,
    base: &MeasureBaseline,
    rng: &mut R,
) -> Result<(f64, usize)> {
    let m = sorted.len();
    if base.len() != m {
        return Err(Error::LengthMismatch {
            expected: m,
            got: base.len(),
        });
    }
    let mass_draw = dp::sample_mass(mass, rng)?;
    let nu = dp::sample_measure(mass_draw, base, rng)?;
    let scale = alpha / m as f64;
    let mut deltas = dp::prefix_shape(nu.probs());
    for d in &mut deltas {
        *d *= scale;
    }
    Ok((mass_draw, classic::step_up_count(sorted, &deltas)))
}

pub fn run_sensitivity(ps: &PValueSet, cfg: &SensitivityConfig) -> Result<SensitivityReport> {
    check_alpha(cfg.alpha)?;
    cfg.mass.validate()?;
    if cfg.draws == 0 {
        return Err(Error::InvalidParameter("draws must be at least 1".into()));
    }
    let m = ps.len();
    if m == 0 {
        return Err(Error::EmptyInput);
    }
    let base = match &cfg.baseline {
        Some(b) => b.clone(),
        None => dp::baseline_by(m),
    };
    let sp = ps.order_statistics();
    let sorted = sp.sorted();

    let per_draw: Vec<(f64, usize)> = (0..cfg.draws as u64)
        .into_par_iter()
        .map(|s| {
            let mut rng = rng::stream(cfg.seed, Domain::Sensitivity, s);
            dp_discovery_count(sorted, cfg.alpha, &cfg.mass, &base, &mut rng)
        })
        .collect::<Result<_>>()?;
    let (mass_draws, r_samples): (Vec<f64>, Vec<usize>) = per_draw.into_iter().unzip();

    // at_least[r] = #{s : R_s >= r}
    let mut at_least = vec![0usize; m + 2];
    for &r in &r_samples {
        at_least[r] += 1;
    }
    for r in (0..=m).rev() {
        at_least[r] += at_least[r + 1];
    }
    let s = cfg.draws as f64;
    let mut sig_prob = vec![0.0; m];
    for (rank0, &orig) in sp.rank_to_original().iter().enumerate() {
        sig_prob[orig] = at_least[rank0 + 1] as f64 / s;
    }

    let as_f: Vec<f64> = r_samples.iter().map(|&r| r as f64).collect();
    let comparison_draws = cfg.comparison_draws.max(2);
    Ok(SensitivityReport {
        m,
        alpha: cfg.alpha,
        mean_r: stats::mean(&as_f),
        sd_r: stats::sample_sd(&as_f),
        histogram: histogram(&r_samples),
        sig_prob,
        comparison: Comparison::compute(ps, cfg.alpha, comparison_draws, cfg.seed)?,
        r_samples,
        mass_draws,
    })
}

/// Integer-aligned Freedman-Diaconis histogram; bin width at least 1.
pub fn histogram(samples: &[usize]) -> Vec<HistBin> {
    if samples.is_empty() {
        return Vec::new();
    }
    let mut sorted: Vec<f64> = samples.iter().map(|&r| r as f64).collect();
    sorted.sort_by(f64::total_cmp);
    let iqr = stats::quantile_sorted(&sorted, 0.75) - stats::quantile_sorted(&sorted, 0.25);
    let fd = 2.0 * iqr / (samples.len() as f64).cbrt();
    let width = (fd.ceil() as usize).max(1);
    let lo = *samples.iter().min().unwrap();
    let hi = *samples.iter().max().unwrap();
    let nbins = (hi - lo) / width + 1;
    let mut bins: Vec<HistBin> = (0..nbins)
        .map(|b| HistBin {
            lo: lo + b * width,
            hi: lo + (b + 1) * width,
            count: 0,
        })
        .collect();
    for &r in samples {
        bins[(r - lo) / width].count += 1;
    }
    bins
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigRow {
    pub label: String,
    pub p: f64,
    pub sig_prob: f64,
}

/// Rows for every p-value `<= cutoff`, by ascending p (stable ties).
pub fn significance_table(
    report: &SensitivityReport,
    ps: &PValueSet,
    cutoff: f64,
) -> Result<Vec<SigRow>> {
    if !(0.0..=1.0).contains(&cutoff) {
        return Err(Error::InvalidParameter(format!(
            "cutoff {cutoff} outside [0, 1]"
        )));
    }
    if report.sig_prob.len() != ps.len() {
        return Err(Error::LengthMismatch {
            expected: ps.len(),
            got: report.sig_prob.len(),
        });
    }
    let sp = ps.order_statistics();
    Ok(sp
        .rank_to_original()
        .iter()
        .take_while(|&&i| ps.values()[i] <= cutoff)
        .map(|&i| SigRow {
            label: ps.labels()[i].clone(),
            p: ps.values()[i],
            sig_prob: report.sig_prob[i],
        })
        .collect())
}
