//! Fixed multiple testing procedures: threshold functions and the
//! single-step, step-down and step-up rejection engines.
//!
//! All comparisons are the literal `p <= threshold` with no epsilon, so
//! the same input always yields the same rejection set bit for bit.

use rand::Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dp::ShapeSeq;
use crate::error::{Error, Result};
use crate::pvalue::{validate_weights, PValueSet, SortedPValues};
use crate::rng::{self, Domain};
use crate::stats;

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidAlpha(alpha))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MtpKind {
    Bonferroni,
    /// Per-hypothesis weights, aligned with the original input order.
    WeightedBonferroni(Vec<f64>),
    Sidak,
    Holm,
    BenjaminiHochberg,
    BenjaminiYekutieli,
    /// Step-up with thresholds `(alpha / m) * beta(r)`.
    GenericStepUp(ShapeSeq),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MtpMethod {
    kind: MtpKind,
    alpha: f64,
}

impl MtpMethod {
    pub fn new(kind: MtpKind, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        if let MtpKind::WeightedBonferroni(w) = &kind {
            validate_weights(w, w.len())?;
        }
        Ok(Self { kind, alpha })
    }

    pub fn kind(&self) -> &MtpKind {
        &self.kind
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    StepUp,
    StepDown,
    SingleStep,
}

/// Rejection thresholds. For step-up and step-down, `deltas[r]` is the
/// threshold of rank `r + 1`; for single-step they are aligned with the
/// original hypothesis order (or a single broadcast constant).
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdSeq {
    deltas: Vec<f64>,
    regime: Regime,
}

impl ThresholdSeq {
    pub fn new(deltas: Vec<f64>, regime: Regime) -> Result<Self> {
        if deltas.is_empty() {
            return Err(Error::InvalidThresholds("empty".into()));
        }
        if let Some(d) = deltas.iter().find(|d| !(0.0..=1.0).contains(*d)) {
            return Err(Error::InvalidThresholds(format!("{d} outside [0, 1]")));
        }
        if regime != Regime::SingleStep && deltas.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidThresholds(
                "must be nondecreasing in rank".into(),
            ));
        }
        Ok(Self { deltas, regime })
    }

    pub fn deltas(&self) -> &[f64] {
        &self.deltas
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    pub fn len(&self) -> usize {
        self.deltas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.deltas.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiscoveryResult {
    pub count: usize,
    /// Original indices of the rejected hypotheses. For rank-based regimes
    /// they are listed by ascending rank.
    pub rejected: Vec<usize>,
}

impl DiscoveryResult {
    pub fn rejected_labels<'a>(&self, ps: &'a PValueSet) -> Vec<&'a str> {
        self.rejected
            .iter()
            .map(|&i| ps.labels()[i].as_str())
            .collect()
    }

    fn from_ranks(sp: &SortedPValues, count: usize) -> Self {
        Self {
            count,
            rejected: sp.rank_to_original()[..count].to_vec(),
        }
    }
}

pub fn thresholds(method: &MtpMethod, m: usize) -> Result<ThresholdSeq> {
    if m == 0 {
        return Err(Error::EmptyInput);
    }
    check_alpha(method.alpha)?;
    let alpha = method.alpha;
    let mf = m as f64;
    let (deltas, regime) = match &method.kind {
        MtpKind::Bonferroni => (vec![alpha / mf; m], Regime::SingleStep),
        MtpKind::WeightedBonferroni(w) => {
            validate_weights(w, m)?;
            (w.iter().map(|wi| alpha * wi).collect(), Regime::SingleStep)
        }
        MtpKind::Sidak => (vec![sidak_constant(alpha, m); m], Regime::SingleStep),
        MtpKind::Holm => (
            (1..=m).map(|r| alpha / (m - r + 1) as f64).collect(),
            Regime::StepDown,
        ),
        MtpKind::BenjaminiHochberg => (
            (1..=m).map(|r| alpha * r as f64 / mf).collect(),
            Regime::StepUp,
        ),
        MtpKind::BenjaminiYekutieli => {
            let h = stats::harmonic(m);
            (
                (1..=m).map(|r| alpha * r as f64 / (mf * h)).collect(),
                Regime::StepUp,
            )
        }
        MtpKind::GenericStepUp(shape) => {
            if shape.len() != m {
                return Err(Error::LengthMismatch {
                    expected: m,
                    got: shape.len(),
                });
            }
            (
                shape.betas().iter().map(|b| alpha / mf * b).collect(),
                Regime::StepUp,
            )
        }
    };
    ThresholdSeq::new(deltas, regime)
}

/// `1 - (1 - alpha)^(1/m)`, evaluated without cancellation.
pub fn sidak_constant(alpha: f64, m: usize) -> f64 {
    -((-alpha).ln_1p() / m as f64).exp_m1()
}

/// `max { r in 0..=m : p_(r) <= deltas[r-1] }` with `p_(0) = 0`.
pub(crate) fn step_up_count(sorted: &[f64], deltas: &[f64]) -> usize {
    debug_assert_eq!(sorted.len(), deltas.len());
    sorted
        .iter()
        .zip(deltas)
        .rposition(|(p, d)| p <= d)
        .map_or(0, |r| r + 1)
}

pub(crate) fn step_down_count(sorted: &[f64], deltas: &[f64]) -> usize {
    sorted
        .iter()
        .zip(deltas)
        .take_while(|(p, d)| p <= d)
        .count()
}

pub fn step_up(sp: &SortedPValues, t: &ThresholdSeq) -> Result<DiscoveryResult> {
    expect_regime(t, Regime::StepUp)?;
    expect_len(t, sp.len())?;
    Ok(DiscoveryResult::from_ranks(
        sp,
        step_up_count(sp.sorted(), t.deltas()),
    ))
}

pub fn step_down(sp: &SortedPValues, t: &ThresholdSeq) -> Result<DiscoveryResult> {
    expect_regime(t, Regime::StepDown)?;
    expect_len(t, sp.len())?;
    Ok(DiscoveryResult::from_ranks(
        sp,
        step_down_count(sp.sorted(), t.deltas()),
    ))
}

/// Rejects exactly `{ i : p_i <= t_i }`; a length-1 sequence is broadcast.
pub fn single_step(ps: &PValueSet, t: &ThresholdSeq) -> Result<DiscoveryResult> {
    expect_regime(t, Regime::SingleStep)?;
    let d = t.deltas();
    let rejected: Vec<usize> = match d.len() {
        1 => (0..ps.len()).filter(|&i| ps.values()[i] <= d[0]).collect(),
        n if n == ps.len() => (0..n).filter(|&i| ps.values()[i] <= d[i]).collect(),
        n => {
            return Err(Error::LengthMismatch {
                expected: ps.len(),
                got: n,
            })
        }
    };
    Ok(DiscoveryResult {
        count: rejected.len(),
        rejected,
    })
}

fn expect_regime(t: &ThresholdSeq, expected: Regime) -> Result<()> {
    if t.regime == expected {
        Ok(())
    } else {
        Err(Error::RegimeMismatch {
            expected,
            got: t.regime,
        })
    }
}

fn expect_len(t: &ThresholdSeq, m: usize) -> Result<()> {
    if t.len() == m {
        Ok(())
    } else {
        Err(Error::LengthMismatch {
            expected: m,
            got: t.len(),
        })
    }
}

/// Runs `method` on `ps` with the engine its regime calls for.
pub fn apply(method: &MtpMethod, ps: &PValueSet) -> Result<DiscoveryResult> {
    let t = thresholds(method, ps.len())?;
    match t.regime {
        Regime::SingleStep => single_step(ps, &t),
        Regime::StepDown => step_down(&ps.order_statistics(), &t),
        Regime::StepUp => step_up(&ps.order_statistics(), &t),
    }
}

/// Discovery counts of weighted Bonferroni over random `Dirichlet(1, ..., 1)`
/// weight vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedBonferroniMc {
    pub mean: f64,
    pub sd: f64,
    pub samples: Vec<usize>,
}

pub fn weighted_bonferroni_mc(
    ps: &PValueSet,
    alpha: f64,
    draws: usize,
    seed: u64,
) -> Result<WeightedBonferroniMc> {
    check_alpha(alpha)?;
    if draws < 2 {
        return Err(Error::InvalidParameter(format!(
            "weighted Bonferroni needs at least 2 draws, got {draws}"
        )));
    }
    let values = ps.values();
    let samples: Vec<usize> = (0..draws as u64)
        .into_par_iter()
        .map(|d| {
            let mut rng = rng::stream(seed, Domain::WeightedBonferroni, d);
            loop {
                let e: Vec<f64> = (0..values.len()).map(|_| rng.sample(Exp1)).collect();
                let total: f64 = e.iter().sum();
                if total > 0.0 {
                    break values
                        .iter()
                        .zip(&e)
                        .filter(|(p, ei)| **p <= alpha * (**ei / total))
                        .count();
                }
            }
        })
        .collect();
    let as_f: Vec<f64> = samples.iter().map(|&c| c as f64).collect();
    Ok(WeightedBonferroniMc {
        mean: stats::mean(&as_f),
        sd: stats::sample_sd(&as_f),
        samples,
    })
}
