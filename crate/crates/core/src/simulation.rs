//! Synthetic equicorrelated p-values and Monte Carlo FDR / FWER estimates.
//!
//! Latent statistics follow a one-factor Gaussian model
//! `Z_i = sqrt(rho) Z_0 + sqrt(1 - rho) e_i`, shifted by `mu` for false
//! nulls; p-values are two-sided. The first `m0` coordinates are the true
//! nulls.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::classic::{self, DiscoveryResult, MtpKind, MtpMethod};
use crate::dp::{self, MassSpec};
use crate::error::{Error, Result};
use crate::pvalue::PValueSet;
use crate::rng::{self, Domain};
use crate::sensitivity::dp_discovery_count;
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub m: usize,
    pub m0: usize,
    pub rho: f64,
    pub mu: f64,
    pub trials: usize,
    pub seed: u64,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.m == 0 {
            return bad("m must be at least 1".into());
        }
        if self.m0 > self.m {
            return bad(format!("m0 = {} exceeds m = {}", self.m0, self.m));
        }
        if !(0.0..1.0).contains(&self.rho) {
            return bad(format!("rho = {} outside [0, 1)", self.rho));
        }
        if !(self.mu.is_finite() && self.mu >= 0.0) {
            return bad(format!("mu = {} must be finite and nonnegative", self.mu));
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        Ok(())
    }

    pub fn m1(&self) -> usize {
        self.m - self.m0
    }

    pub fn pi0(&self) -> f64 {
        self.m0 as f64 / self.m as f64
    }
}

/// Scenario file: flat `key = value` lines, `#` comments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioFile {
    pub scenario: Scenario,
    pub alpha: f64,
}

impl FromStr for ScenarioFile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut sc = Scenario {
            m: 0,
            m0: 0,
            rho: 0.0,
            mu: 0.0,
            trials: 1000,
            seed: 0,
        };
        let mut alpha = 0.05;
        let mut seen_m = false;
        let mut seen_m0 = false;
        for (lineno, line) in s.lines().enumerate() {
            let line = line.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::InvalidParameter(format!("line {}: expected key=value", lineno + 1))
            })?;
            let value = value.trim();
            let num = |v: &str| -> Result<f64> {
                v.parse().map_err(|_| {
                    Error::InvalidParameter(format!("line {}: bad number `{v}`", lineno + 1))
                })
            };
            let int = |v: &str| -> Result<u64> {
                v.parse().map_err(|_| {
                    Error::InvalidParameter(format!("line {}: bad integer `{v}`", lineno + 1))
                })
            };
            match key.trim() {
                "m" => {
                    sc.m = int(value)? as usize;
                    seen_m = true;
                }
                "m0" => {
                    sc.m0 = int(value)? as usize;
                    seen_m0 = true;
                }
                "rho" => sc.rho = num(value)?,
                "mu" => sc.mu = num(value)?,
                "trials" => sc.trials = int(value)? as usize,
                "alpha" => alpha = num(value)?,
                "seed" => sc.seed = int(value)?,
                other => {
                    return Err(Error::InvalidParameter(format!(
                        "line {}: unknown key `{other}`",
                        lineno + 1
                    )))
                }
            }
        }
        if !seen_m {
            return Err(Error::InvalidParameter("scenario is missing `m`".into()));
        }
        if !seen_m0 {
            sc.m0 = sc.m;
        }
        sc.validate()?;
        classic::check_alpha(alpha)?;
        Ok(Self {
            scenario: sc,
            alpha,
        })
    }
}

/// Two-sided p-value of a standard normal statistic.
pub fn two_sided_p(z: f64) -> f64 {
    erfc(z.abs() / std::f64::consts::SQRT_2).clamp(0.0, 1.0)
}

/// P-values of one simulated dataset and its truth mask (`true` = null holds).
pub fn simulate_pvalues(sc: &Scenario, trial: u64) -> Result<(PValueSet, Vec<bool>)> {
    sc.validate()?;
    let mut rng = rng::stream(sc.seed, Domain::Simulation, trial);
    let z0: f64 = rng.sample(StandardNormal);
    let common = sc.rho.sqrt() * z0;
    let own = (1.0 - sc.rho).sqrt();
    let mut values = Vec::with_capacity(sc.m);
    let mut truth = Vec::with_capacity(sc.m);
    for i in 0..sc.m {
        let e: f64 = rng.sample(StandardNormal);
        let is_null = i < sc.m0;
        let z = common + own * e + if is_null { 0.0 } else { sc.mu };
        values.push(two_sided_p(z));
        truth.push(is_null);
    }
    Ok((PValueSet::from_values(values)?, truth))
}

/// Anything that maps a p-value batch to a rejection set at level `alpha`.
/// `trial` keys any internal randomness.
pub trait Procedure: Sync {
    fn name(&self) -> String;
    fn discoveries(&self, ps: &PValueSet, alpha: f64, trial: u64) -> Result<DiscoveryResult>;
}

impl Procedure for MtpKind {
    fn name(&self) -> String {
        match self {
            MtpKind::Bonferroni => "bonferroni",
            MtpKind::WeightedBonferroni(_) => "wbonferroni",
            MtpKind::Sidak => "sidak",
            MtpKind::Holm => "holm",
            MtpKind::BenjaminiHochberg => "bh",
            MtpKind::BenjaminiYekutieli => "by",
            MtpKind::GenericStepUp(_) => "stepup",
        }
        .to_string()
    }

    fn discoveries(&self, ps: &PValueSet, alpha: f64, _trial: u64) -> Result<DiscoveryResult> {
        classic::apply(&MtpMethod::new(self.clone(), alpha)?, ps)
    }
}

/// The randomized DP procedure: one fresh `(M, nu)` per dataset, BY baseline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DpProcedure {
    pub mass: MassSpec,
    pub seed: u64,
}

impl Procedure for DpProcedure {
    fn name(&self) -> String {
        "dp".into()
    }

    fn discoveries(&self, ps: &PValueSet, alpha: f64, trial: u64) -> Result<DiscoveryResult> {
        classic::check_alpha(alpha)?;
        let sp = ps.order_statistics();
        let base = dp::baseline_by(ps.len());
        let mut rng = rng::stream(self.seed, Domain::DpProcedure, trial);
        let (_, count) = dp_discovery_count(sp.sorted(), alpha, &self.mass, &base, &mut rng)?;
        Ok(DiscoveryResult {
            count,
            rejected: sp.rank_to_original()[..count].to_vec(),
        })
    }
}

/// Outcome counts of one trial: `U`/`V` over true nulls, `T`/`S` over false.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialAccounting {
    pub u: usize,
    pub v: usize,
    pub t: usize,
    pub s: usize,
}

impl TrialAccounting {
    pub fn tally(result: &DiscoveryResult, truth: &[bool]) -> Self {
        let m0 = truth.iter().filter(|&&n| n).count();
        let m1 = truth.len() - m0;
        let v = result.rejected.iter().filter(|&&i| truth[i]).count();
        let s = result.count - v;
        Self {
            u: m0 - v,
            v,
            t: m1 - s,
            s,
        }
    }

    pub fn r(&self) -> usize {
        self.v + self.s
    }

    pub fn fdp(&self) -> f64 {
        self.v as f64 / self.r().max(1) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorRateEstimate {
    pub fdr_hat: f64,
    pub fwer_hat: f64,
    pub power_hat: f64,
    pub se_fdr: f64,
    pub se_fwer: f64,
    pub trials: usize,
}

pub fn estimate_error_rates(
    mtp: &dyn Procedure,
    sc: &Scenario,
    alpha: f64,
) -> Result<ErrorRateEstimate> {
    sc.validate()?;
    classic::check_alpha(alpha)?;
    let tallies: Vec<TrialAccounting> = (0..sc.trials as u64)
        .into_par_iter()
        .map(|trial| {
            let (ps, truth) = simulate_pvalues(sc, trial)?;
            let res = mtp.discoveries(&ps, alpha, trial)?;
            Ok(TrialAccounting::tally(&res, &truth))
        })
        .collect::<Result<_>>()?;
    let n = tallies.len() as f64;
    let m1 = sc.m1().max(1) as f64;
    let fdp: Vec<f64> = tallies.iter().map(TrialAccounting::fdp).collect();
    let any_false: Vec<f64> = tallies.iter().map(|t| (t.v >= 1) as u8 as f64).collect();
    let power: Vec<f64> = tallies.iter().map(|t| t.s as f64 / m1).collect();
    let mean = |v: &[f64]| stats::compensated_sum(v.iter().copied()) / n;
    let se = |v: &[f64]| stats::sample_sd(v) / n.sqrt();
    Ok(ErrorRateEstimate {
        fdr_hat: mean(&fdp),
        fwer_hat: mean(&any_false),
        power_hat: mean(&power),
        se_fdr: se(&fdp),
        se_fwer: se(&any_false),
        trials: sc.trials,
    })
}

/// One JSON record of the `simulate` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationRecord {
    pub method: String,
    pub alpha: f64,
    pub scenario: Scenario,
    pub estimate: ErrorRateEstimate,
}

impl fmt::Display for ErrorRateEstimate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "fdr={:.4} (se {:.4}) fwer={:.4} (se {:.4}) power={:.4}",
            self.fdr_hat, self.se_fdr, self.fwer_hat, self.se_fwer, self.power_hat
        )
    }
}
