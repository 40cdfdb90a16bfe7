//! Posterior of the DP mass `M` given `k` distinct values among `n`, under a
//! `Gamma(a, b)` prior (shape, rate), via the Escobar-West auxiliary
//! variable Gibbs sampler.
//!
//! Each sweep draws `eta ~ Beta(M + 1, n)` and then `M` from the two-gamma
//! mixture
//!
//! ```text
//! rho Gamma(a + k, b - ln eta) + (1 - rho) Gamma(a + k - 1, b - ln eta),
//! rho / (1 - rho) = (a + k - 1) / (n (b - ln eta)).
//! ```
//!
//! The stationary law is `p(M | k) ∝ pi(M) M^k Γ(M) / Γ(M + n)`.

use rand::Rng;
use rand_distr::{Beta, Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::dp::{baseline_by, max_measure_variance};
use crate::error::{Error, Result};
use crate::rng::{self, Domain};
use crate::stats::{self, Summary};

/// Lag-1 autocorrelation above which the chain is flagged as poorly mixing.
pub const AUTOCORRELATION_WARN: f64 = 0.99;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassPosteriorConfig {
    pub k: usize,
    pub n: usize,
    pub prior_shape: f64,
    pub prior_rate: f64,
    pub burnin: usize,
    pub samples: usize,
    pub seed: u64,
}

impl MassPosteriorConfig {
    /// `Exponential(1)` prior with 10,000 burn-in and 10,000 kept sweeps.
    pub fn new(k: usize, n: usize, seed: u64) -> Self {
        Self {
            k,
            n,
            prior_shape: 1.0,
            prior_rate: 1.0,
            burnin: 10_000,
            samples: 10_000,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.k > self.n {
            return Err(Error::InvalidParameter(format!(
                "need 1 <= k <= n, got k = {}, n = {}",
                self.k, self.n
            )));
        }
        for (name, v) in [
            ("prior shape", self.prior_shape),
            ("prior rate", self.prior_rate),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if self.samples == 0 {
            return Err(Error::InvalidParameter("samples must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassSamples {
    pub draws: Vec<f64>,
    pub summary: Summary,
    pub lag1_autocorrelation: f64,
}

impl MassSamples {
    /// True when the chain mixes too slowly for its summary to be trusted.
    pub fn non_convergence_warning(&self) -> bool {
        self.lag1_autocorrelation > AUTOCORRELATION_WARN
    }
}

/// One Escobar-West update of `M`.
pub fn gibbs_step<R: Rng + ?Sized>(
    mass: f64,
    cfg: &MassPosteriorConfig,
    rng: &mut R,
) -> Result<f64> {
    let n = cfg.n as f64;
    let k = cfg.k as f64;
    let (a, b) = (cfg.prior_shape, cfg.prior_rate);
    let beta = Beta::new(mass + 1.0, n).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let eta: f64 = beta.sample(rng);
    // eta can round to 0 when M is tiny relative to n; ln(0) = -inf would
    // poison the rate.
    let rate = b - eta.max(f64::MIN_POSITIVE).ln();
    let odds = (a + k - 1.0) / (n * rate);
    let rho = odds / (1.0 + odds);
    let shape = if rng.random::<f64>() < rho {
        a + k
    } else {
        a + k - 1.0
    };
    let gamma =
        Gamma::new(shape, 1.0 / rate).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    Ok(gamma.sample(rng).max(f64::MIN_POSITIVE))
}

pub fn gibbs_mass(cfg: &MassPosteriorConfig) -> Result<MassSamples> {
    cfg.validate()?;
    let mut rng = rng::stream(cfg.seed, Domain::MassPosterior, 0);
    let mut mass = cfg.prior_shape / cfg.prior_rate;
    for _ in 0..cfg.burnin {
        mass = gibbs_step(mass, cfg, &mut rng)?;
    }
    let mut draws = Vec::with_capacity(cfg.samples);
    for _ in 0..cfg.samples {
        mass = gibbs_step(mass, cfg, &mut rng)?;
        draws.push(mass);
    }
    let summary = Summary::of(&draws)?;
    let lag1_autocorrelation = stats::lag1_autocorrelation(&draws);
    Ok(MassSamples {
        draws,
        summary,
        lag1_autocorrelation,
    })
}

pub fn posterior_summary(ms: &MassSamples) -> Result<Summary> {
    Summary::of(&ms.draws)
}

/// Posterior summary of `max_r Var[nu(B_r)]` under the BY baseline with
/// `m` bins, one value per retained draw of `M`.
pub fn max_variance_summary(ms: &MassSamples, m: usize) -> Result<Summary> {
    let base = baseline_by(m);
    let v: Vec<f64> = ms
        .draws
        .iter()
        .map(|&mass| max_measure_variance(mass, &base))
        .collect();
    Summary::of(&v)
}
