//! On-disk report formats (schema `v1`).
//!
//! * `summary.json`: config echo, per-method discovery counts, DP summary
//! * `r_hist.csv`: `bin_lo,bin_hi,count` with `[bin_lo, bin_hi)` bins
//! * `sig_prob.csv`: `label,p,sig_prob` by ascending p
//! * `r_samples.csv` (debug): `draw,mass,r`
//!
//! Floats are written in shortest round-trip form, so re-parsing recovers
//! the exact value. Field names are frozen; new fields may be added.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dp::MassSpec;
use crate::error::Result;
use crate::posterior::MassSamples;
use crate::sensitivity::{HistBin, SensitivityReport, SigRow};
use crate::stats::Summary;

pub const SCHEMA_VERSION: &str = "v1";

/// Shortest decimal that parses back to `x`.
pub fn fmt_num(x: f64) -> String {
    match serde_json::Number::from_f64(x) {
        Some(n) => n.to_string(),
        None => x.to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub input: String,
    pub column: String,
    pub alpha: f64,
    pub methods: Vec<String>,
    pub draws: usize,
    pub seed: u64,
    pub mass: MassSpec,
    pub baseline: String,
    pub wb_draws: usize,
    pub sig_cutoff: f64,
}

/// Discoveries of one method: an exact `count`, or a Monte Carlo `mean`/`sd`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodCount {
    pub method: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub count: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mean: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub sd: Option<f64>,
}

impl MethodCount {
    pub fn exact(method: &str, count: usize) -> Self {
        Self {
            method: method.into(),
            count: Some(count),
            mean: None,
            sd: None,
        }
    }

    pub fn sampled(method: &str, mean: f64, sd: f64) -> Self {
        Self {
            method: method.into(),
            count: None,
            mean: Some(mean),
            sd: Some(sd),
        }
    }

    /// The one-line stdout form, e.g. `bh R=3`.
    pub fn line(&self) -> String {
        match (self.count, self.mean, self.sd) {
            (Some(c), _, _) => format!("{} R={c}", self.method),
            (None, Some(m), Some(sd)) => {
                format!("{} R={} sd={}", self.method, fmt_num(m), fmt_num(sd))
            }
            _ => format!("{} R=?", self.method),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DpSummary {
    pub draws: usize,
    pub mean_r: f64,
    pub sd_r: f64,
    pub min_r: usize,
    pub max_r: usize,
    pub mass_mean: f64,
}

impl DpSummary {
    pub fn of(report: &SensitivityReport) -> Self {
        Self {
            draws: report.r_samples.len(),
            mean_r: report.mean_r,
            sd_r: report.sd_r,
            min_r: report.r_samples.iter().copied().min().unwrap_or(0),
            max_r: report.r_samples.iter().copied().max().unwrap_or(0),
            mass_mean: crate::stats::mean(&report.mass_draws),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub schema: String,
    pub m: usize,
    pub k_distinct: usize,
    pub config: ConfigEcho,
    pub methods: Vec<MethodCount>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub dp: Option<DpSummary>,
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(bytes)?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    write_file(path, s.as_bytes())
}

pub fn histogram_csv(bins: &[HistBin]) -> String {
    let mut s = String::from("bin_lo,bin_hi,count\n");
    for b in bins {
        s.push_str(&format!("{},{},{}\n", b.lo, b.hi, b.count));
    }
    s
}

pub fn sig_prob_csv(rows: &[SigRow]) -> Result<String> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(["label", "p", "sig_prob"])?;
    for r in rows {
        w.write_record([r.label.as_str(), &fmt_num(r.p), &fmt_num(r.sig_prob)])?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

pub fn r_samples_csv(report: &SensitivityReport) -> String {
    let mut s = String::from("draw,mass,r\n");
    for (i, (m, r)) in report.mass_draws.iter().zip(&report.r_samples).enumerate() {
        s.push_str(&format!("{},{},{}\n", i, fmt_num(*m), r));
    }
    s
}

/// Writes the requested report files into `out` (which must exist) and
/// returns their paths.
pub fn emit_report(
    summary: &RunSummary,
    report: Option<&SensitivityReport>,
    sig_rows: &[SigRow],
    formats: &[Format],
    debug: bool,
    out: &Path,
) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    if formats.contains(&Format::Json) {
        let p = out.join("summary.json");
        write_json(&p, summary)?;
        written.push(p);
    }
    if let Some(rep) = report {
        if formats.contains(&Format::Csv) {
            let p = out.join("r_hist.csv");
            write_file(&p, histogram_csv(&rep.histogram).as_bytes())?;
            written.push(p);
            let p = out.join("sig_prob.csv");
            write_file(&p, sig_prob_csv(sig_rows)?.as_bytes())?;
            written.push(p);
        }
        if debug {
            let p = out.join("r_samples.csv");
            write_file(&p, r_samples_csv(rep).as_bytes())?;
            written.push(p);
        }
    }
    Ok(written)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassPosteriorReport {
    pub schema: String,
    pub k: usize,
    pub n: usize,
    pub prior_shape: f64,
    pub prior_rate: f64,
    pub burnin: usize,
    pub samples: usize,
    pub seed: u64,
    pub mass: Summary,
    pub lag1_autocorrelation: f64,
    pub non_convergence_warning: bool,
    /// Posterior of `max_r Var[nu(B_r)]` under the BY baseline with `n` bins.
    pub max_measure_variance: Summary,
}

impl MassPosteriorReport {
    pub fn new(
        cfg: &crate::posterior::MassPosteriorConfig,
        samples: &MassSamples,
        max_var: Summary,
    ) -> Self {
        Self {
            schema: SCHEMA_VERSION.into(),
            k: cfg.k,
            n: cfg.n,
            prior_shape: cfg.prior_shape,
            prior_rate: cfg.prior_rate,
            burnin: cfg.burnin,
            samples: cfg.samples,
            seed: cfg.seed,
            mass: samples.summary.clone(),
            lag1_autocorrelation: samples.lag1_autocorrelation,
            non_convergence_warning: samples.non_convergence_warning(),
            max_measure_variance: max_var,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, 1e-300, 25379.123, 1.0 / 3.0, 0.0, 5e-324] {
            let s = fmt_num(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
        assert_eq!(fmt_num(1e-300), "1e-300");
    }

    #[test]
    fn method_lines() {
        assert_eq!(MethodCount::exact("bh", 3).line(), "bh R=3");
        assert_eq!(
            MethodCount::sampled("dp", 2.5, 0.5).line(),
            "dp R=2.5 sd=0.5"
        );
    }

    #[test]
    fn sig_csv_quotes_labels() {
        let rows = vec![SigRow {
            label: "a,b".into(),
            p: 0.01,
            sig_prob: 1.0,
        }];
        assert_eq!(
            sig_prob_csv(&rows).unwrap(),
            "label,p,sig_prob\n\"a,b\",0.01,1.0\n"
        );
    }
}
