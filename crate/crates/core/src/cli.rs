//! The `mtp` command line.
//!
//! Exit codes: 0 success, 1 data or I/O error, 2 usage error. Results are
//! computed in full before any file is written; an output directory created
//! by a failed run is removed.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use crate::classic::{self, MtpKind, MtpMethod};
use crate::combine;
use crate::dp::MassSpec;
use crate::posterior::{self, MassPosteriorConfig};
use crate::pvalue::{self, PValueSet};
use crate::report::{
    self, fmt_num, ConfigEcho, DpSummary, Format, MassPosteriorReport, MethodCount, RunSummary,
};
use crate::sensitivity::{self, SensitivityConfig, SensitivityReport};
use crate::simulation::{self, DpProcedure, Procedure, ScenarioFile, SimulationRecord};

#[derive(Debug, Parser)]
#[command(
    name = "mtp",
    version,
    about = "Multiple testing under arbitrary dependence"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run fixed procedures and the DP sensitivity analysis on a p-value CSV.
    Run(RunArgs),
    /// Estimate FDR / FWER / power on a simulated scenario.
    Simulate(SimulateArgs),
    /// Tippett-combine p-values within groups.
    Combine(CombineArgs),
    /// Gibbs-sample the posterior of the DP mass.
    MassPosterior(MassPosteriorArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Bonferroni,
    WBonferroni,
    Sidak,
    Holm,
    Bh,
    By,
    Dp,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Bonferroni,
        Method::WBonferroni,
        Method::Sidak,
        Method::Holm,
        Method::Bh,
        Method::By,
        Method::Dp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Bonferroni => "bonferroni",
            Method::WBonferroni => "wbonferroni",
            Method::Sidak => "sidak",
            Method::Holm => "holm",
            Method::Bh => "bh",
            Method::By => "by",
            Method::Dp => "dp",
        }
    }

    fn fixed_kind(self) -> Option<MtpKind> {
        match self {
            Method::Bonferroni => Some(MtpKind::Bonferroni),
            Method::Sidak => Some(MtpKind::Sidak),
            Method::Holm => Some(MtpKind::Holm),
            Method::Bh => Some(MtpKind::BenjaminiHochberg),
            Method::By => Some(MtpKind::BenjaminiYekutieli),
            Method::WBonferroni | Method::Dp => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodList(pub Vec<Method>);

impl FromStr for MethodList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let mut out: Vec<Method> = Vec::new();
        for tok in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let add: Vec<Method> = if tok == "all" {
                Method::ALL.to_vec()
            } else {
                vec![*Method::ALL
                    .iter()
                    .find(|m| m.name() == tok)
                    .ok_or_else(|| format!("unknown method `{tok}`"))?]
            };
            for m in add {
                if !out.contains(&m) {
                    out.push(m);
                }
            }
        }
        if out.is_empty() {
            return Err("no methods given".into());
        }
        Ok(MethodList(out))
    }
}

fn parse_mass(s: &str) -> Result<MassSpec, String> {
    let spec = if s == "exp1" {
        MassSpec::Exponential { rate: 1.0 }
    } else if let Some(v) = s.strip_prefix("fixed:") {
        MassSpec::Fixed {
            mass: v.parse().map_err(|_| format!("bad mass `{v}`"))?,
        }
    } else if let Some(v) = s.strip_prefix("exp:") {
        MassSpec::Exponential {
            rate: v.parse().map_err(|_| format!("bad rate `{v}`"))?,
        }
    } else {
        return Err(format!("expected exp1, exp:<rate> or fixed:<M>, got `{s}`"));
    };
    spec.validate().map_err(|e| e.to_string())?;
    Ok(spec)
}

fn parse_alpha(s: &str) -> Result<f64, String> {
    let a: f64 = s.parse().map_err(|_| format!("bad alpha `{s}`"))?;
    classic::check_alpha(a).map_err(|e| e.to_string())?;
    Ok(a)
}

fn parse_format(s: &str) -> Result<Format, String> {
    match s.trim() {
        "json" => Ok(Format::Json),
        "csv" => Ok(Format::Csv),
        other => Err(format!("unknown format `{other}`")),
    }
}

fn parse_positive(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(n) if n >= 1 => Ok(n),
        _ => Err(format!("expected a positive integer, got `{s}`")),
    }
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "p")]
    column: String,
    #[arg(long, default_value = "0.05", value_parser = parse_alpha)]
    alpha: f64,
    #[arg(long, default_value = "all")]
    methods: MethodList,
    #[arg(long, default_value = "1000", value_parser = parse_positive)]
    draws: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// `exp1`, `exp:<rate>` or `fixed:<M>`.
    #[arg(long, default_value = "exp1", value_parser = parse_mass)]
    mass: MassSpec,
    #[arg(long, default_value = "mtp_out")]
    out: PathBuf,
    #[arg(long, default_value = "json,csv", value_delimiter = ',', value_parser = parse_format)]
    formats: Vec<Format>,
    /// Dirichlet weight draws for weighted Bonferroni.
    #[arg(long, default_value = "1000", value_parser = parse_positive)]
    wb_draws: usize,
    /// Only p-values at or below this go into `sig_prob.csv`.
    #[arg(long, default_value_t = 1.0)]
    sig_cutoff: f64,
    /// Also dump per-draw `r_samples.csv`.
    #[arg(long)]
    debug: bool,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, default_value = "bonferroni,sidak,holm,bh,by,dp")]
    methods: MethodList,
    #[arg(long, default_value = "exp1", value_parser = parse_mass)]
    mass: MassSpec,
    /// JSON output file; records go to stdout only when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CombineArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "group")]
    group_column: String,
    #[arg(long, default_value = "p")]
    column: String,
    /// CSV output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct MassPosteriorArgs {
    /// P-value CSV; gives `n` and the distinct count `k`.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, default_value = "p")]
    column: String,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    prior_shape: f64,
    #[arg(long, default_value_t = 1.0)]
    prior_rate: f64,
    #[arg(long, default_value_t = 10_000)]
    burnin: usize,
    #[arg(long, default_value = "10000", value_parser = parse_positive)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "mtp_out")]
    out: PathBuf,
}

/// Parses `argv` (including the program name), runs the command and
/// returns the process exit code.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = with_thread_cap(|| {
        let mut stdout = std::io::stdout().lock();
        match cli.command {
            Command::Run(a) => run(a, &mut stdout),
            Command::Simulate(a) => simulate(a, &mut stdout),
            Command::Combine(a) => combine_cmd(a, &mut stdout),
            Command::MassPosterior(a) => mass_posterior(a, &mut stdout),
        }
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}

/// Runs `f` on a pool capped by `MTP_THREADS` when set.
fn with_thread_cap<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    let cap = std::env::var("MTP_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n >= 1);
    match cap.and_then(|n| rayon::ThreadPoolBuilder::new().num_threads(n).build().ok()) {
        Some(pool) => pool.install(f),
        None => f(),
    }
}

fn read_pvalues(path: &Path, column: &str) -> anyhow::Result<PValueSet> {
    let file = fs::File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    pvalue::load_pvalues(file, column).with_context(|| format!("invalid input {}", path.display()))
}

/// Creates `out` if needed, runs `write`, and removes a freshly created
/// directory again if writing fails.
fn write_outputs(out: &Path, write: impl FnOnce() -> anyhow::Result<()>) -> anyhow::Result<()> {
    let created = !out.exists();
    fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    let res = write();
    if res.is_err() && created {
        let _ = fs::remove_dir_all(out);
    }
    res
}

fn run(a: RunArgs, stdout: &mut impl Write) -> anyhow::Result<()> {
    if !(0.0..=1.0).contains(&a.sig_cutoff) {
        bail!("--sig-cutoff must lie in [0, 1]");
    }
    let ps = read_pvalues(&a.input, &a.column)?;
    let methods = &a.methods.0;

    let report: Option<SensitivityReport> = if methods.contains(&Method::Dp) {
        let cfg = SensitivityConfig {
            alpha: a.alpha,
            draws: a.draws,
            mass: a.mass,
            baseline: None,
            seed: a.seed,
            comparison_draws: a.wb_draws,
        };
        Some(sensitivity::run_sensitivity(&ps, &cfg)?)
    } else {
        None
    };

    let mut counts = Vec::with_capacity(methods.len());
    for &m in methods {
        let line = match m {
            Method::Dp => {
                let r = report.as_ref().expect("dp report computed above");
                MethodCount::sampled("dp", r.mean_r, r.sd_r)
            }
            Method::WBonferroni => match (ps.weights(), &report) {
                (Some(w), _) => {
                    let method = MtpMethod::new(MtpKind::WeightedBonferroni(w.to_vec()), a.alpha)?;
                    MethodCount::exact(m.name(), classic::apply(&method, &ps)?.count)
                }
                (None, Some(r)) => MethodCount::sampled(
                    m.name(),
                    r.comparison.weighted_bonferroni_mean,
                    r.comparison.weighted_bonferroni_sd,
                ),
                (None, None) => {
                    let wb =
                        classic::weighted_bonferroni_mc(&ps, a.alpha, a.wb_draws.max(2), a.seed)?;
                    MethodCount::sampled(m.name(), wb.mean, wb.sd)
                }
            },
            fixed => {
                let kind = fixed.fixed_kind().expect("fixed method");
                MethodCount::exact(
                    m.name(),
                    classic::apply(&MtpMethod::new(kind, a.alpha)?, &ps)?.count,
                )
            }
        };
        counts.push(line);
    }

    let summary = RunSummary {
        schema: report::SCHEMA_VERSION.into(),
        m: ps.len(),
        k_distinct: ps.distinct_count(),
        config: ConfigEcho {
            input: a.input.display().to_string(),
            column: a.column.clone(),
            alpha: a.alpha,
            methods: methods.iter().map(|m| m.name().to_string()).collect(),
            draws: a.draws,
            seed: a.seed,
            mass: a.mass,
            baseline: "by".into(),
            wb_draws: a.wb_draws,
            sig_cutoff: a.sig_cutoff,
        },
        methods: counts.clone(),
        dp: report.as_ref().map(DpSummary::of),
    };
    let sig_rows = match &report {
        Some(r) => sensitivity::significance_table(r, &ps, a.sig_cutoff)?,
        None => Vec::new(),
    };

    write_outputs(&a.out, || {
        report::emit_report(
            &summary,
            report.as_ref(),
            &sig_rows,
            &a.formats,
            a.debug,
            &a.out,
        )?;
        Ok(())
    })?;
    for c in &counts {
        writeln!(stdout, "{}", c.line())?;
    }
    Ok(())
}

fn simulate(a: SimulateArgs, stdout: &mut impl Write) -> anyhow::Result<()> {
    let text = fs::read_to_string(&a.scenario)
        .with_context(|| format!("cannot open {}", a.scenario.display()))?;
    let file: ScenarioFile = text
        .parse()
        .with_context(|| format!("invalid scenario {}", a.scenario.display()))?;
    let mut records = Vec::new();
    for &m in &a.methods.0 {
        let procedure: Box<dyn Procedure> = match m {
            Method::Dp => Box::new(DpProcedure {
                mass: a.mass,
                seed: file.scenario.seed,
            }),
            Method::WBonferroni => {
                let n = file.scenario.m;
                Box::new(MtpKind::WeightedBonferroni(vec![1.0 / n as f64; n]))
            }
            fixed => Box::new(fixed.fixed_kind().expect("fixed method")),
        };
        let estimate =
            simulation::estimate_error_rates(procedure.as_ref(), &file.scenario, file.alpha)?;
        writeln!(stdout, "{} {}", m.name(), estimate)?;
        records.push(SimulationRecord {
            method: m.name().into(),
            alpha: file.alpha,
            scenario: file.scenario,
            estimate,
        });
    }
    if let Some(out) = &a.out {
        report::write_json(out, &records)
            .with_context(|| format!("cannot write {}", out.display()))?;
    }
    Ok(())
}

fn combine_cmd(a: CombineArgs, stdout: &mut impl Write) -> anyhow::Result<()> {
    let file =
        fs::File::open(&a.input).with_context(|| format!("cannot open {}", a.input.display()))?;
    let groups = combine::combine_groups(file, &a.group_column, &a.column)
        .with_context(|| format!("invalid input {}", a.input.display()))?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record([a.group_column.as_str(), "q", "p_combined"])?;
    for g in &groups {
        w.write_record([g.group.as_str(), &g.q.to_string(), &fmt_num(g.p_combined)])?;
    }
    let bytes = w.into_inner().map_err(|e| anyhow::anyhow!(e.to_string()))?;
    match &a.out {
        Some(path) => {
            fs::write(path, &bytes).with_context(|| format!("cannot write {}", path.display()))?
        }
        None => stdout.write_all(&bytes)?,
    }
    Ok(())
}

fn mass_posterior(a: MassPosteriorArgs, stdout: &mut impl Write) -> anyhow::Result<()> {
    let (k_data, n_data) = match &a.input {
        Some(path) => {
            let ps = read_pvalues(path, &a.column)?;
            (Some(ps.distinct_count()), Some(ps.len()))
        }
        None => (None, None),
    };
    let n = a.n.or(n_data).context("need --input or --n")?;
    let k = a.k.or(k_data).unwrap_or(n);
    let cfg = MassPosteriorConfig {
        k,
        n,
        prior_shape: a.prior_shape,
        prior_rate: a.prior_rate,
        burnin: a.burnin,
        samples: a.samples,
        seed: a.seed,
    };
    let samples = posterior::gibbs_mass(&cfg)?;
    let max_var = posterior::max_variance_summary(&samples, n)?;
    let rep = MassPosteriorReport::new(&cfg, &samples, max_var);
    if rep.non_convergence_warning {
        eprintln!(
            "warning: lag-1 autocorrelation {:.4} exceeds {}; the chain mixes poorly",
            rep.lag1_autocorrelation,
            posterior::AUTOCORRELATION_WARN
        );
    }
    write_outputs(&a.out, || {
        report::write_json(&a.out.join("m_posterior.json"), &rep)?;
        Ok(())
    })?;
    let q = rep.mass.quantiles;
    writeln!(
        stdout,
        "M k={k} n={n} mean={:.2} sd={:.2} quantiles=[{:.2}, {:.2}, {:.2}, {:.2}, {:.2}]",
        rep.mass.mean, rep.mass.sd, q[0], q[1], q[2], q[3], q[4]
    )?;
    writeln!(stdout, "max_var mean={:.5}", rep.max_measure_variance.mean)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_lists() {
        let l: MethodList = "bh,by,bh".parse().unwrap();
        assert_eq!(l.0, vec![Method::Bh, Method::By]);
        let l: MethodList = "all".parse().unwrap();
        assert_eq!(l.0.len(), 7);
        assert!("bh,foo".parse::<MethodList>().is_err());
        assert!("".parse::<MethodList>().is_err());
    }

    #[test]
    fn mass_flags() {
        assert_eq!(
            parse_mass("exp1").unwrap(),
            MassSpec::Exponential { rate: 1.0 }
        );
        assert_eq!(
            parse_mass("fixed:2.5").unwrap(),
            MassSpec::Fixed { mass: 2.5 }
        );
        assert!(parse_mass("fixed:-1").is_err());
        assert!(parse_mass("gamma").is_err());
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(run_cli(["mtp", "run"]), 2);
        assert_eq!(run_cli(["mtp", "frobnicate"]), 2);
        assert_eq!(
            run_cli(["mtp", "run", "--input", "x.csv", "--alpha", "2"]),
            2
        );
        assert_eq!(
            run_cli(["mtp", "run", "--input", "x.csv", "--methods", "nope"]),
            2
        );
    }
}
