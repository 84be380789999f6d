//! Command-line front end for `distcert`.
//!
//! Exit codes: 0 certified / check passed, 1 not certified / check failed,
//! 2 usage, configuration or I/O error. The worker count for grid searches
//! and ensembles is read from `DISTCERT_WORKERS` (default: all cores).

pub mod config;

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use distcert::certify::{
    certify_best_rate, certify_exponential, certify_sublinear, classical_dgd_check, grid_search, undetectable_agents,
    verify_certificate, Axis, CertMode, Certificate, Failure, GridMode, GridOptions, Param, Verdict,
};
use distcert::lmi::build_program;
use distcert::report::{grid_svg, line_svg, write_ensemble_csv, write_grid_csv};
use distcert::sdp::sdpa::{export_sdpa, import_solution};
use distcert::sdp::Status;
use distcert::sim::{dgd_optimizer, error_ensemble};

use config::Config;

pub const WORKERS_ENV: &str = "DISTCERT_WORKERS";

#[derive(Debug, Parser)]
#[command(name = "distcert", version, about = "Convergence certificates for distributed optimization algorithms")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
#[group(multiple = false)]
pub struct ModeFlags {
    /// Certify exponential contraction at this rate.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Bisect for the smallest certifiable rate.
    #[arg(long)]
    pub bisect: bool,
    /// Certify sublinear convergence (nonexpansive, strict coupling). Default.
    #[arg(long)]
    pub sublinear: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MetricArg {
    /// Distance to the iteration's own fixed point.
    FixedPoint,
    /// Distance to the minimizer of the summed costs.
    Optimizer,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum GridModeArg {
    Sublinear,
    Exponential,
    Both,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the certification pipeline; writes the certificate with --out.
    Certify {
        config: PathBuf,
        #[command(flatten)]
        mode: ModeFlags,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-check a certificate against a config from scratch.
    Verify { config: PathBuf, certificate: PathBuf },
    /// Sweep step sizes; writes PREFIX.csv and PREFIX.svg.
    Gridsearch {
        config: PathBuf,
        /// Range lo:step:hi for the consensus step.
        #[arg(long)]
        rho: Option<String>,
        /// Range lo:step:hi for the gradient step.
        #[arg(long)]
        eta: Option<String>,
        /// Sweep only this agent's steps (1-based); others keep their config values.
        #[arg(long)]
        agent: Option<usize>,
        #[arg(long, value_enum, default_value = "sublinear")]
        mode: GridModeArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Mean log error over random initial states; writes PREFIX.csv and PREFIX.svg.
    Simulate {
        config: PathBuf,
        #[arg(long, default_value_t = 1000)]
        runs: usize,
        #[arg(long, default_value_t = 60)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Second config plotted against the first.
        #[arg(long)]
        compare: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "fixed-point")]
        metric: MetricArg,
        /// Also write every run's error curve to the CSV.
        #[arg(long)]
        per_run: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// The classical DGD step-size test.
    Classic { config: PathBuf },
    /// Write the LMI program in SDPA sparse format for an external solver.
    ExportSdp {
        config: PathBuf,
        /// Rate of the exported program; default is the sublinear (strict, γ = 1) program.
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Verify an external solver's primal vector and turn it into a certificate.
    ImportSdp {
        config: PathBuf,
        solution: PathBuf,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Configures the global worker pool from `DISTCERT_WORKERS`, if set.
pub fn init_workers() -> Result<()> {
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        let n: usize = v.trim().parse().with_context(|| format!("{WORKERS_ENV}={v:?}"))?;
        // a pool may already exist when called twice in one process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Parses `lo:step:hi`.
pub fn parse_range(s: &str) -> Result<(f64, f64, f64)> {
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, step, hi] = parts.as_slice() else { bail!("range {s:?} is not lo:step:hi") };
    let num = |x: &str| x.trim().parse::<f64>().with_context(|| format!("range {s:?}"));
    Ok((num(lo)?, num(step)?, num(hi)?))
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn with_ext(prefix: &Path, ext: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

fn describe_failure(f: &Failure) -> String {
    match f {
        Failure::NotDetectable { agents } => format!("not certified: (C_opt, A) not detectable for agents {agents:?}"),
        Failure::Solver { status, margin, upper_bound } => format!(
            "not certified: solver status {status:?}, margin {margin:.3e}, upper bound {upper_bound:.3e}"
        ),
    }
}

fn print_certificate(cert: &Certificate) {
    match cert.mode {
        CertMode::Exponential { gamma } => println!("certified: exponential contraction, gamma = {gamma}"),
        CertMode::Sublinear => println!("certified: sublinear convergence (nonexpansive, gamma = 1)"),
    }
    println!("min margin: {:.6e}", cert.min_margin());
    println!("margins: {}", cert.margins.iter().map(|m| format!("{m:.3e}")).collect::<Vec<_>>().join(" "));
    println!("fingerprint: {}", cert.fingerprint);
}

fn finish_verdict(verdict: Verdict, out: Option<&Path>) -> Result<i32> {
    match verdict {
        Verdict::Certified(cert) => {
            print_certificate(&cert);
            if let Some(path) = out {
                write(path, &serde_json::to_string_pretty(&cert)?)?;
                println!("certificate written to {}", path.display());
            }
            Ok(0)
        }
        Verdict::NotCertified(f) => {
            println!("{}", describe_failure(&f));
            Ok(1)
        }
    }
}

fn cmd_certify(config: &Path, mode: &ModeFlags, out: Option<&Path>) -> Result<i32> {
    let cfg = Config::load(config)?;
    let alg = cfg.algorithm()?;
    let bad = undetectable_agents(&alg)?;
    for i in 1..=alg.len() {
        println!("agent {i}: (C_opt, A) {}", if bad.contains(&i) { "not detectable" } else { "detectable" });
    }
    let verdict = match (mode.gamma, mode.bisect) {
        (Some(g), _) => certify_exponential(&alg, g, &cfg.solver)?,
        (None, true) => certify_best_rate(&alg, &cfg.solver, cfg.task.gamma_tol)?,
        (None, false) => certify_sublinear(&alg, &cfg.solver, cfg.task.delta)?,
    };
    finish_verdict(verdict, out)
}

fn cmd_verify(config: &Path, certificate: &Path) -> Result<i32> {
    let cfg = Config::load(config)?;
    let alg = cfg.algorithm()?;
    let text = fs::read_to_string(certificate).with_context(|| format!("reading {}", certificate.display()))?;
    let cert: Certificate = serde_json::from_str(&text).context("invalid certificate")?;
    let v = verify_certificate(&alg, &cert, &cfg.solver)?;
    if let Some(n) = v.lifted_by {
        println!("certificate lifted by kron with I_{n}");
    }
    println!("{}: {}", if v.ok { "verified" } else { "rejected" }, v.detail);
    Ok(if v.ok { 0 } else { 1 })
}

#[allow(clippy::too_many_arguments)]
fn cmd_gridsearch(
    config: &Path,
    rho: Option<&str>,
    eta: Option<&str>,
    agent: Option<usize>,
    mode: GridModeArg,
    out: &Path,
) -> Result<i32> {
    let cfg = Config::load(config)?;
    let dgd = cfg.dgd().ok_or_else(|| anyhow!("gridsearch needs a [model.dgd] config"))?;
    let (template, graph) = (dgd.params()?, dgd.graph()?);
    let (rho_param, eta_param) = match agent {
        Some(i) => (Param::AgentRho(i), Param::AgentEta(i)),
        None => (Param::Rho, Param::Eta),
    };
    let (rho, eta) = match (rho, eta) {
        (None, None) => (Some("0.001:0.05:1.501"), Some("0.001:0.05:2.001")),
        other => other,
    };
    let mut axes = Vec::new();
    for (param, range) in [(rho_param, rho), (eta_param, eta)] {
        if let Some(r) = range {
            let (lo, step, hi) = parse_range(r)?;
            axes.push(Axis::range(param, lo, step, hi)?);
        }
    }
    let opts = GridOptions {
        mode: match mode {
            GridModeArg::Sublinear => GridMode::Sublinear,
            GridModeArg::Exponential => GridMode::Exponential,
            GridModeArg::Both => GridMode::Both,
        },
        solver: cfg.solver,
        gamma_tol: cfg.task.gamma_tol,
        delta: cfg.task.delta,
    };
    let report = grid_search(&template, &graph, axes, &opts)?;
    let csv_path = with_ext(out, "csv");
    let file = fs::File::create(&csv_path).with_context(|| format!("writing {}", csv_path.display()))?;
    write_grid_csv(&report, file)?;
    let title = format!("certified cells: {} of {}", report.certified_count(), report.cells.len());
    write(&with_ext(out, "svg"), &grid_svg(&report, &title)?)?;
    let classical = report.cells.iter().filter(|c| c.classical_ok == Some(true)).count();
    let errors = report.cells.iter().filter(|c| c.error.is_some()).count();
    println!("{title}; classical region: {classical}; errors: {errors}");
    println!("wrote {} and {}", csv_path.display(), with_ext(out, "svg").display());
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    config: &Path,
    runs: usize,
    steps: usize,
    seed: u64,
    compare: Option<&Path>,
    metric: MetricArg,
    per_run: bool,
    out: &Path,
) -> Result<i32> {
    let mut paths = vec![config];
    paths.extend(compare);
    let mut ensembles = Vec::new();
    for path in &paths {
        let cfg = Config::load(path)?;
        let dgd = cfg.dgd().ok_or_else(|| anyhow!("{}: simulation needs a [model.dgd] config", path.display()))?;
        let costs = dgd.costs()?.ok_or_else(|| anyhow!("{}: simulation needs model.dgd.costs", path.display()))?;
        let alg = cfg.algorithm()?;
        let reference = match metric {
            MetricArg::FixedPoint => None,
            MetricArg::Optimizer => Some(dgd_optimizer(&costs, dgd.n)?),
        };
        let ens = error_ensemble(&alg, runs, steps, cfg.task.init_box, seed, reference.as_deref())?;
        let label = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        println!("{label}: mean log10 error {:.4} -> {:.4} after {steps} steps", ens.mean_log_error[0], ens.mean_log_error[steps]);
        ensembles.push((label, ens));
    }
    let series: Vec<(&str, &distcert::sim::RunEnsemble)> = ensembles.iter().map(|(l, e)| (l.as_str(), e)).collect();
    let csv_path = with_ext(out, "csv");
    let file = fs::File::create(&csv_path).with_context(|| format!("writing {}", csv_path.display()))?;
    write_ensemble_csv(&series, per_run, file)?;
    let lines: Vec<(&str, &[f64])> = ensembles.iter().map(|(l, e)| (l.as_str(), e.mean_log_error.as_slice())).collect();
    write(&with_ext(out, "svg"), &line_svg(&lines, &format!("average log error, {runs} runs"), "mean log10 error"))?;
    println!("wrote {} and {}", csv_path.display(), with_ext(out, "svg").display());
    Ok(0)
}

fn cmd_classic(config: &Path) -> Result<i32> {
    let cfg = Config::load(config)?;
    let dgd = cfg.dgd().ok_or_else(|| anyhow!("the classical test needs a [model.dgd] config"))?;
    let params = dgd.params()?;
    let c = classical_dgd_check(&params, &dgd.graph()?)?;
    let (rho, eta) = (params.rho[0], params.eta[0]);
    println!("d_max = {}", c.d_max);
    println!("lambda_max(L) = {:.6}", c.lambda_max);
    println!("rho = {rho} < 1/d_max = {:.6}: {}", c.rho_bound, rho < c.rho_bound);
    println!("eta = {eta} < (2 - rho*lambda_max)/K = {:.6}: {}", c.eta_bound, eta < c.eta_bound);
    println!("{}", if c.ok { "pass" } else { "fail" });
    Ok(if c.ok { 0 } else { 1 })
}

fn program(cfg: &Config, gamma: Option<f64>) -> Result<distcert::lmi::LmiProgram> {
    let alg = cfg.algorithm()?;
    Ok(match gamma {
        Some(g) => build_program(&alg, g, false)?,
        None => build_program(&alg.strictified(cfg.task.delta)?, 1.0, true)?,
    })
}

fn cmd_export(config: &Path, gamma: Option<f64>, out: &Path) -> Result<i32> {
    let cfg = Config::load(config)?;
    write(out, &export_sdpa(&program(&cfg, gamma)?, &cfg.solver)?)?;
    println!("wrote {}", out.display());
    Ok(0)
}

fn cmd_import(config: &Path, solution: &Path, gamma: Option<f64>, out: Option<&Path>) -> Result<i32> {
    let cfg = Config::load(config)?;
    let prog = program(&cfg, gamma)?;
    let text = fs::read_to_string(solution).with_context(|| format!("reading {}", solution.display()))?;
    let res = import_solution(&prog, &text, &cfg.solver)?;
    let alg = cfg.algorithm()?;
    let verdict = match (res.status, res.witness) {
        (Status::Feasible, Some(witness)) => {
            if gamma.is_none() && !undetectable_agents(&alg)?.is_empty() {
                Verdict::NotCertified(Failure::NotDetectable { agents: undetectable_agents(&alg)? })
            } else {
                Verdict::Certified(Certificate {
                    mode: gamma.map_or(CertMode::Sublinear, |gamma| CertMode::Exponential { gamma }),
                    fingerprint: alg.fingerprint(),
                    delta: gamma.is_none().then_some(cfg.task.delta),
                    margins: prog.margins(&witness)?,
                    witness,
                })
            }
        }
        (status, _) => Verdict::NotCertified(Failure::Solver { status, margin: res.margin, upper_bound: res.upper_bound }),
    };
    finish_verdict(verdict, out)
}

/// Runs one command and maps the outcome to an exit code.
pub fn run(cli: Cli) -> i32 {
    let result = init_workers().and_then(|()| match &cli.command {
        Command::Certify { config, mode, out } => cmd_certify(config, mode, out.as_deref()),
        Command::Verify { config, certificate } => cmd_verify(config, certificate),
        Command::Gridsearch { config, rho, eta, agent, mode, out } => {
            cmd_gridsearch(config, rho.as_deref(), eta.as_deref(), *agent, *mode, out)
        }
        Command::Simulate { config, runs, steps, seed, compare, metric, per_run, out } => {
            cmd_simulate(config, *runs, *steps, *seed, compare.as_deref(), *metric, *per_run, out)
        }
        Command::Classic { config } => cmd_classic(config),
        Command::ExportSdp { config, gamma, out } => cmd_export(config, *gamma, out),
        Command::ImportSdp { config, solution, gamma, out } => cmd_import(config, solution, *gamma, out.as_deref()),
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            2
        }
    }
}
