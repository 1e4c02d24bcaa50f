//! Command-line driver for the verification suites and estimator experiments.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use kinetic_core::defect_engine::DecayConfig;
use kinetic_core::experiments::{
    parse_list, parse_number, run_balance_experiment, run_besov_experiment, run_scaling_experiment,
    run_sobolev_experiment, ExperimentConfig,
};
use kinetic_core::field_calculus::GridField;
use kinetic_core::report::write_outputs;
use kinetic_core::suite;
use kinetic_core::{KineticError, VerificationReport};

#[derive(Parser, Debug)]
#[command(name = "kinetic", version, about = "Kinetic mollification verification suites and estimator experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Flat `key = value` configuration file; flags override it.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Grid points per axis.
    #[arg(long, global = true, value_name = "N")]
    grid: Option<usize>,
    /// Comma-separated mollification scales.
    #[arg(long, global = true, value_name = "LIST", value_parser = list_arg)]
    tau: Option<Vec<f64>>,
    /// Comma-separated dilation parameters.
    #[arg(long, global = true, value_name = "LIST", value_parser = list_arg)]
    lambda: Option<Vec<f64>>,
    /// Integrability exponent; `q` follows from `1/q = 1/p + 1/6`.
    #[arg(long, global = true, value_name = "VALUE", value_parser = number_arg)]
    p: Option<f64>,
    /// Output directory for `results.csv` and `summary.json`.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Reduced resolution.
    #[arg(long, global = true)]
    quick: bool,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Group laws and the block determinant identity.
    VerifyGroup,
    /// Trajectory equation residual order.
    VerifyTrajectories,
    /// Kernel masses, change of variables, difference estimates,
    /// Littlewood–Paley identities and maximal-function dominations.
    VerifyKernels,
    /// Representation of the mollification defect, commutation and decay.
    VerifyDefect,
    /// Besov ratio sweep.
    Besov,
    /// Sobolev ratio sweep.
    Sobolev,
    /// Scaling exponents of the norms under dilation.
    Scaling,
    /// Balancing of the multiplicative bound.
    Balance,
    /// Every suite.
    All,
}

fn list_arg(s: &str) -> Result<Vec<f64>, String> {
    parse_list(s).ok_or_else(|| format!("invalid number list `{s}`"))
}

fn number_arg(s: &str) -> Result<f64, String> {
    parse_number(s).ok_or_else(|| format!("invalid number `{s}`"))
}

/// Config file first, then flags.
fn build_config(cli: &Cli) -> Result<ExperimentConfig, KineticError> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| KineticError::Io(format!("{}: {e}", path.display())))?;
            ExperimentConfig::parse(&text)?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(g) = cli.grid {
        cfg.grid = g;
    }
    if let Some(t) = &cli.tau {
        cfg.taus = t.clone();
    }
    if let Some(l) = &cli.lambda {
        cfg.lambdas = l.clone();
    }
    if let Some(p) = cli.p {
        cfg.p = p;
    }
    if let Some(o) = &cli.out {
        cfg.out = o.clone();
    }
    cfg.quick |= cli.quick;
    Ok(cfg)
}

fn run(cmd: Command, cfg: &ExperimentConfig, lambda_set: bool, tau_set: bool) -> kinetic_core::Result<Vec<VerificationReport>> {
    Ok(match cmd {
        Command::VerifyGroup => vec![suite::group_report()?],
        Command::VerifyTrajectories => vec![suite::trajectory_report()?],
        Command::VerifyKernels => vec![
            suite::kernel_report()?,
            suite::difference_report()?,
            suite::littlewood_paley_report()?,
            suite::maximal_report(cfg.quick)?,
        ],
        Command::VerifyDefect => {
            let grid = if cfg.grid == ExperimentConfig::default().grid { 48 } else { cfg.grid };
            let tau = if tau_set { cfg.taus[0] } else { 1.0 };
            let mut s = suite::DefectSuite::new(grid, tau, cfg.quick);
            if tau_set && cfg.taus.len() >= 2 {
                s.decay = DecayConfig { taus: cfg.taus.clone(), ..s.decay };
            }
            let (reports, fields) = suite::defect_reports(&s)?;
            write_fields(&cfg.out, &fields)?;
            reports
        }
        Command::Besov => vec![run_besov_experiment(cfg)?],
        Command::Sobolev => vec![run_sobolev_experiment(cfg)?],
        Command::Scaling => {
            let mut c = cfg.clone();
            if !lambda_set {
                c.lambdas = vec![0.5, 1.0, 2.0];
            }
            vec![run_scaling_experiment(&c)?]
        }
        Command::Balance => vec![run_balance_experiment(100, 7)?],
        Command::All => suite::all_reports(cfg)?,
    })
}

/// Binary fields and a CSV slice through the middle `t` plane.
fn write_fields(dir: &Path, fields: &[(String, GridField)]) -> kinetic_core::Result<()> {
    std::fs::create_dir_all(dir)?;
    for (name, f) in fields {
        f.write_binary(&dir.join(format!("{name}.bin")))?;
        f.write_slice_csv(&dir.join(format!("{name}_slice.csv")), f.grid.counts[0] / 2)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match build_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let reports = match run(cli.command, &cfg, cli.lambda.is_some(), cli.tau.is_some()) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    for r in &reports {
        for c in &r.checks {
            let tag = if c.pass { "PASS" } else { "FAIL" };
            println!("{tag} {} [{}] measured={:e} target={:e} tol={:e}", c.experiment, c.parameters, c.measured, c.target, c.tolerance);
        }
        for n in &r.notes {
            println!("note {}: {n}", r.name);
        }
    }
    if let Err(e) = write_outputs(&cfg.out, &reports) {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    let failed: usize = reports.iter().map(|r| r.failures().count()).sum();
    let total: usize = reports.iter().map(|r| r.checks.len()).sum();
    println!("{} of {total} checks passed; outputs in {}", total - failed, cfg.out.display());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
