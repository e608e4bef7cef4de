//! `ctmc-fresh`: closed-form freshness, rate allocation, simulation and
//! experiment regeneration from the command line.
//!
//! Exit codes: 0 success, 2 usage or config parse error, 3 model validation
//! error, 4 I/O error.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;

use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ctmc_freshness::freshness::Model;
use ctmc_freshness::optimizer::{normalize_weights, water_fill_with, InnerStep, SourceSpec};
use ctmc_freshness::oracle::{fws_chain_solve, joint_chain_solve, MAX_ORACLE_STATES};
use ctmc_freshness::scenarios::{
    baseline_allocation, fmt_sig, run_experiment, system_freshness, Policy, ScenarioSpec,
};
use ctmc_freshness::simulator::simulate_shared;

use config::{Config, Grid, DEFAULT_LAMBDA_GRID};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("config parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Domain(#[from] ctmc_freshness::Error),
    #[error("IoError: {0}")]
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Parse(_) => 2,
            CliError::Domain(e) if e.is_io() => 4,
            CliError::Domain(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Parser)]
#[command(
    name = "ctmc-fresh",
    version,
    about = "Mean freshness of sampled CTMC sources"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form freshness of one source over a sampling-rate grid, with the
    /// product-chain oracle alongside.
    Freshness(FreshnessArgs),
    /// Water-filling allocation of a total sampling budget.
    Optimize(OptimizeArgs),
    /// Monte Carlo estimate of freshness at one sampling rate.
    Simulate(SimulateArgs),
    /// Regenerate one experiment's CSV output.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct FreshnessArgs {
    config: PathBuf,
    /// Comma-separated rates, or `min:max:count` for a log grid.
    #[arg(long, value_parser = Grid::parse)]
    lambda_grid: Option<Grid>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum InnerArg {
    /// Single-shot for all-FWE two-state configs, bisection otherwise.
    Auto,
    Bisection,
    SingleShot,
}

#[derive(Args)]
struct OptimizeArgs {
    config: PathBuf,
    /// Total sampling budget; overrides the config's `budget`.
    #[arg(long)]
    budget: Option<f64>,
    #[arg(long, value_enum, default_value_t = InnerArg::Auto)]
    inner: InnerArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    config: PathBuf,
    #[arg(long)]
    lambda: f64,
    #[arg(long, default_value_t = 2e4)]
    horizon: f64,
    #[arg(long, default_value_t = 20)]
    reps: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Models to estimate (comma-separated); defaults to the source's model.
    #[arg(long, value_delimiter = ',')]
    models: Vec<Model>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Figure {
    Fig3,
    Fig4,
    Fig5,
    Fig6,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(value_enum)]
    name: Figure,
    #[arg(long, default_value = "results")]
    out_dir: PathBuf,
    /// Base seed (fig3).
    #[arg(long)]
    seed: Option<u64>,
    /// Simulation horizon (fig3).
    #[arg(long)]
    horizon: Option<f64>,
    /// Replications per grid point (fig3).
    #[arg(long)]
    reps: Option<usize>,
    /// Servers per M/M/c/c source (fig6).
    #[arg(long)]
    servers: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Freshness(a) => cmd_freshness(a),
        Command::Optimize(a) => cmd_optimize(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Experiment(a) => cmd_experiment(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn csv_writer(out: Option<&Path>) -> CliResult<csv::Writer<Box<dyn Write>>> {
    let sink: Box<dyn Write> = match out {
        Some(p) => {
            Box::new(File::create(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?)
        }
        None => Box::new(io::stdout().lock()),
    };
    Ok(csv::Writer::from_writer(sink))
}

fn cmd_freshness(args: FreshnessArgs) -> CliResult<()> {
    let cfg = Config::load(&args.config)?;
    let src = cfg.single()?;
    let spec = src.build()?;
    let grid = args
        .lambda_grid
        .as_ref()
        .or(cfg.lambda_grid())
        .unwrap_or(&DEFAULT_LAMBDA_GRID);
    let lambdas = grid.points()?;
    if let Some(&bad) = lambdas.iter().find(|l| !(**l >= 0.0) || !l.is_finite()) {
        return Err(ctmc_freshness::Error::NonPositiveRate(format!(
            "sampling rate {bad} is not allowed"
        ))
        .into());
    }
    let with_oracle = spec.num_states() <= MAX_ORACLE_STATES;

    let mut w = csv_writer(args.out.as_deref())?;
    w.write_record(["lambda", "analytic", "oracle"])?;
    for l in lambdas {
        let oracle = if with_oracle && l > 0.0 {
            let v = match spec.model {
                Model::Fwe => joint_chain_solve(&spec.generator, l, None)?,
                Model::Fwc => joint_chain_solve(&spec.generator, l, spec.proximity.as_ref())?,
                Model::Fws => fws_chain_solve(&spec.generator, l)?,
            };
            fmt_sig(v)
        } else {
            String::new()
        };
        w.write_record([fmt_sig(l), fmt_sig(spec.rf.eval(l)), oracle])?;
    }
    w.flush()?;
    Ok(())
}

fn inner_step(arg: InnerArg, sources: &[SourceSpec]) -> InnerStep {
    match arg {
        InnerArg::Bisection => InnerStep::Bisection,
        InnerArg::SingleShot => InnerStep::SingleShot,
        InnerArg::Auto => {
            if sources
                .iter()
                .all(|s| s.model == Model::Fwe && s.num_states() == 2)
            {
                InnerStep::SingleShot
            } else {
                InnerStep::Bisection
            }
        }
    }
}

fn cmd_optimize(args: OptimizeArgs) -> CliResult<()> {
    let cfg = Config::load(&args.config)?;
    let budget = args.budget.or(cfg.budget).ok_or_else(|| {
        CliError::Usage("no budget: pass --budget or set `budget` in the config".into())
    })?;
    let mut sources = cfg.build()?;
    normalize_weights(&mut sources);
    let res = water_fill_with(&sources, budget, inner_step(args.inner, &sources))?;

    let mut w = csv_writer(args.out.as_deref())?;
    w.write_record(["id", "model", "weight", "lambda", "active", "freshness"])?;
    for (s, (&l, &a)) in sources.iter().zip(res.lambdas.iter().zip(&res.active)) {
        w.write_record([
            s.id.clone(),
            s.model.to_string(),
            fmt_sig(s.weight),
            fmt_sig(l),
            a.to_string(),
            fmt_sig(s.rf.eval(l)),
        ])?;
    }
    w.flush()?;
    drop(w);

    let active = res.active.iter().filter(|&&a| a).count();
    eprintln!("{:<15} {}", "budget", fmt_sig(budget));
    eprintln!("{:<15} {}", "mu", fmt_sig(res.mu));
    eprintln!("{:<15} {}", "iterations", res.iterations);
    eprintln!("{:<15} {active}/{}", "active", sources.len());
    eprintln!("{:<15} {}", "F_S (WF)", fmt_sig(res.system_freshness));
    for p in Policy::BASELINES {
        let rates = baseline_allocation(p, &sources, budget)?;
        eprintln!(
            "{:<15} {}",
            format!("F_S ({p})"),
            fmt_sig(system_freshness(&sources, &rates))
        );
    }
    Ok(())
}

fn cmd_simulate(args: SimulateArgs) -> CliResult<()> {
    let cfg = Config::load(&args.config)?;
    let src = cfg.single()?;
    let g = src.generator()?;
    let p = src.proximity()?;
    let models = if args.models.is_empty() {
        vec![src.model]
    } else {
        args.models.clone()
    };
    if models.contains(&Model::Fwc) && p.is_none() {
        return Err(ctmc_freshness::Error::MissingProximity.into());
    }
    let shared = simulate_shared(
        &g,
        args.lambda,
        p.as_ref(),
        args.horizon,
        args.reps,
        args.seed,
    )?;

    let mut w = csv_writer(args.out.as_deref())?;
    w.write_record([
        "model",
        "lambda",
        "mean",
        "ci_half_width",
        "std_error",
        "horizon",
        "replications",
        "seed",
    ])?;
    for m in models {
        let est = shared.get(m).expect("proximity checked above");
        w.write_record([
            m.to_string(),
            fmt_sig(args.lambda),
            fmt_sig(est.mean),
            fmt_sig(est.half_width_95),
            fmt_sig(est.std_error()),
            fmt_sig(est.horizon),
            est.replications.to_string(),
            est.seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_experiment(args: ExperimentArgs) -> CliResult<()> {
    let (label, spec) = match args.name {
        Figure::Fig3 => {
            let mut spec = ScenarioSpec::three_state_validation();
            if let ScenarioSpec::ThreeStateValidation {
                horizon,
                replications,
                seed,
                ..
            } = &mut spec
            {
                *horizon = args.horizon.unwrap_or(*horizon);
                *replications = args.reps.unwrap_or(*replications);
                *seed = args.seed.unwrap_or(*seed);
            }
            ("fig3", spec)
        }
        Figure::Fig4 => ("fig4", ScenarioSpec::two_state_sweep()),
        Figure::Fig5 => ("fig5", ScenarioSpec::two_state_sweep()),
        Figure::Fig6 => {
            let mut spec = ScenarioSpec::mmcc_sweep();
            if let ScenarioSpec::MmccSweep { servers, .. } = &mut spec {
                *servers = args.servers.unwrap_or(*servers);
            }
            ("fig6", spec)
        }
    };
    let report = run_experiment(&spec, &args.out_dir)?;
    for f in &report.files {
        println!("wrote {}", f.display());
    }
    let relevant: Vec<_> = report
        .checks
        .iter()
        .filter(|c| match args.name {
            Figure::Fig4 => !c.name.contains("unsampled") && !c.name.contains("in intensity"),
            Figure::Fig5 => c.name.contains("unsampled") || c.name.contains("in intensity"),
            _ => true,
        })
        .collect();
    for c in &relevant {
        println!("  {c}");
    }
    let passed = relevant.iter().all(|c| c.passed);
    println!("{label}: {}", if passed { "PASS" } else { "FAIL" });
    Ok(())
}
