use std::fs::File;
use std::io::{self, BufWriter};
use std::path::PathBuf;
use std::process::ExitCode;

use arbfun_core::experiments::{
    experiment_info, experiments_in_module, list_experiments, run_many, write_csv, ExperimentConfig, ResultRow,
    EXPERIMENTS,
};
use arbfun_core::{Error, Result};
use clap::{Args, Parser, Subcommand};

/// Monte Carlo experiments for rounding errors, oscillating integrals,
/// chaos operators and Euler error limits.
#[derive(Parser, Debug)]
#[command(name = "arbfun", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Options,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Graduation error, bias brackets and square field.
    Graduation,
    /// Characteristic-function decay and the arbitrary functions limit.
    Rajchman,
    /// Oscillating stochastic integrals and complex bracket limits.
    Paths,
    /// Wiener-chaos operators and rotations.
    Chaos,
    /// Euler error law of the mechanical system.
    Sde,
    /// Every experiment in catalog order.
    All,
    /// Print the experiment catalog.
    List,
}

impl Command {
    fn module(self) -> Option<&'static str> {
        match self {
            Self::Graduation => Some("graduation"),
            Self::Rajchman => Some("rajchman"),
            Self::Paths => Some("paths"),
            Self::Chaos => Some("chaos"),
            Self::Sde => Some("sde"),
            Self::All | Self::List => None,
        }
    }
}

#[derive(Args, Debug, Default)]
struct Options {
    /// Flat `key = value` config file; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Run a single experiment id.
    #[arg(long, global = true)]
    experiment: Option<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    replicates: Option<usize>,
    /// Comma-separated, strictly increasing.
    #[arg(long, global = true)]
    n_ladder: Option<String>,
    /// Fine grid points per coarse step, at least 16.
    #[arg(long, global = true)]
    grid_mult: Option<usize>,
    #[arg(long, global = true)]
    distribution: Option<String>,
    #[arg(long, global = true)]
    system: Option<String>,
    #[arg(long, global = true)]
    function: Option<String>,
    /// CSV output path; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Sigma gate for statistical rows.
    #[arg(long, global = true)]
    gate: Option<f64>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

fn build_config(opts: &Options) -> Result<ExperimentConfig> {
    let mut cfg = match &opts.config {
        Some(path) => ExperimentConfig::parse_str(&std::fs::read_to_string(path)?)?,
        None => ExperimentConfig::default(),
    };
    let overrides: [(&str, Option<String>); 11] = [
        ("experiment", opts.experiment.clone()),
        ("seed", opts.seed.map(|v| v.to_string())),
        ("replicates", opts.replicates.map(|v| v.to_string())),
        ("n_ladder", opts.n_ladder.clone()),
        ("grid_mult", opts.grid_mult.map(|v| v.to_string())),
        ("distribution", opts.distribution.clone()),
        ("system", opts.system.clone()),
        ("function", opts.function.clone()),
        ("gate", opts.gate.map(|v| v.to_string())),
        ("out", opts.out.as_ref().map(|p| p.display().to_string())),
        ("threads", opts.threads.map(|v| v.to_string())),
    ];
    for (key, value) in overrides {
        if let Some(v) = value {
            cfg.set(key, &v)?;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn selected_ids(command: Command, cfg: &ExperimentConfig) -> Result<Vec<&'static str>> {
    if let Some(id) = &cfg.experiment {
        let info = experiment_info(id)?;
        if let Some(module) = command.module() {
            if info.module != module {
                return Err(Error::InvalidParameter(format!(
                    "experiment {id} belongs to the {} subcommand, not {module}",
                    info.module
                )));
            }
        }
        return Ok(vec![info.id]);
    }
    Ok(match command.module() {
        Some(module) => experiments_in_module(module),
        None => EXPERIMENTS.iter().map(|e| e.id).collect(),
    })
}

fn emit(cfg: &ExperimentConfig, rows: &[ResultRow]) -> Result<()> {
    match &cfg.out {
        Some(path) => write_csv(BufWriter::new(File::create(path)?), rows),
        None => write_csv(io::stdout().lock(), rows),
    }
}

fn run(cli: &Cli) -> Result<bool> {
    if cli.command == Command::List {
        print!("{}", list_experiments());
        return Ok(true);
    }
    let cfg = build_config(&cli.opts)?;
    let ids = selected_ids(cli.command, &cfg)?;
    let threads = cfg.threads.unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    let rows = pool.install(|| run_many(&ids, &cfg))?;
    emit(&cfg, &rows)?;
    let failed: Vec<&ResultRow> = rows.iter().filter(|r| !r.passes(cfg.gate)).collect();
    for r in &failed {
        eprintln!("FAIL {}", r.csv_line());
    }
    let gated = rows.iter().filter(|r| r.is_gated()).count();
    eprintln!("{} of {gated} gated rows passed", gated - failed.len());
    Ok(failed.is_empty())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
