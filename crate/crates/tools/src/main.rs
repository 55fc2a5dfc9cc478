use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use geneo_tools::pipeline::{run_experiment, BoundStatus};
use geneo_tools::{stages, ExperimentConfig, ToolError};

/// Exit status: 0 when every enabled check passes, 1 when a bound check
/// fails or PCG stalls, 2 on configuration, input or numerical errors.
#[derive(Debug, Parser)]
#[command(name = "geneo", version, about = "Two-level Schwarz experiments with spectral coarse spaces")]
struct Cli {
    /// Experiment configuration (TOML). `GENEO__SECTION__KEY` variables
    /// override single keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Random seed; overrides `seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Parallel sweep cells.
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
    #[arg(long, short, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Every cell end to end: report.csv plus one directory per cell.
    Run,
    /// Stiffness matrix and load vector.
    Assemble,
    /// Overlapping subdomains, partition of unity, k0 and k1.
    Decompose,
    /// Local eigenproblems and the coarse basis.
    Coarse,
    /// PCG with the configured preconditioner.
    Solve,
    /// Eigenvalues of the preconditioned operator, or of the pencil
    /// `A v = lambda M v` for an external pair.
    Spectrum {
        #[arg(long, requires = "m")]
        a: Option<PathBuf>,
        #[arg(long, requires = "a")]
        m: Option<PathBuf>,
    },
    /// Bound check of an exported spectrum.
    Report,
}

fn load(cli: &Cli) -> Result<ExperimentConfig, ToolError> {
    let path = cli.config.as_ref().ok_or_else(|| ToolError::Config {
        key: "--config".into(),
        message: "this command needs a configuration file".into(),
    })?;
    let mut config = ExperimentConfig::load(path)?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(out) = &cli.out {
        config.output.dir = out.clone();
    }
    Ok(config)
}

fn status(pass: bool) -> ExitCode {
    if pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn execute(cli: &Cli) -> Result<ExitCode, ToolError> {
    if let Command::Spectrum { a: Some(a), m: Some(m) } = &cli.command {
        let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("out"));
        let values = stages::pencil_spectrum(a, m, &out)?;
        log::info!("{} eigenvalues written", values.len());
        return Ok(ExitCode::SUCCESS);
    }
    let config = load(cli)?;
    let out = config.output.dir.clone();
    match cli.command {
        Command::Run => {
            let summary = run_experiment(&config, &out, cli.workers)?;
            for r in &summary.reports {
                if r.failed() {
                    log::error!(
                        "cell {} failed: bounds {}, {} iterations, converged {}",
                        r.cell.index,
                        r.status.as_str(),
                        r.history.iterations,
                        r.history.converged
                    );
                }
            }
            println!("{}", summary.report_path.display());
            Ok(status(summary.failures() == 0))
        }
        Command::Assemble => stages::assemble(&config, &out).map(|_| ExitCode::SUCCESS),
        Command::Decompose => stages::decompose(&config, &out).map(|_| ExitCode::SUCCESS),
        Command::Coarse => stages::coarse(&config, &out).map(|_| ExitCode::SUCCESS),
        Command::Solve => stages::solve(&config, &out).map(status),
        Command::Spectrum { .. } => stages::spectrum(&config, &out).map(|_| ExitCode::SUCCESS),
        Command::Report => stages::report(&config, &out).map(|s| status(s != BoundStatus::Fail)),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::from_env(
        env_logger::Env::default().default_filter_or(if cli.verbose { "debug" } else { "warn" }),
    )
    .init();
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
