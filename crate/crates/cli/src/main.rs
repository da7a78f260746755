use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use probtele_cli::{commands, CliError, Report, RunConfig};

#[derive(Parser)]
#[command(
    name = "probtele",
    version,
    about = "Probabilistic two-qubit teleportation: verification and Monte-Carlo runs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON run configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Overrides the configured trial count.
    #[arg(long, global = true)]
    trials: Option<u64>,

    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    /// Rescale an unnormalized input instead of rejecting it.
    #[arg(long, global = true)]
    renormalize: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Unitarity of the purification matrix.
    VerifyU0,
    /// Composed factor sequence against the purification matrix.
    VerifyEq36 {
        /// Treat a factorization mismatch as a failure (exit 1).
        #[arg(long)]
        strict_eq36: bool,
    },
    /// Flattening to single-qubit gates and CNOTs.
    VerifyBarenco {
        /// Write the flattened circuit in text form.
        #[arg(long)]
        circuit_out: Option<PathBuf>,
    },
    /// Sixteen measurement branches, purified states and corrections.
    VerifyOutcomes,
    /// Seeded Monte-Carlo run of the full protocol.
    Run,
    /// Success probability over a grid of alpha values.
    Sweep {
        #[arg(long)]
        alpha_min: Option<f64>,
        #[arg(long)]
        alpha_max: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

fn load(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(trials) = cli.trials {
        config.trials = trials;
    }
    if let Command::Sweep {
        alpha_min,
        alpha_max,
        steps,
    } = &cli.command
    {
        if let Some(a) = alpha_min {
            config.sweep.alpha_min = *a;
        }
        if let Some(a) = alpha_max {
            config.sweep.alpha_max = *a;
        }
        if let Some(n) = steps {
            config.sweep.steps = *n;
        }
    }
    config.validate(cli.renormalize)?;
    Ok(config)
}

fn execute(cli: &Cli) -> Result<Report, CliError> {
    let config = load(cli)?;
    match &cli.command {
        Command::VerifyU0 => commands::cmd_verify_u0(&config),
        Command::VerifyEq36 { strict_eq36 } => commands::cmd_verify_eq36(&config, *strict_eq36),
        Command::VerifyBarenco { circuit_out } => {
            commands::cmd_verify_barenco(&config, circuit_out.as_deref())
        }
        Command::VerifyOutcomes => commands::cmd_verify_outcomes(&config),
        Command::Run => commands::cmd_run(&config),
        Command::Sweep { .. } => commands::cmd_sweep(&config),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let report = match execute(&cli) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("probtele: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let default_format = if matches!(cli.command, Command::Sweep { .. }) {
        Format::Csv
    } else {
        Format::Json
    };
    let text = match cli.format.unwrap_or(default_format) {
        Format::Json => report.to_json(),
        Format::Csv => report.to_csv(),
    };
    match &cli.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, text) {
                eprintln!("probtele: cannot write {}: {e}", path.display());
                return ExitCode::from(probtele_cli::EXIT_CONFIG as u8);
            }
        }
        None => print!("{text}"),
    }
    for c in report.checks.iter().filter(|c| !c.passed()) {
        eprintln!(
            "FAIL {}: {} {} {}",
            c.name, c.metric, c.relation, c.threshold
        );
    }
    ExitCode::from(report.exit_code() as u8)
}
