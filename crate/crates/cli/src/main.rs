use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dnaga_cli::commands::{cmd_analyze, cmd_compare, cmd_generate, cmd_macro, cmd_simulate};
use dnaga_cli::{CliError, MacroMode, RunConfig};

#[derive(Parser)]
#[command(name = "dnaga", version, about = "Uplink SIR analysis and simulation for small-cell networks")]
struct Cli {
    /// Worker threads (default: available parallelism). Results do not
    /// depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides analysis.grid_points.
    #[arg(long)]
    grid_points: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Write the configured deployment as CSV.
    Generate {
        #[command(flatten)]
        common: Common,
        /// Output CSV file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Analytic signal, interference and SIR CDFs for the tagged cell.
    Analyze {
        #[command(flatten)]
        common: Common,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Monte Carlo empirical CDFs.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// KS distance between an analytic CDF CSV and an empirical CSV.
    Compare {
        #[arg(long)]
        analytic: PathBuf,
        #[arg(long)]
        empirical: PathBuf,
        /// Optional summary CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Deployment-averaged (semi) or hexagonal-bound (hex) analysis.
    Macro {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        mode: MacroMode,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
}

fn load(c: &Common) -> Result<RunConfig, CliError> {
    RunConfig::load(&c.config)?.with_overrides(c.seed, c.grid_points)
}

fn run(cli: Cli) -> Result<String, CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("--threads: {e}")))?;
    }
    match cli.command {
        Command::Generate { common, out } => cmd_generate(&load(&common)?, &out),
        Command::Analyze { common, out } => cmd_analyze(&load(&common)?, &out),
        Command::Simulate { common, out } => cmd_simulate(&load(&common)?, &out),
        Command::Compare { analytic, empirical, out } => cmd_compare(&analytic, &empirical, out.as_deref()),
        Command::Macro { common, mode, out } => cmd_macro(&load(&common)?, &out, mode),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(msg) => {
            print!("{msg}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
