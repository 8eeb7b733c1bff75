use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ocfem_cli::config::{parse_levels, thread_cap};
use ocfem_cli::{cmd_check, cmd_solve, cmd_study, CliError, RunConfig};

#[derive(Parser)]
#[command(name = "ocfem", version, about = "Bilinear optimal control with P1/P0 finite elements")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Compiled-in problem: paper-sec6, tikhonov-only or manufactured-constant.
    #[arg(long)]
    preset: String,
    /// Flat key=value file overriding scalar settings.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Single override, e.g. `--set alpha=-0.5`; may be repeated.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the discrete control problem on one level and dump the fields.
    Solve {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        level: Option<u32>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Convergence study across consecutive levels, written as CSV.
    Study {
        #[command(flatten)]
        common: Common,
        /// Level range `A..B`; rows are produced for A..B-1.
        #[arg(long)]
        levels: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Verification battery on one level.
    Check {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        level: Option<u32>,
    },
}

fn configure(common: &Common) -> Result<RunConfig, CliError> {
    let mut config = RunConfig::new(&common.preset)?;
    if let Some(path) = &common.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        config.apply_file(&text)?;
    }
    for pair in &common.set {
        config.apply_pair(pair)?;
    }
    Ok(config)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let threads = thread_cap(std::env::var("OCFEM_THREADS").ok().as_deref());
    let mut stdout = std::io::stdout().lock();
    match cli.command {
        Command::Solve { common, level, out } => {
            let mut config = configure(&common)?;
            config.level = level.unwrap_or(config.level);
            config.out = out.or(config.out);
            cmd_solve(&config, &mut stdout)
        }
        Command::Study { common, levels, out } => {
            let mut config = configure(&common)?;
            if let Some(l) = levels {
                config.levels = parse_levels(&l)?;
            }
            config.out = out.or(config.out);
            cmd_study(&config, threads, &mut stdout)
        }
        Command::Check { common, level } => {
            let mut config = configure(&common)?;
            config.level = level.unwrap_or(config.level);
            cmd_check(&config, threads, &mut stdout)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
