use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use schwarz_coupler_cli::{configure_threads, run_from_config, Command, RunOptions};

/// Coupled local/nonlocal diffusion in 1D: direct and Schwarz solvers.
///
/// Exit codes: 0 success, 1 runtime error, 2 invalid config, 3 no
/// convergence within `solver.max_iter` (outputs are still written).
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// Output directory, overriding `outputs.directory`.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Monolithic direct solve.
    Solve { config: PathBuf },
    /// Alternating and/or parallel Schwarz iteration, per `solver.variant`.
    Schwarz { config: PathBuf },
    /// Block iteration over the subdomains of a purely nonlocal problem.
    Multidomain { config: PathBuf },
    /// Check a config without solving.
    Validate { config: PathBuf },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (command, config) = match cli.command {
        Cmd::Solve { config } => (Command::Solve, config),
        Cmd::Schwarz { config } => (Command::Schwarz, config),
        Cmd::Multidomain { config } => (Command::Multidomain, config),
        Cmd::Validate { config } => (Command::Validate, config),
    };
    let threads = std::env::var("SCHWARZ_COUPLER_THREADS").ok();
    let result = configure_threads(threads.as_deref()).and_then(|()| {
        run_from_config(&RunOptions {
            command,
            config,
            out_dir: cli.out_dir,
        })
    });
    match result {
        Ok(summary) => {
            for line in &summary.report {
                println!("{line}");
            }
            if summary.converged {
                ExitCode::SUCCESS
            } else {
                eprintln!("error: the iteration did not converge within solver.max_iter");
                ExitCode::from(3)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
