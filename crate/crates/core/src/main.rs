use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use penalized_nsf::app::{run, Command, Options};
use penalized_nsf::cascade::thread_cap;
use penalized_nsf::config::parse_config;

/// Penalized Navier–Stokes–Fourier simulator on a fixed box.
#[derive(Parser)]
#[command(name = "nsf", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// Output directory; overrides `output` in the `[run]` section.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Suppress progress messages.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one simulation and check its diagnostics.
    Simulate { config: PathBuf },
    /// Check the constitutive hypotheses of the configured EOS and transport laws.
    ValidateEos { config: PathBuf },
    /// Run the configured parameter ladder and check its trends.
    Sweep { config: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, path) = match cli.command {
        Cmd::Simulate { config } => (Command::Simulate, config),
        Cmd::ValidateEos { config } => (Command::ValidateEos, config),
        Cmd::Sweep { config } => (Command::Sweep, config),
    };
    let opts = Options { output: cli.output, quiet: cli.quiet };
    let outcome = thread_cap()
        .and_then(|cap| {
            if let Some(n) = cap {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            parse_config(&path)
        })
        .and_then(|config| run(command, &config, &opts));
    match outcome {
        Ok(summary) if summary.passed() => ExitCode::SUCCESS,
        Ok(_) => ExitCode::from(1),
        Err(e) => {
            eprintln!("nsf: {e}");
            ExitCode::from(2)
        }
    }
}
