use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hypolab::app::{cmd_bogovskii, cmd_certificate, cmd_gcc, cmd_simulate, cmd_verify, Outcome, RunConfig};
use hypolab::{Error, Result};

/// Kinetic transport with degenerate velocity diffusion on the flat torus.
#[derive(Debug, Parser)]
#[command(name = "hypolab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Run configuration (defaults apply when omitted).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory, overriding `output.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Seed, overriding `seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for the numerical kernels.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Also write a gnuplot script next to the series CSV.
    #[arg(long, global = true)]
    gnuplot: bool,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Run the solver and write series.csv and report.txt.
    Simulate,
    /// Certify the geometric control condition and write gcc.txt.
    Gcc,
    /// Evaluate the inequality checks and write verify.txt.
    Verify,
    /// Solve the divergence equation and write divergence.txt.
    Bogovskii,
    /// Issue and test a decay certificate; writes certificate.txt.
    Certificate,
}

fn run(cli: &Cli) -> Result<Outcome> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(dir) = &cli.out {
        config.output.dir = dir.clone();
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    config.output.gnuplot |= cli.gnuplot;
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("--threads: {e}")))?;
    }
    match cli.command {
        Command::Simulate => cmd_simulate(&config),
        Command::Gcc => cmd_gcc(&config),
        Command::Verify => cmd_verify(&config),
        Command::Bogovskii => cmd_bogovskii(&config),
        Command::Certificate => cmd_certificate(&config),
    }
}

fn main() -> ExitCode {
    // usage errors count as configuration errors
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(outcome) => {
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("hypolab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
