use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use nrdcsk::sim::output::{write_ber_csv, write_spectrogram};
use nrdcsk::sim::{run_sweep, stage_spectrogram, SimConfig, Stage};
use nrdcsk::Error;

#[derive(Parser)]
#[command(name = "sim", about = "NR-DCSK anti-jamming BER simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured BER sweep and write ber.csv.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Override system.seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Write the spectrogram of one block at the configured operating point.
    Spectrogram {
        #[arg(long)]
        config: PathBuf,
        /// tx, rx or cleaned
        #[arg(long)]
        stage: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a configuration file and report every problem.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run { config, seed, out } => {
            let mut cfg = SimConfig::load(&config)?;
            if let Some(seed) = seed {
                cfg.system.seed = seed;
            }
            let points = run_sweep(&cfg)?;
            let path = out.join("ber.csv");
            write_ber_csv(&path, &points)?;
            eprintln!("wrote {} rows to {}", points.len(), path.display());
        }
        Command::Spectrogram { config, stage, out } => {
            let cfg = SimConfig::load(&config)?;
            let (_, spec) = stage_spectrogram(&cfg, Stage::from_name(&stage)?)?;
            write_spectrogram(&out, &spec)?;
            eprintln!(
                "wrote {}x{} spectrogram to {}",
                spec.rows,
                spec.cols,
                out.display()
            );
        }
        Command::Validate { config } => {
            SimConfig::load(&config)?;
            println!("{}: ok", config.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Error::Config(errors)) => {
            eprintln!("invalid configuration:");
            for e in errors {
                eprintln!("  {e}");
            }
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
