use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use bilevel_cli::commands::{cmd_compare, cmd_phantom, cmd_project, cmd_reconstruct};
use bilevel_cli::{CliError, Command, ExperimentConfig, Overrides};

#[derive(Parser)]
#[command(name = "bilevel", version, about = "Bilevel tomographic reconstruction experiments")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Write the Shepp-Logan phantom (BIMG and PGM).
    Phantom(Common),
    /// Write clean and noisy sinograms.
    Project(Common),
    /// Run one solver and write its trace and reconstruction.
    Reconstruct(Common),
    /// Run a method comparison and write the summary tables.
    Compare(Common),
}

#[derive(Args)]
struct Common {
    /// TOML experiment file.
    #[arg(long)]
    config: PathBuf,
    /// Override `testbed.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Override `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<Vec<PathBuf>, CliError> {
    let (command, common) = match cli.command {
        Sub::Phantom(c) => (Command::Phantom, c),
        Sub::Project(c) => (Command::Project, c),
        Sub::Reconstruct(c) => (Command::Reconstruct, c),
        Sub::Compare(c) => (Command::Compare, c),
    };
    let overrides = Overrides { seed: common.seed, out: common.out };
    let cfg = ExperimentConfig::load(&common.config, command, &overrides)?;
    let artifacts = match command {
        Command::Phantom => cmd_phantom(&cfg)?,
        Command::Project => cmd_project(&cfg)?,
        Command::Reconstruct => cmd_reconstruct(&cfg)?,
        Command::Compare => cmd_compare(&cfg)?.0,
    };
    Ok(artifacts.files)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
