use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use twistres_cli::{load_config, output::write_artifacts, run, CliError, Command, Format};

/// Threshold resonances of twisted waveguides.
#[derive(Debug, Parser)]
#[command(name = "twistres", version)]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `output.format`.
    #[arg(long, value_enum)]
    format: Option<Format>,
}

fn execute(args: &Args) -> Result<(), CliError> {
    let mut cfg = load_config(&args.config)?;
    if let Some(dir) = &args.out {
        cfg.output.dir = dir.clone();
    }
    if let Some(f) = args.format {
        cfg.output.format = f;
    }
    let artifacts = run(args.command, &cfg)?;
    for path in write_artifacts(args.command, &artifacts, &cfg.output.dir, cfg.output.format)? {
        println!("wrote {}", path.display());
    }
    match artifacts.failure {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("twistres: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
