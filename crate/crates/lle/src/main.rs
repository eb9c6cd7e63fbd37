use anyhow::Context;
use clap::Parser;
use lle::config;
use lle::run::{run, RunError};
use std::path::PathBuf;
use std::process::ExitCode;

/// Stationary states, pinning, and stability of the Lugiato-Lefever equation
/// with a first-order potential term.
#[derive(Parser)]
#[command(name = "lle", version, about)]
struct Cli {
    /// TOML configuration file
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides run.output_dir)
    #[arg(long)]
    output: Option<PathBuf>,
    /// Seed for randomized perturbations (overrides run.seed)
    #[arg(long)]
    seed: Option<u64>,
    /// Suppress progress output
    #[arg(long)]
    quiet: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            let code = err
                .downcast_ref::<RunError>()
                .map(|e| e.exit_code())
                .unwrap_or(2);
            ExitCode::from(code as u8)
        }
    }
}

fn execute(cli: &Cli) -> anyhow::Result<()> {
    let text = std::fs::read_to_string(&cli.config)
        .with_context(|| format!("reading {}", cli.config.display()))?;
    let mut cfg = config::parse_config(&text).map_err(|e| {
        anyhow::Error::new(RunError::Validation(e.to_string()))
    })?;
    if let Some(out) = &cli.output {
        cfg.run.output_dir = out.display().to_string();
    }
    if let Some(seed) = cli.seed {
        cfg.run.seed = seed;
    }
    if !cli.quiet {
        println!(
            "lle: running {:?} -> {}",
            cfg.run.command, cfg.run.output_dir
        );
    }
    run(&cfg)?;
    if !cli.quiet {
        println!("lle: done, MANIFEST.json written");
    }
    Ok(())
}
