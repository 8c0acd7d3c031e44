use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use tensor_denoise_harness::config::parse_override;
use tensor_denoise_harness::{resolve, run, with_thread_cap, Command, Result};

/// Noise filtration experiments for low-rank tensor formats.
///
/// Settings come from built-in defaults, then `--config FILE` (flat
/// `key = value` lines), then `key=value` arguments and flags; later
/// sources win.
#[derive(Parser)]
#[command(name = "tensor-denoise", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// Flat key = value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write SVG plots.
    #[arg(long)]
    plots: bool,
    /// Overrides such as `seeds=20 ratios=0.1,10 format=tt`.
    #[arg(value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn execute(cli: Cli) -> Result<String> {
    let mut pairs = cli
        .overrides
        .iter()
        .map(|s| parse_override(s))
        .collect::<Result<Vec<_>>>()?;
    if let Some(seed) = cli.seed {
        pairs.push(("seed".into(), seed.to_string()));
    }
    if let Some(out) = &cli.out {
        pairs.push(("out".into(), out.display().to_string()));
    }
    if cli.plots {
        pairs.push(("plots".into(), "true".into()));
    }
    let cfg = resolve(cli.command, cli.config.as_deref(), &pairs)?;
    let outcome = with_thread_cap(|| run(&cfg))?;
    let mut text = outcome.report;
    for f in &outcome.files {
        text += &format!("wrote {}\n", f.display());
    }
    Ok(text)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("tensor-denoise: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
