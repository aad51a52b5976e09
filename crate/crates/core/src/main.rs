use std::path::PathBuf;
use std::process::ExitCode;

use antider_kit::runner::{run_and_emit, ExperimentConfig, COMMANDS, PRECISION_ENV};
use clap::Parser;

/// Configuration-driven experiments on localization kernels, trace
/// antiderivatives and residue integrality.
#[derive(Parser, Debug)]
#[command(name = "antider-kit", version, after_help = format!(
    "Commands: {}\nDefault precision comes from {PRECISION_ENV} (else 256 bits).",
    COMMANDS.join(", ")
))]
struct Cli {
    /// Experiment to run; overrides `command` in the config.
    command: String,
    /// Flat TOML config document.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (default: output_dir from the config, else ./out).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Working precision in bits.
    #[arg(long)]
    precision: Option<u32>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut cfg = match ExperimentConfig::load(&cli.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("antider-kit: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    cfg.command = Some(cli.command.clone());
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    if cli.precision.is_some() {
        cfg.precision = cli.precision;
    }
    let base = cli.config.parent().map(PathBuf::from).unwrap_or_default();
    let out = cli
        .out
        .or_else(|| cfg.output_dir.as_ref().map(|d| base.join(d)))
        .unwrap_or_else(|| PathBuf::from("out"));
    match run_and_emit(&cfg, &base, &out) {
        Ok(o) => {
            for v in &o.report.verdicts {
                println!(
                    "{} {}: {}",
                    if v.pass { "PASS" } else { "FAIL" },
                    v.name,
                    v.detail
                );
            }
            if let Some(e) = &o.error {
                eprintln!("antider-kit: {e}");
            }
            println!("report written to {}", out.display());
            ExitCode::from(o.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("antider-kit: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
