//! Runs a config through the experiment runner and writes its reports.
//!
//! `cargo run --release --example sweep -- configs/sweep.toml /tmp/sweep`

use std::path::{Path, PathBuf};

use antider_kit::runner::{run_and_emit, ExperimentConfig};

fn main() -> antider_kit::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = PathBuf::from(args.next().unwrap_or_else(|| "configs/sweep.toml".into()));
    let out = PathBuf::from(args.next().unwrap_or_else(|| "out/sweep".into()));
    let cfg = ExperimentConfig::load(&path)?;
    let o = run_and_emit(&cfg, path.parent().unwrap_or(Path::new(".")), &out)?;
    for v in &o.report.verdicts {
        println!(
            "{:5} {:32} {}",
            if v.pass { "PASS" } else { "FAIL" },
            v.name,
            v.detail
        );
    }
    println!("exit status {} ({})", o.exit_code(), out.display());
    Ok(())
}
