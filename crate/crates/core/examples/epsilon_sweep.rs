//! ε-sweep over q ∈ {1.8, 2, 3}: max |x - ξ| against ε with the fitted
//! log-log slope, written as CSV tables and SVG plots.
//!
//! Run from the crate directory: `cargo run --example epsilon_sweep [config]`.

use std::path::PathBuf;

use tscale::experiments::{run_sweep, ExperimentConfig, ExperimentError};

fn main() -> Result<(), ExperimentError> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/configs/alternating.toml")));
    let mut config = ExperimentConfig::load(&path)?;
    if config.output.dir.is_relative() {
        config.output.dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..").join(&config.output.dir);
    }
    let (report, artifacts) = run_sweep(&config, Some(4))?;

    println!("{:>5} {:>8} {:>14} {:>10} {:>14}", "q", "eps", "max_diff", "ratio", "C eps");
    for r in &report.rows {
        println!(
            "{:>5} {:>8} {:>14.6e} {:>10.6} {:>14.6e}",
            r.q.unwrap_or(f64::NAN),
            r.epsilon,
            r.max_diff,
            r.ratio,
            r.bound
        );
    }
    for (q, s) in &report.slopes {
        println!("slope q = {}: {s:.4}", q.unwrap_or(f64::NAN));
    }
    println!("summary: {}", artifacts.summary.unwrap().display());
    println!("{} trajectory tables, {} plots", artifacts.trajectories.len(), artifacts.plots.len());
    Ok(())
}
