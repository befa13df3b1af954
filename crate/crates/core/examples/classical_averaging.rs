//! On the integers shifts are translations and the averaged field is the
//! ordinary mean over one period. Runs the config in
//! `examples/configs/integers_periodic.toml`.

use std::path::PathBuf;

use tscale::experiments::{prepare, run_pair, ExperimentConfig, ExperimentError};

fn main() -> Result<(), ExperimentError> {
    let path = PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/configs/integers_periodic.toml"));
    let config = ExperimentConfig::load(&path)?;
    let setup = prepare(&config)?;
    println!(
        "certificate {} (period {}, residual {:e})",
        setup.certificate.kind, setup.certificate.period, setup.certificate.max_residual
    );
    for &eps in &config.run.epsilon {
        let pair = run_pair(&setup, eps)?;
        println!(
            "eps = {eps:<5} horizon t = {:<5} intervals {:<4} max |x - xi| = {:.4e}  C eps = {:.4e}  xi(end) = {:.6}",
            pair.horizon.point.t(),
            pair.intervals,
            pair.report.max_diff,
            pair.bound_constant * eps,
            pair.averaged.last().x[0],
        );
    }
    Ok(())
}
