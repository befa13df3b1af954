//! Periodicity certificates for the fields named in the example configs.

use std::path::PathBuf;

use tscale::experiments::{verify_command, ExperimentConfig, ExperimentError};

fn main() -> Result<(), ExperimentError> {
    let dir = PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/configs"));
    let out = tempfile_dir();
    for name in ["inverse_gap.toml", "alternating.toml", "integers_periodic.toml"] {
        let mut config = ExperimentConfig::load(&dir.join(name))?;
        config.output.dir = out.join(name.trim_end_matches(".toml"));
        let report = verify_command(&config)?;
        println!("== {name}");
        print!("{report}");
    }
    Ok(())
}

fn tempfile_dir() -> PathBuf {
    std::env::temp_dir().join("tscale-verify")
}
