use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tscale::experiments::{self, ExperimentConfig, ExperimentError, OutputFormat};

#[derive(Parser)]
#[command(name = "tscale", version, about = "Averaging experiments on time scales")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Certify the configured field as Δ-periodic or quasiperiodic in shifts
    Verify(Common),
    /// Solve the original and averaged systems and write trajectories
    Run(Common),
    /// One paired solve per (q, ε) and the log-log slope of max |x - ξ|
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Worker threads
        #[arg(long)]
        parallel: Option<usize>,
    },
}

#[derive(Args)]
struct Common {
    /// TOML experiment file; defaults to the alternating linear system
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    q: Option<f64>,
    /// Repeatable; replaces the config's list
    #[arg(long = "epsilon")]
    epsilon: Vec<f64>,
    #[arg(long = "n-max")]
    n_max: Option<usize>,
    #[arg(long = "L")]
    l: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    format: Option<OutputFormat>,
    /// Seed for sampled estimates of M and λ
    #[arg(long)]
    seed: Option<u64>,
}

impl Common {
    fn config(&self) -> Result<ExperimentConfig, ExperimentError> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::alternating_example(2.0),
        };
        if let Some(q) = self.q {
            cfg = cfg.with_q(q);
            cfg.sweep.q.clear();
        }
        if let Some(n) = self.n_max {
            cfg = cfg.with_n_max(n);
        }
        if !self.epsilon.is_empty() {
            cfg.run.epsilon = self.epsilon.clone();
        }
        if let Some(l) = self.l {
            cfg.run.l = l;
        }
        if let Some(out) = &self.out {
            cfg.output.dir = out.clone();
        }
        if let Some(f) = self.format {
            cfg.output.format = f;
        }
        if let Some(s) = self.seed {
            cfg.run.seed = s;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn print_report(report: &experiments::SweepReport) {
    println!("q,epsilon,max_diff,ratio,bound,horizon");
    for r in &report.rows {
        println!(
            "{},{},{:e},{:.6},{:e},{}",
            r.q.map(|q| q.to_string()).unwrap_or_default(),
            r.epsilon,
            r.max_diff,
            r.ratio,
            r.bound,
            r.horizon
        );
    }
    for (q, s) in &report.slopes {
        if s.is_finite() {
            println!("slope q={}: {s:.4}", q.map(|q| q.to_string()).unwrap_or_default());
        }
    }
}

fn run(cli: Cli) -> Result<(), ExperimentError> {
    match cli.command {
        Command::Verify(common) => {
            let report = experiments::verify_command(&common.config()?)?;
            print!("{report}");
            if !report.passed {
                return Err(ExperimentError::Certification(format!(
                    "expected {}, got {}",
                    report.asserted.unwrap(),
                    report.certificate.kind
                )));
            }
        }
        Command::Run(common) => {
            let (report, art) = experiments::run_example(&common.config()?)?;
            print_report(&report);
            log::info!("wrote {} trajectory files", art.trajectories.len());
        }
        Command::Sweep { common, parallel } => {
            let (report, _) = experiments::run_sweep(&common.config()?, parallel)?;
            print_report(&report);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
