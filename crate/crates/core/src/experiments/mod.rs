//! Configuration-driven experiments: periodicity verification, paired solves
//! of the original and averaged systems, ε-sweeps, CSV and SVG output.

pub mod config;
pub mod fields;
pub mod output;

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::averaging::{
    build_averaged_field_periodic, build_averaged_field_quasiperiodic, error_bound_constant,
    estimate_constants, intervals_to_cover, RightHandSide, VectorField,
};
use crate::domain::DomainBox;
use crate::scale::{Point, TimeScale};
use crate::shift::{
    sample_points, verify_delta_periodic, CertificateKind, PeriodicityCertificate, ShiftOperator,
    VerifyOptions,
};
use crate::solver::{
    compare_trajectories, horizon_for, solve, DynamicSystem, Horizon, ProximityReport, SolveOptions,
    TerminalStatus, Trajectory,
};

pub use config::{ExperimentConfig, OutputFormat};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExperimentError {
    #[error("config error: {0}")]
    Config(String),
    #[error("certification failed: {0}")]
    Certification(String),
    #[error("solver failed: {0}")]
    Solver(#[from] crate::Error),
    #[error("i/o error: {0}")]
    Io(String),
}

impl ExperimentError {
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Config(_) => 2,
            ExperimentError::Certification(_) => 3,
            ExperimentError::Solver(_) => 4,
            ExperimentError::Io(_) => 1,
        }
    }
}

/// Everything built from a config before any solve.
#[derive(Debug)]
pub struct Setup {
    pub config: ExperimentConfig,
    pub ts: TimeScale,
    pub op: ShiftOperator,
    pub period: f64,
    pub field: VectorField,
    pub certificate: PeriodicityCertificate,
    pub t0: Point,
    pub x0: DVector<f64>,
    pub domain: DomainBox,
    /// `(M, λ)` on the domain.
    pub constants: (f64, f64),
}

fn certification_samples(ts: &TimeScale, t0: &Point) -> Result<Vec<Point>, ExperimentError> {
    let end = horizon_for(0.0, 1.0, ts, t0)?.point;
    Ok(sample_points(ts, t0, &end)?)
}

fn certification_states(x0: &DVector<f64>, domain: &DomainBox, seed: u64) -> Vec<DVector<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut states = vec![x0.clone()];
    states.extend((0..2).map(|_| domain.shrink(0.25).sample(&mut rng)));
    states
}

/// Check the field against the asserted kind (or find the strongest kind if
/// none is asserted) and attach the certificate.
fn certify(
    field: &mut VectorField,
    ts: &TimeScale,
    op: &ShiftOperator,
    period: f64,
    samples: &[Point],
    states: &[DVector<f64>],
    spec: &config::FieldSpec,
) -> Result<PeriodicityCertificate, ExperimentError> {
    let opts = VerifyOptions {
        tolerance: spec.tolerance,
        relative: spec.relative,
        check_backward: false,
    };
    let cert = match spec.assert {
        Some(CertificateKind::DeltaPeriodic) => {
            let mut combined: Option<PeriodicityCertificate> = None;
            for x in states {
                let g = field.at_state(x.clone());
                let c = verify_delta_periodic(ts, op, &g, period, samples, &opts)
                    .map_err(|e| ExperimentError::Certification(e.to_string()))?;
                combined = Some(match combined {
                    Some(prev) if prev.max_residual >= c.max_residual && prev.kind == CertificateKind::None => prev,
                    Some(prev) if c.kind == CertificateKind::DeltaPeriodic => PeriodicityCertificate {
                        sample_count: prev.sample_count + c.sample_count,
                        max_residual: prev.max_residual.max(c.max_residual),
                        ..prev
                    },
                    _ => c,
                });
            }
            let cert = combined.ok_or_else(|| ExperimentError::Certification("no states".into()))?;
            *field = field.clone().with_certificate(cert.clone());
            cert
        }
        _ => field
            .certify(ts, op, period, samples, states, &opts)
            .map_err(|e| ExperimentError::Certification(e.to_string()))?,
    };
    Ok(cert)
}

fn assertion_holds(asserted: Option<CertificateKind>, got: CertificateKind) -> bool {
    match asserted {
        None => true,
        Some(CertificateKind::None) => got == CertificateKind::None,
        Some(CertificateKind::QuasiPeriodic) => got != CertificateKind::None,
        Some(CertificateKind::DeltaPeriodic) => got == CertificateKind::DeltaPeriodic,
    }
}

/// Build scale, shift, field and domain; certify the field; fix `M` and `λ`.
pub fn prepare(config: &ExperimentConfig) -> Result<Setup, ExperimentError> {
    config.validate()?;
    let ts = config.build_scale()?;
    let op = config.build_shift()?;
    let period = config.period();
    let run = &config.run;
    let t0 = ts
        .point(run.t0)
        .map_err(|_| ExperimentError::Config(format!("t0 = {} is not on the scale", run.t0)))?;
    let x0 = DVector::from_vec(run.x0.clone());
    let domain = DomainBox::ball(config.field.dim, run.domain_radius).map_err(|e| ExperimentError::Config(e.to_string()))?;
    if !domain.shrink(run.margin).contains(&x0) {
        return Err(ExperimentError::Config(format!(
            "x0 is not inside the domain shrunk by margin {}",
            run.margin
        )));
    }
    let (mut field, analytic) = fields::build(&config.field, &ts, run.domain_radius)?;
    let samples = certification_samples(&ts, &t0)?;
    let constants = match analytic {
        Some(c) => c,
        None => {
            let est = estimate_constants(&field, &samples, &domain, 16, run.seed);
            (est.bound, est.lipschitz)
        }
    };
    field = field
        .with_constants(constants.0, constants.1)
        .map_err(|e| ExperimentError::Config(e.to_string()))?;
    let states = certification_states(&x0, &domain, run.seed);
    let certificate = certify(&mut field, &ts, &op, period, &samples, &states, &config.field)?;
    if certificate.kind == CertificateKind::None || !assertion_holds(config.field.assert, certificate.kind) {
        return Err(ExperimentError::Certification(format!(
            "field `{}` with T = {period}: got {} (max residual {:e})",
            config.field.builtin, certificate.kind, certificate.max_residual
        )));
    }
    Ok(Setup {
        config: config.clone(),
        ts,
        op,
        period,
        field,
        certificate,
        t0,
        x0,
        domain,
        constants,
    })
}

/// Original and averaged solutions for one `ε`.
#[derive(Clone, Debug)]
pub struct PairResult {
    pub q: Option<f64>,
    pub epsilon: f64,
    pub horizon: Horizon,
    pub intervals: usize,
    /// `K`, the largest shift-interval length.
    pub k: f64,
    /// `C = 2M(λL + K)e^{λL}`.
    pub bound_constant: f64,
    pub original: Trajectory,
    pub averaged: Trajectory,
    pub report: ProximityReport,
    pub runtime: Duration,
}

pub fn run_pair(setup: &Setup, epsilon: f64) -> Result<PairResult, ExperimentError> {
    let started = Instant::now();
    let run = &setup.config.run;
    let horizon = horizon_for(epsilon, run.l, &setup.ts, &setup.t0)?;
    let intervals = intervals_to_cover(&setup.ts, &setup.op, setup.period, &setup.t0, &horizon.point);
    let averaged_field = match setup.certificate.kind {
        CertificateKind::DeltaPeriodic => {
            build_averaged_field_periodic(&setup.field, &setup.ts, &setup.op, setup.period, &setup.t0, intervals)?
        }
        _ => build_averaged_field_quasiperiodic(
            &setup.field,
            &setup.ts,
            &setup.op,
            setup.period,
            &setup.t0,
            setup.certificate.gamma,
            intervals,
        )?,
    };
    let k = averaged_field.max_interval_length();
    let (m, lambda) = setup.constants;
    let bound_constant = error_bound_constant(m, lambda, run.l, k)?;
    let opts = SolveOptions {
        rtol: run.rtol,
        atol: run.rtol,
        dense_samples: run.dense_samples,
        ..Default::default()
    };
    let system = |rhs: Arc<dyn RightHandSide>| -> Result<DynamicSystem, ExperimentError> {
        Ok(DynamicSystem::new(rhs, epsilon, setup.t0, setup.x0.clone())?
            .with_domain(setup.domain.clone(), run.margin)?)
    };
    let finish = |mut t: Trajectory| {
        if horizon.saturated && t.status == TerminalStatus::Completed {
            t.status = TerminalStatus::HorizonReached;
        }
        t
    };
    let original = finish(solve(&system(Arc::new(setup.field.clone()))?, &setup.ts, &horizon.point, &opts)?);
    let averaged = finish(solve(&system(Arc::new(averaged_field))?, &setup.ts, &horizon.point, &opts)?);
    let report = if original.samples.len() == averaged.samples.len() {
        compare_trajectories(&original, &averaged)?
    } else {
        // one of them left the domain first; compare the common prefix
        let n = original.samples.len().min(averaged.samples.len());
        let cut = |t: &Trajectory| Trajectory {
            samples: t.samples[..n].to_vec(),
            ..t.clone()
        };
        compare_trajectories(&cut(&original), &cut(&averaged))?
    };
    Ok(PairResult {
        q: setup.config.q(),
        epsilon,
        horizon,
        intervals,
        k,
        bound_constant,
        original,
        averaged,
        report,
        runtime: started.elapsed(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub q: Option<f64>,
    pub epsilon: f64,
    pub max_diff: f64,
    /// `max_diff / ε`.
    pub ratio: f64,
    /// `C ε`.
    pub bound: f64,
    pub horizon: f64,
    pub runtime: Duration,
}

impl SweepRow {
    fn from_pair(p: &PairResult) -> Self {
        SweepRow {
            q: p.q,
            epsilon: p.epsilon,
            max_diff: p.report.max_diff,
            ratio: if p.epsilon > 0.0 {
                p.report.max_diff / p.epsilon
            } else {
                0.0
            },
            bound: p.bound_constant * p.epsilon,
            horizon: p.horizon.point.t(),
            runtime: p.runtime,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepReport {
    /// Sorted by `q` ascending, then `ε` descending.
    pub rows: Vec<SweepRow>,
    /// Least-squares slope of `log max_diff` against `log ε`, per `q`.
    pub slopes: Vec<(Option<f64>, f64)>,
}

impl SweepReport {
    pub fn slope_for(&self, q: Option<f64>) -> Option<f64> {
        self.slopes.iter().find(|(g, _)| *g == q).map(|(_, s)| *s)
    }
}

/// Least-squares slope of `y` on `x`; NaN with fewer than two points.
pub fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    if points.len() < 2 {
        return f64::NAN;
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

fn log_log_slope(rows: &[&SweepRow]) -> f64 {
    if rows.iter().any(|r| !(r.max_diff > 0.0) || !(r.epsilon > 0.0)) {
        return f64::NAN;
    }
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.epsilon.ln(), r.max_diff.ln())).collect();
    least_squares_slope(&pts)
}

fn file_stem(q: Option<f64>, eps: f64) -> String {
    match q {
        Some(q) => format!("q{q}_eps{eps}"),
        None => format!("eps{eps}"),
    }
}

/// Files written by [`run_example`] or [`run_sweep`].
#[derive(Clone, Debug, Default)]
pub struct Artifacts {
    pub trajectories: Vec<PathBuf>,
    pub summary: Option<PathBuf>,
    pub plots: Vec<PathBuf>,
}

fn write_pairs(dir: &Path, pairs: &[PairResult], format: OutputFormat, art: &mut Artifacts) -> Result<(), ExperimentError> {
    std::fs::create_dir_all(dir).map_err(|e| ExperimentError::Io(format!("{}: {e}", dir.display())))?;
    for p in pairs {
        let stem = file_stem(p.q, p.epsilon);
        let path = dir.join(format!("trajectory_{stem}.csv"));
        output::write_trajectory_csv(&path, p)?;
        if format == OutputFormat::CsvSvg {
            let rows = output::read_trajectory_csv(&path)?;
            let title = match p.q {
                Some(q) => format!("epsilon = {}, q = {q}", p.epsilon),
                None => format!("epsilon = {}", p.epsilon),
            };
            let svg_path = dir.join(format!("trajectory_{stem}.svg"));
            write_text(&svg_path, &output::trajectory_svg(&rows, &title))?;
            art.plots.push(svg_path);
        }
        art.trajectories.push(path);
    }
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Result<(), ExperimentError> {
    std::fs::write(path, text).map_err(|e| ExperimentError::Io(format!("{}: {e}", path.display())))
}

fn report_from_pairs(pairs: &[PairResult]) -> SweepReport {
    let mut rows: Vec<SweepRow> = pairs.iter().map(SweepRow::from_pair).collect();
    rows.sort_by(|a, b| {
        let qa = a.q.unwrap_or(f64::NAN);
        let qb = b.q.unwrap_or(f64::NAN);
        qa.total_cmp(&qb).then(b.epsilon.total_cmp(&a.epsilon))
    });
    let mut qs: Vec<Option<f64>> = Vec::new();
    for r in &rows {
        if !qs.contains(&r.q) {
            qs.push(r.q);
        }
    }
    let slopes = qs
        .into_iter()
        .map(|q| {
            let group: Vec<&SweepRow> = rows.iter().filter(|r| r.q == q).collect();
            (q, log_log_slope(&group))
        })
        .collect();
    SweepReport { rows, slopes }
}

/// Solve the original and averaged systems for every `ε` in the config and
/// write `trajectory_*.csv` and `summary.csv` (plus SVG plots on request).
pub fn run_example(config: &ExperimentConfig) -> Result<(SweepReport, Artifacts), ExperimentError> {
    let setup = prepare(config)?;
    let pairs = config
        .run
        .epsilon
        .iter()
        .map(|e| run_pair(&setup, *e))
        .collect::<Result<Vec<_>, _>>()?;
    let report = report_from_pairs(&pairs);
    let mut art = Artifacts::default();
    write_pairs(&config.output.dir, &pairs, config.output.format, &mut art)?;
    let summary = config.output.dir.join("summary.csv");
    output::write_summary_csv(&summary, &report)?;
    art.summary = Some(summary);
    Ok((report, art))
}

/// One paired solve per `(q, ε)`; `q` ranges over `sweep.q` (or the config's
/// own `q`). Requires at least two `ε` values. With `threads = Some(n)` the
/// pairs run on a pool of `n` threads; outputs do not depend on it.
pub fn run_sweep(config: &ExperimentConfig, threads: Option<usize>) -> Result<(SweepReport, Artifacts), ExperimentError> {
    let eps = &config.run.epsilon;
    if eps.len() < 2 {
        return Err(ExperimentError::Config(format!(
            "a sweep needs at least two epsilon values, got {}",
            eps.len()
        )));
    }
    if let Some(e) = eps.iter().find(|e| !(**e > 0.0)) {
        return Err(ExperimentError::Config(format!("sweep epsilon values must be positive, got {e}")));
    }
    let configs: Vec<ExperimentConfig> = if config.sweep.q.is_empty() {
        vec![config.clone()]
    } else {
        config.sweep.q.iter().map(|q| config.clone().with_q(*q)).collect()
    };
    let setups = configs.iter().map(prepare).collect::<Result<Vec<_>, _>>()?;
    let jobs: Vec<(usize, f64)> = (0..setups.len())
        .flat_map(|i| eps.iter().map(move |e| (i, *e)))
        .collect();
    let work = || -> Result<Vec<PairResult>, ExperimentError> {
        jobs.par_iter().map(|(i, e)| run_pair(&setups[*i], *e)).collect()
    };
    let pairs = match threads {
        Some(n) if n > 1 => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| ExperimentError::Config(e.to_string()))?
            .install(work)?,
        _ => jobs
            .iter()
            .map(|(i, e)| run_pair(&setups[*i], *e))
            .collect::<Result<Vec<_>, _>>()?,
    };
    let report = report_from_pairs(&pairs);
    let mut art = Artifacts::default();
    write_pairs(&config.output.dir, &pairs, config.output.format, &mut art)?;
    let summary = config.output.dir.join("summary.csv");
    output::write_summary_csv(&summary, &report)?;
    if config.output.format == OutputFormat::CsvSvg {
        let rows = output::read_summary_csv(&summary)?;
        let path = config.output.dir.join("sweep.svg");
        write_text(&path, &output::sweep_svg(&rows, "max |x - xi| against epsilon"))?;
        art.plots.push(path);
    }
    art.summary = Some(summary);
    Ok((report, art))
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyReport {
    pub field: String,
    pub certificate: PeriodicityCertificate,
    pub asserted: Option<CertificateKind>,
    pub passed: bool,
}

impl std::fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let c = &self.certificate;
        writeln!(f, "field         {}", self.field)?;
        writeln!(f, "kind          {}", c.kind)?;
        writeln!(f, "period        {}", c.period)?;
        writeln!(f, "gamma         {:.16e}", c.gamma)?;
        writeln!(f, "max_residual  {:e}", c.max_residual)?;
        writeln!(f, "samples       {}", c.sample_count)?;
        if let Some(a) = self.asserted {
            writeln!(f, "asserted      {a} ({})", if self.passed { "ok" } else { "FAILED" })?;
        }
        Ok(())
    }
}

/// Certify the configured field and write `certificate.csv`. A failed
/// assertion is reported with `passed = false`, not as an error.
pub fn verify_command(config: &ExperimentConfig) -> Result<VerifyReport, ExperimentError> {
    config.validate()?;
    let ts = config.build_scale()?;
    let op = config.build_shift()?;
    let t0 = ts
        .point(config.run.t0)
        .map_err(|_| ExperimentError::Config(format!("t0 = {} is not on the scale", config.run.t0)))?;
    let domain = DomainBox::ball(config.field.dim, config.run.domain_radius)
        .map_err(|e| ExperimentError::Config(e.to_string()))?;
    let (mut field, _) = fields::build(&config.field, &ts, config.run.domain_radius)?;
    let samples = certification_samples(&ts, &t0)?;
    let states = certification_states(&DVector::from_vec(config.run.x0.clone()), &domain, config.run.seed);
    let certificate = certify(&mut field, &ts, &op, config.period(), &samples, &states, &config.field)?;
    let passed = assertion_holds(config.field.assert, certificate.kind);

    let dir = &config.output.dir;
    std::fs::create_dir_all(dir).map_err(|e| ExperimentError::Io(format!("{}: {e}", dir.display())))?;
    let path = dir.join("certificate.csv");
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(&path)
        .map_err(|e| ExperimentError::Io(e.to_string()))?;
    w.serialize(&certificate).map_err(|e| ExperimentError::Io(e.to_string()))?;
    w.flush().map_err(|e| ExperimentError::Io(e.to_string()))?;

    Ok(VerifyReport {
        field: config.field.builtin.clone(),
        certificate,
        asserted: config.field.assert,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(dir: &Path, q: f64) -> ExperimentConfig {
        let mut c = ExperimentConfig::alternating_example(q);
        c.output.dir = dir.to_path_buf();
        c
    }

    #[test]
    fn first_step_difference_is_eps_over_three() {
        let dir = tempfile::tempdir().unwrap();
        let setup = prepare(&cfg(dir.path(), 2.0)).unwrap();
        assert_eq!(setup.certificate.kind, CertificateKind::QuasiPeriodic);
        assert!((setup.certificate.gamma - 0.25).abs() < 1e-12);
        let p = run_pair(&setup, 0.005).unwrap();
        assert_eq!(p.intervals, 32);
        assert!((p.report.diffs[1] - 0.005 / 3.0).abs() < 1e-15);
        assert!(p.report.max_diff <= p.bound_constant * 0.005);
        assert_eq!(p.original.status, TerminalStatus::HorizonReached);
    }

    #[test]
    fn zero_epsilon_gives_identical_trajectories() {
        let dir = tempfile::tempdir().unwrap();
        let setup = prepare(&cfg(dir.path(), 2.0)).unwrap();
        let p = run_pair(&setup, 0.0).unwrap();
        assert_eq!(p.report.max_diff, 0.0);
    }

    #[test]
    fn slope_of_exact_power_law() {
        let pts: Vec<(f64, f64)> = [1.0f64, 2.0, 4.0].iter().map(|x| (x.ln(), (3.0 * x * x).ln())).collect();
        assert!((least_squares_slope(&pts) - 2.0).abs() < 1e-12);
        assert!(least_squares_slope(&pts[..1]).is_nan());
    }

    #[test]
    fn sweep_rejects_single_epsilon() {
        let dir = tempfile::tempdir().unwrap();
        let e = run_sweep(&cfg(dir.path(), 2.0), None).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn verify_constant_field_not_delta_periodic() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = cfg(dir.path(), 2.0);
        c.field.builtin = "constant".into();
        c.field.assert = Some(CertificateKind::DeltaPeriodic);
        c.shift = config::ShiftSpec::Geometric {
            period: 3.0,
            q: None,
            limit: None,
        };
        let r = verify_command(&c).unwrap();
        assert_eq!(r.certificate.kind, CertificateKind::None);
        assert!(!r.passed);
        assert!((r.certificate.max_residual - 0.875).abs() < 1e-15);
        assert!(dir.path().join("certificate.csv").exists());
    }
}
