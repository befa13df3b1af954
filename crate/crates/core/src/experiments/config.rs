//! Experiment configuration files (TOML).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::ExperimentError;
use crate::scale::{Segment, TimeScale};
use crate::shift::{CertificateKind, ShiftKind, ShiftOperator, ShiftTableEntry};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub scale: ScaleSpec,
    pub shift: ShiftSpec,
    pub field: FieldSpec,
    #[serde(default)]
    pub run: RunSpec,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default)]
    pub sweep: SweepSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScaleSpec {
    pub segments: Vec<SegmentSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SegmentSpec {
    Geometric {
        q: f64,
        #[serde(default = "default_n_max")]
        n_max: usize,
        #[serde(default)]
        start: f64,
        #[serde(default = "one")]
        limit: f64,
    },
    Uniform {
        start: f64,
        step: f64,
        count: usize,
    },
    Points {
        values: Vec<f64>,
    },
    Interval {
        a: f64,
        b: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ShiftSpec {
    Additive {
        period: f64,
        #[serde(default)]
        t0: f64,
        #[serde(default = "one")]
        scale_period: f64,
    },
    /// `q` and the limit default to those of the first geometric segment.
    Geometric {
        period: f64,
        #[serde(default)]
        q: Option<f64>,
        #[serde(default)]
        limit: Option<f64>,
    },
    CustomTable {
        period: f64,
        #[serde(default)]
        t0: f64,
        scale_period: f64,
        entries: Vec<TableEntrySpec>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableEntrySpec {
    pub shift: f64,
    pub pairs: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    /// One of the names in [`super::fields::BUILTINS`].
    pub builtin: String,
    #[serde(default = "one")]
    pub a: f64,
    #[serde(default = "one_usize")]
    pub dim: usize,
    /// Certificate the field is expected to carry; `verify` fails otherwise.
    #[serde(default)]
    pub assert: Option<CertificateKind>,
    /// Relative residuals in periodicity checks.
    #[serde(default)]
    pub relative: bool,
    #[serde(default = "default_tol")]
    pub tolerance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    #[serde(default = "default_eps")]
    pub epsilon: Vec<f64>,
    #[serde(rename = "L", default = "one")]
    pub l: f64,
    #[serde(default)]
    pub t0: f64,
    #[serde(default = "default_x0")]
    pub x0: Vec<f64>,
    /// `D = {‖x‖_∞ ≤ domain_radius}`.
    #[serde(default = "default_radius")]
    pub domain_radius: f64,
    #[serde(default = "default_margin")]
    pub margin: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub dense_samples: usize,
    #[serde(default = "default_rk_tol")]
    pub rtol: f64,
}

impl Default for RunSpec {
    fn default() -> Self {
        RunSpec {
            epsilon: default_eps(),
            l: 1.0,
            t0: 0.0,
            x0: default_x0(),
            domain_radius: default_radius(),
            margin: default_margin(),
            seed: 0,
            dense_samples: 0,
            rtol: default_rk_tol(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum OutputFormat {
    #[default]
    #[serde(rename = "csv")]
    Csv,
    #[serde(rename = "csv+svg")]
    CsvSvg,
}

impl std::str::FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "csv+svg" => Ok(OutputFormat::CsvSvg),
            other => Err(format!("unknown format `{other}` (expected csv or csv+svg)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default)]
    pub format: OutputFormat,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            dir: default_dir(),
            format: OutputFormat::Csv,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// Values substituted for `q` in geometric segments and shifts.
    #[serde(default)]
    pub q: Vec<f64>,
}

fn one() -> f64 {
    1.0
}
fn one_usize() -> usize {
    1
}
fn default_n_max() -> usize {
    crate::scale::DEFAULT_N_MAX
}
fn default_tol() -> f64 {
    crate::shift::DEFAULT_VERIFY_TOL
}
fn default_eps() -> Vec<f64> {
    vec![0.005]
}
fn default_x0() -> Vec<f64> {
    vec![1.0]
}
fn default_radius() -> f64 {
    2.0
}
fn default_margin() -> f64 {
    crate::solver::DEFAULT_MARGIN
}
fn default_rk_tol() -> f64 {
    1e-10
}
fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ExperimentError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ExperimentError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// The alternating linear system on `{1 - q^{-n}} ∪ {1}` with `T = 2`.
    pub fn alternating_example(q: f64) -> Self {
        ExperimentConfig {
            name: Some("alternating-linear".into()),
            scale: ScaleSpec {
                segments: vec![SegmentSpec::Geometric {
                    q,
                    n_max: default_n_max(),
                    start: 0.0,
                    limit: 1.0,
                }],
            },
            shift: ShiftSpec::Geometric {
                period: 2.0,
                q: None,
                limit: None,
            },
            field: FieldSpec {
                builtin: "alternating-linear".into(),
                a: 1.0,
                dim: 1,
                assert: Some(CertificateKind::QuasiPeriodic),
                relative: false,
                tolerance: default_tol(),
            },
            run: RunSpec::default(),
            output: OutputSpec::default(),
            sweep: SweepSpec::default(),
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::Config(m));
        if self.scale.segments.is_empty() {
            return bad("scale needs at least one segment".into());
        }
        for s in &self.scale.segments {
            if let SegmentSpec::Geometric { q, .. } = s {
                if !(*q > 1.0) {
                    return bad(format!("geometric q must exceed 1, got {q}"));
                }
            }
        }
        for q in &self.sweep.q {
            if !(*q > 1.0) {
                return bad(format!("sweep q must exceed 1, got {q}"));
            }
        }
        if self.run.epsilon.is_empty() {
            return bad("epsilon list is empty".into());
        }
        if let Some(e) = self.run.epsilon.iter().find(|e| !(**e >= 0.0) || !e.is_finite()) {
            return bad(format!("epsilon must be non-negative, got {e}"));
        }
        if !(self.run.l > 0.0) {
            return bad(format!("L must be positive, got {}", self.run.l));
        }
        if !(self.run.domain_radius > 0.0) {
            return bad(format!("domain_radius must be positive, got {}", self.run.domain_radius));
        }
        if self.run.x0.len() != self.field.dim {
            return bad(format!(
                "x0 has {} components but the field has dimension {}",
                self.run.x0.len(),
                self.field.dim
            ));
        }
        super::fields::check_name(&self.field.builtin)?;
        Ok(())
    }

    /// Replace `q` in every geometric segment and in a geometric shift.
    pub fn with_q(mut self, q: f64) -> Self {
        for s in &mut self.scale.segments {
            if let SegmentSpec::Geometric { q: sq, .. } = s {
                *sq = q;
            }
        }
        if let ShiftSpec::Geometric { q: sq, .. } = &mut self.shift {
            if sq.is_some() {
                *sq = Some(q);
            }
        }
        self
    }

    pub fn with_n_max(mut self, n: usize) -> Self {
        for s in &mut self.scale.segments {
            if let SegmentSpec::Geometric { n_max, .. } = s {
                *n_max = n;
            }
        }
        self
    }

    /// `q` of the first geometric segment.
    pub fn q(&self) -> Option<f64> {
        self.scale.segments.iter().find_map(|s| match s {
            SegmentSpec::Geometric { q, .. } => Some(*q),
            _ => None,
        })
    }

    pub fn period(&self) -> f64 {
        match &self.shift {
            ShiftSpec::Additive { period, .. }
            | ShiftSpec::Geometric { period, .. }
            | ShiftSpec::CustomTable { period, .. } => *period,
        }
    }

    pub fn build_scale(&self) -> Result<TimeScale, ExperimentError> {
        let segments = self
            .scale
            .segments
            .iter()
            .map(|s| match s {
                SegmentSpec::Geometric {
                    q,
                    n_max,
                    start,
                    limit,
                } => Segment::GeometricCondensation {
                    q: *q,
                    n_max: *n_max,
                    start: *start,
                    limit: *limit,
                },
                SegmentSpec::Uniform { start, step, count } => Segment::uniform(*start, *step, *count),
                SegmentSpec::Points { values } => Segment::points(values.clone()),
                SegmentSpec::Interval { a, b } => Segment::interval(*a, *b),
            })
            .collect();
        TimeScale::new(segments).map_err(|e| ExperimentError::Config(e.to_string()))
    }

    pub fn build_shift(&self) -> Result<ShiftOperator, ExperimentError> {
        let cfg = |e: crate::Error| ExperimentError::Config(e.to_string());
        match &self.shift {
            ShiftSpec::Additive { t0, scale_period, .. } => ShiftOperator::additive(*t0, *scale_period).map_err(cfg),
            ShiftSpec::Geometric { q, limit, .. } => {
                let geo = self.scale.segments.iter().find_map(|s| match s {
                    SegmentSpec::Geometric { q, start, limit, .. } => Some((*q, *start, *limit)),
                    _ => None,
                });
                let (gq, start, glimit) = geo.unwrap_or((f64::NAN, 0.0, 1.0));
                let q = q.unwrap_or(gq);
                if !(q > 1.0) {
                    return Err(ExperimentError::Config(
                        "geometric shift needs q (set it or add a geometric segment)".into(),
                    ));
                }
                let limit = limit.unwrap_or(glimit);
                ShiftOperator::new(ShiftKind::Geometric { q, limit }, start, 1.0).map_err(cfg)
            }
            ShiftSpec::CustomTable {
                t0,
                scale_period,
                entries,
                ..
            } => ShiftOperator::table(
                entries
                    .iter()
                    .map(|e| ShiftTableEntry {
                        shift: e.shift,
                        pairs: e.pairs.clone(),
                    })
                    .collect(),
                *t0,
                *scale_period,
            )
            .map_err(cfg),
        }
    }
}
