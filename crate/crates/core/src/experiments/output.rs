//! CSV tables and static SVG plots.
//!
//! Numbers are written with 17 significant digits so a table read back yields
//! the same `f64` values. Plots are rendered from table rows only.

use std::fmt::Write as _;
use std::path::Path;

use super::{ExperimentError, PairResult, SweepReport};

pub const SVG_RENDERER_VERSION: &str = "1";

pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn io(path: &Path, e: impl std::fmt::Display) -> ExperimentError {
    ExperimentError::Io(format!("{}: {e}", path.display()))
}

/// One row of a trajectory table, first state component only.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectoryRow {
    pub t: f64,
    pub x: f64,
    pub xi: f64,
    pub absdiff: f64,
}

pub fn trajectory_rows(pair: &PairResult) -> Vec<TrajectoryRow> {
    pair.original
        .samples
        .iter()
        .zip(&pair.averaged.samples)
        .zip(&pair.report.diffs)
        .map(|((a, b), d)| TrajectoryRow {
            t: a.point.t(),
            x: a.x[0],
            xi: b.x[0],
            absdiff: *d,
        })
        .collect()
}

/// Columns `t,x,xi,absdiff`; for states of dimension `n > 1` the columns are
/// `t,x1..xn,xi1..xin,absdiff` with `absdiff` the Euclidean distance.
pub fn write_trajectory_csv(path: &Path, pair: &PairResult) -> Result<(), ExperimentError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| io(path, e))?;
    let dim = pair.original.samples[0].x.len();
    let header: Vec<String> = if dim == 1 {
        vec!["t".into(), "x".into(), "xi".into(), "absdiff".into()]
    } else {
        std::iter::once("t".to_string())
            .chain((1..=dim).map(|i| format!("x{i}")))
            .chain((1..=dim).map(|i| format!("xi{i}")))
            .chain(std::iter::once("absdiff".to_string()))
            .collect()
    };
    w.write_record(&header).map_err(|e| io(path, e))?;
    for ((a, b), d) in pair
        .original
        .samples
        .iter()
        .zip(&pair.averaged.samples)
        .zip(&pair.report.diffs)
    {
        let rec: Vec<String> = std::iter::once(num(a.point.t()))
            .chain(a.x.iter().map(|v| num(*v)))
            .chain(b.x.iter().map(|v| num(*v)))
            .chain(std::iter::once(num(*d)))
            .collect();
        w.write_record(&rec).map_err(|e| io(path, e))?;
    }
    w.flush().map_err(|e| io(path, e))
}

/// Read `t`, the first `x` and `xi` columns and `absdiff` back.
pub fn read_trajectory_csv(path: &Path) -> Result<Vec<TrajectoryRow>, ExperimentError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| io(path, e))?;
    let headers = r.headers().map_err(|e| io(path, e))?.clone();
    let col = |names: &[&str]| {
        headers
            .iter()
            .position(|h| names.contains(&h))
            .ok_or_else(|| io(path, format!("missing column {}", names[0])))
    };
    let (ct, cx, cxi, cd) = (col(&["t"])?, col(&["x", "x1"])?, col(&["xi", "xi1"])?, col(&["absdiff"])?);
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| io(path, e))?;
        let f = |i: usize| -> Result<f64, ExperimentError> {
            rec[i].parse::<f64>().map_err(|e| io(path, e))
        };
        rows.push(TrajectoryRow {
            t: f(ct)?,
            x: f(cx)?,
            xi: f(cxi)?,
            absdiff: f(cd)?,
        });
    }
    Ok(rows)
}

/// Columns `q,epsilon,max_diff,ratio,bound,horizon,row`. Data rows carry
/// `row = data`; one `row = slope` line per `q` holds the fitted log-log slope
/// in the `ratio` column.
pub fn write_summary_csv(path: &Path, report: &SweepReport) -> Result<(), ExperimentError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| io(path, e))?;
    w.write_record(["q", "epsilon", "max_diff", "ratio", "bound", "horizon", "row"])
        .map_err(|e| io(path, e))?;
    let opt = |v: Option<f64>| v.map(num).unwrap_or_default();
    for row in &report.rows {
        w.write_record([
            opt(row.q),
            num(row.epsilon),
            num(row.max_diff),
            num(row.ratio),
            num(row.bound),
            num(row.horizon),
            "data".into(),
        ])
        .map_err(|e| io(path, e))?;
    }
    for (q, slope) in &report.slopes {
        w.write_record([
            opt(*q),
            String::new(),
            String::new(),
            num(*slope),
            String::new(),
            String::new(),
            "slope".into(),
        ])
        .map_err(|e| io(path, e))?;
    }
    w.flush().map_err(|e| io(path, e))
}

/// `(q, epsilon, max_diff)` of the data rows of a summary table.
pub fn read_summary_csv(path: &Path) -> Result<Vec<(Option<f64>, f64, f64)>, ExperimentError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| io(path, e))?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| io(path, e))?;
        if &rec[6] != "data" {
            continue;
        }
        let q = if rec[0].is_empty() {
            None
        } else {
            Some(rec[0].parse::<f64>().map_err(|e| io(path, e))?)
        };
        let eps = rec[1].parse::<f64>().map_err(|e| io(path, e))?;
        let d = rec[2].parse::<f64>().map_err(|e| io(path, e))?;
        out.push((q, eps, d));
    }
    Ok(out)
}

const W: f64 = 640.0;
const H: f64 = 400.0;
const PAD: f64 = 56.0;
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn new(xs: impl Iterator<Item = f64> + Clone, ys: impl Iterator<Item = f64> + Clone) -> Frame {
        let range = |v: &mut dyn Iterator<Item = f64>| {
            v.filter(|x| x.is_finite())
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)))
        };
        let (mut x0, mut x1) = range(&mut xs.clone());
        let (mut y0, mut y1) = range(&mut ys.clone());
        if !(x1 > x0) {
            x0 -= 0.5;
            x1 += 0.5;
        }
        if !(y1 > y0) {
            y0 -= 0.5;
            y1 += 0.5;
        }
        let pad = 0.05 * (y1 - y0);
        Frame {
            x0,
            x1,
            y0: y0 - pad,
            y1: y1 + pad,
        }
    }

    fn px(&self, x: f64) -> f64 {
        PAD + (x - self.x0) / (self.x1 - self.x0) * (W - 2.0 * PAD)
    }

    fn py(&self, y: f64) -> f64 {
        H - PAD - (y - self.y0) / (self.y1 - self.y0) * (H - 2.0 * PAD)
    }
}

fn svg_open(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">"
    );
    let _ = writeln!(out, "<!-- renderer {SVG_RENDERER_VERSION} -->");
    let _ = writeln!(out, "<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>");
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">{}</text>",
        W / 2.0,
        escape(title)
    );
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn axes(out: &mut String, f: &Frame, xlabel: &str, ylabel: &str, xfmt: &dyn Fn(f64) -> String, yfmt: &dyn Fn(f64) -> String) {
    let _ = writeln!(
        out,
        "<path d=\"M{PAD} {top} V{bottom} H{right}\" stroke=\"black\" fill=\"none\"/>",
        top = PAD,
        bottom = H - PAD,
        right = W - PAD
    );
    let small = "font-family=\"sans-serif\" font-size=\"11\"";
    for (x, anchor) in [(f.x0, "start"), (f.x1, "end")] {
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"{anchor}\" {small}>{}</text>",
            f.px(x),
            H - PAD + 16.0,
            xfmt(x)
        );
    }
    for y in [f.y0, f.y1] {
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\" {small}>{}</text>",
            PAD - 4.0,
            f.py(y) + 4.0,
            yfmt(y)
        );
    }
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" {small}>{}</text>",
        W / 2.0,
        H - 14.0,
        escape(xlabel)
    );
    let _ = writeln!(
        out,
        "<text x=\"14\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 14 {})\" {small}>{}</text>",
        H / 2.0,
        H / 2.0,
        escape(ylabel)
    );
}

fn polyline(out: &mut String, f: &Frame, pts: &[(f64, f64)], color: &str, markers: bool) {
    let d: Vec<String> = pts
        .iter()
        .filter(|(x, y)| x.is_finite() && y.is_finite())
        .map(|(x, y)| format!("{:.2},{:.2}", f.px(*x), f.py(*y)))
        .collect();
    let _ = writeln!(
        out,
        "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>",
        d.join(" ")
    );
    if markers {
        for p in &d {
            let (x, y) = p.split_once(',').unwrap();
            let _ = writeln!(out, "<circle cx=\"{x}\" cy=\"{y}\" r=\"2.5\" fill=\"{color}\"/>");
        }
    }
}

fn legend(out: &mut String, entries: &[(&str, String)]) {
    for (i, (color, label)) in entries.iter().enumerate() {
        let y = PAD + 4.0 + 16.0 * i as f64;
        let _ = writeln!(
            out,
            "<line x1=\"{x1}\" y1=\"{y}\" x2=\"{x2}\" y2=\"{y}\" stroke=\"{color}\" stroke-width=\"2\"/>",
            x1 = W - PAD - 120.0,
            x2 = W - PAD - 100.0
        );
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\">{}</text>",
            W - PAD - 94.0,
            y + 4.0,
            escape(label)
        );
    }
}

fn short(v: f64) -> String {
    format!("{v:.4}")
}

/// `x` and `ξ` against the step number `k` (the sample index).
pub fn trajectory_svg(rows: &[TrajectoryRow], title: &str) -> String {
    let xs = (0..rows.len()).map(|k| k as f64);
    let ys = rows.iter().flat_map(|r| [r.x, r.xi]);
    let f = Frame::new(xs, ys);
    let mut out = String::new();
    svg_open(&mut out, title);
    axes(&mut out, &f, "k", "x, xi", &|v| format!("{v:.0}"), &short);
    let x: Vec<(f64, f64)> = rows.iter().enumerate().map(|(k, r)| (k as f64, r.x)).collect();
    let xi: Vec<(f64, f64)> = rows.iter().enumerate().map(|(k, r)| (k as f64, r.xi)).collect();
    polyline(&mut out, &f, &x, COLORS[0], false);
    polyline(&mut out, &f, &xi, COLORS[1], false);
    legend(&mut out, &[(COLORS[0], "x".into()), (COLORS[1], "xi".into())]);
    out.push_str("</svg>\n");
    out
}

/// `log10 max_diff` against `log10 ε`, one line per `q`.
pub fn sweep_svg(rows: &[(Option<f64>, f64, f64)], title: &str) -> String {
    let mut groups: Vec<(Option<f64>, Vec<(f64, f64)>)> = Vec::new();
    for (q, eps, d) in rows {
        let pt = (eps.log10(), d.log10());
        match groups.iter_mut().find(|(g, _)| g.map(f64::to_bits) == q.map(f64::to_bits)) {
            Some((_, v)) => v.push(pt),
            None => groups.push((*q, vec![pt])),
        }
    }
    for (_, v) in &mut groups {
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    let all = groups.iter().flat_map(|(_, v)| v.iter().copied());
    let f = Frame::new(all.clone().map(|p| p.0), all.map(|p| p.1));
    let mut out = String::new();
    svg_open(&mut out, title);
    let pow = |v: f64| format!("1e{v:.2}");
    axes(&mut out, &f, "epsilon (log10)", "max |x - xi| (log10)", &pow, &pow);
    let mut entries = Vec::new();
    for (i, (q, v)) in groups.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        polyline(&mut out, &f, v, color, true);
        entries.push((color, q.map(|q| format!("q = {q}")).unwrap_or_else(|| "run".into())));
    }
    legend(&mut out, &entries);
    out.push_str("</svg>\n");
    out
}
