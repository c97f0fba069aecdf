//! CSV, SVG and JSON emission. All output is deterministic.

use horizon_core::desing::Chart;
use horizon_core::flow::Sample;
use horizon_core::infinity::{BlowupExponents, HorizonCycle, HorizonEquilibrium, Stability};
use horizon_core::{DesingField64, Error, Result};
use serde_json::{json, Value};
use std::fmt::Write as _;
use std::path::Path;

/// 17 significant digits.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Parse(format!("{}: {e}", path.display()))
}

/// Coordinate column names of a chart.
pub fn coord_names(chart: Chart, n: usize) -> Vec<String> {
    match chart {
        Chart::Global => (1..=n).map(|i| format!("x{i}")).collect(),
        Chart::QuasiPolar => vec!["s".into(), "theta".into()],
        Chart::Directional { .. } => std::iter::once("s".to_string())
            .chain((1..n).map(|i| format!("theta{i}")))
            .collect(),
    }
}

/// `p(x)` in the global chart, `s` in the others.
pub fn radial_value(field: &DesingField64, s: &Sample<f64>) -> f64 {
    match field.chart {
        Chart::Global => field.scheme.p(&s.state),
        _ => s.state[0],
    }
}

/// Trajectory CSV: `tau,t,<coords>,p`.
pub fn write_trajectory_csv(
    path: &Path,
    field: &DesingField64,
    samples: &[Sample<f64>],
) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    let mut header = vec!["tau".to_string(), "t".to_string()];
    header.extend(coord_names(field.chart, field.dim()));
    header.push("p".into());
    w.write_record(&header).map_err(|e| io_err(path, e))?;
    for s in samples {
        let mut row = vec![num(s.tau), num(s.t)];
        row.extend(s.state.iter().map(|&v| num(v)));
        row.push(num(radial_value(field, s)));
        w.write_record(&row).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn stability_name(s: Stability) -> &'static str {
    match s {
        Stability::Sink => "sink",
        Stability::Source => "source",
        Stability::Saddle => "saddle",
        Stability::NonHyperbolic => "non-hyperbolic",
    }
}

fn exponents_json(e: &BlowupExponents) -> Value {
    json!({
        "norm": e.norm.to_string(),
        "components": e.components.iter().map(|c| c.map(|r| r.to_string())).collect::<Vec<_>>(),
        "forward": e.forward,
        "backward": e.backward,
    })
}

pub fn equilibrium_json(e: &HorizonEquilibrium<f64>) -> Value {
    json!({
        "location": e.location,
        "chart": e.chart.to_string(),
        "chart_location": e.chart_location,
        "jacobian": e.jacobian.to_rows(),
        "eigenvalues": e.eigenvalues.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
        "classification": stability_name(e.classification.kind),
        "n_s": e.classification.n_s,
        "n_u": e.classification.n_u,
        "n_c": e.classification.n_c,
        "exponents": e.exponents.as_ref().map(exponents_json),
    })
}

pub fn cycle_json(c: &HorizonCycle<f64>) -> Value {
    json!({
        "period_theta": c.period_theta,
        "period_tau": c.period_tau,
        "alpha_integral": c.alpha_integral,
        "angular_multiplier": c.angular_multiplier,
        "multiplier": c.multiplier,
        "stability": format!("{:?}", c.stability).to_lowercase(),
        "return_map_residual": c.return_map_residual,
    })
}

pub fn write_json(path: &Path, v: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(v).map_err(|e| Error::Numeric(e.to_string()))?;
    std::fs::write(path, text + "\n").map_err(|e| io_err(path, e))
}

/// Fixed-size SVG canvas mapping a data box onto `[0, 800] × [0, 800]`.
pub struct Canvas {
    body: String,
    lo: (f64, f64),
    hi: (f64, f64),
}

const SIZE: f64 = 800.0;
const PAD: f64 = 40.0;

impl Canvas {
    pub fn new(lo: (f64, f64), hi: (f64, f64)) -> Self {
        let hi = (
            if hi.0 > lo.0 { hi.0 } else { lo.0 + 1.0 },
            if hi.1 > lo.1 { hi.1 } else { lo.1 + 1.0 },
        );
        Canvas {
            body: String::new(),
            lo,
            hi,
        }
    }

    /// Bounding box of points, with 5% margin.
    pub fn fit<'a>(pts: impl Iterator<Item = &'a (f64, f64)>) -> Self {
        let (mut lo, mut hi) = (
            (f64::INFINITY, f64::INFINITY),
            (f64::NEG_INFINITY, f64::NEG_INFINITY),
        );
        for &(x, y) in pts.filter(|p| p.0.is_finite() && p.1.is_finite()) {
            lo = (lo.0.min(x), lo.1.min(y));
            hi = (hi.0.max(x), hi.1.max(y));
        }
        if !lo.0.is_finite() {
            return Canvas::new((0.0, 0.0), (1.0, 1.0));
        }
        let m = (0.05 * (hi.0 - lo.0), 0.05 * (hi.1 - lo.1));
        Canvas::new((lo.0 - m.0, lo.1 - m.1), (hi.0 + m.0, hi.1 + m.1))
    }

    fn map(&self, (x, y): (f64, f64)) -> (f64, f64) {
        let span = SIZE - 2.0 * PAD;
        (
            PAD + span * (x - self.lo.0) / (self.hi.0 - self.lo.0),
            SIZE - PAD - span * (y - self.lo.1) / (self.hi.1 - self.lo.1),
        )
    }

    pub fn polyline(&mut self, pts: &[(f64, f64)], color: &str, width: f64) {
        let mut d = String::new();
        for p in pts.iter().filter(|p| p.0.is_finite() && p.1.is_finite()) {
            let (x, y) = self.map(*p);
            let _ = write!(d, "{x:.3},{y:.3} ");
        }
        let _ = writeln!(
            self.body,
            r#"<polyline fill="none" stroke="{color}" stroke-width="{width}" points="{}"/>"#,
            d.trim_end()
        );
    }

    pub fn marker(&mut self, p: (f64, f64), color: &str, label: &str) {
        let (x, y) = self.map(p);
        let _ = writeln!(
            self.body,
            r#"<circle cx="{x:.3}" cy="{y:.3}" r="5" fill="{color}"/>"#
        );
        let _ = writeln!(
            self.body,
            r#"<text x="{:.3}" y="{:.3}" font-size="14">{label}</text>"#,
            x + 7.0,
            y - 7.0
        );
    }

    pub fn axes_labels(&mut self, x: &str, y: &str) {
        let _ = writeln!(
            self.body,
            r#"<text x="{}" y="{}" font-size="16">{x}</text>"#,
            SIZE / 2.0,
            SIZE - 8.0
        );
        let _ = writeln!(
            self.body,
            r#"<text x="8" y="{}" font-size="16">{y}</text>"#,
            SIZE / 2.0
        );
    }

    pub fn finish(self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {SIZE} {SIZE}\" width=\"{SIZE}\" height=\"{SIZE}\">\n\
             <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{}</svg>\n",
            self.body
        )
    }
}

/// Horizon curve `{p(x) = 1}` of a two-dimensional scheme.
pub fn horizon_curve(field: &DesingField64, points: usize) -> Vec<(f64, f64)> {
    (0..=points)
        .map(|i| {
            let phi = 2.0 * std::f64::consts::PI * i as f64 / points as f64;
            let x = field.scheme.project_to_horizon(&[phi.cos(), phi.sin()]);
            (x[0], x[1])
        })
        .collect()
}

pub const PALETTE: [&str; 8] = [
    "#d62728", "#2ca02c", "#1f77b4", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f",
];
