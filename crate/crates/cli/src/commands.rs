//! Command implementations.

use crate::output::{self, num, Canvas, PALETTE};
use crate::source::{self, Loaded};
use crate::{GlobalArgs, Outcome, SourceArgs};
use horizon_core::desing::Chart;
use horizon_core::flow::{self, BlowupStatus, BlowupTarget, FlowOptions, Target, Trajectory};
use horizon_core::infinity::{
    find_horizon_equilibria, find_interior_equilibria, horizon_cycle_analysis,
};
use horizon_core::model::parse_chart;
use horizon_core::qhfield::check_c1_extension;
use horizon_core::scenarios::{self, TwoFluidData};
use horizon_core::{DesingField64, Error, Result};
use serde_json::{json, Value};
use std::path::{Path, PathBuf};

/// `print!` that treats a closed stdout (e.g. piped into `head`) as a quiet exit.
macro_rules! out {
    (@write $w:ident, $($arg:tt)*) => {{
        use std::io::Write as _;
        if let Err(e) = $w!(std::io::stdout().lock(), $($arg)*) {
            if e.kind() == std::io::ErrorKind::BrokenPipe {
                std::process::exit(0);
            }
            return Err(output::io_err(Path::new("<stdout>"), e));
        }
    }};
    ($($arg:tt)*) => { out!(@write write, $($arg)*) };
}

macro_rules! outln {
    ($($arg:tt)*) => { out!(@write writeln, $($arg)*) };
}

fn out_dir(global: &GlobalArgs) -> Result<Option<PathBuf>> {
    match &global.out {
        None => Ok(None),
        Some(d) => {
            std::fs::create_dir_all(d).map_err(|e| output::io_err(d, e))?;
            Ok(Some(d.clone()))
        }
    }
}

fn flow_options(
    global: &GlobalArgs,
    loaded: &Loaded,
    tau_default: f64,
) -> Result<FlowOptions<f64>> {
    let doc = loaded.integration.clone().unwrap_or_default();
    let o = FlowOptions {
        rtol: doc.rtol.unwrap_or(global.tol_rel),
        atol: doc.atol.unwrap_or(global.tol_abs),
        tau_max: global.tau_max.or(doc.tau_max).unwrap_or(tau_default),
        ..FlowOptions::default()
    };
    if !(o.rtol > 0.0 && o.atol > 0.0 && o.tau_max > 0.0) {
        return Err(Error::Invalid(
            "tolerances and --tau-max must be positive".into(),
        ));
    }
    Ok(o)
}

pub fn analyze(global: &GlobalArgs, src: &SourceArgs, as_json: bool) -> Result<Outcome> {
    let loaded = source::load(global, src)?;
    let signatures: Vec<Value> = loaded
        .candidates
        .iter()
        .map(|(a, k)| json!({"alpha": a, "k": k}))
        .collect();
    let Some(field) = loaded.field.as_ref() else {
        let report = json!({"source": loaded.name, "signatures": signatures, "message": "no quasi-homogeneous signature found"});
        emit(global, "analyze.json", &report, as_json, || {
            outln!("no quasi-homogeneous signature found");
            Ok(())
        })?;
        return Ok(Outcome::Success);
    };
    let sc = &field.scheme;
    let c1 = match field.signature() {
        Some(sig) => {
            let r = check_c1_extension(sig);
            json!({
                "certified": r.c1,
                "violations": r.violations.iter().map(|v| json!({
                    "component": v.component, "exponents": v.exponents, "deficit": v.deficit
                })).collect::<Vec<_>>(),
            })
        }
        None => json!({"certified": true, "violations": [], "note": "explicit directional field"}),
    };
    let eqs = find_horizon_equilibria(field, &loaded.search_options())?;
    let cycle = if eqs.is_empty() && sc.quasi_polar_order().is_some() {
        horizon_cycle_analysis(field, 0.0).ok()
    } else {
        None
    };
    let report = json!({
        "source": loaded.name,
        "dimension": field.dim(),
        "signatures": signatures,
        "scheme": {"alpha": sc.alpha, "k": sc.k, "a": sc.a, "beta": sc.beta, "c": sc.c},
        "chart": field.chart.to_string(),
        "c1": c1,
        "equilibria": eqs.iter().map(output::equilibrium_json).collect::<Vec<_>>(),
        "horizon_cycle": cycle.as_ref().map(output::cycle_json),
    });
    emit(global, "analyze.json", &report, as_json, || {
        outln!("source     {}", loaded.name);
        outln!(
            "scheme     alpha={:?} k={} a={:?} beta={:?} c={}",
            sc.alpha,
            sc.k,
            sc.a,
            sc.beta,
            sc.c
        );
        outln!("C1         {}", report["c1"]["certified"]);
        outln!("equilibria {}", eqs.len());
        for (i, e) in eqs.iter().enumerate() {
            let ev: Vec<String> = e
                .eigenvalues
                .iter()
                .map(|z| format!("{:+.12}{:+.12}i", z.re, z.im))
                .collect();
            outln!(
                "  H{i:<3} x={:<48} {:<15} [{}]",
                format!("{:?}", e.location),
                output::stability_name(e.classification.kind),
                ev.join(", ")
            );
        }
        if let Some(c) = &cycle {
            outln!(
                "horizon cycle: alpha(T)={:.12} multiplier={:.12} ({:?} in forward time)",
                c.alpha_integral,
                c.multiplier,
                c.stability
            );
        }
        Ok(())
    })?;
    Ok(Outcome::Success)
}

fn emit(
    global: &GlobalArgs,
    file: &str,
    report: &Value,
    as_json: bool,
    table: impl FnOnce() -> Result<()>,
) -> Result<()> {
    if let Some(dir) = out_dir(global)? {
        output::write_json(&dir.join(file), report)?;
    }
    if as_json {
        outln!(
            "{}",
            serde_json::to_string_pretty(report).map_err(|e| Error::Numeric(e.to_string()))?
        );
    } else {
        table()?;
    }
    Ok(())
}

/// Maps the user's initial point into the integration chart.
fn start_state(
    field: &DesingField64,
    loaded: &Loaded,
    x0: &[f64],
    compact: bool,
) -> Result<Vec<f64>> {
    if x0.len() != field.dim() {
        return Err(Error::Parse(format!(
            "--x0 needs {} coordinates",
            field.dim()
        )));
    }
    if loaded.two_fluid.is_some() {
        // Two-fluid: original (β, v) or chart (β, 1/v).
        let r = if compact { x0[1] } else { 1.0 / x0[1] };
        if !r.is_finite() || r < 0.0 {
            return Err(Error::Invalid("two-fluid start needs v > 0".into()));
        }
        return Ok(vec![r, x0[0]]);
    }
    if compact {
        if field.scheme.energy(x0) > 1.0 + 1e-12 {
            return Err(Error::Invalid(
                "compactified point lies outside the unit ball".into(),
            ));
        }
        field.from_global(x0)
    } else {
        field.from_original(x0)
    }
}

pub fn blowup(
    global: &GlobalArgs,
    src: &SourceArgs,
    x0: &[f64],
    compact: bool,
    backward: bool,
    chart: Option<&str>,
) -> Result<Outcome> {
    let loaded = source::load(global, src)?;
    let base = loaded.field()?;
    let chart = match (chart, &loaded.two_fluid) {
        (Some(c), _) => parse_chart(c)?,
        (None, Some(_)) => base.chart,
        (None, None) => Chart::Global,
    };
    let mut field = base.in_chart(chart)?;
    if backward {
        field = field.reversed();
    }
    let start = start_state(&field, &loaded, x0, compact)?;
    let opts = flow_options(global, &loaded, 1e4)?;
    let report = flow::blowup(&field, &start, &opts, &loaded.search_options())?;
    let est = report.estimate.as_ref();
    let fit = report.rate.as_ref();
    let target = report.target.as_ref().map(|t| match t {
        BlowupTarget::Equilibrium(e) => {
            json!({"kind": "equilibrium", "equilibrium": output::equilibrium_json(e)})
        }
        BlowupTarget::Cycle(c) => json!({"kind": "cycle", "cycle": output::cycle_json(c)}),
    });
    let status = match report.status {
        BlowupStatus::BlowUp => "blow-up",
        BlowupStatus::Bounded => "bounded",
        BlowupStatus::Unclassified => "unclassified",
        BlowupStatus::OnHorizon => "on-horizon",
    };
    let last = report.trajectory.last();
    let json = json!({
        "source": loaded.name,
        "chart": field.chart.to_string(),
        "direction": if backward { "backward" } else { "forward" },
        "x0": x0,
        "compact": compact,
        "status": status,
        "termination": report.trajectory.termination.to_string(),
        "samples": report.trajectory.samples.len(),
        "tau_end": last.tau,
        "t_end": last.t,
        "target": target,
        "t_max": est.map(|e| e.t_max),
        "tail": est.map(|e| e.tail),
        "tail_bound": est.map(|e| e.tail_bound),
        "fitted_norm_exponent": fit.map(|f| f.norm_exponent),
        "fitted_component_exponents": fit.map(|f| f.component_exponents.clone()),
        "fit_residual": fit.map(|f| f.residual),
        "fit_samples": fit.map(|f| f.samples),
        "fit_span_decades": fit.map(|f| f.span_decades),
        "fit_error": report.rate_error,
    });
    if let Some(dir) = out_dir(global)? {
        output::write_json(&dir.join("blowup.json"), &json)?;
        output::write_trajectory_csv(
            &dir.join("trajectory.csv"),
            &field,
            &report.trajectory.samples,
        )?;
    }
    outln!(
        "{}",
        serde_json::to_string_pretty(&json).map_err(|e| Error::Numeric(e.to_string()))?
    );
    Ok(match report.status {
        BlowupStatus::Unclassified => Outcome::Unclassified,
        _ => Outcome::Success,
    })
}

fn seed_env() -> Result<u64> {
    match std::env::var("HORIZON_SEED") {
        Err(_) => Ok(0),
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("HORIZON_SEED must be an integer, got {v:?}"))),
    }
}

struct Registered {
    targets: Vec<Target<f64>>,
    names: Vec<String>,
    legend: Vec<Value>,
}

fn register(field: &DesingField64, loaded: &Loaded, seeds: &[Vec<f64>]) -> Result<Registered> {
    let (targets, info) = flow::horizon_targets(field, &loaded.search_options())?;
    let mut names = Vec::new();
    let mut legend = Vec::new();
    for (i, t) in info.iter().enumerate() {
        match t {
            BlowupTarget::Equilibrium(e) => {
                names.push(format!("H{i}"));
                legend.push(
                    json!({"name": format!("H{i}"), "equilibrium": output::equilibrium_json(e)}),
                );
            }
            BlowupTarget::Cycle(c) => {
                names.push("C".into());
                legend.push(json!({"name": "C", "cycle": output::cycle_json(c)}));
            }
        }
    }
    let mut targets = targets;
    let interior: Vec<Vec<f64>> = match &loaded.two_fluid {
        Some(d) => vec![TwoFluidData::chart_state(d.u_left)],
        None if field.chart == Chart::Global => find_interior_equilibria(field, seeds, 1e-6)?,
        None => Vec::new(),
    };
    for (i, p) in interior.into_iter().enumerate() {
        names.push(format!("E{i}"));
        legend.push(json!({"name": format!("E{i}"), "interior": p}));
        targets.push(Target::Equilibrium {
            state: p,
            at_infinity: false,
        });
    }
    Ok(Registered {
        targets,
        names,
        legend,
    })
}

fn tag(reg: &Registered, traj: &Trajectory<f64>) -> String {
    match traj.termination {
        flow::Termination::ConvergedToEquilibrium(i) => reg.names[i].clone(),
        flow::Termination::ConvergedToCycle => "C".into(),
        _ => String::new(),
    }
}

pub fn portrait(
    global: &GlobalArgs,
    src: &SourceArgs,
    grid: usize,
    radius: f64,
    svg: bool,
) -> Result<Outcome> {
    let loaded = source::load(global, src)?;
    let base = loaded.field()?;
    let field = match &loaded.two_fluid {
        Some(_) => base.clone(),
        None => base.in_chart(Chart::Global)?,
    };
    let seed = seed_env()?;
    let seeds: Vec<Vec<f64>> = if grid == 0 {
        Vec::new()
    } else if let Some(d) = &loaded.two_fluid {
        two_fluid_seeds(d, grid)
    } else {
        flow::seed_grid(&field, grid, seed)
    };
    let search_seeds = if field.chart == Chart::Global {
        flow::seed_grid(&field, 64, seed)
    } else {
        Vec::new()
    };
    let reg = register(&field, &loaded, &search_seeds)?;
    let mut opts = flow_options(global, &loaded, 1e3)?;
    opts.targets = reg.targets.clone();
    opts.stop_on_target = true;
    opts.stop_radius = radius;
    let fwd = flow::sweep_portrait(&field, &seeds, &opts);
    let bwd = flow::sweep_portrait(&field.reversed(), &seeds, &opts);
    let names = output::coord_names(field.chart, field.dim());
    let mut header = vec!["index".to_string()];
    header.extend(names.iter().cloned());
    header.extend(
        [
            "forward_termination",
            "forward_target",
            "forward_tau",
            "backward_termination",
            "backward_target",
            "backward_tau",
        ]
        .map(String::from),
    );
    let mut rows: Vec<Vec<String>> = Vec::new();
    for (i, (f, b)) in fwd.iter().zip(&bwd).enumerate() {
        let mut row = vec![i.to_string()];
        row.extend(f.seed.iter().map(|&v| num(v)));
        row.push(f.trajectory.termination.to_string());
        row.push(tag(&reg, &f.trajectory));
        row.push(num(f.trajectory.last().tau));
        row.push(b.trajectory.termination.to_string());
        row.push(tag(&reg, &b.trajectory));
        row.push(num(b.trajectory.last().tau));
        rows.push(row);
    }
    let mut chain_json = Value::Null;
    let mut chain = Vec::new();
    if let Some(d) = &loaded.two_fluid {
        let mut o = opts.clone();
        o.stop_radius = 1e-6;
        chain = scenarios::heteroclinic_chain(d, 1e-7, &o)?;
        chain_json = Value::Array(
            chain
                .iter()
                .map(|c| {
                    json!({"name": c.name, "connected": c.connected, "miss": c.miss,
                                "termination": c.trajectory.termination.to_string()})
                })
                .collect(),
        );
    }
    let dir = out_dir(global)?;
    let csv_text = {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&header)
            .map_err(|e| Error::Numeric(e.to_string()))?;
        for r in &rows {
            w.write_record(r)
                .map_err(|e| Error::Numeric(e.to_string()))?;
        }
        String::from_utf8(w.into_inner().map_err(|e| Error::Numeric(e.to_string()))?)
            .map_err(|e| Error::Numeric(e.to_string()))?
    };
    let meta = json!({"source": loaded.name, "chart": field.chart.to_string(), "seed": seed,
                      "targets": reg.legend, "chain": chain_json});
    match &dir {
        Some(d) => {
            let p = d.join("portrait.csv");
            std::fs::write(&p, &csv_text).map_err(|e| output::io_err(&p, e))?;
            output::write_json(&d.join("portrait.json"), &meta)?;
        }
        None => out!("{csv_text}"),
    }
    if svg && field.dim() == 2 {
        let text = portrait_svg(&field, &fwd, &bwd, &chain, &reg);
        match &dir {
            Some(d) => {
                let p = d.join("portrait.svg");
                std::fs::write(&p, text).map_err(|e| output::io_err(&p, e))?;
            }
            None => return Err(Error::Invalid("--svg needs --out".into())),
        }
    }
    Ok(Outcome::Success)
}

fn two_fluid_seeds(d: &TwoFluidData<f64>, count: usize) -> Vec<Vec<f64>> {
    let side = (count as f64).sqrt().ceil().max(2.0) as usize;
    let mut out = Vec::new();
    for i in 0..side {
        for j in 0..side {
            let s = 0.4 * (i as f64 + 0.5) / side as f64;
            let th = d.rho1 + (d.rho2 - d.rho1) * (j as f64 + 0.5) / side as f64;
            out.push(vec![s, th]);
        }
    }
    out
}

/// Plot coordinates: global `(x₁, x₂)`, or `(θ, s)` in charts.
fn plot_point(field: &DesingField64, state: &[f64]) -> (f64, f64) {
    match field.chart {
        Chart::Global => (state[0], state[1]),
        _ => (state[1], state[0]),
    }
}

fn portrait_svg(
    field: &DesingField64,
    fwd: &[flow::PortraitEntry<f64>],
    bwd: &[flow::PortraitEntry<f64>],
    chain: &[scenarios::Connection<f64>],
    reg: &Registered,
) -> String {
    let horizon = if field.chart == Chart::Global {
        output::horizon_curve(field, 512)
    } else {
        Vec::new()
    };
    let all: Vec<(f64, f64)> = fwd
        .iter()
        .chain(bwd)
        .flat_map(|e| {
            e.trajectory
                .samples
                .iter()
                .map(|s| plot_point(field, &s.state))
        })
        .chain(horizon.iter().copied())
        .collect();
    let mut canvas = if field.chart == Chart::Global {
        Canvas::new((-1.1, -1.1), (1.1, 1.1))
    } else {
        Canvas::fit(all.iter())
    };
    if !horizon.is_empty() {
        canvas.polyline(&horizon, "black", 2.0);
    }
    for (k, set) in [fwd, bwd].iter().enumerate() {
        for e in set.iter() {
            let pts: Vec<(f64, f64)> = e
                .trajectory
                .samples
                .iter()
                .map(|s| plot_point(field, &s.state))
                .collect();
            let color = match e.trajectory.termination {
                flow::Termination::ConvergedToEquilibrium(i) => PALETTE[i % PALETTE.len()],
                _ => PALETTE[7],
            };
            canvas.polyline(&pts, color, if k == 0 { 1.0 } else { 0.5 });
        }
    }
    for c in chain {
        let pts: Vec<(f64, f64)> = c
            .trajectory
            .samples
            .iter()
            .map(|s| plot_point(field, &s.state))
            .collect();
        canvas.polyline(&pts, "black", 2.5);
    }
    for (t, name) in reg.targets.iter().zip(&reg.names) {
        if let Target::Equilibrium { state, .. } = t {
            canvas.marker(plot_point(field, state), "black", name);
        }
    }
    let (xl, yl) = if field.chart == Chart::Global {
        ("x1", "x2")
    } else {
        ("theta", "s")
    };
    canvas.axes_labels(xl, yl);
    canvas.finish()
}

pub fn plot(
    csv_path: &Path,
    x: Option<&str>,
    y: Option<&str>,
    svg: Option<&Path>,
) -> Result<Outcome> {
    let mut r = csv::Reader::from_path(csv_path).map_err(|e| output::io_err(csv_path, e))?;
    let header: Vec<String> = r
        .headers()
        .map_err(|e| output::io_err(csv_path, e))?
        .iter()
        .map(String::from)
        .collect();
    if header.len() < 4
        || header[0] != "tau"
        || header[1] != "t"
        || header.last().map(String::as_str) != Some("p")
    {
        return Err(Error::Parse(
            "expected a trajectory CSV with header tau,t,<coords>,p".into(),
        ));
    }
    let col = |name: Option<&str>, default: usize| -> Result<usize> {
        match name {
            None => Ok(default.min(header.len() - 1)),
            Some(n) => header
                .iter()
                .position(|h| h == n)
                .ok_or_else(|| Error::Parse(format!("no column {n:?}"))),
        }
    };
    let (ix, iy) = (col(x, 2)?, col(y, 3)?);
    let mut pts = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| output::io_err(csv_path, e))?;
        let get = |i: usize| -> Result<f64> {
            rec.get(i)
                .ok_or_else(|| Error::Parse("short row".into()))?
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("bad number: {e}")))
        };
        pts.push((get(ix)?, get(iy)?));
    }
    let mut canvas = Canvas::fit(pts.iter());
    canvas.polyline(&pts, PALETTE[2], 1.5);
    canvas.axes_labels(&header[ix], &header[iy]);
    let text = canvas.finish();
    match svg {
        Some(p) => std::fs::write(p, text).map_err(|e| output::io_err(p, e))?,
        None => out!("{text}"),
    }
    Ok(Outcome::Success)
}

pub fn scenario_list() -> Result<Outcome> {
    for (name, desc) in scenarios::catalog() {
        outln!("{name:<10} {desc}");
    }
    Ok(Outcome::Success)
}
