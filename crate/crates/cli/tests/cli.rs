//! End-to-end tests of the `horizon` binary.

use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn horizon() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_horizon"));
    c.env_remove("HORIZON_SEED");
    c
}

fn model(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../models")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    horizon().args(args).output().expect("spawn horizon")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", stdout(o)))
}

#[test]
fn scenario_list_names_every_builtin() {
    let o = run(&["scenario", "list"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    for name in ["lienard", "kk", "two-fluid", "riccati"] {
        assert!(
            text.lines().any(|l| l.starts_with(name)),
            "{name} missing from\n{text}"
        );
    }
}

#[test]
fn analyze_kk_finds_four_horizon_equilibria() {
    let o = run(&["analyze", "--scenario", "kk", "--json"]);
    assert_eq!(code(&o), 0);
    let r = json(&o);
    let eqs = r["equilibria"].as_array().unwrap();
    assert_eq!(eqs.len(), 4);
    assert_eq!(r["c1"]["certified"], Value::Bool(true));
    for e in eqs {
        let x = e["location"].as_array().unwrap();
        let p2: f64 = x.iter().map(|v| v.as_f64().unwrap().powi(2)).sum();
        assert!(p2 > 0.0);
    }
}

#[test]
fn analyze_two_fluid_finds_two_saddles() {
    let o = run(&["analyze", "--scenario", "two-fluid", "--json"]);
    assert_eq!(code(&o), 0);
    let eqs = json(&o)["equilibria"].as_array().unwrap().clone();
    assert_eq!(eqs.len(), 2);
    assert!(eqs.iter().all(|e| e["classification"] == "saddle"));
}

#[test]
fn analyze_lienard_reports_the_horizon_cycle() {
    let o = run(&["analyze", "--scenario", "lienard", "--json"]);
    assert_eq!(code(&o), 0);
    let r = json(&o);
    assert!(r["equilibria"].as_array().unwrap().is_empty());
    assert!(r["horizon_cycle"].is_object(), "{r}");
}

#[test]
fn zero_field_has_no_signature() {
    let o = run(&["analyze", "--model", model("zero.json").to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).trim(), "no quasi-homogeneous signature found");
}

#[test]
fn riccati_model_blows_up_at_the_reciprocal_of_the_start() {
    let m = model("riccati.json");
    for (y0, t_max) in [("1", 1.0), ("0.5", 2.0), ("4", 0.25)] {
        let o = run(&["blowup", "--model", m.to_str().unwrap(), "--x0", y0]);
        assert_eq!(code(&o), 0);
        let r = json(&o);
        assert_eq!(r["status"], "blow-up");
        let t = r["t_max"].as_f64().unwrap();
        assert!((t - t_max).abs() <= 1e-8 * t_max, "y0 = {y0}: t_max = {t}");
        let e = r["fitted_norm_exponent"].as_f64().unwrap();
        assert!((e + 1.0).abs() <= 1e-4, "exponent {e}");
    }
}

#[test]
fn kk_blowup_rate_is_reciprocal() {
    let o = run(&["blowup", "--scenario", "kk", "--x0", "1,0"]);
    assert_eq!(code(&o), 0);
    let r = json(&o);
    assert_eq!(r["status"], "blow-up");
    let e = r["fitted_norm_exponent"].as_f64().unwrap();
    assert!((e + 1.0).abs() <= 1e-3, "exponent {e}");
    assert!(r["t_max"].as_f64().unwrap() > 0.0);
}

#[test]
fn malformed_model_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.json");
    std::fs::write(&p, "{bad").unwrap();
    let o = run(&["analyze", "--model", p.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
}

#[test]
fn invalid_arguments_exit_with_two() {
    assert_eq!(
        code(&run(&["blowup", "--scenario", "kk", "--x0", "1,2,3"])),
        2
    );
    assert_eq!(
        code(&run(&["analyze", "--scenario", "no-such-scenario"])),
        2
    );
    assert_eq!(
        code(&run(&[
            "blowup",
            "--scenario",
            "kk",
            "--x0",
            "1,0",
            "--tau-max",
            "-1"
        ])),
        2
    );
}

#[test]
fn unclassified_two_fluid_orbit_exits_with_four() {
    let o = run(&["blowup", "--scenario", "two-fluid", "--x0", "1.95,10"]);
    assert_eq!(code(&o), 4);
    assert_eq!(json(&o)["status"], "unclassified");
}

#[test]
fn empty_portrait_grid_writes_only_the_header() {
    let o = run(&["portrait", "--scenario", "kk", "--grid", "0"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 1);
    assert!(text.starts_with("index,x1,x2,forward_termination"));
}

#[test]
fn portrait_is_deterministic_across_thread_counts() {
    let sweep = |jobs: &str| {
        let o = horizon()
            .env("HORIZON_SEED", "11")
            .args([
                "portrait",
                "--scenario",
                "kk",
                "--grid",
                "16",
                "--jobs",
                jobs,
            ])
            .output()
            .unwrap();
        assert_eq!(code(&o), 0);
        o.stdout
    };
    let a = sweep("1");
    assert!(a.len() > 200);
    assert_eq!(a, sweep("4"));
}

#[test]
fn reports_in_out_directory_are_byte_identical_across_runs() {
    let files = |dir: &Path| {
        let o = horizon()
            .env("HORIZON_SEED", "5")
            .args([
                "--out",
                dir.to_str().unwrap(),
                "portrait",
                "--scenario",
                "kk",
                "--grid",
                "9",
                "--svg",
            ])
            .output()
            .unwrap();
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        ["portrait.csv", "portrait.json", "portrait.svg"]
            .map(|f| std::fs::read(dir.join(f)).unwrap())
    };
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert_eq!(files(a.path()), files(b.path()));
}

#[test]
fn bad_seed_is_rejected() {
    let o = horizon()
        .env("HORIZON_SEED", "x")
        .args(["portrait", "--scenario", "kk", "--grid", "4"])
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
}

/// Polyline vertices of the first `<polyline>` in an SVG document.
fn polyline(svg: &str) -> Vec<(f64, f64)> {
    let start = svg.find("points=\"").expect("polyline") + 8;
    let end = start + svg[start..].find('"').unwrap();
    svg[start..end]
        .split_whitespace()
        .map(|p| {
            let (x, y) = p.split_once(',').unwrap();
            (x.parse().unwrap(), y.parse().unwrap())
        })
        .collect()
}

#[test]
fn horizon_orbit_plots_as_a_closed_curve() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    // One revolution takes τ ≈ 6.74 in the global chart; run a bit past it.
    let o = run(&[
        "--out",
        d,
        "--tau-max",
        "7.5",
        "blowup",
        "--scenario",
        "lienard",
        "--compact",
        "--x0",
        "1,0",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(json(&o)["status"], "on-horizon");

    let csv = dir.path().join("trajectory.csv");
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("tau,t,x1,x2,p\n"));
    for row in text.lines().skip(1) {
        let cols: Vec<f64> = row.split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(cols[1], 0.0);
        assert!((cols[4] - 1.0).abs() <= 1e-8);
    }

    let svg_path = dir.path().join("orbit.svg");
    let o = run(&[
        "plot",
        csv.to_str().unwrap(),
        "--svg",
        svg_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let svg = std::fs::read_to_string(&svg_path).unwrap();
    let pts = polyline(&svg);
    assert!(pts.len() > 50);
    // After leaving the start the curve must come back to it.
    let d0 = |q: &(f64, f64)| ((q.0 - pts[0].0).powi(2) + (q.1 - pts[0].1).powi(2)).sqrt();
    let away = pts
        .iter()
        .position(|q| d0(q) > 300.0)
        .expect("orbit leaves its start");
    let closest = pts[away..].iter().map(d0).fold(f64::MAX, f64::min);
    assert!(
        closest < 2.0,
        "curve does not close: nearest return {closest} px"
    );
    // The curve spans the plot in both directions, so it is not degenerate.
    let span = |f: fn(&(f64, f64)) -> f64| {
        let v: Vec<f64> = pts.iter().map(f).collect();
        v.iter().cloned().fold(f64::MIN, f64::max) - v.iter().cloned().fold(f64::MAX, f64::min)
    };
    assert!(span(|p| p.0) > 200.0 && span(|p| p.1) > 200.0);
}

#[test]
fn plot_output_is_stable() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let o = run(&["--out", d, "blowup", "--scenario", "kk", "--x0", "1,0"]);
    assert_eq!(code(&o), 0);
    let csv = dir.path().join("trajectory.csv");
    let a = run(&["plot", csv.to_str().unwrap()]);
    let b = run(&["plot", csv.to_str().unwrap(), "--x", "x1", "--y", "x2"]);
    assert_eq!(code(&a), 0);
    assert!(stdout(&a).starts_with("<svg "));
    assert!(stdout(&a).trim_end().ends_with("</svg>"));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn plot_rejects_foreign_csv() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("x.csv");
    std::fs::write(&p, "a,b\n1,2\n").unwrap();
    assert_eq!(code(&run(&["plot", p.to_str().unwrap()])), 2);
}

#[test]
fn model_document_reproduces_the_builtin_scenario() {
    let from_model = json(&run(&[
        "analyze",
        "--model",
        model("kk.json").to_str().unwrap(),
        "--json",
    ]));
    let builtin = json(&run(&["analyze", "--scenario", "kk", "--json"]));
    assert_eq!(from_model["equilibria"], builtin["equilibria"]);
    assert_eq!(from_model["scheme"], builtin["scheme"]);
}
