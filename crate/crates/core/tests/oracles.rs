//! Library results against independent oracles: exact solutions, special
//! functions, direct integration of the original systems and hand-derived values.

mod common;

use horizon_core::compactify::Sign;
use horizon_core::desing::{Chart, TwoFluidField};
use horizon_core::flow::{self, BlowupStatus, FlowOptions, Termination};
use horizon_core::infinity::{self, SearchOptions, Stability};
use horizon_core::quasitrig::QuasiTrigTable;
use horizon_core::{qhfield, scenarios};

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn kk_original(y: &[f64]) -> Vec<f64> {
    vec![y[0] * y[0] - y[1], y[0].powi(3) / 3.0]
}

/// `t_max` from the `|y| ≥ R` hitting times at `R` and `4R` (leading error `∝ R^{−1/2}`).
fn kk_oracle(y0: &[f64]) -> f64 {
    let norm = |y: &[f64]| (y[0] * y[0] + y[1] * y[1]).sqrt();
    let t1 = common::hitting_time(&kk_original, y0, &norm, 1e8, 1e-13);
    let t4 = common::hitting_time(&kk_original, y0, &norm, 4e8, 1e-13);
    2.0 * t4 - t1
}

#[test]
fn quasi_trig_period_matches_beta_function() {
    for l in 1..=6u32 {
        let table = QuasiTrigTable::<f64>::new(l).unwrap();
        let lf = l as f64;
        let expected = 2.0 / lf.sqrt() * statrs::function::beta::beta(1.0 / (2.0 * lf), 0.5);
        assert!(
            rel(table.period(), expected) < 1e-10,
            "l = {l}: {} vs {expected}",
            table.period()
        );
    }
}

#[test]
fn quasi_trig_identity_and_derivatives() {
    for l in 1..=4u32 {
        let t = QuasiTrigTable::<f64>::new(l).unwrap();
        for i in 0..500 {
            let th = t.period() * (i as f64 + 0.5) / 500.0;
            let (c, s) = t.eval(th);
            assert!((c.powi(2 * l as i32) + l as f64 * s * s - 1.0).abs() <= 1e-10);
            let (dc, ds) = t.derivatives(th);
            assert!((dc + s).abs() <= 1e-9 && (ds - c.powi(2 * l as i32 - 1)).abs() <= 1e-9);
        }
    }
}

#[test]
fn kk_blowup_times_match_direct_integration() {
    let field = scenarios::keyfitz_kranzer::<f64>().unwrap().field;
    for y0 in [[1.0, 0.0], [2.0, 0.0], [1.5, 1.0], [0.5, -1.0]] {
        let start = field.from_original(&y0).unwrap();
        let r = flow::blowup(
            &field,
            &start,
            &FlowOptions::default(),
            &SearchOptions::default(),
        )
        .unwrap();
        assert_eq!(r.status, BlowupStatus::BlowUp, "start {y0:?}");
        let t_max = r.estimate.unwrap().t_max;
        let oracle = kk_oracle(&y0);
        assert!(
            rel(t_max, oracle) < 1e-5,
            "start {y0:?}: {t_max} vs {oracle}"
        );
    }
}

#[test]
fn lienard_backward_blowup_time_matches_direct_integration() {
    let sc = scenarios::lienard::<f64>(2).unwrap();
    let field = sc.figure_field.unwrap();
    let y0 = field.scheme.decompactify(&[0.1, 0.1]).unwrap();
    let backward = |y: &[f64]| vec![-y[1], y[0].powi(5) + y[0] * y[0] * y[1]];
    // p ~ (t_max − t)^{−1/2}: at p = 10⁶ the remaining time is O(10⁻¹²).
    let p = |y: &[f64]| (y[0].powi(6) + 3.0 * y[1] * y[1]).powf(1.0 / 6.0);
    let oracle = common::hitting_time(&backward, &y0, &p, 1e6, 1e-13);
    let r = flow::blowup(
        &field.reversed(),
        &[0.1, 0.1],
        &FlowOptions {
            tau_max: 1e4,
            ..FlowOptions::default()
        },
        &SearchOptions::default(),
    )
    .unwrap();
    let t_max = r.estimate.unwrap().t_max;
    assert!(rel(t_max, oracle) < 1e-7, "{t_max} vs {oracle}");
}

#[test]
fn lienard_backward_field_matches_closed_form() {
    let field = scenarios::lienard::<f64>(2)
        .unwrap()
        .figure_field
        .unwrap()
        .reversed();
    for x in [[0.1, 0.1], [0.5, -0.3], [-0.7, 0.2], [0.0, 0.9]] {
        let g = field.eval_real(&x).unwrap();
        let c = scenarios::lienard_backward_closed_form(2, &x);
        assert!(
            (g[0] - c[0]).abs() < 1e-14 && (g[1] - c[1]).abs() < 1e-14,
            "{g:?} vs {c:?}"
        );
    }
}

#[test]
fn riccati_trajectory_matches_exact_solution() {
    let sc = scenarios::riccati::<f64>().unwrap();
    let start = sc.field.from_original(&[1.0]).unwrap();
    let tr = flow::integrate(
        &sc.field,
        &start,
        &FlowOptions {
            tau_max: 40.0,
            ..FlowOptions::default()
        },
    )
    .unwrap();
    let mut checked = 0;
    for s in tr.samples.iter().filter(|s| s.t <= 0.9) {
        let y = sc.field.to_original(&s.state).unwrap()[0];
        assert!(rel(y, 1.0 / (1.0 - s.t)) <= 1e-7, "t = {}: {y}", s.t);
        checked += 1;
    }
    assert!(checked > 10);
    let last = tr.last();
    assert!((last.tau - 40.0).abs() < 1e-12);
    assert!(1.0 - last.t < 1e-6, "t(τ = 40) = {}", last.t);
}

#[test]
fn tail_extrapolation_is_consistent() {
    let field = scenarios::keyfitz_kranzer::<f64>().unwrap().field;
    let start = field.from_original(&[1.0, 0.0]).unwrap();
    let base = FlowOptions::default();
    let a = flow::blowup(&field, &start, &base, &SearchOptions::default())
        .unwrap()
        .estimate
        .unwrap();
    let half = FlowOptions {
        engage_radius: base.engage_radius / 2.0,
        ..base
    };
    let b = flow::blowup(&field, &start, &half, &SearchOptions::default())
        .unwrap()
        .estimate
        .unwrap();
    assert!((a.t_max - b.t_max).abs() <= a.tail_bound.max(b.tail_bound) + 1e-14);
}

#[test]
fn kk_start_on_positive_v_axis_tends_to_the_origin() {
    let field = scenarios::keyfitz_kranzer::<f64>().unwrap().field;
    let start = field.from_original(&[0.0, 1.0]).unwrap();
    let r = flow::blowup(
        &field,
        &start,
        &FlowOptions::default(),
        &SearchOptions::default(),
    )
    .unwrap();
    assert_eq!(r.status, BlowupStatus::Bounded);
    // The origin is degenerate, so the approach is algebraic rather than exponential.
    let norms: Vec<f64> = r
        .trajectory
        .samples
        .iter()
        .map(|s| s.state[0].hypot(s.state[1]))
        .collect();
    let half = norms.len() / 2;
    assert!(norms[half..]
        .windows(2)
        .all(|w| w[1] <= w[0] * (1.0 + 1e-9)));
    assert!(
        *norms.last().unwrap() < 1e-2,
        "{:?}",
        r.trajectory.last().state
    );
}

#[test]
fn kk_origin_is_an_interior_equilibrium() {
    let field = scenarios::keyfitz_kranzer::<f64>().unwrap().field;
    let seeds = vec![vec![0.05, 0.02], vec![-0.03, 0.04]];
    let found = infinity::find_interior_equilibria(&field, &seeds, 1e-4).unwrap();
    assert!(!found.is_empty());
    assert!(found.iter().all(|x| x.iter().all(|v| v.abs() < 1e-5)));
}

#[test]
fn classification_is_stable_under_margin_scaling() {
    let field = scenarios::keyfitz_kranzer::<f64>().unwrap().field;
    let base = infinity::find_horizon_equilibria(&field, &SearchOptions::default()).unwrap();
    for m in [1e-9, 1e-7] {
        let o = SearchOptions {
            margin: m,
            ..SearchOptions::default()
        };
        let other = infinity::find_horizon_equilibria(&field, &o).unwrap();
        assert_eq!(base.len(), other.len());
        for (a, b) in base.iter().zip(&other) {
            assert_eq!(a.classification, b.classification);
        }
    }
}

#[test]
fn kk_stability_types() {
    let field = scenarios::keyfitz_kranzer::<f64>().unwrap().field;
    let eqs = infinity::find_horizon_equilibria(&field, &SearchOptions::default()).unwrap();
    let closed = scenarios::keyfitz_kranzer_equilibria::<f64>();
    let kind = |p: &[f64; 2]| {
        eqs.iter()
            .find(|e| (e.location[0] - p[0]).abs() + (e.location[1] - p[1]).abs() < 1e-8)
            .unwrap()
            .classification
            .kind
    };
    assert_eq!(kind(&closed[0]), Stability::Sink);
    assert_eq!(kind(&closed[1]), Stability::Source);
    assert_eq!(kind(&closed[2]), Stability::Saddle);
    assert_eq!(kind(&closed[3]), Stability::Saddle);
}

#[test]
fn scenario_schemes_validate_against_their_sources() {
    for sc in [
        scenarios::keyfitz_kranzer::<f64>().unwrap(),
        scenarios::lienard::<f64>(1).unwrap(),
        scenarios::lienard::<f64>(2).unwrap(),
        scenarios::lienard::<f64>(3).unwrap(),
        scenarios::riccati::<f64>().unwrap(),
    ] {
        let sig = sc.field.signature().unwrap();
        assert_eq!(
            qhfield::validate_signature(&sig.field, &sig.alpha),
            Some(sig.k),
            "{}",
            sc.name
        );
    }
}

#[test]
fn lienard_floquet_quadrature_matches_return_map() {
    for n in 1..=3 {
        let field = scenarios::lienard::<f64>(n).unwrap().field;
        let cycle = infinity::horizon_cycle_analysis(&field, 0.0).unwrap();
        assert!(
            cycle.return_map_residual < 1e-8,
            "n = {n}: {}",
            cycle.return_map_residual
        );
        let back = infinity::horizon_cycle_analysis(&field.reversed(), 0.0).unwrap();
        assert!((back.multiplier * cycle.multiplier - 1.0).abs() < 1e-10);
    }
}

#[test]
fn two_chart_blowup_times_agree() {
    let field = scenarios::keyfitz_kranzer::<f64>().unwrap().field;
    let dir = field
        .in_chart(Chart::Directional {
            index: 0,
            sign: Sign::Plus,
        })
        .unwrap();
    let t = |f: &horizon_core::DesingField64| {
        let start = f.from_original(&[1.0, 0.0]).unwrap();
        flow::blowup(
            f,
            &start,
            &FlowOptions::default(),
            &SearchOptions::default(),
        )
        .unwrap()
        .estimate
        .unwrap()
        .t_max
    };
    assert!(rel(t(&dir), t(&field)) < 1e-6);
}

#[test]
fn two_fluid_heteroclinic_chain_connects() {
    let sc = scenarios::two_fluid_default::<f64>().unwrap();
    let data = sc.two_fluid.unwrap();
    let opts = FlowOptions {
        stop_radius: 1e-6,
        tau_max: 500.0,
        ..FlowOptions::default()
    };
    let chain = scenarios::heteroclinic_chain(&data, 1e-7, &opts).unwrap();
    assert_eq!(
        chain.iter().map(|c| c.name).collect::<Vec<_>>(),
        ["W1", "W2", "W3"]
    );
    for c in &chain {
        assert!(c.connected, "{} missed by {}", c.name, c.miss);
        assert!(matches!(
            c.trajectory.termination,
            Termination::ConvergedToEquilibrium(0)
        ));
    }
}

fn two_fluid_parts() -> (TwoFluidField<f64>, Vec<f64>) {
    let data = scenarios::two_fluid_default::<f64>()
        .unwrap()
        .two_fluid
        .unwrap();
    let f = TwoFluidField {
        rho1: data.rho1,
        rho2: data.rho2,
        c: data.c,
        c1: data.c1_left,
        c2: data.c2_left,
    };
    let grid = (0..=20)
        .map(|i| data.rho1 + (data.rho2 - data.rho1) * i as f64 / 20.0)
        .collect();
    (f, grid)
}

#[test]
fn two_fluid_remainder_decays_like_c_over_v() {
    let (f, grid) = two_fluid_parts();
    for v in [1e4, 1e6, 1e8] {
        for &beta in &grid {
            let b2: f64 = f.b2(beta);
            let scaled = (v * v * b2 - f.c * v - f.c2) / (v * v);
            let dev = scaled - b2;
            assert!((dev * v + f.c).abs() <= 1e-6 * f.c.abs().max(1.0) + f.c2.abs() / v);
        }
    }
}

#[test]
#[ignore = "unattainable as stated: the deviation is exactly c/v + c2/v^2, about 1.6e-6 at v = 1e6 for c = 367/228"]
fn two_fluid_asymptotic_quasi_homogeneity_at_one_million() {
    let (f, grid) = two_fluid_parts();
    let v = 1e6;
    for &beta in &grid {
        let b2: f64 = f.b2(beta);
        let scaled = (v * v * b2 - f.c * v - f.c2) / (v * v);
        assert!(
            (scaled - b2).abs() <= 1e-6,
            "β = {beta}: deviation {}",
            (scaled - b2).abs()
        );
    }
}
