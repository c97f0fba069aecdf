//! Independent reference integrator for oracle tests: classical RK4 with
//! step doubling, written without any of the library's ODE machinery.

#![allow(dead_code)]

pub type Field<'a> = &'a dyn Fn(&[f64]) -> Vec<f64>;

fn rk4(f: Field, y: &[f64], h: f64) -> Vec<f64> {
    let add =
        |a: &[f64], b: &[f64], s: f64| a.iter().zip(b).map(|(x, y)| x + s * y).collect::<Vec<_>>();
    let k1 = f(y);
    let k2 = f(&add(y, &k1, h / 2.0));
    let k3 = f(&add(y, &k2, h / 2.0));
    let k4 = f(&add(y, &k3, h));
    (0..y.len())
        .map(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect()
}

/// One step-doubling step with local Richardson correction; returns the new
/// state and the error estimate.
fn double_step(f: Field, y: &[f64], h: f64) -> (Vec<f64>, f64) {
    let big = rk4(f, y, h);
    let half = rk4(f, &rk4(f, y, h / 2.0), h / 2.0);
    let mut err: f64 = 0.0;
    let out: Vec<f64> = half
        .iter()
        .zip(&big)
        .zip(y)
        .map(|((&a, &b), &y0)| {
            let scale = 1e-300 + y0.abs().max(a.abs());
            err = err.max((a - b).abs() / scale);
            a + (a - b) / 15.0
        })
        .collect();
    (out, err)
}

/// Integrates `y' = f(y)` from `t = 0` until `g(y) ≥ level`; returns the
/// crossing time located by bisection on the last step.
pub fn hitting_time(f: Field, y0: &[f64], g: &dyn Fn(&[f64]) -> f64, level: f64, rtol: f64) -> f64 {
    let mut y = y0.to_vec();
    let mut t = 0.0;
    let mut h = 1e-3;
    for _ in 0..50_000_000 {
        let (yn, err) = double_step(f, &y, h);
        if err > rtol || yn.iter().any(|v| !v.is_finite()) {
            h *= 0.5;
            continue;
        }
        if g(&yn) >= level {
            let (mut lo, mut hi) = (0.0, h);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                let (ym, _) = double_step(f, &y, mid);
                if g(&ym) >= level {
                    hi = mid;
                } else {
                    lo = mid;
                }
                if hi - lo <= 1e-17 * (t + hi).abs().max(1e-300) {
                    break;
                }
            }
            return t + 0.5 * (lo + hi);
        }
        y = yn;
        t += h;
        let grow = if err > 0.0 {
            (rtol / err).powf(0.2).min(2.0)
        } else {
            2.0
        };
        h *= 0.9 * grow.max(0.2);
    }
    panic!("reference integration did not reach the level");
}
