//! Equilibria and periodic orbits on the horizon: location, linearization,
//! classification and predicted blow-up exponents.

use crate::compactify::Sign;
use crate::desing::{Chart, DesingField, Source};
use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::ode::{self, OdeOptions, Stepper};
use crate::quadrature;
use crate::scalar::{Dual, Real};
use num_complex::Complex;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};

/// Stability type of an equilibrium.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stability {
    Sink,
    Source,
    Saddle,
    NonHyperbolic,
}

/// Counts of stable / unstable / central eigenvalues.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classification {
    pub kind: Stability,
    pub n_s: usize,
    pub n_u: usize,
    pub n_c: usize,
}

impl Classification {
    pub fn is_hyperbolic(&self) -> bool {
        self.n_c == 0
    }
}

/// Predicted blow-up exponents `yᵢ ~ (t_max − t)^{−αᵢ/k}`, `p(y) ~ (t_max − t)^{−1/k}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlowupExponents {
    /// `None` where the component does not blow up at this point.
    pub components: Vec<Option<Ratio<i64>>>,
    pub norm: Ratio<i64>,
    /// Reached in forward time (nontrivial stable manifold).
    pub forward: bool,
    /// Reached in backward time (nontrivial unstable manifold).
    pub backward: bool,
}

/// An equilibrium on the horizon with its linearization.
#[derive(Clone, Debug)]
pub struct HorizonEquilibrium<T> {
    /// Location in the global chart.
    pub location: Vec<T>,
    /// Chart used for the linearization and the point in that chart.
    pub chart: Chart,
    pub chart_location: Vec<T>,
    pub jacobian: Mat<T>,
    pub eigenvalues: Vec<Complex<T>>,
    pub classification: Classification,
    pub exponents: Option<BlowupExponents>,
}

/// Chart preference for linearization.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChartChoice {
    /// Quasi-polar when available, else global when C¹, else a covering hyperplane chart.
    Auto,
    Fixed(Chart),
}

/// Options for [`find_horizon_equilibria`].
#[derive(Clone, Debug)]
pub struct SearchOptions<T> {
    pub seeds: usize,
    pub dedup_tol: T,
    pub residual_tol: T,
    pub margin: T,
    pub chart: ChartChoice,
    /// Seed interval for one-dimensional directional searches.
    pub theta_range: Option<(T, T)>,
}

impl<T: Real> Default for SearchOptions<T> {
    fn default() -> Self {
        SearchOptions {
            seeds: 256,
            dedup_tol: T::lit(1e-8),
            residual_tol: T::lit(1e-10),
            margin: T::lit(1e-8),
            chart: ChartChoice::Auto,
            theta_range: None,
        }
    }
}

/// Classifies an equilibrium from its spectrum; `|Re λ| ≤ margin` counts as central.
pub fn classify<T: Real>(eigenvalues: &[Complex<T>], margin: T) -> Classification {
    let n_s = eigenvalues.iter().filter(|e| e.re < -margin).count();
    let n_u = eigenvalues.iter().filter(|e| e.re > margin).count();
    let n_c = eigenvalues.len() - n_s - n_u;
    let kind = if n_c > 0 {
        Stability::NonHyperbolic
    } else if n_u == 0 {
        Stability::Sink
    } else if n_s == 0 {
        Stability::Source
    } else {
        Stability::Saddle
    };
    Classification {
        kind,
        n_s,
        n_u,
        n_c,
    }
}

/// Exponents for a hyperbolic horizon equilibrium at global location `x`.
pub fn predict_blowup_exponents<T: Real>(
    alpha: &[u32],
    k: u32,
    x: &[T],
    class: &Classification,
) -> Result<BlowupExponents> {
    if !class.is_hyperbolic() {
        return Err(Error::Unsupported(
            "blow-up exponents need a hyperbolic equilibrium".into(),
        ));
    }
    if k == 0 {
        return Err(Error::Unsupported("order k = 0 does not blow up".into()));
    }
    let kk = k as i64;
    let components = alpha
        .iter()
        .zip(x)
        .map(|(&a, &xi)| (a > 0 && xi.abs() > T::lit(1e-8)).then(|| Ratio::new(-(a as i64), kk)))
        .collect();
    Ok(BlowupExponents {
        components,
        norm: Ratio::new(-1, kk),
        forward: class.n_s > 0,
        backward: class.n_u > 0,
    })
}

/// Jacobian and spectrum of a field at a chart state.
pub fn linearize<T: Real>(
    field: &DesingField<T>,
    state: &[T],
) -> Result<(Mat<T>, Vec<Complex<T>>)> {
    if field.chart == Chart::Global && !field.is_c1() {
        let on_horizon = field.scheme.gap(state).abs() < T::lit(1e-9);
        if on_horizon {
            return Err(Error::Chart(
                "global chart is not C1 at the horizon; use a directional chart".into(),
            ));
        }
    }
    let jac = field.jacobian(state)?;
    let ev = linalg::eigenvalues(&jac)?;
    Ok((jac, ev))
}

/// Quasi-polar Jacobian at `s = 0` evaluated from `(Cs, Sn)` directly, avoiding
/// any angle lookup error.
pub fn quasi_polar_jacobian_at<T: Real>(
    field: &DesingField<T>,
    s: T,
    cs: T,
    sn: T,
) -> Result<Mat<T>> {
    let l = field
        .scheme
        .quasi_polar_order()
        .ok_or_else(|| Error::Chart("quasi-polar chart unavailable".into()))? as i32;
    let eval = |sd: Dual<T>, cd: Dual<T>, snd: Dual<T>| -> Result<[Dual<T>; 2]> {
        let (sigma, th) = field.quasi_polar_parts_cs_sn(sd, cd, snd)?;
        Ok([-sd * sigma, th])
    };
    let col_s = eval(Dual::variable(s), Dual::constant(cs), Dual::constant(sn))?;
    let col_t = eval(
        Dual::constant(s),
        Dual::new(cs, -sn),
        Dual::new(sn, cs.powi(2 * l - 1)),
    )?;
    let mut m = Mat::zeros(2, 2);
    for i in 0..2 {
        m[(i, 0)] = col_s[i].eps;
        m[(i, 1)] = col_t[i].eps;
    }
    Ok(m)
}

fn resolve_chart<T: Real>(field: &DesingField<T>, x: &[T], choice: ChartChoice) -> Result<Chart> {
    if let Source::TwoFluid(_) = field.source {
        return Ok(field.chart);
    }
    match choice {
        ChartChoice::Fixed(c) => Ok(c),
        ChartChoice::Auto => {
            if field.scheme.quasi_polar_order().is_some() {
                Ok(Chart::QuasiPolar)
            } else if field.is_c1() {
                Ok(Chart::Global)
            } else {
                let (index, sign) = field
                    .scheme
                    .best_chart(x)
                    .ok_or_else(|| Error::Chart("no directional chart covers the point".into()))?;
                Ok(Chart::Directional { index, sign })
            }
        }
    }
}

/// Builds the report for a horizon point given in global coordinates.
pub fn analyze_point<T: Real>(
    field: &DesingField<T>,
    x: &[T],
    choice: ChartChoice,
    margin: T,
) -> Result<HorizonEquilibrium<T>> {
    let chart = resolve_chart(field, x, choice)?;
    let f = field.in_chart(chart)?;
    let (chart_location, jacobian) = match chart {
        Chart::QuasiPolar => {
            let l = f.scheme.alpha[1] as i32;
            let lam = (x[0].powi(2 * l) + T::int(l as i64) * x[1] * x[1])
                .powf(-T::one() / T::int(2 * l as i64));
            let (cs, sn) = (lam * x[0], lam.powi(l) * x[1]);
            let theta = f.trig().expect("table").angle_of(cs, sn);
            let jac = quasi_polar_jacobian_at(&f, T::zero(), cs, sn)?;
            (vec![T::zero(), theta], jac)
        }
        _ => {
            let state = f.from_global(x)?;
            let (jac, _) = linearize(&f, &state)?;
            (state, jac)
        }
    };
    let eigenvalues = linalg::eigenvalues(&jacobian)?;
    let classification = classify(&eigenvalues, margin);
    let exponents =
        predict_blowup_exponents(&field.scheme.alpha, field.scheme.k, x, &classification).ok();
    Ok(HorizonEquilibrium {
        location: x.to_vec(),
        chart,
        chart_location,
        jacobian,
        eigenvalues,
        classification,
        exponents,
    })
}

/// Locates all equilibria on the horizon and linearizes each of them.
pub fn find_horizon_equilibria<T: Real>(
    field: &DesingField<T>,
    opts: &SearchOptions<T>,
) -> Result<Vec<HorizonEquilibrium<T>>> {
    let points = match field.source {
        Source::Polynomial(_) => locate_global(field, opts)?,
        Source::TwoFluid(_) => locate_directional(field, opts)?,
    };
    points
        .into_iter()
        .map(|x| analyze_point(field, &x, opts.chart, opts.margin))
        .collect()
}

/// Zeros of a polynomial field inside the compactified ball, found by
/// Gauss–Newton on the global-chart field from the given seeds; sorted.
pub fn find_interior_equilibria<T: Real>(
    field: &DesingField<T>,
    seeds: &[Vec<T>],
    dedup_tol: T,
) -> Result<Vec<Vec<T>>> {
    let g = field.in_chart(Chart::Global)?;
    let sys = |x: &[Dual<T>]| g.eval(x);
    let sys_real = |x: &[T]| g.eval_real(x);
    let mut found: Vec<Vec<T>> = Vec::new();
    for seed in seeds {
        let Some(x) = gauss_newton(&sys, &sys_real, seed.clone()) else {
            continue;
        };
        if g.scheme.gap(&x) <= T::lit(1e-9) {
            continue;
        }
        if !found.iter().any(|f| linalg::norm(&diff(f, &x)) < dedup_tol) {
            found.push(x);
        }
    }
    found.sort_by(|a, b| lex(a, b));
    Ok(found)
}

fn residual<T: Real>(v: &[T]) -> T {
    linalg::norm(v)
}

fn locate_global<T: Real>(field: &DesingField<T>, opts: &SearchOptions<T>) -> Result<Vec<Vec<T>>> {
    let sc = &field.scheme;
    let system = |x: &[Dual<T>]| -> Result<Vec<Dual<T>>> {
        let mut r = field.horizon_field(x)?;
        r.push(sc.energy(x) - Dual::constant(T::one()));
        Ok(r)
    };
    let system_real = |x: &[T]| -> Result<Vec<T>> {
        let mut r = field.horizon_field(x)?;
        r.push(sc.energy(x) - T::one());
        Ok(r)
    };
    let mut found: Vec<Vec<T>> = Vec::new();
    for seed in sc.horizon_seeds(opts.seeds) {
        let Some(x) = gauss_newton(&system, &system_real, seed) else {
            continue;
        };
        let x = sc.project_to_horizon(&x);
        if residual(&field.horizon_field(&x)?) > opts.residual_tol {
            continue;
        }
        for cand in [x.clone(), sc.iota(&x)] {
            if residual(&field.horizon_field(&cand)?) <= opts.residual_tol
                && !found
                    .iter()
                    .any(|f| linalg::norm(&diff(f, &cand)) < opts.dedup_tol)
            {
                found.push(cand);
            }
        }
    }
    found.sort_by(|a, b| lex(a, b));
    Ok(found)
}

fn locate_directional<T: Real>(
    field: &DesingField<T>,
    opts: &SearchOptions<T>,
) -> Result<Vec<Vec<T>>> {
    if field.dim() != 2 {
        return Err(Error::Unsupported(
            "directional search implemented for n = 2".into(),
        ));
    }
    let (lo, hi) = opts
        .theta_range
        .ok_or_else(|| Error::Invalid("directional search needs a seed interval".into()))?;
    let g =
        |th: Dual<T>| -> Result<Dual<T>> { Ok(field.eval(&[Dual::constant(T::zero()), th])?[1]) };
    let mut found: Vec<T> = Vec::new();
    for m in 0..opts.seeds {
        let mut th = lo + (hi - lo) * T::int(m as i64) / T::int(opts.seeds.max(2) as i64 - 1);
        let mut ok = false;
        for _ in 0..60 {
            let Ok(v) = g(Dual::variable(th)) else { break };
            if !v.re.is_finite() || v.eps == T::zero() {
                break;
            }
            let step = v.re / v.eps;
            th = th - step;
            if step.abs() < T::lit(1e-15) * T::one().max(th.abs()) {
                ok = true;
                break;
            }
        }
        if ok
            && th.is_finite()
            && g(Dual::constant(th))?.re.abs() <= opts.residual_tol
            && !found.iter().any(|f| (*f - th).abs() < opts.dedup_tol)
        {
            found.push(th);
        }
    }
    found.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    found
        .into_iter()
        .map(|th| field.to_global(&[T::zero(), th]))
        .collect()
}

fn diff<T: Real>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

fn lex<T: Real>(a: &[T], b: &[T]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y) {
            Some(std::cmp::Ordering::Equal) | None => continue,
            Some(o) => return o,
        }
    }
    std::cmp::Ordering::Equal
}

type DualMap<'a, T> = &'a dyn Fn(&[Dual<T>]) -> Result<Vec<Dual<T>>>;

/// Damped Gauss–Newton on an over-determined system.
fn gauss_newton<T: Real>(
    f: DualMap<'_, T>,
    fr: &dyn Fn(&[T]) -> Result<Vec<T>>,
    mut x: Vec<T>,
) -> Option<Vec<T>> {
    let mut r = fr(&x).ok()?;
    let mut rn = residual(&r);
    for _ in 0..100 {
        if rn < T::lit(1e-14) {
            return Some(x);
        }
        let jac = linalg::jacobian_dual(f, &x).ok()?;
        let neg: Vec<T> = r.iter().map(|&v| -v).collect();
        let dx = linalg::least_squares(&jac, &neg).ok()?;
        let mut lam = T::one();
        let mut improved = false;
        while lam > T::lit(1e-6) {
            let xn: Vec<T> = x.iter().zip(&dx).map(|(&a, &d)| a + lam * d).collect();
            if let Ok(rr) = fr(&xn) {
                let rrn = residual(&rr);
                if rrn < rn {
                    x = xn;
                    r = rr;
                    rn = rrn;
                    improved = true;
                    break;
                }
            }
            lam = lam * T::lit(0.5);
        }
        let dxn = linalg::norm(&dx);
        if !improved || dxn < T::lit(1e-15) {
            return (rn < T::lit(1e-10)).then_some(x);
        }
    }
    (rn < T::lit(1e-10)).then_some(x)
}

/// Stability of a periodic orbit on the horizon.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CycleStability {
    Attracting,
    Repelling,
    Neutral,
}

/// Floquet data of the horizon viewed as a periodic orbit (quasi-polar chart).
#[derive(Clone, Debug)]
pub struct HorizonCycle<T> {
    /// Period of the angle variable.
    pub period_theta: T,
    /// Period in the desingularized time.
    pub period_tau: T,
    /// `α(T) = ∫₀ᵀ ∂ᵣgᵣ(0,θ) / g_θ(0,θ) dθ`.
    pub alpha_integral: T,
    /// `e^{α(T)}`: radial contraction per revolution in the direction of increasing angle.
    pub angular_multiplier: T,
    /// Forward-time radial multiplier per revolution.
    pub multiplier: T,
    pub stability: CycleStability,
    /// Relative mismatch between the multiplier and a direct one-revolution integration.
    pub return_map_residual: T,
}

/// Analyzes the horizon as a periodic orbit in the quasi-polar chart.
pub fn horizon_cycle_analysis<T: Real>(
    field: &DesingField<T>,
    section: T,
) -> Result<HorizonCycle<T>> {
    let f = field.in_chart(Chart::QuasiPolar)?;
    let trig = f
        .trig()
        .cloned()
        .ok_or_else(|| Error::Chart("missing table".into()))?;
    let period = trig.period();
    let parts = |th: T| -> Result<(T, T)> {
        let (sigma, dth) = f.chart_parts(T::zero(), &[th])?;
        let o = if f.is_reversed() { -T::one() } else { T::one() };
        Ok((o * sigma, o * dth[0]))
    };
    let samples = 1024;
    let mut min_abs = T::infinity();
    let mut sign = T::zero();
    for i in 0..samples {
        let th = period * T::int(i) / T::int(samples);
        let (_, d) = parts(th)?;
        if sign == T::zero() {
            sign = d.signum();
        } else if d.signum() != sign {
            return Err(Error::Unsupported(
                "angular velocity changes sign: horizon carries equilibria".into(),
            ));
        }
        min_abs = min_abs.min(d.abs());
    }
    if min_abs < T::lit(1e-8) {
        return Err(Error::Unsupported(
            "angular velocity vanishes on the horizon".into(),
        ));
    }
    let tol = T::lit(1e-13).max(T::epsilon() * T::lit(100.0));
    let integrand = |th: T| parts(th).map(|(sigma, d)| -sigma / d).unwrap_or(T::nan());
    let (alpha_integral, _) = quadrature::integrate(integrand, T::zero(), period, tol, 4000)?;
    let (period_tau, _) = quadrature::integrate(
        |th: T| {
            parts(th)
                .map(|(_, d)| T::one() / d.abs())
                .unwrap_or(T::nan())
        },
        T::zero(),
        period,
        tol,
        4000,
    )?;
    let log_mult = sign * alpha_integral;
    let multiplier = log_mult.exp();
    let stability = if log_mult < -T::lit(1e-10) {
        CycleStability::Attracting
    } else if log_mult > T::lit(1e-10) {
        CycleStability::Repelling
    } else {
        CycleStability::Neutral
    };
    let direct = one_revolution_log_multiplier(&f, section, period, sign)?;
    let return_map_residual = ((direct - log_mult).exp() - T::one()).abs();
    Ok(HorizonCycle {
        period_theta: period,
        period_tau,
        alpha_integral,
        angular_multiplier: alpha_integral.exp(),
        multiplier,
        stability,
        return_map_residual,
    })
}

/// Integrates `(ln s, θ)` from `s₀ = 1e−10` for one revolution and returns `ln(s₁/s₀)`.
fn one_revolution_log_multiplier<T: Real>(
    f: &DesingField<T>,
    section: T,
    period: T,
    sign: T,
) -> Result<T> {
    let s0 = T::lit(1e-10);
    let rhs = |_t: T, y: &[T], dy: &mut [T]| -> Result<()> {
        let s = y[0].exp();
        let (sigma, dth) = f.chart_parts(s, &y[1..2])?;
        let o = if f.is_reversed() { -T::one() } else { T::one() };
        dy[0] = -o * sigma;
        dy[1] = o * dth[0];
        Ok(())
    };
    let tol = T::lit(1e-12).max(T::epsilon() * T::lit(100.0));
    let opts = OdeOptions {
        rtol: tol,
        atol: tol,
        ..OdeOptions::default()
    };
    let target = section + sign * period;
    let mut st = Stepper::new(&rhs, T::zero(), vec![s0.ln(), section], opts)?;
    let big = T::lit(1e6);
    loop {
        let prev_t = st.t;
        let step = st.step(big)?;
        let th1 = step.y1[1];
        if (th1 - target) * sign >= T::zero() {
            let te = ode::locate_event(
                &step.dense,
                prev_t,
                step.t1,
                |y| (y[1] - target) * sign,
                T::lit(1e-14),
            );
            let y = step.dense.eval(te);
            // One Newton correction in time using the exact angular velocity.
            let mut dy = vec![T::zero(); 2];
            rhs(te, &y, &mut dy)?;
            let dt = (target - y[1]) / dy[1];
            return Ok(y[0] + dy[0] * dt - s0.ln());
        }
        if st.t >= big {
            return Err(Error::NotConverged("no return to the section".into()));
        }
    }
}

/// Chart for a hyperplane at `index` with the sign of `x[index]`.
pub fn covering_chart<T: Real>(x: &[T], index: usize) -> Chart {
    Chart::Directional {
        index,
        sign: Sign::of(x[index]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classification_counts() {
        let ev = [Complex::new(-1.0, 0.0), Complex::new(2.0, 0.0)];
        let c = classify(&ev, 1e-8);
        assert_eq!((c.kind, c.n_s, c.n_u, c.n_c), (Stability::Saddle, 1, 1, 0));
        let c = classify(&[Complex::new(0.0, 1.0), Complex::new(0.0, -1.0)], 1e-8);
        assert_eq!(c.kind, Stability::NonHyperbolic);
    }

    #[test]
    fn exponents_need_hyperbolicity() {
        let c = classify(&[Complex::new(0.0, 0.0)], 1e-8);
        assert!(predict_blowup_exponents(&[1], 1, &[1.0], &c).is_err());
    }

    #[test]
    fn exponents_skip_vanishing_components() {
        let c = classify(&[Complex::new(-1.0, 0.0), Complex::new(-2.0, 0.0)], 1e-8);
        let e = predict_blowup_exponents(&[1, 2], 1, &[1.0, 0.0], &c).unwrap();
        assert_eq!(e.components, vec![Some(Ratio::new(-1, 1)), None]);
        assert_eq!(e.norm, Ratio::new(-1, 1));
    }
}
