//! Trajectory integration of desingularized fields, blow-up time estimation
//! with tail extrapolation, blow-up rate fitting and parallel portrait sweeps.

use crate::compactify::HORIZON_TOL;
use crate::desing::{Chart, DesingField};
use crate::error::{Error, Result};
use crate::linalg;
use crate::ode::{OdeOptions, Stepper};
use crate::scalar::Real;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Why an integration stopped.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Termination {
    ReachedTauLimit,
    ConvergedToEquilibrium(usize),
    ConvergedToCycle,
    LeftDomain,
    StepFailure(String),
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Termination::ReachedTauLimit => write!(f, "reached-tau-limit"),
            Termination::ConvergedToEquilibrium(i) => write!(f, "converged-to-equilibrium({i})"),
            Termination::ConvergedToCycle => write!(f, "converged-to-cycle"),
            Termination::LeftDomain => write!(f, "left-domain"),
            Termination::StepFailure(m) => write!(f, "step-failure({m})"),
        }
    }
}

/// A registered limit set, in the coordinates of the integration chart.
#[derive(Clone, Debug, PartialEq)]
pub enum Target<T> {
    /// Equilibrium; `at_infinity` marks points on the horizon.
    Equilibrium { state: Vec<T>, at_infinity: bool },
    /// The horizon itself, carrying a periodic orbit.
    HorizonCycle,
}

/// Integration controls.
#[derive(Clone, Debug)]
pub struct FlowOptions<T> {
    pub rtol: T,
    pub atol: T,
    pub tau_max: T,
    pub max_step: T,
    pub targets: Vec<Target<T>>,
    /// Convergence radius in chart coordinates.
    pub stop_radius: T,
    /// Stop near an infinite target once the remaining physical time falls below this.
    pub time_floor: T,
    /// Stop as soon as a target's radius is entered (portrait mode).
    pub stop_on_target: bool,
    /// Radius of the window used for the tail-rate regression.
    pub engage_radius: T,
}

impl<T: Real> Default for FlowOptions<T> {
    fn default() -> Self {
        FlowOptions {
            rtol: T::lit(1e-10),
            atol: T::lit(1e-12),
            tau_max: T::lit(1e3),
            max_step: T::lit(0.25),
            targets: Vec::new(),
            stop_radius: T::lit(1e-9),
            time_floor: T::lit(1e-14),
            stop_on_target: false,
            engage_radius: T::lit(1e-4),
        }
    }
}

/// One accepted step.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample<T> {
    pub tau: T,
    /// Elapsed physical time (in the direction of integration).
    pub t: T,
    /// Physical time increment of the step ending here.
    pub dt: T,
    /// Chart coordinates (`x` globally, `(s, θ)` in charts).
    pub state: Vec<T>,
    /// `ln w` (global chart) or `ln s` (charts); `−∞` on the horizon.
    pub log_radial: T,
}

/// Integrated orbit of a desingularized field.
#[derive(Clone, Debug)]
pub struct Trajectory<T> {
    pub chart: Chart,
    pub reversed: bool,
    pub samples: Vec<Sample<T>>,
    pub termination: Termination,
}

impl<T: Real> Trajectory<T> {
    pub fn last(&self) -> &Sample<T> {
        self.samples
            .last()
            .expect("trajectory has at least the initial sample")
    }

    pub fn on_horizon(&self) -> bool {
        self.samples
            .first()
            .is_some_and(|s| s.log_radial == T::neg_infinity())
    }
}

fn dist<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .fold(T::zero(), |s, (&x, &y)| s + (x - y) * (x - y))
        .sqrt()
}

struct Layout {
    n: usize,
    global: bool,
    horizon: bool,
}

impl Layout {
    /// Index of the physical-time component.
    fn t_index(&self) -> usize {
        if self.horizon {
            if self.global {
                self.n
            } else {
                self.n - 1
            }
        } else if self.global {
            self.n + 1
        } else {
            self.n
        }
    }
}

/// Converts the ODE state back to chart coordinates and `log_radial`.
fn unpack<T: Real>(lay: &Layout, y: &[T]) -> (Vec<T>, T) {
    match (lay.global, lay.horizon) {
        (true, false) => (y[..lay.n].to_vec(), y[lay.n]),
        (true, true) => (y[..lay.n].to_vec(), T::neg_infinity()),
        (false, false) => {
            let mut st = vec![y[0].exp()];
            st.extend_from_slice(&y[1..lay.n]);
            (st, y[0])
        }
        (false, true) => {
            let mut st = vec![T::zero()];
            st.extend_from_slice(&y[..lay.n - 1]);
            (st, T::neg_infinity())
        }
    }
}

/// `dt/dτ` from the log-radial quantity.
pub fn time_rate<T: Real>(field: &DesingField<T>, log_radial: T) -> T {
    if log_radial == T::neg_infinity() {
        return T::zero();
    }
    let k = T::int(field.scheme.k as i64);
    match field.chart {
        Chart::Global => (k / T::int(2 * field.scheme.c as i64) * log_radial).exp(),
        _ => (k * log_radial).exp(),
    }
}

/// Instantaneous decay rate of `ln(dt/dτ)` (positive when approaching the horizon).
pub fn time_decay_rate<T: Real>(field: &DesingField<T>, state: &[T], log_radial: T) -> Result<T> {
    let k = T::int(field.scheme.k as i64);
    match field.chart {
        Chart::Global => {
            let w = if log_radial == T::neg_infinity() {
                T::zero()
            } else {
                log_radial.exp()
            };
            let r = field.gap_log_rate(state, w)?;
            Ok(-r * k / T::int(2 * field.scheme.c as i64))
        }
        _ => {
            let (sigma, _) = field.chart_parts(state[0], &state[1..])?;
            let o = if field.is_reversed() {
                -T::one()
            } else {
                T::one()
            };
            Ok(k * o * sigma)
        }
    }
}

/// Integrates `field` from the chart state `start`.
pub fn integrate<T: Real>(
    field: &DesingField<T>,
    start: &[T],
    opts: &FlowOptions<T>,
) -> Result<Trajectory<T>> {
    let n = field.dim();
    if start.len() != n {
        return Err(Error::Invalid(format!(
            "initial state has {} entries, expected {n}",
            start.len()
        )));
    }
    let global = field.chart == Chart::Global;
    let (horizon, y0) = if global {
        let w = field.scheme.gap(start);
        if w < -T::lit(1e-9) {
            return Err(Error::Domain(
                "initial point lies outside the compactified ball".into(),
            ));
        }
        if w.abs() <= T::lit(HORIZON_TOL) {
            let mut y = start.to_vec();
            y.push(T::zero());
            (true, y)
        } else {
            let mut y = start.to_vec();
            y.push(w.ln());
            y.push(T::zero());
            (false, y)
        }
    } else {
        let s = start[0];
        if s < T::zero() {
            return Err(Error::Domain("negative radial coordinate".into()));
        }
        if s == T::zero() {
            let mut y = start[1..].to_vec();
            y.push(T::zero());
            (true, y)
        } else {
            let mut y = vec![s.ln()];
            y.extend_from_slice(&start[1..]);
            y.push(T::zero());
            (false, y)
        }
    };
    let lay = Layout { n, global, horizon };
    let ti = lay.t_index();
    let o = if field.is_reversed() {
        -T::one()
    } else {
        T::one()
    };
    let rhs = |_tau: T, y: &[T], dy: &mut [T]| -> Result<()> {
        match (global, horizon) {
            (true, false) => {
                let x = &y[..n];
                let w = y[n].exp();
                let (g, s) = field.global_with_gap(x, w)?;
                for i in 0..n {
                    dy[i] = o * g[i];
                }
                dy[n] = o * T::lit(-2.0) * s;
                dy[n + 1] = time_rate(field, y[n]);
            }
            (true, true) => {
                let g = field.horizon_field(&y[..n])?;
                for i in 0..n {
                    dy[i] = o * g[i];
                }
                dy[n] = T::zero();
            }
            (false, false) => {
                let (sigma, th) = field.chart_parts(y[0].exp(), &y[1..n])?;
                dy[0] = -o * sigma;
                for i in 1..n {
                    dy[i] = o * th[i - 1];
                }
                dy[n] = time_rate(field, y[0]);
            }
            (false, true) => {
                let (_, th) = field.chart_parts(T::zero(), &y[..n - 1])?;
                for i in 0..n - 1 {
                    dy[i] = o * th[i];
                }
                dy[n - 1] = T::zero();
            }
        }
        Ok(())
    };
    let ode_opts = OdeOptions {
        rtol: opts.rtol,
        atol: opts.atol,
        h_max: opts.max_step,
        uncontrolled: vec![ti],
        ..OdeOptions::default()
    };
    let (st0, lr0) = unpack(&lay, &y0);
    let mut samples = vec![Sample {
        tau: T::zero(),
        t: T::zero(),
        dt: T::zero(),
        state: st0,
        log_radial: lr0,
    }];
    let mut stepper = match Stepper::new(&rhs, T::zero(), y0, ode_opts) {
        Ok(s) => s,
        Err(e) => {
            return Ok(Trajectory {
                chart: field.chart,
                reversed: field.is_reversed(),
                samples,
                termination: Termination::StepFailure(e.to_string()),
            })
        }
    };
    // Compensated summation of physical time.
    let (mut t_sum, mut t_comp) = (T::zero(), T::zero());
    let termination = loop {
        if stepper.t >= opts.tau_max {
            break Termination::ReachedTauLimit;
        }
        let step = match stepper.step(opts.tau_max) {
            Ok(s) => s,
            Err(e) => break Termination::StepFailure(e.to_string()),
        };
        let dt = step.increment[ti];
        let yk = dt - t_comp;
        let tn = t_sum + yk;
        t_comp = (tn - t_sum) - yk;
        t_sum = tn;
        let (mut state, log_radial) = unpack(&lay, &step.y1);
        if global && horizon && state.iter().all(|v| v.is_finite()) {
            // Keep horizon orbits on {p = 1}: the horizon may be transversally unstable.
            state = field.scheme.project_to_horizon(&state);
            let mut y = state.clone();
            y.push(step.y1[n]);
            if let Err(e) = stepper.set_state(y) {
                samples.push(Sample {
                    tau: step.t1,
                    t: t_sum,
                    dt,
                    state,
                    log_radial,
                });
                break Termination::StepFailure(e.to_string());
            }
        }
        samples.push(Sample {
            tau: step.t1,
            t: t_sum,
            dt,
            state: state.clone(),
            log_radial,
        });
        if state.iter().any(|v| !v.is_finite()) {
            break Termination::StepFailure("non-finite state".into());
        }
        if global {
            if field.scheme.energy(&state) > T::one() + T::lit(1e-6) {
                break Termination::LeftDomain;
            }
        } else if state[0] > T::lit(1e6) || state[1..].iter().any(|v| v.abs() > T::lit(1e6)) {
            break Termination::LeftDomain;
        }
        if let Some(term) = check_targets(field, opts, &state, log_radial)? {
            break term;
        }
    };
    Ok(Trajectory {
        chart: field.chart,
        reversed: field.is_reversed(),
        samples,
        termination,
    })
}

fn check_targets<T: Real>(
    field: &DesingField<T>,
    opts: &FlowOptions<T>,
    state: &[T],
    log_radial: T,
) -> Result<Option<Termination>> {
    for (id, target) in opts.targets.iter().enumerate() {
        match target {
            Target::Equilibrium {
                state: p,
                at_infinity,
            } => {
                if dist(state, p) >= opts.stop_radius {
                    continue;
                }
                if opts.stop_on_target || !at_infinity || log_radial == T::neg_infinity() {
                    return Ok(Some(Termination::ConvergedToEquilibrium(id)));
                }
                let lam = time_decay_rate(field, state, log_radial)?;
                if lam > T::zero() && time_rate(field, log_radial) / lam < opts.time_floor {
                    return Ok(Some(Termination::ConvergedToEquilibrium(id)));
                }
            }
            Target::HorizonCycle => {
                if log_radial == T::neg_infinity() {
                    continue;
                }
                let near = match field.chart {
                    Chart::Global => log_radial < T::lit(1e-8).ln(),
                    _ => log_radial < T::lit(1e-4).ln(),
                };
                if near && (opts.stop_on_target || time_rate(field, log_radial) < opts.time_floor) {
                    return Ok(Some(Termination::ConvergedToCycle));
                }
            }
        }
    }
    Ok(None)
}

/// Blow-up time estimate with tail extrapolation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlowupEstimate<T> {
    pub t_max: T,
    /// Physical time accumulated up to the last sample.
    pub t_last: T,
    /// Extrapolated remaining time `φ_N / λ`.
    pub tail: T,
    pub tail_bound: T,
    /// Regressed decay rate of `ln(dt/dτ)`.
    pub decay_rate: T,
    /// Index of the sample the tail starts from.
    pub last_index: usize,
}

/// Estimates `t_max` from a trajectory converged to an infinite target.
pub fn estimate_tmax<T: Real>(
    field: &DesingField<T>,
    traj: &Trajectory<T>,
    opts: &FlowOptions<T>,
) -> Result<BlowupEstimate<T>> {
    let target = match &traj.termination {
        Termination::ConvergedToEquilibrium(id) => match opts.targets.get(*id) {
            Some(
                t @ Target::Equilibrium {
                    at_infinity: true, ..
                },
            ) => t.clone(),
            Some(_) => {
                return Err(Error::Unsupported(
                    "target is a finite equilibrium: no blow-up".into(),
                ))
            }
            None => return Err(Error::Invalid("unknown target id".into())),
        },
        Termination::ConvergedToCycle => Target::HorizonCycle,
        other => {
            return Err(Error::NotConverged(format!(
                "trajectory terminated with {other}"
            )))
        }
    };
    if traj.on_horizon() {
        return Err(Error::Unsupported("trajectory lies on the horizon".into()));
    }
    let last_index = traj.samples.len() - 1;
    let last = &traj.samples[last_index];
    let phi_n = time_rate(field, last.log_radial);
    let lam_end = time_decay_rate(field, &last.state, last.log_radial)?;
    let log_phi = |s: &Sample<T>| -> T {
        let k = T::int(field.scheme.k as i64);
        match field.chart {
            Chart::Global => k / T::int(2 * field.scheme.c as i64) * s.log_radial,
            _ => k * s.log_radial,
        }
    };
    let window: Vec<&Sample<T>> = match &target {
        Target::Equilibrium { state, .. } => {
            let start = traj
                .samples
                .iter()
                .rposition(|s| dist(&s.state, state) > opts.engage_radius)
                .map_or(0, |i| i + 1);
            traj.samples[start..].iter().collect()
        }
        Target::HorizonCycle => {
            let lp_n = log_phi(last);
            let span = T::lit(4.0) * T::lit(10.0).ln();
            let start = traj
                .samples
                .iter()
                .rposition(|s| log_phi(s) - lp_n > span)
                .map_or(0, |i| i + 1);
            traj.samples[start..].iter().collect()
        }
    };
    let lam_reg = if window.len() >= 3 {
        let xs: Vec<T> = window.iter().map(|s| s.tau).collect();
        let ys: Vec<T> = window.iter().map(|s| log_phi(s)).collect();
        -linear_fit(&xs, &ys).0
    } else {
        lam_end
    };
    let lam = if lam_reg > T::zero() {
        lam_reg
    } else {
        lam_end
    };
    if !(lam > T::zero()) {
        return Err(Error::NotConverged(
            "time rescaling does not decay along the trajectory".into(),
        ));
    }
    let tail = phi_n / lam;
    let rel = if matches!(target, Target::HorizonCycle) {
        // The instantaneous rate oscillates around a cycle; bound by the full relative spread.
        T::one()
    } else {
        ((lam - lam_end) / lam_end).abs()
    };
    let tail_bound = tail * rel + last.t * T::epsilon() * T::lit(4.0);
    Ok(BlowupEstimate {
        t_max: last.t + tail,
        t_last: last.t,
        tail,
        tail_bound,
        decay_rate: lam,
        last_index,
    })
}

/// Remaining physical time `t_max − t(τᵢ)` at every sample.
pub fn remaining_times<T: Real>(traj: &Trajectory<T>, est: &BlowupEstimate<T>) -> Vec<T> {
    let m = est.last_index + 1;
    let mut out = vec![T::zero(); m];
    let (mut sum, mut comp) = (est.tail, T::zero());
    out[m - 1] = sum;
    for i in (0..m - 1).rev() {
        let yk = traj.samples[i + 1].dt - comp;
        let tn = sum + yk;
        comp = (tn - sum) - yk;
        sum = tn;
        out[i] = sum;
    }
    out
}

/// Least-squares line `y ≈ slope·x + intercept`; returns `(slope, intercept, rms)`.
pub fn linear_fit<T: Real>(xs: &[T], ys: &[T]) -> (T, T, T) {
    let m = T::int(xs.len() as i64);
    let mx = xs.iter().fold(T::zero(), |s, &x| s + x) / m;
    let my = ys.iter().fold(T::zero(), |s, &y| s + y) / m;
    let (mut sxx, mut sxy) = (T::zero(), T::zero());
    for (&x, &y) in xs.iter().zip(ys) {
        sxx = sxx + (x - mx) * (x - mx);
        sxy = sxy + (x - mx) * (y - my);
    }
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let rms = (xs.iter().zip(ys).fold(T::zero(), |s, (&x, &y)| {
        let r = y - (slope * x + icpt);
        s + r * r
    }) / m)
        .sqrt();
    (slope, icpt, rms)
}

/// Fitted blow-up exponents.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit<T> {
    pub norm_exponent: T,
    /// `None` where the component stays bounded or is excluded.
    pub component_exponents: Vec<Option<T>>,
    pub residual: T,
    pub samples: usize,
    pub span_decades: T,
}

/// `ln p(y)` and `ln|yᵢ|` of a sample, computed from the chart without overflow.
pub fn log_physical<T: Real>(field: &DesingField<T>, s: &Sample<T>) -> Result<(T, Vec<T>)> {
    let sc = &field.scheme;
    let two_c = T::int(2 * sc.c as i64);
    let (profile, log_scale) = match field.chart {
        // y = x · w^{−α/2c}
        Chart::Global => (s.state.clone(), -s.log_radial / two_c),
        // y = h / s^α
        _ => (field.profile(&s.state[1..])?, -s.log_radial),
    };
    let ln_p = sc.energy(&profile).ln() / two_c + log_scale;
    let comps = profile
        .iter()
        .zip(&sc.alpha)
        .map(|(&h, &a)| h.abs().ln() + T::int(a as i64) * log_scale)
        .collect();
    Ok((ln_p, comps))
}

/// Fits `ln p(y)` and `ln|yᵢ|` against `ln(t_max − t)` over the window
/// `[lo, hi]` of remaining times.
pub fn fit_blowup_rate<T: Real>(
    field: &DesingField<T>,
    traj: &Trajectory<T>,
    est: &BlowupEstimate<T>,
    window: (T, T),
) -> Result<RateFit<T>> {
    let rem = remaining_times(traj, est);
    let idx: Vec<usize> = (0..rem.len())
        .filter(|&i| rem[i] >= window.0 && rem[i] <= window.1)
        .collect();
    let cycle = traj.termination == Termination::ConvergedToCycle;
    let idx = if cycle {
        envelope(field, traj, &rem, &idx)?
    } else {
        idx
    };
    let need = if cycle { 5 } else { 30 };
    if idx.len() < need {
        return Err(Error::NotConverged(format!(
            "only {} samples in the fit window",
            idx.len()
        )));
    }
    let xs: Vec<T> = idx.iter().map(|&i| rem[i].ln()).collect();
    let lo = xs.iter().fold(T::infinity(), |m, &x| m.min(x));
    let hi = xs.iter().fold(T::neg_infinity(), |m, &x| m.max(x));
    let span = (hi - lo) / T::lit(10.0).ln();
    if span < T::lit(2.0) {
        return Err(Error::NotConverged(
            "fit window spans fewer than two decades".into(),
        ));
    }
    let logs: Vec<(T, Vec<T>)> = idx
        .iter()
        .map(|&i| log_physical(field, &traj.samples[i]))
        .collect::<Result<_>>()?;
    let ys: Vec<T> = logs.iter().map(|l| l.0).collect();
    let (norm_exponent, _, residual) = linear_fit(&xs, &ys);
    let last_state = &traj.last().state;
    let x_last = field
        .to_global(last_state)
        .unwrap_or_else(|_| last_state.clone());
    let component_exponents = (0..field.dim())
        .map(|c| {
            if field.scheme.alpha[c] == 0 || cycle || x_last[c].abs() < T::lit(1e-8) {
                return None;
            }
            let yc: Vec<T> = logs.iter().map(|l| l.1[c]).collect();
            Some(linear_fit(&xs, &yc).0)
        })
        .collect();
    Ok(RateFit {
        norm_exponent,
        component_exponents,
        residual,
        samples: idx.len(),
        span_decades: span,
    })
}

/// One sample per revolution: the maximum of `ln p(y) + ln(t_max − t)/k`
/// (the oscillating prefactor) within each turn of the angle in the global plane.
fn envelope<T: Real>(
    field: &DesingField<T>,
    traj: &Trajectory<T>,
    rem: &[T],
    idx: &[usize],
) -> Result<Vec<usize>> {
    if field.dim() != 2 {
        return Ok(idx.to_vec());
    }
    let k = T::int(field.scheme.k as i64);
    let mut out = Vec::new();
    let turn_of = |i: usize| -> Result<T> {
        let x = field.to_global(&traj.samples[i].state)?;
        Ok(x[1].atan2(x[0]))
    };
    let mut prev_angle: Option<T> = None;
    let mut unwrapped = T::zero();
    let mut current: Option<(i64, usize, T)> = None;
    let two_pi = T::lit(2.0 * std::f64::consts::PI);
    for &i in idx {
        let a = turn_of(i)?;
        if let Some(p) = prev_angle {
            let mut d = a - p;
            while d > T::lit(std::f64::consts::PI) {
                d = d - two_pi;
            }
            while d < -T::lit(std::f64::consts::PI) {
                d = d + two_pi;
            }
            unwrapped = unwrapped + d;
        }
        prev_angle = Some(a);
        let turn = (unwrapped / two_pi).floor().to_i64().unwrap_or(0);
        let (lp, _) = log_physical(field, &traj.samples[i])?;
        let val = lp + rem[i].ln() / k;
        match current {
            Some((t, _, v)) if t == turn && v >= val => {}
            Some((t, _, _)) if t == turn => current = Some((turn, i, val)),
            Some((_, j, _)) => {
                out.push(j);
                current = Some((turn, i, val));
            }
            None => current = Some((turn, i, val)),
        }
    }
    // The final (possibly partial) revolution is dropped.
    Ok(out)
}

/// Result of one portrait seed.
#[derive(Clone, Debug)]
pub struct PortraitEntry<T> {
    pub seed: Vec<T>,
    pub trajectory: Trajectory<T>,
}

/// Integrates every seed in parallel; output order matches the input order.
pub fn sweep_portrait<T: Real>(
    field: &DesingField<T>,
    seeds: &[Vec<T>],
    opts: &FlowOptions<T>,
) -> Vec<PortraitEntry<T>> {
    seeds
        .par_iter()
        .map(|seed| {
            let trajectory = integrate(field, seed, opts).unwrap_or_else(|e| Trajectory {
                chart: field.chart,
                reversed: field.is_reversed(),
                samples: vec![Sample {
                    tau: T::zero(),
                    t: T::zero(),
                    dt: T::zero(),
                    state: seed.clone(),
                    log_radial: T::nan(),
                }],
                termination: Termination::StepFailure(e.to_string()),
            });
            PortraitEntry {
                seed: seed.clone(),
                trajectory,
            }
        })
        .collect()
}

/// Hausdorff distance between two polylines (vertex-to-segment).
pub fn hausdorff<T: Real>(a: &[Vec<T>], b: &[Vec<T>]) -> T {
    fn one_sided<T: Real>(a: &[Vec<T>], b: &[Vec<T>]) -> T {
        a.iter().fold(T::zero(), |m, p| {
            let d = if b.len() == 1 {
                dist(p, &b[0])
            } else {
                b.windows(2).fold(T::infinity(), |best, seg| {
                    best.min(point_segment(p, &seg[0], &seg[1]))
                })
            };
            m.max(d)
        })
    }
    one_sided(a, b).max(one_sided(b, a))
}

fn point_segment<T: Real>(p: &[T], a: &[T], b: &[T]) -> T {
    let ab: Vec<T> = a.iter().zip(b).map(|(&x, &y)| y - x).collect();
    let ap: Vec<T> = a.iter().zip(p).map(|(&x, &y)| y - x).collect();
    let l2 = ab.iter().fold(T::zero(), |s, &v| s + v * v);
    let t = if l2 > T::zero() {
        (ab.iter().zip(&ap).fold(T::zero(), |s, (&u, &v)| s + u * v) / l2)
            .max(T::zero())
            .min(T::one())
    } else {
        T::zero()
    };
    let proj: Vec<T> = a.iter().zip(&ab).map(|(&x, &d)| x + t * d).collect();
    linalg::norm(
        &p.iter()
            .zip(&proj)
            .map(|(&x, &y)| x - y)
            .collect::<Vec<_>>(),
    )
}

/// Jittered seed grid (deterministic for a given `seed`).
pub fn seed_grid<T: Real>(field: &DesingField<T>, count: usize, seed: u64) -> Vec<Vec<T>> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let n = field.dim();
    let side = (count as f64).powf(1.0 / n as f64).ceil().max(2.0) as usize;
    let mut out = Vec::new();
    let total = side.pow(n as u32);
    for m in 0..total {
        let mut idx = m;
        let mut v = Vec::with_capacity(n);
        for _ in 0..n {
            let cell = idx % side;
            idx /= side;
            let jitter: f64 = rng.random::<f64>() - 0.5;
            v.push(T::lit(
                -0.95 + 1.9 * (cell as f64 + 0.5 + 0.5 * jitter) / side as f64,
            ));
        }
        if field.scheme.energy(&v) < T::lit(0.98) {
            out.push(v);
        }
    }
    out
}

/// Outcome class of a blow-up run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BlowupStatus {
    /// Converged to an invariant set on the horizon in finite physical time.
    BlowUp,
    /// Stayed in the interior for the whole run.
    Bounded,
    /// Approached the horizon without converging to a registered target.
    Unclassified,
    /// Started on the horizon: the orbit lies at infinity for all time.
    OnHorizon,
}

/// Limit set a blow-up run converged to.
#[derive(Clone, Debug)]
#[allow(clippy::large_enum_variant)] // a handful per run; boxing buys nothing
pub enum BlowupTarget<T> {
    Equilibrium(crate::infinity::HorizonEquilibrium<T>),
    Cycle(crate::infinity::HorizonCycle<T>),
}

/// Full result of [`blowup`].
#[derive(Clone, Debug)]
pub struct BlowupReport<T> {
    pub status: BlowupStatus,
    pub trajectory: Trajectory<T>,
    pub target: Option<BlowupTarget<T>>,
    pub estimate: Option<BlowupEstimate<T>>,
    pub rate: Option<RateFit<T>>,
    /// Why the rate fit was skipped, if it was.
    pub rate_error: Option<String>,
}

/// Integration targets paired with the limit sets they stand for.
pub type TargetRegistry<T> = (Vec<Target<T>>, Vec<BlowupTarget<T>>);

/// Registers the horizon's invariant sets of `field` as targets in its chart:
/// hyperbolic equilibria, or the horizon itself when it is a periodic orbit.
pub fn horizon_targets<T: Real>(
    field: &DesingField<T>,
    search: &crate::infinity::SearchOptions<T>,
) -> Result<TargetRegistry<T>> {
    use crate::infinity::{find_horizon_equilibria, horizon_cycle_analysis};
    let eqs = find_horizon_equilibria(field, search)?;
    let mut targets = Vec::new();
    let mut info = Vec::new();
    if eqs.is_empty() && field.scheme.quasi_polar_order().is_some() {
        if let Ok(cycle) = horizon_cycle_analysis(field, T::zero()) {
            targets.push(Target::HorizonCycle);
            info.push(BlowupTarget::Cycle(cycle));
        }
        return Ok((targets, info));
    }
    for e in eqs {
        let state = if e.chart == field.chart {
            e.chart_location.clone()
        } else {
            match field.from_global(&e.location) {
                Ok(s) => s,
                // Not reachable from inside this chart.
                Err(Error::Chart(_)) => continue,
                Err(err) => return Err(err),
            }
        };
        targets.push(Target::Equilibrium {
            state,
            at_infinity: true,
        });
        info.push(BlowupTarget::Equilibrium(e));
    }
    Ok((targets, info))
}

/// Integrates from `start` (chart coordinates), detects convergence to the
/// horizon, estimates `t_max` and fits the blow-up rate.
pub fn blowup<T: Real>(
    field: &DesingField<T>,
    start: &[T],
    opts: &FlowOptions<T>,
    search: &crate::infinity::SearchOptions<T>,
) -> Result<BlowupReport<T>> {
    let (targets, info) = horizon_targets(field, search)?;
    let mut opts = opts.clone();
    opts.targets = targets;
    let trajectory = integrate(field, start, &opts)?;
    let last = trajectory.last();
    let near_horizon = last.log_radial < T::lit(1e-6).ln();
    let target_index = match trajectory.termination {
        Termination::ConvergedToEquilibrium(i) => Some(i),
        Termination::ConvergedToCycle => Some(0),
        _ => None,
    };
    if trajectory.on_horizon() {
        return Ok(BlowupReport {
            status: BlowupStatus::OnHorizon,
            trajectory,
            target: None,
            estimate: None,
            rate: None,
            rate_error: None,
        });
    }
    let Some(ti) = target_index else {
        let status = if near_horizon || trajectory.termination != Termination::ReachedTauLimit {
            BlowupStatus::Unclassified
        } else {
            BlowupStatus::Bounded
        };
        return Ok(BlowupReport {
            status,
            trajectory,
            target: None,
            estimate: None,
            rate: None,
            rate_error: None,
        });
    };
    let target = info.get(ti).cloned();
    let estimate = estimate_tmax(field, &trajectory, &opts)?;
    let (rate, rate_error) =
        match fit_blowup_rate(field, &trajectory, &estimate, (T::lit(1e-8), T::lit(1e-2))) {
            Ok(r) => (Some(r), None),
            Err(e) => (None, Some(e.to_string())),
        };
    Ok(BlowupReport {
        status: BlowupStatus::BlowUp,
        trajectory,
        target,
        estimate: Some(estimate),
        rate,
        rate_error,
    })
}
