//! Adaptive Dormand–Prince 5(4) integrator with PI step control and
//! fourth-order dense output.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Integration tolerances and step limits.
#[derive(Clone, Debug)]
pub struct OdeOptions<T> {
    pub rtol: T,
    pub atol: T,
    pub h_init: Option<T>,
    pub h_max: T,
    pub h_min: T,
    pub max_steps: usize,
    /// Components excluded from error control (e.g. accumulated quadratures).
    pub uncontrolled: Vec<usize>,
}

impl<T: Real> Default for OdeOptions<T> {
    fn default() -> Self {
        OdeOptions {
            rtol: T::lit(1e-10),
            atol: T::lit(1e-12),
            h_init: None,
            h_max: T::infinity(),
            h_min: T::lit(1e-14),
            max_steps: 1_000_000,
            uncontrolled: Vec::new(),
        }
    }
}

/// Continuous extension over one accepted step.
#[derive(Clone, Debug)]
pub struct Dense<T> {
    pub t0: T,
    pub h: T,
    rc: [Vec<T>; 5],
}

impl<T: Real> Dense<T> {
    pub fn eval(&self, t: T) -> Vec<T> {
        let th = (t - self.t0) / self.h;
        let th1 = T::one() - th;
        (0..self.rc[0].len())
            .map(|i| {
                let [r1, r2, r3, r4, r5] = &self.rc;
                r1[i] + th * (r2[i] + th1 * (r3[i] + th * (r4[i] + th1 * r5[i])))
            })
            .collect()
    }
}

/// One accepted step: end point, exact increment `y1 − y0` and dense output.
#[derive(Clone, Debug)]
pub struct Step<T> {
    pub t1: T,
    pub y1: Vec<T>,
    pub increment: Vec<T>,
    pub dense: Dense<T>,
}

pub type Rhs<'a, T> = dyn Fn(T, &[T], &mut [T]) -> Result<()> + Sync + 'a;

/// Stateful stepper; call [`Stepper::step`] repeatedly.
pub struct Stepper<'a, T: Real> {
    f: &'a Rhs<'a, T>,
    opts: OdeOptions<T>,
    pub t: T,
    pub y: Vec<T>,
    k1: Vec<T>,
    h: T,
    facold: T,
    pub accepted: usize,
    pub rejected: usize,
    controlled: Vec<bool>,
}

fn c<T: Real>(x: f64) -> T {
    T::lit(x)
}

impl<'a, T: Real> Stepper<'a, T> {
    pub fn new(f: &'a Rhs<'a, T>, t0: T, y0: Vec<T>, opts: OdeOptions<T>) -> Result<Self> {
        let n = y0.len();
        if y0.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("non-finite initial state".into()));
        }
        let mut k1 = vec![T::zero(); n];
        f(t0, &y0, &mut k1)?;
        check_finite(&k1)?;
        let mut controlled = vec![true; n];
        for &i in &opts.uncontrolled {
            if i < n {
                controlled[i] = false;
            }
        }
        let mut s = Stepper {
            f,
            opts,
            t: t0,
            y: y0,
            k1,
            h: T::zero(),
            facold: c(1e-4),
            accepted: 0,
            rejected: 0,
            controlled,
        };
        s.h = match s.opts.h_init {
            Some(h) => h,
            None => s.initial_step()?,
        };
        Ok(s)
    }

    fn scale(&self, a: T, b: T) -> T {
        self.opts.atol + self.opts.rtol * a.abs().max(b.abs())
    }

    fn wnorm(&self, v: &[T], y: &[T]) -> T {
        let mut s = T::zero();
        let mut m = 0;
        for i in 0..v.len() {
            if self.controlled[i] {
                let q = v[i] / self.scale(y[i], y[i]);
                s = s + q * q;
                m += 1;
            }
        }
        (s / T::int(m.max(1) as i64)).sqrt()
    }

    fn initial_step(&self) -> Result<T> {
        let d0 = self.wnorm(&self.y, &self.y);
        let d1 = self.wnorm(&self.k1, &self.y);
        let mut h0 = if d0 < c(1e-5) || d1 < c(1e-5) {
            c(1e-6)
        } else {
            c::<T>(0.01) * d0 / d1
        };
        h0 = h0.min(self.opts.h_max);
        let y1: Vec<T> = self
            .y
            .iter()
            .zip(&self.k1)
            .map(|(&y, &k)| y + h0 * k)
            .collect();
        let mut f1 = vec![T::zero(); self.y.len()];
        if (self.f)(self.t + h0, &y1, &mut f1).is_err() || check_finite(&f1).is_err() {
            return Ok(h0 * c(1e-3));
        }
        let diff: Vec<T> = f1.iter().zip(&self.k1).map(|(&a, &b)| a - b).collect();
        let d2 = self.wnorm(&diff, &self.y) / h0;
        let dm = d1.max(d2);
        let h1 = if dm <= c(1e-15) {
            (h0 * c(1e-3)).max(c(1e-6))
        } else {
            (c::<T>(0.01) / dm).powf(c(0.2))
        };
        Ok((c::<T>(100.0) * h0).min(h1).min(self.opts.h_max))
    }

    /// Replaces the current state (e.g. after a projection) and refreshes the cached derivative.
    pub fn set_state(&mut self, y: Vec<T>) -> Result<()> {
        let mut k1 = vec![T::zero(); y.len()];
        (self.f)(self.t, &y, &mut k1)?;
        check_finite(&k1)?;
        self.y = y;
        self.k1 = k1;
        Ok(())
    }

    /// Advances by one accepted step without passing `t_end`.
    pub fn step(&mut self, t_end: T) -> Result<Step<T>> {
        let beta = c::<T>(0.04);
        let expo1 = c::<T>(0.2) - beta * c(0.75);
        let safe = c::<T>(0.9);
        let (facc1, facc2) = (c::<T>(5.0), c::<T>(0.1));
        let mut last_err: Option<Error> = None;
        loop {
            if self.accepted + self.rejected >= self.opts.max_steps {
                return Err(Error::NotConverged(
                    "maximum number of steps reached".into(),
                ));
            }
            let remaining = t_end - self.t;
            if remaining <= T::zero() {
                return Err(Error::Invalid("step requested past end time".into()));
            }
            let mut h = self.h.min(self.opts.h_max).min(remaining);
            if h < self.opts.h_min && h < remaining {
                return Err(
                    last_err.unwrap_or_else(|| Error::Numeric("step size underflow".into()))
                );
            }
            if remaining - h < self.opts.h_min {
                h = remaining;
            }
            match self.attempt(h) {
                Ok((y1, incr, k7, err, dense)) => {
                    if err <= T::one() {
                        let fac11 = err.powf(expo1);
                        let fac = (fac11 / self.facold.powf(beta) / safe)
                            .max(facc2)
                            .min(facc1);
                        self.facold = err.max(c(1e-4));
                        self.t = if h == remaining { t_end } else { self.t + h };
                        self.y = y1.clone();
                        self.k1 = k7;
                        self.h = h / fac;
                        self.accepted += 1;
                        return Ok(Step {
                            t1: self.t,
                            y1,
                            increment: incr,
                            dense,
                        });
                    }
                    let fac11 = err.powf(expo1);
                    self.h = h / facc1.min(fac11 / safe);
                    self.rejected += 1;
                }
                Err(e) => {
                    last_err = Some(e);
                    self.h = h * c(0.25);
                    self.rejected += 1;
                }
            }
        }
    }

    #[allow(clippy::type_complexity)]
    fn attempt(&self, h: T) -> Result<(Vec<T>, Vec<T>, Vec<T>, T, Dense<T>)> {
        let n = self.y.len();
        let y = &self.y;
        let k1 = &self.k1;
        let t = self.t;
        let f = self.f;
        let stage = |coef: &[(f64, &Vec<T>)]| -> Vec<T> {
            (0..n)
                .map(|i| {
                    y[i] + h * coef
                        .iter()
                        .fold(T::zero(), |s, (a, k)| s + c::<T>(*a) * k[i])
                })
                .collect()
        };
        let eval = |tt: T, yy: &[T]| -> Result<Vec<T>> {
            let mut out = vec![T::zero(); n];
            f(tt, yy, &mut out)?;
            check_finite(&out)?;
            Ok(out)
        };
        let k2 = eval(t + h * c(0.2), &stage(&[(0.2, k1)]))?;
        let k3 = eval(
            t + h * c(0.3),
            &stage(&[(3.0 / 40.0, k1), (9.0 / 40.0, &k2)]),
        )?;
        let k4 = eval(
            t + h * c(0.8),
            &stage(&[(44.0 / 45.0, k1), (-56.0 / 15.0, &k2), (32.0 / 9.0, &k3)]),
        )?;
        let k5 = eval(
            t + h * c(8.0 / 9.0),
            &stage(&[
                (19372.0 / 6561.0, k1),
                (-25360.0 / 2187.0, &k2),
                (64448.0 / 6561.0, &k3),
                (-212.0 / 729.0, &k4),
            ]),
        )?;
        let k6 = eval(
            t + h,
            &stage(&[
                (9017.0 / 3168.0, k1),
                (-355.0 / 33.0, &k2),
                (46732.0 / 5247.0, &k3),
                (49.0 / 176.0, &k4),
                (-5103.0 / 18656.0, &k5),
            ]),
        )?;
        let b = [
            35.0 / 384.0,
            0.0,
            500.0 / 1113.0,
            125.0 / 192.0,
            -2187.0 / 6784.0,
            11.0 / 84.0,
        ];
        let ks = [k1, &k2, &k3, &k4, &k5, &k6];
        let incr: Vec<T> = (0..n)
            .map(|i| {
                h * b
                    .iter()
                    .zip(ks.iter())
                    .fold(T::zero(), |s, (bj, k)| s + c::<T>(*bj) * k[i])
            })
            .collect();
        let y1: Vec<T> = (0..n).map(|i| y[i] + incr[i]).collect();
        let k7 = eval(t + h, &y1)?;
        let e = [
            71.0 / 57600.0,
            0.0,
            -71.0 / 16695.0,
            71.0 / 1920.0,
            -17253.0 / 339200.0,
            22.0 / 525.0,
            -1.0 / 40.0,
        ];
        let ks7 = [k1, &k2, &k3, &k4, &k5, &k6, &k7];
        let mut acc = T::zero();
        let mut m = 0;
        for i in 0..n {
            if !self.controlled[i] {
                continue;
            }
            let ei = h * e
                .iter()
                .zip(ks7.iter())
                .fold(T::zero(), |s, (ej, k)| s + c::<T>(*ej) * k[i]);
            let q = ei / self.scale(y[i], y1[i]);
            acc = acc + q * q;
            m += 1;
        }
        let err = (acc / T::int(m.max(1) as i64)).sqrt();
        if !err.is_finite() {
            return Err(Error::Numeric("non-finite error estimate".into()));
        }
        let d = [
            -12715105075.0 / 11282082432.0,
            0.0,
            87487479700.0 / 32700410799.0,
            -10690763975.0 / 1880347072.0,
            701980252875.0 / 199316789632.0,
            -1453857185.0 / 822651844.0,
            69997945.0 / 29380423.0,
        ];
        let r1 = y.clone();
        let r2: Vec<T> = incr.clone();
        let r3: Vec<T> = (0..n).map(|i| h * k1[i] - r2[i]).collect();
        let r4: Vec<T> = (0..n).map(|i| r2[i] - h * k7[i] - r3[i]).collect();
        let r5: Vec<T> = (0..n)
            .map(|i| {
                h * d
                    .iter()
                    .zip(ks7.iter())
                    .fold(T::zero(), |s, (dj, k)| s + c::<T>(*dj) * k[i])
            })
            .collect();
        let dense = Dense {
            t0: t,
            h,
            rc: [r1, r2, r3, r4, r5],
        };
        Ok((y1, incr, k7, err, dense))
    }
}

fn check_finite<T: Real>(v: &[T]) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::Numeric("non-finite derivative".into()))
    }
}

/// Integrates to `t_end` and returns the final state.
pub fn integrate_to<T: Real>(
    f: &Rhs<'_, T>,
    t0: T,
    y0: Vec<T>,
    t_end: T,
    opts: OdeOptions<T>,
) -> Result<Vec<T>> {
    let mut s = Stepper::new(f, t0, y0, opts)?;
    while s.t < t_end {
        s.step(t_end)?;
    }
    Ok(s.y)
}

/// Locates a sign change of `g` inside a step by bisection on the dense output.
pub fn locate_event<T: Real>(
    dense: &Dense<T>,
    t_lo: T,
    t_hi: T,
    g: impl Fn(&[T]) -> T,
    tol: T,
) -> T {
    let (mut a, mut b) = (t_lo, t_hi);
    let ga = g(&dense.eval(a));
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        let m = (a + b) * c(0.5);
        let gm = g(&dense.eval(m));
        if (gm > T::zero()) == (ga > T::zero()) && gm != T::zero() {
            a = m;
        } else {
            b = m;
        }
    }
    (a + b) * c(0.5)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let f = |_t: f64, y: &[f64], dy: &mut [f64]| {
            dy[0] = -y[0];
            Ok(())
        };
        let y = integrate_to(&f, 0.0, vec![1.0], 5.0, OdeOptions::default()).unwrap();
        assert!((y[0] - (-5.0f64).exp()).abs() < 1e-11);
    }

    #[test]
    fn harmonic_oscillator_f32() {
        let f = |_t: f32, y: &[f32], dy: &mut [f32]| {
            dy[0] = y[1];
            dy[1] = -y[0];
            Ok(())
        };
        let opts = OdeOptions {
            rtol: 1e-6,
            atol: 1e-7,
            h_min: 1e-7,
            ..OdeOptions::default()
        };
        let y = integrate_to(&f, 0.0f32, vec![1.0, 0.0], 1.0, opts).unwrap();
        assert!((y[0] - 1.0f32.cos()).abs() < 1e-5);
    }

    #[test]
    fn dense_output_matches_solution() {
        let f = |_t: f64, y: &[f64], dy: &mut [f64]| {
            dy[0] = y[1];
            dy[1] = -y[0];
            Ok(())
        };
        let mut s = Stepper::new(&f, 0.0, vec![1.0, 0.0], OdeOptions::default()).unwrap();
        let st = s.step(10.0).unwrap();
        let tm = st.dense.t0 + 0.5 * st.dense.h;
        let ym = st.dense.eval(tm);
        assert!((ym[0] - tm.cos()).abs() < 1e-8);
    }

    #[test]
    fn uncontrolled_component_excluded() {
        let f = |_t: f64, y: &[f64], dy: &mut [f64]| {
            dy[0] = -y[0];
            dy[1] = y[0];
            Ok(())
        };
        let opts = OdeOptions {
            uncontrolled: vec![1],
            ..OdeOptions::default()
        };
        let y = integrate_to(&f, 0.0, vec![1.0, 0.0], 3.0, opts).unwrap();
        assert!((y[1] - (1.0 - (-3.0f64).exp())).abs() < 1e-10);
    }
}
