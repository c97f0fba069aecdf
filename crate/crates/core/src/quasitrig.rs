//! Quasi-trigonometric functions `Cs_l`, `Sn_l`:
//! `Cs' = −Sn`, `Sn' = Cs^{2l−1}`, `Cs(0) = 1`, `Sn(0) = 0`,
//! so that `Cs^{2l} + l·Sn² = 1` along the orbit.

use crate::error::{Error, Result};
use crate::ode::{self, OdeOptions, Stepper};
use crate::scalar::Real;

/// Tabulated periodic pair `(Cs_l, Sn_l)` with cubic Hermite interpolation.
#[derive(Clone, Debug)]
pub struct QuasiTrigTable<T> {
    l: u32,
    period: T,
    step: T,
    cs: Vec<T>,
    sn: Vec<T>,
}

fn rhs<T: Real>(l: u32, y: &[T], dy: &mut [T]) {
    dy[0] = -y[1];
    dy[1] = y[0].powi(2 * l as i32 - 1);
}

impl<T: Real> QuasiTrigTable<T> {
    /// Builds the table with the default resolution (4096 cells per period).
    pub fn new(l: u32) -> Result<Self> {
        Self::with_resolution(l, 4096)
    }

    pub fn with_resolution(l: u32, cells: usize) -> Result<Self> {
        if l == 0 {
            return Err(Error::Invalid(
                "quasi-trigonometric order must be >= 1".into(),
            ));
        }
        if cells < 16 {
            return Err(Error::Invalid("too few table cells".into()));
        }
        let tol = T::lit(1e-14).max(T::epsilon() * T::lit(100.0));
        let opts = OdeOptions {
            rtol: tol,
            atol: tol,
            h_min: T::epsilon(),
            ..OdeOptions::default()
        };
        let period = Self::first_return(l, &opts)?;
        let f = move |_t: T, y: &[T], dy: &mut [T]| {
            rhs(l, y, dy);
            Ok(())
        };
        let step = period / T::int(cells as i64);
        let mut cs = Vec::with_capacity(cells + 1);
        let mut sn = Vec::with_capacity(cells + 1);
        let mut st = Stepper::new(&f, T::zero(), vec![T::one(), T::zero()], opts)?;
        cs.push(T::one());
        sn.push(T::zero());
        for i in 1..=cells {
            let target = step * T::int(i as i64);
            while st.t < target {
                st.step(target)?;
            }
            cs.push(st.y[0]);
            sn.push(st.y[1]);
        }
        // Close the table exactly on the initial point.
        cs[cells] = T::one();
        sn[cells] = T::zero();
        Ok(QuasiTrigTable {
            l,
            period,
            step,
            cs,
            sn,
        })
    }

    /// Period from the first upward zero crossing of `Sn` after the start,
    /// refined by bisection and a Newton polish on exact re-integration.
    fn first_return(l: u32, opts: &OdeOptions<T>) -> Result<T> {
        let f = move |_t: T, y: &[T], dy: &mut [T]| {
            rhs(l, y, dy);
            Ok(())
        };
        let mut st = Stepper::new(&f, T::zero(), vec![T::one(), T::zero()], opts.clone())?;
        let horizon = T::lit(1e3);
        let mut seen_negative = false;
        let mut prev_sn = T::zero();
        loop {
            let t0 = st.t;
            let step = st.step(horizon)?;
            let sn1 = step.y1[1];
            if sn1 < T::zero() {
                seen_negative = true;
            }
            if seen_negative && prev_sn < T::zero() && sn1 >= T::zero() {
                let tol = T::lit(1e-12).max(T::epsilon() * T::lit(10.0));
                let mut te =
                    ode::locate_event(&step.dense, t0, step.t1, |y| y[1], tol * T::lit(0.01));
                for _ in 0..3 {
                    let y = ode::integrate_to(
                        &f,
                        T::zero(),
                        vec![T::one(), T::zero()],
                        te,
                        opts.clone(),
                    )?;
                    let d = y[1] / y[0].powi(2 * l as i32 - 1);
                    te = te - d;
                    if d.abs() < tol {
                        break;
                    }
                }
                return Ok(te);
            }
            prev_sn = sn1;
            if st.t >= horizon {
                return Err(Error::NotConverged("no return to the initial point".into()));
            }
        }
    }

    pub fn l(&self) -> u32 {
        self.l
    }

    pub fn period(&self) -> T {
        self.period
    }

    /// `(Cs(θ), Sn(θ))` for any real `θ`.
    pub fn eval(&self, theta: T) -> (T, T) {
        let mut u = theta % self.period;
        if u < T::zero() {
            u = u + self.period;
        }
        let pos = u / self.step;
        let cells = self.cs.len() - 1;
        let i = pos.floor().to_usize().unwrap_or(0).min(cells - 1);
        let s = pos - T::int(i as i64);
        let h = self.step;
        let exp = 2 * self.l as i32 - 1;
        let (c0, c1, s0, s1) = (self.cs[i], self.cs[i + 1], self.sn[i], self.sn[i + 1]);
        let (dc0, dc1) = (-s0, -s1);
        let (ds0, ds1) = (c0.powi(exp), c1.powi(exp));
        (
            hermite(c0, c1, dc0 * h, dc1 * h, s),
            hermite(s0, s1, ds0 * h, ds1 * h, s),
        )
    }

    pub fn cs(&self, theta: T) -> T {
        self.eval(theta).0
    }

    pub fn sn(&self, theta: T) -> T {
        self.eval(theta).1
    }

    /// Derivatives `(Cs', Sn') = (−Sn, Cs^{2l−1})`.
    pub fn derivatives(&self, theta: T) -> (T, T) {
        let (c, s) = self.eval(theta);
        (-s, c.powi(2 * self.l as i32 - 1))
    }

    /// Angle in `[0, period)` of a point on (or radially near) the curve
    /// `Cs^{2l} + l·Sn² = 1`.
    pub fn angle_of(&self, cs: T, sn: T) -> T {
        let l = self.l as i32;
        let lt = T::int(self.l as i64);
        // Project onto the curve by quasi-homogeneous scaling (Cs, Sn) -> (λ Cs, λ^l Sn).
        let e = cs.powi(2 * l) + lt * sn * sn;
        let lam = e.powf(-T::one() / T::int(2 * l as i64));
        let (cs, sn) = (lam * cs, lam.powi(l) * sn);
        let mut best = 0;
        let mut best_d = T::infinity();
        for i in 0..self.cs.len() - 1 {
            let d = (self.cs[i] - cs).powi(2) + (self.sn[i] - sn).powi(2);
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        let mut th = self.step * T::int(best as i64);
        for _ in 0..20 {
            let (c, s) = self.eval(th);
            let (dc, ds) = (-s, c.powi(2 * l - 1));
            let phi = (c - cs) * dc + (s - sn) * ds;
            let dphi = dc * dc
                + ds * ds
                + (c - cs) * (-ds)
                + (s - sn) * (T::int(2 * l as i64 - 1) * c.powi(2 * l - 2) * dc);
            if dphi == T::zero() {
                break;
            }
            let d = phi / dphi;
            th = th - d;
            if d.abs() < T::epsilon() * T::lit(4.0) * self.period {
                break;
            }
        }
        let mut th = th % self.period;
        if th < T::zero() {
            th = th + self.period;
        }
        th
    }
}

fn hermite<T: Real>(p0: T, p1: T, m0: T, m1: T, s: T) -> T {
    let s2 = s * s;
    let s3 = s2 * s;
    let two = T::lit(2.0);
    let three = T::lit(3.0);
    let h00 = two * s3 - three * s2 + T::one();
    let h10 = s3 - two * s2 + s;
    let h01 = -two * s3 + three * s2;
    let h11 = s3 - s2;
    h00 * p0 + h10 * m0 + h01 * p1 + h11 * m1
}
