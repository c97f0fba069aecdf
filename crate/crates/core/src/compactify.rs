//! Quasi-homogeneous compactifications: the global (Poincaré-type) map onto
//! the unit ball `{Σ aᵢ xᵢ^{2βᵢ} < 1}` and directional charts at infinity.

use crate::error::{Error, Result};
use crate::qhfield::{lcm_of, support};
use crate::quasitrig::QuasiTrigTable;
use crate::scalar::{Real, Scalar};
use serde::{Deserialize, Serialize};

/// Distance to the horizon below which a point counts as infinite.
pub const HORIZON_TOL: f64 = 1e-12;

/// Type `α`, order parameter `k`, weights `a` and the derived `c`, `β`.
#[derive(Clone, Debug, PartialEq)]
pub struct CompactScheme<T> {
    pub alpha: Vec<u32>,
    pub k: u32,
    pub c: u32,
    pub beta: Vec<u32>,
    pub a: Vec<T>,
}

/// Orientation of a hyperplane chart `{yᵢ = ±∞}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value<T: Real>(self) -> T {
        match self {
            Sign::Plus => T::one(),
            Sign::Minus => -T::one(),
        }
    }

    pub fn of<T: Real>(x: T) -> Sign {
        if x >= T::zero() {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }
}

/// Point in the hyperplane chart `(index, sign)`: radial `s ≥ 0` and the
/// remaining coordinates `θ` (original order with `index` removed).
#[derive(Clone, Debug, PartialEq)]
pub struct DirectionalPoint<T> {
    pub index: usize,
    pub sign: Sign,
    pub s: T,
    pub theta: Vec<T>,
}

impl<T: Real> CompactScheme<T> {
    /// `c = lcm(αᵢ)`, `βᵢ = c/αᵢ` on `I_α`; `a` defaults to all ones.
    pub fn new(alpha: &[u32], k: u32, a: Option<Vec<T>>) -> Result<Self> {
        if alpha.iter().all(|&x| x == 0) {
            return Err(Error::Invalid("type must have a positive entry".into()));
        }
        let c = lcm_of(alpha);
        let beta: Vec<u32> = alpha
            .iter()
            .map(|&ai| c.checked_div(ai).unwrap_or(0))
            .collect();
        let a = a.unwrap_or_else(|| vec![T::one(); alpha.len()]);
        if a.len() != alpha.len() {
            return Err(Error::Invalid("weight vector length mismatch".into()));
        }
        for i in support(alpha) {
            if !(a[i] > T::zero()) || !a[i].is_finite() {
                return Err(Error::Invalid(format!("weight a[{i}] must be positive")));
            }
        }
        Ok(CompactScheme {
            alpha: alpha.to_vec(),
            k,
            c,
            beta,
            a,
        })
    }

    pub fn dim(&self) -> usize {
        self.alpha.len()
    }

    pub fn support(&self) -> Vec<usize> {
        support(&self.alpha)
    }

    /// `Σ_{i∈I_α} aᵢ vᵢ^{2βᵢ}` (even powers taken by squaring first).
    pub fn energy<S: Scalar<T>>(&self, v: &[S]) -> S {
        self.support().into_iter().fold(S::zero(), |acc, i| {
            acc + S::lift(self.a[i]) * (v[i] * v[i]).powi(self.beta[i] as i32)
        })
    }

    fn two_c<S: Real>(&self) -> S {
        S::int(2 * self.c as i64)
    }

    /// Quasi-homogeneous norm `p(y) = (Σ aᵢ yᵢ^{2βᵢ})^{1/2c}`.
    pub fn p<S: Scalar<T>>(&self, y: &[S]) -> S {
        self.energy(y).powf(S::one() / self.two_c())
    }

    /// `κ(y) = (1 + p(y)^{2c})^{1/2c}`.
    pub fn kappa<S: Scalar<T>>(&self, y: &[S]) -> S {
        (S::one() + self.energy(y)).powf(S::one() / self.two_c())
    }

    /// Gradient of `κ` in original coordinates.
    pub fn grad_kappa(&self, y: &[T]) -> Vec<T> {
        let kap = self.kappa(y);
        let scale = kap.powi(1 - 2 * self.c as i32) / T::int(self.c as i64);
        (0..self.dim())
            .map(|i| {
                if self.alpha[i] == 0 {
                    T::zero()
                } else {
                    let b = self.beta[i] as i32;
                    scale * self.a[i] * T::int(b as i64) * y[i].powi(2 * b - 1)
                }
            })
            .collect()
    }

    /// Gap to the horizon `w(x) = 1 − Σ aᵢ xᵢ^{2βᵢ}` (equals `κ^{−2c}`).
    pub fn gap<S: Scalar<T>>(&self, x: &[S]) -> S {
        S::one() - self.energy(x)
    }

    /// `x = y / κ(y)^α`.
    pub fn compactify(&self, y: &[T]) -> Result<Vec<T>> {
        self.check_dim(y)?;
        let kap = self.kappa(y);
        if !kap.is_finite() {
            return Err(Error::Domain("point too large to compactify".into()));
        }
        Ok(y.iter()
            .zip(&self.alpha)
            .map(|(&yi, &ai)| yi / kap.powi(ai as i32))
            .collect())
    }

    /// Inverse of [`compactify`](Self::compactify) on the open ball.
    pub fn decompactify(&self, x: &[T]) -> Result<Vec<T>> {
        self.check_dim(x)?;
        let w = self.gap(x);
        if !(w > T::lit(HORIZON_TOL)) {
            return Err(Error::Domain("point lies on or beyond the horizon".into()));
        }
        self.decompactify_with_gap(x, w)
    }

    /// Decompactifies using an externally tracked gap `w = κ^{−2c}`.
    pub fn decompactify_with_gap(&self, x: &[T], w: T) -> Result<Vec<T>> {
        let kap = w.powf(-T::one() / self.two_c());
        Ok(x.iter()
            .zip(&self.alpha)
            .map(|(&xi, &ai)| xi * kap.powi(ai as i32))
            .collect())
    }

    /// Quasi-homogeneous radial projection `xᵢ ← xᵢ / p(x)^{αᵢ}` onto the horizon.
    pub fn project_to_horizon(&self, x: &[T]) -> Vec<T> {
        let p = self.p(x);
        x.iter()
            .zip(&self.alpha)
            .map(|(&xi, &ai)| xi / p.powi(ai as i32))
            .collect()
    }

    /// Symmetry `ι_α`: `xᵢ ↦ (−1)^{αᵢ} xᵢ`.
    pub fn iota<S: Real>(&self, x: &[S]) -> Vec<S> {
        x.iter()
            .zip(&self.alpha)
            .map(|(&xi, &ai)| if ai % 2 == 1 { -xi } else { xi })
            .collect()
    }

    fn check_dim<S>(&self, v: &[S]) -> Result<()> {
        if v.len() != self.dim() {
            return Err(Error::Invalid(format!(
                "expected {} coordinates, got {}",
                self.dim(),
                v.len()
            )));
        }
        Ok(())
    }

    fn check_chart(&self, index: usize) -> Result<()> {
        if index >= self.dim() || self.alpha[index] == 0 {
            return Err(Error::Chart(format!(
                "no hyperplane chart for coordinate {index}"
            )));
        }
        Ok(())
    }

    /// Profile `h(θ)` of a hyperplane chart: `hᵢ = ±1`, remaining entries `θ`.
    pub fn chart_profile<S: Scalar<T>>(&self, index: usize, sign: Sign, theta: &[S]) -> Vec<S> {
        let mut h = Vec::with_capacity(self.dim());
        let mut it = theta.iter();
        for j in 0..self.dim() {
            if j == index {
                h.push(S::lift(sign.value()));
            } else {
                h.push(*it.next().expect("theta length"));
            }
        }
        h
    }

    /// Original coordinates to the chart: `s = (±yᵢ)^{−1/αᵢ}`, `θⱼ = yⱼ s^{αⱼ}`.
    pub fn to_directional(&self, y: &[T], index: usize, sign: Sign) -> Result<DirectionalPoint<T>> {
        self.check_dim(y)?;
        self.check_chart(index)?;
        let v = sign.value::<T>() * y[index];
        if !(v > T::zero()) {
            return Err(Error::Chart(format!(
                "point not covered by chart ({index}, {sign:?})"
            )));
        }
        let s = v.powf(-T::one() / T::int(self.alpha[index] as i64));
        let theta = (0..self.dim())
            .filter(|&j| j != index)
            .map(|j| y[j] * s.powi(self.alpha[j] as i32))
            .collect();
        Ok(DirectionalPoint {
            index,
            sign,
            s,
            theta,
        })
    }

    /// Chart to original coordinates: `y = h(θ)/s^α` (requires `s > 0`).
    pub fn from_directional(&self, d: &DirectionalPoint<T>) -> Result<Vec<T>> {
        self.check_chart(d.index)?;
        if !(d.s > T::zero()) {
            return Err(Error::Domain(
                "point at infinity has no original coordinates".into(),
            ));
        }
        let h = self.chart_profile(d.index, d.sign, &d.theta);
        Ok(h.iter()
            .zip(&self.alpha)
            .map(|(&hi, &ai)| hi / d.s.powi(ai as i32))
            .collect())
    }

    /// Chart with profile `h` to the global chart:
    /// `xᵢ = hᵢ (s^{2c} + Σ aⱼ hⱼ^{2βⱼ})^{−αᵢ/2c}`.
    pub fn profile_to_global<S: Scalar<T>>(&self, s: S, h: &[S]) -> Vec<S> {
        let base = s.powi(2 * self.c as i32) + self.energy(h);
        let r = base.powf(-S::one() / self.two_c());
        h.iter()
            .zip(&self.alpha)
            .map(|(&hi, &ai)| hi * r.powi(ai as i32))
            .collect()
    }

    pub fn chart_to_global(&self, d: &DirectionalPoint<T>) -> Result<Vec<T>> {
        self.check_chart(d.index)?;
        if d.s < T::zero() {
            return Err(Error::Domain("negative radial coordinate".into()));
        }
        let h = self.chart_profile(d.index, d.sign, &d.theta);
        Ok(self.profile_to_global(d.s, &h))
    }

    /// Global chart to the hyperplane chart: `λ = (±xᵢ)^{−1/αᵢ}`,
    /// `θⱼ = λ^{αⱼ} xⱼ`, `s = λ·w(x)^{1/2c}`.
    pub fn global_to_chart(
        &self,
        x: &[T],
        index: usize,
        sign: Sign,
    ) -> Result<DirectionalPoint<T>> {
        self.check_dim(x)?;
        self.check_chart(index)?;
        let v = sign.value::<T>() * x[index];
        if !(v > T::zero()) {
            return Err(Error::Chart(format!(
                "point not covered by chart ({index}, {sign:?})"
            )));
        }
        let lam = v.powf(-T::one() / T::int(self.alpha[index] as i64));
        let w = self.gap(x).max(T::zero());
        let s = lam * w.powf(T::one() / self.two_c());
        let theta = (0..self.dim())
            .filter(|&j| j != index)
            .map(|j| lam.powi(self.alpha[j] as i32) * x[j])
            .collect();
        Ok(DirectionalPoint {
            index,
            sign,
            s,
            theta,
        })
    }

    /// The chart index with the largest normalized coordinate `|xᵢ|^{1/αᵢ}`.
    pub fn best_chart(&self, x: &[T]) -> Option<(usize, Sign)> {
        self.support()
            .into_iter()
            .map(|i| (i, x[i].abs().powf(T::one() / T::int(self.alpha[i] as i64))))
            .filter(|(_, v)| *v > T::zero())
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal))
            .map(|(i, _)| (i, Sign::of(x[i])))
    }

    /// Whether the quasi-polar chart is available (`n = 2`, `α = (1, l)`).
    pub fn quasi_polar_order(&self) -> Option<u32> {
        (self.dim() == 2 && self.alpha[0] == 1 && self.alpha[1] >= 1).then(|| self.alpha[1])
    }

    /// Quasi-polar `(s, θ)` of an original point: `y = (Cs θ / s, Sn θ / s^l)`.
    pub fn to_quasi_polar(&self, y: &[T], trig: &QuasiTrigTable<T>) -> Result<(T, T)> {
        let l = self.quasi_polar_checked(trig)?;
        let e = y[0].powi(2 * l as i32) + T::int(l as i64) * y[1] * y[1];
        if !(e > T::zero()) {
            return Err(Error::Domain(
                "origin has no quasi-polar coordinates".into(),
            ));
        }
        let s = e.powf(-T::one() / T::int(2 * l as i64));
        Ok((s, trig.angle_of(y[0] * s, y[1] * s.powi(l as i32))))
    }

    /// Global point to quasi-polar `(s, θ)`; valid on the horizon (`s = 0`).
    pub fn global_to_quasi_polar(&self, x: &[T], trig: &QuasiTrigTable<T>) -> Result<(T, T)> {
        let l = self.quasi_polar_checked(trig)?;
        let e = x[0].powi(2 * l as i32) + T::int(l as i64) * x[1] * x[1];
        if !(e > T::zero()) {
            return Err(Error::Domain(
                "origin has no quasi-polar coordinates".into(),
            ));
        }
        let lam = e.powf(-T::one() / T::int(2 * l as i64));
        let w = self.gap(x).max(T::zero());
        let s = lam * w.powf(T::one() / self.two_c());
        Ok((s, trig.angle_of(lam * x[0], lam.powi(l as i32) * x[1])))
    }

    pub fn quasi_polar_to_global(
        &self,
        s: T,
        theta: T,
        trig: &QuasiTrigTable<T>,
    ) -> Result<Vec<T>> {
        self.quasi_polar_checked(trig)?;
        let (c, sn) = trig.eval(theta);
        Ok(self.profile_to_global(s, &[c, sn]))
    }

    fn quasi_polar_checked(&self, trig: &QuasiTrigTable<T>) -> Result<u32> {
        match self.quasi_polar_order() {
            Some(l) if l == trig.l() => Ok(l),
            _ => Err(Error::Chart(
                "quasi-polar chart needs n = 2 and type (1, l) matching the table".into(),
            )),
        }
    }

    /// `n = 2`: `count` points on the horizon, equally spaced in angle.
    /// Larger `n`: Halton points in the cube projected radially.
    pub fn horizon_seeds(&self, count: usize) -> Vec<Vec<T>> {
        let n = self.dim();
        let mut out = Vec::with_capacity(count);
        for m in 0..count {
            let v: Vec<T> = if n == 1 {
                vec![if m % 2 == 0 { T::one() } else { -T::one() }]
            } else if n == 2 {
                let phi = T::lit(2.0 * std::f64::consts::PI * (m as f64 + 0.5) / count as f64);
                vec![phi.cos(), phi.sin()]
            } else {
                const PRIMES: [u64; 8] = [2, 3, 5, 7, 11, 13, 17, 19];
                (0..n)
                    .map(|i| T::lit(2.0 * halton(m as u64 + 1, PRIMES[i % 8]) - 1.0))
                    .collect()
            };
            if self.energy(&v) > T::zero() {
                out.push(self.project_to_horizon(&v));
            }
        }
        out
    }
}

/// Radical-inverse (Halton) sequence in base `b`.
pub fn halton(mut i: u64, b: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= b as f64;
        r += f * (i % b) as f64;
        i /= b;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn origin_fixed() {
        let sc = CompactScheme::<f64>::new(&[1, 2], 1, Some(vec![1.0, 2.0])).unwrap();
        assert_eq!(sc.compactify(&[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn scheme_constants() {
        let sc = CompactScheme::<f64>::new(&[2, 3, 0], 1, None).unwrap();
        assert_eq!(sc.c, 6);
        assert_eq!(sc.beta, vec![3, 2, 0]);
    }

    #[test]
    fn horizon_points_are_rejected() {
        let sc = CompactScheme::<f64>::new(&[1, 1], 1, None).unwrap();
        assert!(matches!(
            sc.decompactify(&[1.0, 0.0]),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn chart_covering() {
        let sc = CompactScheme::<f64>::new(&[1, 2], 1, None).unwrap();
        assert!(sc.to_directional(&[-1.0, 3.0], 0, Sign::Plus).is_err());
        let d = sc.to_directional(&[-1.0, 3.0], 0, Sign::Minus).unwrap();
        let y = sc.from_directional(&d).unwrap();
        assert!((y[0] + 1.0).abs() < 1e-15 && (y[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn works_in_single_precision() {
        let sc = CompactScheme::<f32>::new(&[1, 2], 1, None).unwrap();
        let x = sc.compactify(&[0.5, -0.25]).unwrap();
        let y = sc.decompactify(&x).unwrap();
        assert!((y[0] - 0.5).abs() < 1e-5 && (y[1] + 0.25).abs() < 1e-5);
    }
}
