//! Desingularized vector fields in the global chart, hyperplane charts and
//! the quasi-polar chart, with time rescaling and Jacobians.

use crate::compactify::{CompactScheme, DirectionalPoint, Sign};
use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::poly::{eval_monomial, Monomial, PolyVectorField};
use crate::qhfield::{check_c1_extension, QhSignature};
use crate::quasitrig::QuasiTrigTable;
use crate::scalar::{Dual, Real, Scalar};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;

/// Coordinate system of a desingularized field.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Chart {
    /// Compactified coordinates `x` in the unit ball.
    Global,
    /// Hyperplane chart `{y_index = ±∞}` with state `(s, θ)`.
    Directional { index: usize, sign: Sign },
    /// Quasi-polar chart (`n = 2`, type `(1, l)`) with state `(s, θ)`.
    QuasiPolar,
}

impl fmt::Display for Chart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Chart::Global => write!(f, "global"),
            Chart::Directional { index, sign } => {
                write!(
                    f,
                    "directional(y{}={}inf)",
                    index + 1,
                    if *sign == Sign::Plus { "+" } else { "-" }
                )
            }
            Chart::QuasiPolar => write!(f, "quasi-polar"),
        }
    }
}

/// Two-fluid traveling-wave field in the chart `(s, θ) = (1/v, β)`:
/// `s' = −s(B₂(θ) − c s − c₂ s²)`, `θ' = B₁(θ) − c θ s − c₁ s`.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoFluidField<T> {
    pub rho1: T,
    pub rho2: T,
    pub c: T,
    pub c1: T,
    pub c2: T,
}

impl<T: Real> TwoFluidField<T> {
    /// `B₁(β) = (β − ρ₁)(β − ρ₂)/β`.
    pub fn b1<S: Scalar<T>>(&self, beta: S) -> S {
        (beta - S::lift(self.rho1)) * (beta - S::lift(self.rho2)) / beta
    }

    /// `B₂(β) = (β² − ρ₁ρ₂)/(2β²)`.
    pub fn b2<S: Scalar<T>>(&self, beta: S) -> S {
        let b2 = beta * beta;
        (b2 - S::lift(self.rho1 * self.rho2)) / (b2 + b2)
    }

    /// `(σ, θ')` with `s' = −s σ`.
    fn parts<S: Scalar<T>>(&self, s: S, theta: S) -> (S, S) {
        let (c, c1, c2) = (S::lift(self.c), S::lift(self.c1), S::lift(self.c2));
        let sigma = self.b2(theta) - c * s - c2 * s * s;
        let dtheta = self.b1(theta) - c * theta * s - c1 * s;
        (sigma, dtheta)
    }
}

/// Vector field source.
#[derive(Clone, Debug, PartialEq)]
pub enum Source<T> {
    Polynomial(QhSignature<T>),
    TwoFluid(TwoFluidField<T>),
}

/// A desingularized field: compactification scheme, source and chart.
#[derive(Clone, Debug)]
pub struct DesingField<T: Real> {
    pub scheme: CompactScheme<T>,
    pub source: Source<T>,
    pub chart: Chart,
    trig: Option<Arc<QuasiTrigTable<T>>>,
    reversed: bool,
}

/// Weight exponent of `w = κ^{−2c}` carried by a monomial with deficit `d`.
fn gap_power<T: Real, S: Scalar<T>>(w: S, d: u64, c: u32) -> S {
    let two_c = 2 * c as u64;
    if d == 0 {
        S::one()
    } else if d.is_multiple_of(two_c) {
        w.powi((d / two_c) as i32)
    } else {
        w.powf(S::lift(T::int(d as i64) / T::int(two_c as i64)))
    }
}

impl<T: Real> DesingField<T> {
    /// Desingularized polynomial field in the requested chart.
    pub fn polynomial(sig: QhSignature<T>, a: Option<Vec<T>>, chart: Chart) -> Result<Self> {
        let scheme = CompactScheme::new(&sig.alpha, sig.k, a)?;
        let mut f = DesingField {
            scheme,
            source: Source::Polynomial(sig),
            chart,
            trig: None,
            reversed: false,
        };
        f.set_chart(chart)?;
        Ok(f)
    }

    /// Two-fluid field in its hyperplane chart `{v = +∞}` (type `(0, 1)`, `k = 1`).
    pub fn two_fluid(params: TwoFluidField<T>) -> Result<Self> {
        if !(params.rho1 > T::zero() && params.rho1 < params.rho2) {
            return Err(Error::Invalid(
                "two-fluid densities need 0 < rho1 < rho2".into(),
            ));
        }
        let scheme = CompactScheme::new(&[0, 1], 1, None)?;
        Ok(DesingField {
            scheme,
            source: Source::TwoFluid(params),
            chart: Chart::Directional {
                index: 1,
                sign: Sign::Plus,
            },
            trig: None,
            reversed: false,
        })
    }

    /// Same source and scheme in another chart.
    pub fn in_chart(&self, chart: Chart) -> Result<Self> {
        let mut f = self.clone();
        f.set_chart(chart)?;
        Ok(f)
    }

    fn set_chart(&mut self, chart: Chart) -> Result<()> {
        match (&self.source, chart) {
            (
                Source::TwoFluid(_),
                Chart::Directional {
                    index: 1,
                    sign: Sign::Plus,
                },
            ) => {}
            (Source::TwoFluid(_), _) => {
                return Err(Error::Chart(
                    "the two-fluid field is only defined in its directional chart".into(),
                ))
            }
            (_, Chart::Directional { index, .. }) => {
                if index >= self.scheme.dim() || self.scheme.alpha[index] == 0 {
                    return Err(Error::Chart(format!(
                        "no hyperplane chart for coordinate {index}"
                    )));
                }
            }
            (_, Chart::QuasiPolar) => {
                let l = self.scheme.quasi_polar_order().ok_or_else(|| {
                    Error::Chart("quasi-polar chart needs n = 2 and type (1, l)".into())
                })?;
                if self.trig.as_ref().map(|t| t.l()) != Some(l) {
                    self.trig = Some(Arc::new(QuasiTrigTable::new(l)?));
                }
            }
            (_, Chart::Global) => {}
        }
        self.chart = chart;
        Ok(())
    }

    /// Reuses an existing quasi-trigonometric table.
    pub fn with_trig(mut self, trig: Arc<QuasiTrigTable<T>>) -> Self {
        self.trig = Some(trig);
        self
    }

    pub fn trig(&self) -> Option<&Arc<QuasiTrigTable<T>>> {
        self.trig.as_ref()
    }

    /// The field with time reversed.
    pub fn reversed(&self) -> Self {
        let mut f = self.clone();
        f.reversed = !f.reversed;
        f
    }

    pub fn is_reversed(&self) -> bool {
        self.reversed
    }

    pub fn dim(&self) -> usize {
        self.scheme.dim()
    }

    pub fn signature(&self) -> Option<&QhSignature<T>> {
        match &self.source {
            Source::Polynomial(s) => Some(s),
            Source::TwoFluid(_) => None,
        }
    }

    /// Whether the global-chart field is certified C¹ up to the horizon.
    pub fn is_c1(&self) -> bool {
        self.signature().is_some_and(|s| check_c1_extension(s).c1)
    }

    fn orient<S: Real>(&self, v: S) -> S {
        if self.reversed {
            -v
        } else {
            v
        }
    }

    /// Field in the current chart's coordinates.
    pub fn eval<S: Scalar<T>>(&self, state: &[S]) -> Result<Vec<S>> {
        if state.len() != self.dim() {
            return Err(Error::Invalid(format!(
                "state has {} entries, expected {}",
                state.len(),
                self.dim()
            )));
        }
        let out = match self.chart {
            Chart::Global => {
                let w = self.scheme.gap(state);
                // Clamp tiny negative gaps to zero while keeping the derivative.
                let w = if w.value() < T::zero() {
                    w.chain(T::zero(), T::one())
                } else {
                    w
                };
                self.global_with_gap(state, w)?.0
            }
            _ => {
                let (sigma, dtheta) = self.chart_parts(state[0], &state[1..])?;
                let mut v = Vec::with_capacity(self.dim());
                v.push(-state[0] * sigma);
                v.extend(dtheta);
                v
            }
        };
        Ok(out.into_iter().map(|v| self.orient(v)).collect())
    }

    /// Plain `f64`-style evaluation.
    pub fn eval_real(&self, state: &[T]) -> Result<Vec<T>> {
        self.eval::<T>(state)
    }

    fn poly(&self) -> Result<&QhSignature<T>> {
        self.signature()
            .ok_or_else(|| Error::Unsupported("operation needs a polynomial source".into()))
    }

    /// `f̃ⱼ(x) = κ^{−(k+αⱼ)} fⱼ(κ^α x)` with `κ^{−1} = w^{1/2c}`, per monomial.
    pub fn f_tilde<S: Scalar<T>>(&self, x: &[S], w: S) -> Result<Vec<S>> {
        let sig = self.poly()?;
        Ok(self.f_tilde_of(&sig.field, x, w))
    }

    fn f_tilde_of<S: Scalar<T>>(&self, f: &PolyVectorField<T>, x: &[S], w: S) -> Vec<S> {
        let sc = &self.scheme;
        f.components()
            .iter()
            .enumerate()
            .map(|(j, comp)| {
                comp.iter().fold(S::zero(), |acc, m: &Monomial<T>| {
                    let d = sc.k as u64 + sc.alpha[j] as u64 - m.weight(&sc.alpha);
                    acc + gap_power::<T, S>(w, d, sc.c) * eval_monomial(m, x)
                })
            })
            .collect()
    }

    /// Global-chart field with an explicit gap `w` and the radial sum
    /// `S = Σ βⱼ aⱼ xⱼ^{2βⱼ−1} f̃ⱼ`; returns `(g, S)`.
    pub fn global_with_gap<S: Scalar<T>>(&self, x: &[S], w: S) -> Result<(Vec<S>, S)> {
        let sig = self.poly()?;
        let ft = self.f_tilde_of(&sig.field, x, w);
        Ok(self.correct(x, ft))
    }

    fn correct<S: Scalar<T>>(&self, x: &[S], ft: Vec<S>) -> (Vec<S>, S) {
        let sc = &self.scheme;
        let support = sc.support();
        let s_sum = support.iter().fold(S::zero(), |acc, &j| {
            let b = sc.beta[j] as i32;
            acc + S::lift(sc.a[j] * T::int(b as i64)) * x[j].powi(2 * b - 1) * ft[j]
        });
        let g = (0..sc.dim())
            .map(|i| {
                if sc.alpha[i] == 0 {
                    ft[i]
                } else {
                    ft[i] - s_sum * x[i] / S::lift(T::int(sc.beta[i] as i64))
                }
            })
            .collect();
        (g, s_sum)
    }

    /// Field on the horizon: principal part only, defined on all of `Rⁿ`.
    pub fn horizon_field<S: Scalar<T>>(&self, x: &[S]) -> Result<Vec<S>> {
        let sig = self.poly()?;
        let ft = self.f_tilde_of(&sig.principal, x, S::zero());
        Ok(self
            .correct(x, ft)
            .0
            .into_iter()
            .map(|v| self.orient(v))
            .collect())
    }

    /// Growth rate of `ln w` in the global chart: `d(ln w)/dτ = −2S`.
    pub fn gap_log_rate<S: Scalar<T>>(&self, x: &[S], w: S) -> Result<S> {
        let (_, s) = self.global_with_gap(x, w)?;
        Ok(self.orient(S::lift(T::lit(-2.0)) * s))
    }

    /// Chart decomposition `s' = −s σ`, `θ' = …` for directional/quasi-polar charts.
    pub fn chart_parts<S: Scalar<T>>(&self, s: S, theta: &[S]) -> Result<(S, Vec<S>)> {
        match (&self.source, self.chart) {
            (Source::TwoFluid(tf), _) => {
                let (sigma, dth) = tf.parts(s, theta[0]);
                Ok((sigma, vec![dth]))
            }
            (Source::Polynomial(sig), Chart::Directional { index, sign }) => {
                let n = self.dim();
                let h = self.scheme.chart_profile(index, sign, theta);
                let mut dh = Mat::<S>::zeros(n, n - 1);
                let mut col = 0;
                for j in 0..n {
                    if j != index {
                        dh[(j, col)] = S::one();
                        col += 1;
                    }
                }
                self.profile_parts(sig, s, &h, &dh)
            }
            (Source::Polynomial(sig), Chart::QuasiPolar) => {
                let trig = self
                    .trig
                    .as_ref()
                    .ok_or_else(|| Error::Chart("missing quasi-trig table".into()))?;
                let th = theta[0];
                let l = trig.l() as i32;
                let (c, sn) = trig.eval(th.value());
                let cs = th.chain(c, -sn);
                let sn = th.chain(sn, c.powi(2 * l - 1));
                let h = [cs, sn];
                let mut dh = Mat::<S>::zeros(2, 1);
                dh[(0, 0)] = -sn;
                dh[(1, 0)] = cs.powi(2 * l - 1);
                self.profile_parts(sig, s, &h, &dh)
            }
            (_, Chart::Global) => Err(Error::Chart(
                "global chart has no radial decomposition".into(),
            )),
        }
    }

    /// Quasi-polar parts from `(Cs, Sn)` directly (no table lookup).
    pub fn quasi_polar_parts_cs_sn<S: Scalar<T>>(&self, s: S, cs: S, sn: S) -> Result<(S, S)> {
        let sig = self.poly()?;
        let l = self
            .scheme
            .quasi_polar_order()
            .ok_or_else(|| Error::Chart("not a (1, l) type".into()))? as i32;
        let mut dh = Mat::<S>::zeros(2, 1);
        dh[(0, 0)] = -sn;
        dh[(1, 0)] = cs.powi(2 * l - 1);
        let (sigma, th) = self.profile_parts(sig, s, &[cs, sn], &dh)?;
        Ok((self.orient(sigma), self.orient(th[0])))
    }

    /// Solves `[α∘h | ∂h/∂θ] u = f̂` with `f̂ⱼ = s^{k+αⱼ} fⱼ(h/s^α)`.
    fn profile_parts<S: Scalar<T>>(
        &self,
        sig: &QhSignature<T>,
        s: S,
        h: &[S],
        dh: &Mat<S>,
    ) -> Result<(S, Vec<S>)> {
        let sc = &self.scheme;
        let n = sc.dim();
        let fhat: Vec<S> = sig
            .field
            .components()
            .iter()
            .enumerate()
            .map(|(j, comp)| {
                comp.iter().fold(S::zero(), |acc, m| {
                    let d = sc.k as u64 + sc.alpha[j] as u64 - m.weight(&sc.alpha);
                    let sp = if d == 0 { S::one() } else { s.powi(d as i32) };
                    acc + sp * eval_monomial(m, h)
                })
            })
            .collect();
        let mut a = Mat::<S>::zeros(n, n);
        for j in 0..n {
            a[(j, 0)] = S::lift(T::int(sc.alpha[j] as i64)) * h[j];
            for m in 0..n - 1 {
                a[(j, m + 1)] = dh[(j, m)];
            }
        }
        let u = linalg::solve(&a, &fhat)?;
        Ok((u[0], u[1..].to_vec()))
    }

    /// `∂ₛ` of the radial component on the horizon (`−σ(0, θ)`).
    pub fn radial_derivative(&self, theta: &[T]) -> Result<T> {
        let (sigma, _) = self.chart_parts(T::zero(), theta)?;
        Ok(self.orient(-sigma))
    }

    /// `dt/dτ` given the radial quantity of the chart (`w` for the global
    /// chart, `s` otherwise).
    pub fn time_rescale_from_radial(&self, radial: T) -> T {
        let k = self.scheme.k as i32;
        match self.chart {
            Chart::Global => radial
                .max(T::zero())
                .powf(T::int(k as i64) / T::int(2 * self.scheme.c as i64)),
            _ => radial.powi(k),
        }
    }

    /// `dt/dτ` at a chart state.
    pub fn time_rescale_factor(&self, state: &[T]) -> T {
        match self.chart {
            Chart::Global => self.time_rescale_from_radial(self.scheme.gap(state)),
            _ => self.time_rescale_from_radial(state[0]),
        }
    }

    /// Exact Jacobian (dual numbers).
    pub fn jacobian(&self, state: &[T]) -> Result<Mat<T>> {
        linalg::jacobian_dual(|v: &[Dual<T>]| self.eval(v), state)
    }

    /// Central-difference Jacobian.
    pub fn jacobian_fd(&self, state: &[T], h: T) -> Result<Mat<T>> {
        linalg::jacobian_fd(|v: &[T]| self.eval(v), state, h)
    }

    /// Maps a chart state to the global chart.
    pub fn to_global(&self, state: &[T]) -> Result<Vec<T>> {
        match self.chart {
            Chart::Global => Ok(state.to_vec()),
            Chart::Directional { index, sign } => self.scheme.chart_to_global(&DirectionalPoint {
                index,
                sign,
                s: state[0],
                theta: state[1..].to_vec(),
            }),
            Chart::QuasiPolar => {
                let trig = self
                    .trig
                    .as_ref()
                    .ok_or_else(|| Error::Chart("missing quasi-trig table".into()))?;
                self.scheme.quasi_polar_to_global(state[0], state[1], trig)
            }
        }
    }

    /// Maps a global point into the current chart.
    pub fn from_global(&self, x: &[T]) -> Result<Vec<T>> {
        match self.chart {
            Chart::Global => Ok(x.to_vec()),
            Chart::Directional { index, sign } => {
                let d = self.scheme.global_to_chart(x, index, sign)?;
                Ok(std::iter::once(d.s).chain(d.theta).collect())
            }
            Chart::QuasiPolar => {
                let trig = self
                    .trig
                    .as_ref()
                    .ok_or_else(|| Error::Chart("missing quasi-trig table".into()))?;
                let (s, th) = self.scheme.global_to_quasi_polar(x, trig)?;
                Ok(vec![s, th])
            }
        }
    }

    /// Maps original coordinates into the current chart.
    pub fn from_original(&self, y: &[T]) -> Result<Vec<T>> {
        match self.chart {
            Chart::Global => self.scheme.compactify(y),
            Chart::Directional { index, sign } => {
                let d = self.scheme.to_directional(y, index, sign)?;
                Ok(std::iter::once(d.s).chain(d.theta).collect())
            }
            Chart::QuasiPolar => {
                let trig = self
                    .trig
                    .as_ref()
                    .ok_or_else(|| Error::Chart("missing quasi-trig table".into()))?;
                let (s, th) = self.scheme.to_quasi_polar(y, trig)?;
                Ok(vec![s, th])
            }
        }
    }

    /// Original coordinates of a chart state (`s > 0` / inside the ball).
    pub fn to_original(&self, state: &[T]) -> Result<Vec<T>> {
        match self.chart {
            Chart::Global => self.scheme.decompactify(state),
            Chart::Directional { index, sign } => self.scheme.from_directional(&DirectionalPoint {
                index,
                sign,
                s: state[0],
                theta: state[1..].to_vec(),
            }),
            Chart::QuasiPolar => {
                let trig = self
                    .trig
                    .as_ref()
                    .ok_or_else(|| Error::Chart("missing quasi-trig table".into()))?;
                let s = state[0];
                if !(s > T::zero()) {
                    return Err(Error::Domain(
                        "point at infinity has no original coordinates".into(),
                    ));
                }
                let (c, sn) = trig.eval(state[1]);
                let l = self.scheme.alpha[1] as i32;
                Ok(vec![c / s, sn / s.powi(l)])
            }
        }
    }

    /// Profile `h(θ)` of the current directional/quasi-polar chart.
    pub fn profile(&self, theta: &[T]) -> Result<Vec<T>> {
        match self.chart {
            Chart::Directional { index, sign } => Ok(self.scheme.chart_profile(index, sign, theta)),
            Chart::QuasiPolar => {
                let trig = self
                    .trig
                    .as_ref()
                    .ok_or_else(|| Error::Chart("missing quasi-trig table".into()))?;
                let (c, s) = trig.eval(theta[0]);
                Ok(vec![c, s])
            }
            Chart::Global => Err(Error::Chart("global chart has no profile".into())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::Monomial;

    fn riccati() -> DesingField<f64> {
        let f = PolyVectorField::new(1, vec![vec![Monomial::new(vec![2], 1.0)]]).unwrap();
        DesingField::polynomial(QhSignature::new(f, &[1], 1).unwrap(), None, Chart::Global).unwrap()
    }

    #[test]
    fn riccati_global_closed_form() {
        let g = riccati();
        for x in [-0.9, -0.3, 0.0, 0.4, 0.99] {
            let v = g.eval_real(&[x]).unwrap()[0];
            assert!((v - x * x * (1.0 - x * x)).abs() < 1e-15);
        }
    }

    #[test]
    fn reversal_negates() {
        let g = riccati();
        let r = g.reversed();
        assert_eq!(
            g.eval_real(&[0.5]).unwrap()[0],
            -r.eval_real(&[0.5]).unwrap()[0]
        );
    }

    #[test]
    fn two_fluid_needs_ordered_densities() {
        let p = TwoFluidField {
            rho1: 2.0,
            rho2: 1.0,
            c: 0.0,
            c1: 0.0,
            c2: 0.0,
        };
        assert!(DesingField::two_fluid(p).is_err());
    }
}
