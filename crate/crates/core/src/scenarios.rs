//! Built-in models: Liénard oscillators, the Keyfitz–Kranzer traveling-wave
//! system, the two-fluid viscous-shock system and the scalar Riccati equation.

use crate::compactify::Sign;
use crate::desing::{Chart, DesingField, TwoFluidField};
use crate::error::{Error, Result};
use crate::flow::{integrate, FlowOptions, Target, Termination, Trajectory};
use crate::poly::{Monomial, PolyVectorField};
use crate::qhfield::QhSignature;
use crate::scalar::Real;
use serde::Serialize;

/// A named reference constant with a note on where it comes from.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Reference {
    pub name: String,
    pub value: f64,
    pub provenance: String,
}

impl Reference {
    fn new(name: &str, value: f64, provenance: &str) -> Self {
        Reference {
            name: name.into(),
            value,
            provenance: provenance.into(),
        }
    }
}

/// Boundary data of the two-fluid traveling-wave problem.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TwoFluidData<T> {
    pub rho1: T,
    pub rho2: T,
    /// `(β, v)` states at `ζ → ∓∞`.
    pub u_left: (T, T),
    pub u_right: (T, T),
    pub c: T,
    pub c1_left: T,
    pub c2_left: T,
    pub c1_right: T,
    pub c2_right: T,
}

impl<T: Real> TwoFluidData<T> {
    /// Derives the wave speed and integration constants from the boundary states.
    pub fn new(rho1: T, rho2: T, u_left: (T, T), u_right: (T, T)) -> Result<Self> {
        if !(rho1 > T::zero() && rho1 < rho2) {
            return Err(Error::Invalid(
                "two-fluid densities need 0 < rho1 < rho2".into(),
            ));
        }
        for (name, (b, v)) in [("left", u_left), ("right", u_right)] {
            if !(b >= rho1 && b <= rho2) {
                return Err(Error::Invalid(format!(
                    "{name} volume variable {b} outside [rho1, rho2]"
                )));
            }
            if !v.is_finite() || v == T::zero() {
                return Err(Error::Invalid(format!(
                    "{name} velocity must be finite and nonzero"
                )));
            }
        }
        if u_left.0 == u_right.0 {
            return Err(Error::Invalid(
                "wave speed undefined for beta_L = beta_R".into(),
            ));
        }
        let shape = TwoFluidField {
            rho1,
            rho2,
            c: T::zero(),
            c1: T::zero(),
            c2: T::zero(),
        };
        let (bl, vl) = u_left;
        let (br, vr) = u_right;
        let c = (vr * shape.b1(br) - vl * shape.b1(bl)) / (br - bl);
        Ok(TwoFluidData {
            rho1,
            rho2,
            u_left,
            u_right,
            c,
            c1_left: vl * shape.b1(bl) - c * bl,
            c2_left: vl * vl * shape.b2(bl) - c * vl,
            c1_right: vr * shape.b1(br) - c * br,
            c2_right: vr * vr * shape.b2(br) - c * vr,
        })
    }

    /// Desingularized field with the left (`W₁` side) or right constants.
    pub fn field(&self, left: bool) -> Result<DesingField<T>> {
        let (c1, c2) = if left {
            (self.c1_left, self.c2_left)
        } else {
            (self.c1_right, self.c2_right)
        };
        DesingField::two_fluid(TwoFluidField {
            rho1: self.rho1,
            rho2: self.rho2,
            c: self.c,
            c1,
            c2,
        })
    }

    /// `T(U) = (β, 1/v)`, as a chart state `(s, θ) = (1/v, β)`.
    pub fn chart_state(u: (T, T)) -> Vec<T> {
        vec![u.1.recip(), u.0]
    }

    /// Closed-form eigenvalues `(μ₁, μ₂)` at `p₁ = (ρ₁, 0)` and `p₂ = (ρ₂, 0)`.
    pub fn eigenvalue_formulas(&self) -> [(T, T); 2] {
        let (r1, r2) = (self.rho1, self.rho2);
        let two = T::lit(2.0);
        let half = T::lit(0.5);
        [
            (two - (r1 + r2) / r1, -half * (T::one() - r2 / r1)),
            (two - (r1 + r2) / r2, -half * (T::one() - r1 / r2)),
        ]
    }
}

/// A registered model.
#[derive(Clone, Debug)]
pub struct Scenario<T: Real> {
    pub name: String,
    pub description: String,
    /// Field in the preferred chart with the default scheme.
    pub field: DesingField<T>,
    /// Alternative scheme used for figure reproduction (global chart).
    pub figure_field: Option<DesingField<T>>,
    pub references: Vec<Reference>,
    pub two_fluid: Option<TwoFluidData<T>>,
}

impl<T: Real> Scenario<T> {
    pub fn reference(&self, name: &str) -> Option<f64> {
        self.references
            .iter()
            .find(|r| r.name == name)
            .map(|r| r.value)
    }
}

fn mono<T: Real>(e: &[u32], c: f64) -> Monomial<T> {
    Monomial::new(e.to_vec(), T::lit(c))
}

/// `y₁' = y₂`, `y₂' = −y₁^{2n+1} − y₁ⁿ y₂`.
pub fn lienard_field<T: Real>(n: u32) -> Result<PolyVectorField<T>> {
    if n == 0 {
        return Err(Error::Invalid("Liénard order n must be at least 1".into()));
    }
    PolyVectorField::new(
        2,
        vec![
            vec![mono(&[0, 1], 1.0)],
            vec![mono(&[2 * n + 1, 0], -1.0), mono(&[n, 1], -1.0)],
        ],
    )
}

/// Liénard system of order `n`: type `(1, n+1)`, `k = n`, quasi-polar chart preferred.
pub fn lienard<T: Real>(n: u32) -> Result<Scenario<T>> {
    let f = lienard_field::<T>(n)?;
    let alpha = [1, n + 1];
    let sig = QhSignature::new(f, &alpha, n)?;
    let field = DesingField::polynomial(sig.clone(), None, Chart::QuasiPolar)?;
    let a_fig = vec![T::one(), T::int(n as i64 + 1)];
    let figure_field = DesingField::polynomial(sig, Some(a_fig), Chart::Global)?;
    let mut references = Vec::new();
    if n == 2 {
        references.push(Reference::new(
            "t_max_backward_from_(0.1,0.1)",
            20.785,
            "approximate blow-up time quoted for the backward orbit from x = (0.1, 0.1), a = (1, 3)",
        ));
    }
    Ok(Scenario {
        name: "lienard".into(),
        description: format!(
            "Liénard oscillator y1' = y2, y2' = -y1^{} - y1^{} y2",
            2 * n + 1,
            n
        ),
        field,
        figure_field: Some(figure_field),
        references,
        two_fluid: None,
    })
}

/// Closed-form global-chart field of the Liénard system with `a = (1, n+1)`, time reversed.
pub fn lienard_backward_closed_form<T: Real>(n: u32, x: &[T]) -> [T; 2] {
    let (x1, x2) = (x[0], x[1]);
    let n1 = T::int(n as i64 + 1);
    [
        -x2 - x1.powi(n as i32 + 1) * x2 * x2,
        x1.powi(2 * n as i32 + 1) + x1.powi(n as i32) * x2 - n1 * x1.powi(n as i32) * x2.powi(3),
    ]
}

/// `u' = u² − v`, `v' = u³/3`.
pub fn keyfitz_kranzer_field<T: Real>() -> Result<PolyVectorField<T>> {
    PolyVectorField::new(
        2,
        vec![
            vec![mono(&[2, 0], 1.0), mono(&[0, 1], -1.0)],
            vec![Monomial::new(vec![3, 0], T::one() / T::lit(3.0))],
        ],
    )
}

/// Closed-form horizon equilibria `[p₁⁺, p₁⁻, p₂⁺, p₂⁻]` in the global chart with `a = (1, 2)`.
pub fn keyfitz_kranzer_equilibria<T: Real>() -> [[T; 2]; 4] {
    let s3 = T::lit(3.0).sqrt();
    let q = |v: T| v.sqrt();
    let x2_hi = q((T::lit(7.0) + T::lit(3.0) * s3) / T::lit(44.0));
    let x2_lo = q((T::lit(7.0) - T::lit(3.0) * s3) / T::lit(44.0));
    let x1_a = ((T::lit(15.0) - T::lit(3.0) * s3) / T::lit(22.0)).powf(T::lit(0.25));
    let x1_b = ((T::lit(15.0) + T::lit(3.0) * s3) / T::lit(22.0)).powf(T::lit(0.25));
    [[x1_b, x2_lo], [-x1_b, x2_lo], [x1_a, x2_hi], [-x1_a, x2_hi]]
}

/// Keyfitz–Kranzer system: type `(1, 2)`, `k = 1`, `a = (1, 2)`, global chart.
pub fn keyfitz_kranzer<T: Real>() -> Result<Scenario<T>> {
    let sig = QhSignature::new(keyfitz_kranzer_field::<T>()?, &[1, 2], 1)?;
    let field = DesingField::polynomial(sig, Some(vec![T::one(), T::lit(2.0)]), Chart::Global)?;
    let eq = keyfitz_kranzer_equilibria::<f64>();
    let mut references = Vec::new();
    for (name, p) in ["p1+", "p1-", "p2+", "p2-"].iter().zip(eq) {
        references.push(Reference::new(
            &format!("{name}.x1"),
            p[0],
            "closed-form horizon equilibrium",
        ));
        references.push(Reference::new(
            &format!("{name}.x2"),
            p[1],
            "closed-form horizon equilibrium",
        ));
    }
    for (name, v) in [
        ("p1+.mu_r", -0.7719863801113),
        ("p1+.mu_theta", -1.130266505985),
        ("p2+.mu_r", -0.1726609270826),
        ("p2+.mu_theta", 0.9434368505431),
    ] {
        references.push(Reference::new(name, v, "published quasi-polar eigenvalue"));
    }
    Ok(Scenario {
        name: "kk".into(),
        description: "Keyfitz-Kranzer traveling waves u' = u^2 - v, v' = u^3/3".into(),
        field,
        figure_field: None,
        references,
        two_fluid: None,
    })
}

/// Two-fluid viscous-shock system in the chart `(s, θ) = (1/v, β)`.
/// The registered field uses the left constants.
pub fn two_fluid<T: Real>(
    rho1: T,
    rho2: T,
    u_left: (T, T),
    u_right: (T, T),
) -> Result<Scenario<T>> {
    let data = TwoFluidData::new(rho1, rho2, u_left, u_right)?;
    let field = data.field(true)?;
    let [p1, p2] = data.eigenvalue_formulas();
    let references = vec![
        Reference::new("c", data.c.as_f64(), "wave speed from the boundary states"),
        Reference::new("p1.mu1", p1.0.as_f64(), "closed-form eigenvalue"),
        Reference::new("p1.mu2", p1.1.as_f64(), "closed-form eigenvalue"),
        Reference::new("p2.mu1", p2.0.as_f64(), "closed-form eigenvalue"),
        Reference::new("p2.mu2", p2.1.as_f64(), "closed-form eigenvalue"),
    ];
    Ok(Scenario {
        name: "two-fluid".into(),
        description: "two-fluid traveling waves beta' = v B1 - c beta - c1, v' = v^2 B2 - c v - c2"
            .into(),
        field,
        figure_field: None,
        references,
        two_fluid: Some(data),
    })
}

/// Shooting result for one connection of the two-fluid chain.
#[derive(Clone, Debug)]
pub struct Connection<T: Real> {
    pub name: &'static str,
    /// Whether the orbit reached its target within the stop radius.
    pub connected: bool,
    /// Closest approach to the target (chart coordinates).
    pub miss: T,
    pub trajectory: Trajectory<T>,
}

/// Eigenvector of the radial eigenvalue at `(0, θ)` with positive `s` part.
fn radial_eigenvector<T: Real>(field: &DesingField<T>, theta: T) -> Result<Vec<T>> {
    let j = field.jacobian(&[T::zero(), theta])?;
    let lam = j[(0, 0)];
    let v = vec![j[(1, 1)] - lam, -j[(1, 0)]];
    let n = (v[0] * v[0] + v[1] * v[1]).sqrt();
    let sgn = if v[0] < T::zero() {
        -T::one()
    } else {
        T::one()
    };
    Ok(v.into_iter().map(|x| sgn * x / n).collect())
}

/// Reproduces `W₁ : T(U_L) → p₂`, `W₂ : p₂ → p₁`, `W₃ : p₁ → T(U_R)` by
/// shooting from eigenvector offsets of size `delta`.
pub fn heteroclinic_chain<T: Real>(
    data: &TwoFluidData<T>,
    delta: T,
    opts: &FlowOptions<T>,
) -> Result<Vec<Connection<T>>> {
    let left = data.field(true)?;
    let right = data.field(false)?;
    let xl = TwoFluidData::chart_state(data.u_left);
    let xr = TwoFluidData::chart_state(data.u_right);
    let p1 = vec![T::zero(), data.rho1];
    let shoot = |name: &'static str,
                 f: &DesingField<T>,
                 start: Vec<T>,
                 target: Vec<T>,
                 at_inf: bool|
     -> Result<Connection<T>> {
        let mut o = opts.clone();
        o.targets = vec![Target::Equilibrium {
            state: target.clone(),
            at_infinity: at_inf,
        }];
        o.stop_on_target = true;
        let trajectory = integrate(f, &start, &o)?;
        let miss = trajectory.samples.iter().fold(T::infinity(), |m, s| {
            let d = s
                .state
                .iter()
                .zip(&target)
                .fold(T::zero(), |a, (&x, &y)| a + (x - y) * (x - y))
                .sqrt();
            m.min(d)
        });
        let connected = matches!(
            trajectory.termination,
            Termination::ConvergedToEquilibrium(0)
        );
        Ok(Connection {
            name,
            connected,
            miss,
            trajectory,
        })
    };
    let vs = radial_eigenvector(&left, data.rho2)?;
    let w1_start = vec![delta * vs[0], data.rho2 + delta * vs[1]];
    let w1 = shoot("W1", &left.reversed(), w1_start, xl, false)?;
    let w2 = shoot("W2", &left, vec![T::zero(), data.rho2 - delta], p1, true)?;
    let vu = radial_eigenvector(&right, data.rho1)?;
    let w3_start = vec![delta * vu[0], data.rho1 + delta * vu[1]];
    let w3 = shoot("W3", &right, w3_start, xr, false)?;
    Ok(vec![w1, w2, w3])
}

/// Default two-fluid data: `ρ = (1, 2)`, `U_L = (1.9, 4)`, `U_R = (1.5, 5)`.
pub fn two_fluid_default<T: Real>() -> Result<Scenario<T>> {
    two_fluid(
        T::one(),
        T::lit(2.0),
        (T::lit(1.9), T::lit(4.0)),
        (T::lit(1.5), T::lit(5.0)),
    )
}

/// The two-fluid chart used by all two-fluid fields.
pub fn two_fluid_chart() -> Chart {
    Chart::Directional {
        index: 1,
        sign: Sign::Plus,
    }
}

/// Scalar Riccati equation `y' = y²`.
pub fn riccati<T: Real>() -> Result<Scenario<T>> {
    let f = PolyVectorField::new(1, vec![vec![mono(&[2], 1.0)]])?;
    let sig = QhSignature::new(f, &[1], 1)?;
    let field = DesingField::polynomial(sig, None, Chart::Global)?;
    Ok(Scenario {
        name: "riccati".into(),
        description: "scalar Riccati equation y' = y^2".into(),
        field,
        figure_field: None,
        references: vec![Reference::new(
            "t_max_from_1",
            1.0,
            "exact solution 1/(1 - t)",
        )],
        two_fluid: None,
    })
}

/// Names of the registered scenarios with a one-line description.
pub fn catalog() -> Vec<(&'static str, &'static str)> {
    vec![
        (
            "lienard",
            "Liénard oscillator of order n (--n, default 2); periodic blow-up",
        ),
        (
            "kk",
            "Keyfitz-Kranzer traveling waves; four equilibria at infinity",
        ),
        (
            "two-fluid",
            "two-fluid viscous shock (--rho1 --rho2 --uL --uR); directional chart",
        ),
        ("riccati", "scalar y' = y^2; exact blow-up at t = 1"),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qhfield::{detect_signatures, validate_signature};

    #[test]
    fn lienard_signature_detected() {
        let f = lienard_field::<f64>(2).unwrap();
        assert!(detect_signatures(&f, 4).contains(&(vec![1, 3], 2)));
        assert_eq!(validate_signature(&f, &[1, 3]), Some(2));
    }

    #[test]
    fn lienard_closed_form_matches_desingularization() {
        for n in 1..=3 {
            let s = lienard::<f64>(n).unwrap();
            let g = s.figure_field.unwrap().reversed();
            for x in [[0.1, 0.1], [0.5, -0.2], [-0.3, 0.4]] {
                let v = g.eval_real(&x).unwrap();
                let w = lienard_backward_closed_form(n, &x);
                assert!(
                    (v[0] - w[0]).abs() < 1e-14 && (v[1] - w[1]).abs() < 1e-14,
                    "n={n} {v:?} {w:?}"
                );
            }
        }
    }

    #[test]
    fn kk_closed_forms_lie_on_horizon() {
        let s = keyfitz_kranzer::<f64>().unwrap();
        for p in keyfitz_kranzer_equilibria::<f64>() {
            assert!((s.field.scheme.energy(&p) - 1.0).abs() < 1e-14);
            let g = s.field.horizon_field(&p).unwrap();
            assert!(g.iter().all(|v| v.abs() < 1e-13), "{g:?}");
        }
    }

    #[test]
    fn two_fluid_rejects_bad_ranges() {
        assert!(two_fluid(2.0, 1.0, (1.5, 1.0), (1.6, 1.0)).is_err());
        assert!(two_fluid(1.0, 2.0, (2.5, 1.0), (1.6, 1.0)).is_err());
    }
}
