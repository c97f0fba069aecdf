//! Quasi-homogeneous structure of polynomial vector fields: signature
//! detection, principal/residual decomposition and the C¹-extension test.

use crate::error::{Error, Result};
use crate::poly::{Monomial, PolyVectorField};
use num_integer::Integer;
use num_traits::Num;

/// A field together with a validated type `α` and order `k + 1`, split into
/// its quasi-homogeneous principal part and lower-order residual.
#[derive(Clone, Debug, PartialEq)]
pub struct QhSignature<T> {
    pub field: PolyVectorField<T>,
    pub alpha: Vec<u32>,
    pub k: u32,
    pub principal: PolyVectorField<T>,
    pub residual: PolyVectorField<T>,
}

/// Outcome of the C¹-extension test: an offending monomial has a weight
/// deficit `d` with `0 < d < 2c`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct C1Report {
    pub c1: bool,
    pub violations: Vec<C1Violation>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct C1Violation {
    pub component: usize,
    pub exponents: Vec<u32>,
    pub deficit: u64,
}

/// Index set `I_α = { i : αᵢ > 0 }`.
pub fn support(alpha: &[u32]) -> Vec<usize> {
    alpha
        .iter()
        .enumerate()
        .filter(|(_, &a)| a > 0)
        .map(|(i, _)| i)
        .collect()
}

/// `c = lcm { αᵢ : i ∈ I_α }`.
pub fn lcm_of(alpha: &[u32]) -> u32 {
    alpha
        .iter()
        .filter(|&&a| a > 0)
        .fold(1u32, |l, &a| l.lcm(&a))
}

/// Returns `Some(k)` when every non-zero component `j` has maximal weight
/// exactly `k + αⱼ` for a common `k ≥ 0`.
pub fn validate_signature<T: Clone + Num>(f: &PolyVectorField<T>, alpha: &[u32]) -> Option<u32> {
    if alpha.len() != f.dim() || alpha.iter().all(|&a| a == 0) {
        return None;
    }
    let mut k: Option<i64> = None;
    for (j, comp) in f.components().iter().enumerate() {
        let Some(top) = comp.iter().map(|m| m.weight(alpha)).max() else {
            continue;
        };
        let kj = top as i64 - alpha[j] as i64;
        match k {
            None => k = Some(kj),
            Some(prev) if prev != kj => return None,
            _ => {}
        }
    }
    k.filter(|&k| k >= 0).map(|k| k as u32)
}

/// Enumerates all admissible signatures with `αᵢ ≤ alpha_max`, `gcd(α) = 1`
/// and `k ≥ 1`, ordered by `k` then lexicographically by `α`.
pub fn detect_signatures<T: Clone + Num>(
    f: &PolyVectorField<T>,
    alpha_max: u32,
) -> Vec<(Vec<u32>, u32)> {
    let n = f.dim();
    let mut out = Vec::new();
    let mut alpha = vec![0u32; n];
    loop {
        let g = alpha.iter().fold(0u32, |g, &a| g.gcd(&a));
        if g == 1 {
            if let Some(k) = validate_signature(f, &alpha) {
                if k >= 1 {
                    out.push((alpha.clone(), k));
                }
            }
        }
        // Odometer increment over [0, alpha_max]^n.
        let mut i = n;
        loop {
            if i == 0 {
                out.sort_by(|a, b| a.1.cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
                return out;
            }
            i -= 1;
            if alpha[i] < alpha_max {
                alpha[i] += 1;
                break;
            }
            alpha[i] = 0;
        }
    }
}

/// Splits `f` into principal part (weight `k + αⱼ` in component `j`) and residual.
pub fn decompose<T: Clone + Num>(
    f: &PolyVectorField<T>,
    alpha: &[u32],
    k: u32,
) -> Result<QhSignature<T>> {
    match validate_signature(f, alpha) {
        Some(kk) if kk == k => {}
        Some(kk) => {
            return Err(Error::Invalid(format!(
                "type {alpha:?} gives order {kk}+1, not {k}+1"
            )));
        }
        None => {
            return Err(Error::Invalid(format!(
                "field is not asymptotically quasi-homogeneous of type {alpha:?}"
            )))
        }
    }
    let top = |j: usize, m: &Monomial<T>| m.weight(alpha) == k as u64 + alpha[j] as u64;
    Ok(QhSignature {
        field: f.clone(),
        alpha: alpha.to_vec(),
        k,
        principal: f.filter(top),
        residual: f.filter(|j, m| !top(j, m)),
    })
}

impl<T: Clone + Num> QhSignature<T> {
    /// Convenience constructor validating the signature.
    pub fn new(f: PolyVectorField<T>, alpha: &[u32], k: u32) -> Result<Self> {
        decompose(&f, alpha, k)
    }

    /// Weight deficit `(k + αⱼ) − weight` of a monomial in component `j`.
    pub fn deficit(&self, j: usize, m: &Monomial<T>) -> u64 {
        self.k as u64 + self.alpha[j] as u64 - m.weight(&self.alpha)
    }

    pub fn c(&self) -> u32 {
        lcm_of(&self.alpha)
    }
}

/// Checks the sufficient condition for the compactified field to be C¹ up to
/// the horizon: no monomial deficit in `{1, …, 2c − 1}`.
pub fn check_c1_extension<T: Clone + Num>(sig: &QhSignature<T>) -> C1Report {
    let two_c = 2 * sig.c() as u64;
    let mut violations = Vec::new();
    for (j, comp) in sig.field.components().iter().enumerate() {
        for m in comp {
            let d = sig.deficit(j, m);
            if d > 0 && d < two_c {
                violations.push(C1Violation {
                    component: j,
                    exponents: m.exponents.clone(),
                    deficit: d,
                });
            }
        }
    }
    C1Report {
        c1: violations.is_empty(),
        violations,
    }
}
