//! Sparse multivariate polynomial vector fields.

use crate::error::{Error, Result};
use crate::scalar::{Real, Scalar};
use num_traits::Num;
use std::collections::BTreeMap;

/// A single term `coefficient · x^exponents`.
#[derive(Clone, Debug, PartialEq)]
pub struct Monomial<T> {
    pub exponents: Vec<u32>,
    pub coefficient: T,
}

impl<T> Monomial<T> {
    pub fn new(exponents: Vec<u32>, coefficient: T) -> Self {
        Monomial {
            exponents,
            coefficient,
        }
    }

    /// Quasi-homogeneous weight `Σ αᵢ eᵢ`.
    pub fn weight(&self, alpha: &[u32]) -> u64 {
        weight(&self.exponents, alpha)
    }

    pub fn degree(&self) -> u32 {
        self.exponents.iter().sum()
    }
}

/// Quasi-homogeneous weight of a multi-index.
pub fn weight(exponents: &[u32], alpha: &[u32]) -> u64 {
    exponents
        .iter()
        .zip(alpha)
        .map(|(&e, &a)| e as u64 * a as u64)
        .sum()
}

/// A polynomial vector field `f: Rⁿ → Rⁿ`, one list of monomials per component.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyVectorField<T> {
    dim: usize,
    components: Vec<Vec<Monomial<T>>>,
}

impl<T: Clone + Num> PolyVectorField<T> {
    /// Builds a field, merging repeated multi-indices and dropping zero terms.
    pub fn new(dim: usize, components: Vec<Vec<Monomial<T>>>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Invalid("dimension must be positive".into()));
        }
        if components.len() != dim {
            return Err(Error::Invalid(format!(
                "expected {dim} components, found {}",
                components.len()
            )));
        }
        let mut canon = Vec::with_capacity(dim);
        for (j, comp) in components.into_iter().enumerate() {
            let mut merged: BTreeMap<Vec<u32>, T> = BTreeMap::new();
            for m in comp {
                if m.exponents.len() != dim {
                    return Err(Error::Invalid(format!(
                        "component {j}: exponent vector of length {} in dimension {dim}",
                        m.exponents.len()
                    )));
                }
                let slot = merged.entry(m.exponents).or_insert_with(T::zero);
                *slot = slot.clone() + m.coefficient;
            }
            canon.push(
                merged
                    .into_iter()
                    .filter(|(_, c)| !c.is_zero())
                    .map(|(e, c)| Monomial::new(e, c))
                    .collect(),
            );
        }
        Ok(PolyVectorField {
            dim,
            components: canon,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn components(&self) -> &[Vec<Monomial<T>>] {
        &self.components
    }

    pub fn component(&self, j: usize) -> &[Monomial<T>] {
        &self.components[j]
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(Vec::is_empty)
    }

    /// Keeps only the monomials accepted by `keep(component, monomial)`.
    pub fn filter(&self, keep: impl Fn(usize, &Monomial<T>) -> bool) -> Self {
        let components = self
            .components
            .iter()
            .enumerate()
            .map(|(j, c)| c.iter().filter(|m| keep(j, m)).cloned().collect())
            .collect();
        PolyVectorField {
            dim: self.dim,
            components,
        }
    }

    pub fn map_coefficients<U: Clone + Num>(&self, f: impl Fn(&T) -> U) -> PolyVectorField<U> {
        let components = self
            .components
            .iter()
            .map(|c| {
                c.iter()
                    .map(|m| Monomial::new(m.exponents.clone(), f(&m.coefficient)))
                    .collect()
            })
            .collect();
        PolyVectorField::new(self.dim, components).expect("shape preserved")
    }

    /// Sum of two fields of equal dimension.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::Invalid("dimension mismatch".into()));
        }
        let components = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a.iter().chain(b).cloned().collect())
            .collect();
        Self::new(self.dim, components)
    }

    /// Exact evaluation by repeated multiplication (works for rationals).
    pub fn eval_exact(&self, x: &[T]) -> Vec<T> {
        self.components
            .iter()
            .map(|comp| {
                comp.iter().fold(T::zero(), |acc, m| {
                    let mut term = m.coefficient.clone();
                    for (xi, &e) in x.iter().zip(&m.exponents) {
                        for _ in 0..e {
                            term = term * xi.clone();
                        }
                    }
                    acc + term
                })
            })
            .collect()
    }
}

impl<T: Real> PolyVectorField<T> {
    /// Evaluates the field at `x` in any scalar type carrying `T`.
    pub fn eval<S: Scalar<T>>(&self, x: &[S]) -> Vec<S> {
        self.components
            .iter()
            .map(|comp| {
                comp.iter()
                    .fold(S::zero(), |acc, m| acc + eval_monomial(m, x))
            })
            .collect()
    }
}

/// `coefficient · x^e` with integer powers.
pub fn eval_monomial<T: Real, S: Scalar<T>>(m: &Monomial<T>, x: &[S]) -> S {
    m.exponents
        .iter()
        .zip(x)
        .filter(|(&e, _)| e > 0)
        .fold(S::lift(m.coefficient), |acc, (&e, &xi)| {
            acc * xi.powi(e as i32)
        })
}
