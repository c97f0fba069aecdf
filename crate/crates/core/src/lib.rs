//! Dynamics at infinity for asymptotically quasi-homogeneous polynomial
//! vector fields: compactification, desingularization, classification of
//! equilibria on the horizon and blow-up time/rate estimation.
//!
//! The numerical core is generic over the scalar type (`f32`, `f64`); exact
//! signature bookkeeping works over any `num_traits::Num` coefficient ring,
//! including `num_rational::Ratio`. The aliases below fix `f64`.

// `!(x > 0)` is used deliberately so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod compactify;
pub mod desing;
pub mod error;
pub mod flow;
pub mod infinity;
pub mod linalg;
pub mod model;
pub mod ode;
pub mod poly;
pub mod qhfield;
pub mod quadrature;
pub mod quasitrig;
pub mod scalar;
pub mod scenarios;

pub use error::{Error, Result};
pub use scalar::{Dual, Real, Scalar};

pub type PolyVectorField64 = poly::PolyVectorField<f64>;
pub type QhSignature64 = qhfield::QhSignature<f64>;
pub type CompactScheme64 = compactify::CompactScheme<f64>;
pub type DesingField64 = desing::DesingField<f64>;
pub type QuasiTrigTable64 = quasitrig::QuasiTrigTable<f64>;
pub type Trajectory64 = flow::Trajectory<f64>;
pub type FlowOptions64 = flow::FlowOptions<f64>;
pub type BlowupEstimate64 = flow::BlowupEstimate<f64>;
pub type HorizonEquilibrium64 = infinity::HorizonEquilibrium<f64>;
pub type Scenario64 = scenarios::Scenario<f64>;
/// Exact rational coefficients for signature detection and C¹ certificates.
pub type RationalField = poly::PolyVectorField<num_rational::Ratio<i64>>;
