//! Numerical toolkit for projectively flat (α, β)-metrics.
//!
//! * [`scalar`], [`linalg`], [`field`], [`diffgeo`]: carriers, small dense
//!   matrices, metric and 1-form fields, Christoffel symbols, sprays and
//!   covariant derivatives.
//! * [`phi`]: the φ functions and the ODE they solve.
//! * [`ab_metric`]: assembled metrics `F = αφ(β/α)` and their sprays.
//! * [`deform`]: β-deformations and the chains between `(α, β)` and `(ᾱ, β̄)`.
//! * [`flatness`]: Hamel and Rapcsák residuals, geodesic integration.
//! * [`classify`]: invariants of quadruples and reduced forms.
//! * [`models`]: Funk, Berwald, space forms, conformal fields, the σ-family.
//! * [`expr`]: custom fields from coordinate expressions.
//! * [`fd`]: finite-difference oracles.
//!
//! Everything is generic over the real type; the aliases at the crate root
//! fix it to `f64`.

pub mod ab_metric;
pub mod classify;
pub mod deform;
pub mod diffgeo;
pub mod error;
pub mod expr;
pub mod fd;
pub mod field;
pub mod flatness;
pub mod linalg;
pub mod models;
pub mod phi;
pub mod quadrature;
pub mod sampling;
pub mod scalar;

pub use ab_metric::ABMetric;
pub use error::{GeomError, Result};
pub use field::{Form, Metric, MetricField, OneFormField, Vector, VectorField};
pub use linalg::Matrix;
pub use phi::{OdeParams, PhiSpec};
pub use scalar::{Dual, HyperDual, Real, Scalar};

pub type Matrix64 = linalg::Matrix<f64>;
pub type Dual64 = scalar::Dual<f64>;
pub type HyperDual64 = scalar::HyperDual<f64>;
pub type Quadruple = phi::OdeParams<f64>;
pub type Phi = phi::PhiSpec<f64>;
pub type Metric64 = field::Metric<f64>;
pub type Form64 = field::Form<f64>;

/// Library version.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
