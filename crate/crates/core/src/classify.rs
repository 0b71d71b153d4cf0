//! Types of (α,β)-metrics under the group generated by `g_u` and `h_v`.
//!
//! A solution of the φ-equation is fixed by its quadruple `(k1, k2, k3, ε)`.
//! The group acts on quadruples by
//!
//! ```text
//! g_u : (k1, k2, k3, ε) ↦ (k1+u, k2+(k1+k3)u+u², k3+u, ε)
//! h_v : (k1, k2, k3, ε) ↦ (v²k1, v⁴k2, v²k3, vε)
//! ```
//!
//! and the pair `(p, q) = (√Δ₂/Δ₃, ε⁴/Δ₂)` is a complete invariant, where
//! `Δ₁ = (k1+k3)² − 4k2`, `Δ₂ = 4(k1k3 − k2)`, `Δ₃ = k1 − k3`.
//!
//! `p` is kept in real arithmetic: an imaginary `p` is stored by its
//! imaginary part.

use std::fmt;

use crate::deform::{factor_pair, inverse_chain, ScalarFactor};
use crate::error::{GeomError, Result};
use crate::field::{Form, Metric};
use crate::phi::{OdeParams, PhiSpec};
use crate::scalar::HyperDual;

use num_traits::{Float, One};

/// Parameters `(k1, k2, k3, ε)` of a φ-equation solution.
pub type Quadruple = OdeParams<f64>;

/// Relative tolerance of [`same_type`].
pub const TYPE_TOL: f64 = 1e-9;

/// `g_u` on a quadruple.
pub fn transform_g(u: f64, k: &Quadruple) -> Quadruple {
    k.transform_g(u)
}

/// `h_v` on a quadruple.
pub fn transform_h(v: f64, k: &Quadruple) -> Result<Quadruple> {
    k.transform_h(v)
}

/// The invariant `p`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PValue {
    /// `Δ₂ = 0`
    Zero,
    /// `Δ₂ > 0`: `√Δ₂/Δ₃`
    Real(f64),
    /// `Δ₂ < 0`: `p = i·v` with `v = √|Δ₂|/Δ₃`
    Imag(f64),
    /// `Δ₂ > 0`, `Δ₃ = 0`
    Inf,
    /// `Δ₂ < 0`, `Δ₃ = 0`
    ImagInf,
}

/// The invariant `q`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum QValue {
    /// `ε = 0`
    Zero,
    /// `ε⁴/Δ₂`
    Finite(f64),
    /// `ε ≠ 0`, `Δ₂ = 0`
    Inf,
}

impl fmt::Display for PValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PValue::Zero => write!(f, "0"),
            PValue::Real(v) => write!(f, "{v}"),
            PValue::Imag(v) => write!(f, "{v}i"),
            PValue::Inf => write!(f, "inf"),
            PValue::ImagInf => write!(f, "i*inf"),
        }
    }
}

impl fmt::Display for QValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QValue::Zero => write!(f, "0"),
            QValue::Finite(v) => write!(f, "{v}"),
            QValue::Inf => write!(f, "inf"),
        }
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= TYPE_TOL * a.abs().max(b.abs()).max(1e-300)
}

impl PValue {
    /// Tag and value equality.
    pub fn same(&self, other: &PValue) -> bool {
        match (self, other) {
            (PValue::Real(a), PValue::Real(b)) | (PValue::Imag(a), PValue::Imag(b)) => close(*a, *b),
            _ => std::mem::discriminant(self) == std::mem::discriminant(other),
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            PValue::Zero => "zero",
            PValue::Real(_) => "real",
            PValue::Imag(_) => "imag",
            PValue::Inf => "inf",
            PValue::ImagInf => "imag_inf",
        }
    }

    /// Real or imaginary part, when finite.
    pub fn value(&self) -> Option<f64> {
        match self {
            PValue::Zero => Some(0.0),
            PValue::Real(v) | PValue::Imag(v) => Some(*v),
            _ => None,
        }
    }
}

impl QValue {
    pub fn same(&self, other: &QValue) -> bool {
        match (self, other) {
            (QValue::Finite(a), QValue::Finite(b)) => close(*a, *b),
            _ => std::mem::discriminant(self) == std::mem::discriminant(other),
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            QValue::Zero => "zero",
            QValue::Finite(_) => "finite",
            QValue::Inf => "inf",
        }
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            QValue::Zero => Some(0.0),
            QValue::Finite(v) => Some(*v),
            QValue::Inf => None,
        }
    }
}

/// `(Δ₁, Δ₂, Δ₃, p, q)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InvariantSignature {
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
    pub p: PValue,
    pub q: QValue,
}

impl InvariantSignature {
    /// `|Δ₁ − Δ₂ − Δ₃²|` relative to the largest term.
    pub fn identity_residual(&self) -> f64 {
        let scale = self.d1.abs().max(self.d2.abs()).max(self.d3 * self.d3).max(1.0);
        (self.d1 - self.d2 - self.d3 * self.d3).abs() / scale
    }
}

/// Scale of a quadruple for zero tests.
fn scale(k: &Quadruple) -> f64 {
    1.0 + k.k1.abs() + k.k3.abs() + k.k2.abs().sqrt()
}

fn zero_tol(k: &Quadruple) -> f64 {
    let m = scale(k);
    1e-12 * m * m
}

pub fn invariants(k: &Quadruple) -> InvariantSignature {
    let d1 = (k.k1 + k.k3).powi(2) - 4.0 * k.k2;
    let d2 = 4.0 * (k.k1 * k.k3 - k.k2);
    let d3 = k.k1 - k.k3;
    let tol = zero_tol(k);
    let d2_zero = d2.abs() <= tol;
    let d3_zero = d3.abs() <= 1e-12 * scale(k);
    let p = if d2_zero {
        PValue::Zero
    } else if d3_zero {
        if d2 > 0.0 {
            PValue::Inf
        } else {
            PValue::ImagInf
        }
    } else if d2 > 0.0 {
        PValue::Real(d2.sqrt() / d3)
    } else {
        PValue::Imag((-d2).sqrt() / d3)
    };
    let q = if k.eps == 0.0 {
        QValue::Zero
    } else if d2_zero {
        QValue::Inf
    } else {
        QValue::Finite(k.eps.powi(4) / d2)
    };
    InvariantSignature { d1, d2, d3, p, q }
}

/// Equality of `(p, q)`.
pub fn same_type(a: &Quadruple, b: &Quadruple) -> bool {
    let (sa, sb) = (invariants(a), invariants(b));
    sa.p.same(&sb.p) && sa.q.same(&sb.q)
}

/// The three canonical equations.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReducedKind {
    /// `(1 − s²)φ″ = 2σ(φ − sφ′)`
    D1p,
    /// `φ″ = 2σ(φ − sφ′)`, `σ = ±1`
    D1z,
    /// `(1 + 2σs² + s⁴)φ″ = s²(φ − sφ′)`, `|σ| < 1`
    D1n,
}

impl fmt::Display for ReducedKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ReducedKind::D1p => "D1p",
            ReducedKind::D1z => "D1z",
            ReducedKind::D1n => "D1n",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReducedForm {
    pub kind: ReducedKind,
    pub sigma: f64,
}

impl ReducedForm {
    pub fn new(kind: ReducedKind, sigma: f64) -> Result<Self> {
        let ok = match kind {
            ReducedKind::D1p => sigma != 0.0 && sigma != -0.5,
            ReducedKind::D1z => sigma == 1.0 || sigma == -1.0,
            ReducedKind::D1n => sigma.abs() < 1.0,
        };
        if !ok || !sigma.is_finite() {
            return Err(GeomError::InvalidParameter(format!("sigma = {sigma} is not admissible for {kind}")));
        }
        Ok(ReducedForm { kind, sigma })
    }

    /// `(k1, k2, k3)` of the reduced equation, with the given `ε`.
    pub fn quadruple(&self, eps: f64) -> Quadruple {
        let s = self.sigma;
        match self.kind {
            ReducedKind::D1p => OdeParams::new(2.0 * s, 0.0, -2.0 * s - 1.0, eps),
            ReducedKind::D1z => OdeParams::new(2.0 * s, 0.0, -2.0 * s, eps),
            ReducedKind::D1n => OdeParams::new(0.0, 1.0, 2.0 * s, eps),
        }
    }

    /// The tabulated `p`.
    pub fn table_p(&self) -> PValue {
        let s = self.sigma;
        match self.kind {
            ReducedKind::D1p => {
                let r = -2.0 * s * (2.0 * s + 1.0);
                let d = 4.0 * s + 1.0;
                if d == 0.0 {
                    PValue::Inf
                } else if r > 0.0 {
                    PValue::Real(2.0 * r.sqrt() / d)
                } else {
                    PValue::Imag(2.0 * (-r).sqrt() / d)
                }
            }
            // √(−σ²)/σ = i·sign(σ)
            ReducedKind::D1z => PValue::Imag(s.signum()),
            ReducedKind::D1n => {
                if s == 0.0 {
                    PValue::ImagInf
                } else {
                    PValue::Imag(-1.0 / s)
                }
            }
        }
    }

    /// Whether `p` lies in the tabulated range of this kind.
    pub fn in_range(&self, p: &PValue) -> bool {
        match (self.kind, p) {
            (ReducedKind::D1p, PValue::Real(v)) => *v != 0.0,
            (ReducedKind::D1p, PValue::Inf) => true,
            (ReducedKind::D1p, PValue::Imag(v)) => v.abs() < 1.0,
            (ReducedKind::D1z, PValue::Imag(v)) => (v.abs() - 1.0).abs() < 1e-12,
            (ReducedKind::D1n, PValue::Imag(v)) => v.abs() > 1.0,
            (ReducedKind::D1n, PValue::ImagInf) => true,
            _ => false,
        }
    }
}

/// One group element.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Transform {
    G(f64),
    H(f64),
}

impl Transform {
    pub fn apply(&self, k: &Quadruple) -> Result<Quadruple> {
        match *self {
            Transform::G(u) => Ok(k.transform_g(u)),
            Transform::H(v) => k.transform_h(v),
        }
    }

    /// The same element acting on φ.
    pub fn apply_phi(&self, phi: PhiSpec<f64>) -> PhiSpec<f64> {
        match *self {
            Transform::G(u) => phi.g_transform(u),
            Transform::H(v) => phi.h_scale(v),
        }
    }
}

/// Transforms applied in order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Recipe {
    pub steps: Vec<Transform>,
}

impl Recipe {
    pub fn apply(&self, k: &Quadruple) -> Result<Quadruple> {
        self.steps.iter().try_fold(*k, |acc, t| t.apply(&acc))
    }
}

/// Canonical form of `k`, with the transforms taking `k` to it.
pub fn reduce(k: &Quadruple) -> Result<(ReducedForm, Recipe)> {
    let sig = invariants(k);
    if sig.p == PValue::Zero {
        return Err(GeomError::InvalidParameter(
            "Delta2 = 0 (Randers or Riemannian type) has no reduced form".into(),
        ));
    }
    let tol = zero_tol(k);
    let c = k.k1 + k.k3;
    let mut steps = Vec::new();
    let (kind, sigma) = if sig.d1.abs() <= tol {
        let u = -0.5 * c;
        steps.push(Transform::G(u));
        let k1 = k.transform_g(u).k1;
        let v = (2.0 / k1.abs()).sqrt();
        steps.push(Transform::H(v));
        (ReducedKind::D1z, k1.signum())
    } else if sig.d1 > 0.0 {
        // Root of u² + cu + k2 = 0 giving k1 + k3 = −√Δ₁ afterwards.
        let q = sig.d1.sqrt();
        let u = if c > 0.0 { -0.5 * (c + q) } else { k.k2 / (-0.5 * (c - q)) };
        steps.push(Transform::G(u));
        let kp = k.transform_g(u);
        let v = (1.0 / (kp.k1 + kp.k3).abs()).sqrt();
        steps.push(Transform::H(v));
        let kr = kp.transform_h(v)?;
        (ReducedKind::D1p, 0.5 * kr.k1)
    } else {
        steps.push(Transform::G(-k.k1));
        let kp = k.transform_g(-k.k1);
        let v = kp.k2.powf(-0.25);
        steps.push(Transform::H(v));
        (ReducedKind::D1n, 0.5 * v * v * kp.k3)
    };
    let form = ReducedForm { kind, sigma };
    if !form.table_p().same(&sig.p) {
        return Err(GeomError::InvalidParameter(format!(
            "reduced form {kind} sigma={sigma} has p = {}, quadruple has p = {}",
            form.table_p(),
            sig.p
        )));
    }
    Ok((form, Recipe { steps }))
}

/// Named types used in reports.
pub fn type_name(k: &Quadruple) -> &'static str {
    let sig = invariants(k);
    match (sig.p, sig.q) {
        (PValue::Zero, QValue::Zero) => "riemannian",
        (PValue::Zero, _) => "randers",
        _ if same_type(k, &OdeParams::new(2.0, 0.0, -3.0, 2.0)) => "berwald",
        (_, QValue::Zero) => "reversible",
        _ => "general",
    }
}

/// `exp(−σ/(2√(1−σ²))·atan((σ+t)/√(1−σ²)))` on hyper-duals.
fn d1n_exp(sigma: f64, t: HyperDual<f64>) -> HyperDual<f64> {
    let w = (1.0 - sigma * sigma).sqrt();
    let arg = (HyperDual::constant(sigma) + t) / HyperDual::constant(w);
    (HyperDual::constant(-sigma / (2.0 * w)) * arg.atan()).exp()
}

/// The constant by which the `D1n` canonical pair differs from the inverse
/// chain of its quadruple: `exp(−σ/(2√(1−σ²))·atan(σ/√(1−σ²)))`.
pub fn d1n_constant(sigma: f64) -> f64 {
    d1n_exp(sigma, HyperDual::constant(0.0)).re
}

/// The canonical `(α, β)` built from a flat `ᾱ` and a closed conformal `β̄`.
pub fn canonical_pair(form: &ReducedForm, abar: &Metric, bbar: &Form) -> Result<(Metric, Form)> {
    let s = form.sigma;
    let one = HyperDual::<f64>::one;
    let (a, b, c) = match form.kind {
        ReducedKind::D1p => {
            crate::deform::check_on_samples(abar.as_ref(), bbar.as_ref(), "1 - b^2", |t| 1.0 - t)?;
            (
                ScalarFactor::new("(1-t)^(-2s-1)", move |t| (one() - t).powf(HyperDual::constant(-2.0 * s - 1.0))),
                ScalarFactor::new("(1-t)^(-2s-2)", move |t| (one() - t).powf(HyperDual::constant(-2.0 * s - 2.0))),
                ScalarFactor::new("(1-t)^(-s-1)", move |t| (one() - t).powf(HyperDual::constant(-s - 1.0))),
            )
        }
        ReducedKind::D1z => (
            ScalarFactor::new("exp(2 s t)", move |t| (HyperDual::constant(2.0 * s) * t).exp()),
            ScalarFactor::constant(0.0),
            ScalarFactor::new("exp(s t)", move |t| (HyperDual::constant(s) * t).exp()),
        ),
        ReducedKind::D1n => {
            let d = move |t: HyperDual<f64>| one() + HyperDual::constant(2.0 * s) * t + t * t;
            (
                ScalarFactor::new("E^2/sqrt(D)", move |t| {
                    let e = d1n_exp(s, t);
                    e * e / d(t).sqrt()
                }),
                ScalarFactor::new("-E^2(2s+t)/D^(3/2)", move |t| {
                    let e = d1n_exp(s, t);
                    -e * e * (HyperDual::constant(2.0 * s) + t) / d(t).powf(HyperDual::constant(1.5))
                }),
                ScalarFactor::new("E/D^(3/4)", move |t| d1n_exp(s, t) / d(t).powf(HyperDual::constant(0.75))),
            )
        }
    };
    Ok(factor_pair(abar, bbar, a, b, c))
}

/// [`inverse_chain`] of the reduced quadruple, scaled to match
/// [`canonical_pair`] (a constant homothety in the `D1n` case).
pub fn canonical_via_chain(form: &ReducedForm, abar: &Metric, bbar: &Form) -> Result<(Metric, Form)> {
    let k = form.quadruple(0.0);
    let (a, b) = inverse_chain(abar, bbar, &k)?;
    if form.kind != ReducedKind::D1n {
        return Ok((a, b));
    }
    let c = d1n_constant(form.sigma);
    Ok(factor_pair(&a, &b, ScalarFactor::constant(c * c), ScalarFactor::constant(0.0), ScalarFactor::constant(c)))
}

/// `φ̃ = φ − φ′(0)s` and the coefficient `−φ′(0)` of `θ = −φ′(0)β`.
pub fn reversibilize(phi: &PhiSpec<f64>) -> Result<(PhiSpec<f64>, f64)> {
    let slope = -phi.eps()?;
    Ok((PhiSpec::Shifted { inner: Box::new(phi.clone()), slope }, slope))
}

/// The literal circle coordinates
/// `(2√|Δ₂|Δ₃/(|Δ₂|+Δ₃²), 2Δ₃/(|Δ₂|+Δ₃²))`; `(0, 0)` when both vanish.
pub fn circle_coords(sig: &InvariantSignature) -> (f64, f64) {
    let d2 = if sig.p == PValue::Zero { 0.0 } else { sig.d2.abs() };
    let den = d2 + sig.d3 * sig.d3;
    if den == 0.0 {
        return (0.0, 0.0);
    }
    (2.0 * d2.sqrt() * sig.d3 / den, 2.0 * sig.d3 / den)
}

/// `min_± |x² + (y ± 1)² − 1|` for [`circle_coords`].
pub fn circle_residual(sig: &InvariantSignature) -> f64 {
    let (x, y) = circle_coords(sig);
    let a = (x * x + (y + 1.0).powi(2) - 1.0).abs();
    let b = (x * x + (y - 1.0).powi(2) - 1.0).abs();
    a.min(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(k1: f64, k2: f64, k3: f64, e: f64) -> Quadruple {
        OdeParams::new(k1, k2, k3, e)
    }

    #[test]
    fn berwald_signature() {
        let s = invariants(&q(2.0, 0.0, -3.0, 2.0));
        assert_eq!((s.d1, s.d2, s.d3), (1.0, -24.0, 5.0));
        match s.p {
            PValue::Imag(v) => assert!((v - 2.0 * 6f64.sqrt() / 5.0).abs() < 1e-15),
            p => panic!("{p:?}"),
        }
        assert_eq!(s.q, QValue::Finite(16.0 / -24.0));
    }

    #[test]
    fn riemann_and_randers() {
        let r = invariants(&q(0.0, 0.0, 0.0, 0.0));
        assert_eq!((r.p, r.q), (PValue::Zero, QValue::Zero));
        let r = invariants(&q(0.0, 0.0, 0.0, 1.0));
        assert_eq!((r.p, r.q), (PValue::Zero, QValue::Inf));
        assert_eq!(type_name(&q(0.0, 0.0, 0.0, 1.0)), "randers");
        assert_eq!(type_name(&q(3.0, 0.0, -2.0, 2.0)), "berwald");
    }

    #[test]
    fn h_example() {
        let k = transform_h(2.0, &q(1.0, 1.0, 1.0, 1.0)).unwrap();
        assert_eq!((k.k1, k.k2, k.k3, k.eps), (4.0, 16.0, 4.0, 2.0));
        assert!(transform_h(0.0, &k).is_err());
    }

    #[test]
    fn reductions() {
        let (f, r) = reduce(&q(2.0, 0.0, -3.0, 2.0)).unwrap();
        assert_eq!(f.kind, ReducedKind::D1p);
        assert!((f.sigma - 1.0).abs() < 1e-14);
        let k = r.apply(&q(2.0, 0.0, -3.0, 2.0)).unwrap();
        assert!((k.k1 - 2.0).abs() < 1e-14 && k.k2.abs() < 1e-14 && (k.k3 + 3.0).abs() < 1e-14);

        let (f, _) = reduce(&q(2.0, 0.0, -2.0, 1.0)).unwrap();
        assert_eq!((f.kind, f.sigma), (ReducedKind::D1z, 1.0));
        assert_eq!(f.table_p(), PValue::Imag(1.0));

        let (f, _) = reduce(&q(0.0, 1.0, 1.0, 0.0)).unwrap();
        assert_eq!(f.kind, ReducedKind::D1n);
        assert!((f.sigma - 0.5).abs() < 1e-15);
        assert_eq!(f.table_p(), PValue::Imag(-2.0));
        assert!(reduce(&q(0.0, 0.0, 0.0, 1.0)).is_err());
    }

    #[test]
    fn circle_literal() {
        let (x, y) = circle_coords(&invariants(&q(2.0, 0.0, -3.0, 2.0)));
        assert!((x - 2.0 * 24f64.sqrt() * 5.0 / 49.0).abs() < 1e-15);
        assert!((y - 10.0 / 49.0).abs() < 1e-15);
        assert_eq!(circle_coords(&invariants(&q(0.0, 0.0, 0.0, 0.0))), (0.0, 0.0));
        assert!(circle_residual(&invariants(&q(2.0, 0.0, -3.0, 2.0))) > 0.5);
    }

    #[test]
    fn reversible_berwald() {
        let (p, c) = reversibilize(&PhiSpec::Named(crate::phi::NamedPhi::Berwald)).unwrap();
        assert_eq!(c, -2.0);
        for s in [-0.5, 0.0, 0.3] {
            assert!((p.value(s).unwrap() - (1.0 + s * s)).abs() < 1e-15);
        }
    }
}
