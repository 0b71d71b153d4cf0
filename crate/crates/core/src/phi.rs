//! The φ(s) function space.
//!
//! A [`PhiSpec`] evaluates φ, φ′ and φ″ at a real `s`; carriers receive φ
//! through [`PhiSpec::apply`], which lifts the real jet with
//! [`Scalar::chain`].
//!
//! Most specs come from the second-order equation
//!
//! ```text
//! {1 + (k1+k3)s² + k2 s⁴} φ″ = (k1 + k2 s²)(φ − sφ′),   φ(0) = 1, φ′(0) = ε
//! ```
//!
//! whose solutions are `φ = 1 + εs + ∫₀ˢ∫₀^τ g`, with
//! `g(σ) = (k1 + k2σ²)/(1 + (k1+k3)σ² + k2σ⁴) · f(σ)` and `f = φ − sφ′` known in
//! closed form.

use num_rational::Rational64;
use num_traits::{Float, One, Signed, Zero};

use crate::error::{GeomError, Result};
use crate::quadrature::integrate;
use crate::scalar::{HyperDual, Real, Scalar};

/// Default absolute quadrature tolerance.
pub const QUAD_TOL: f64 = 1e-12;
/// Default relative series truncation tolerance.
pub const SERIES_TOL: f64 = 1e-14;
/// Term cap for power series.
pub const SERIES_MAX_TERMS: usize = 200;
/// Series in s are only evaluated for |s| below this guard.
pub const SERIES_GUARD: f64 = 0.999;

/// Coefficients `(k1, k2, k3)` and the initial slope `ε = φ′(0)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OdeParams<R> {
    pub k1: R,
    pub k2: R,
    pub k3: R,
    pub eps: R,
    /// Whether `k2 ≠ k1·k3` was asserted at construction.
    pub non_randers: bool,
}

/// The five closed-form branches of `f`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FCase {
    /// k2 = 0, k1 + k3 = 0
    Exponential,
    /// k2 = 0, k1 + k3 ≠ 0
    Power,
    /// k2 ≠ 0, Δ₁ > 0
    PositiveDiscriminant,
    /// k2 ≠ 0, Δ₁ = 0
    ZeroDiscriminant,
    /// k2 ≠ 0, Δ₁ < 0
    NegativeDiscriminant,
}

impl<R: Real> OdeParams<R> {
    pub fn new(k1: R, k2: R, k3: R, eps: R) -> Self {
        OdeParams { k1, k2, k3, eps, non_randers: false }
    }

    /// Like [`OdeParams::new`] but rejects `k2 = k1·k3`.
    pub fn non_randers(k1: R, k2: R, k3: R, eps: R) -> Result<Self> {
        let p = Self::new(k1, k2, k3, eps);
        if (k2 - k1 * k3).abs() <= p.tie() {
            return Err(GeomError::InvalidParameter(format!(
                "k2 = k1*k3 ({k2} = {k1}*{k3}) describes a Randers-type metric"
            )));
        }
        Ok(OdeParams { non_randers: true, ..p })
    }

    pub fn from_f64(k1: f64, k2: f64, k3: f64, eps: f64) -> Self {
        Self::new(R::cst(k1), R::cst(k2), R::cst(k3), R::cst(eps))
    }

    pub fn with_eps(mut self, eps: R) -> Self {
        self.eps = eps;
        self
    }

    /// `k1 + k3`
    #[inline]
    pub fn c(&self) -> R {
        self.k1 + self.k3
    }

    /// `1 + (k1+k3)t + k2t²`
    #[inline]
    pub fn denom(&self, t: R) -> R {
        R::one() + self.c() * t + self.k2 * t * t
    }

    /// Threshold below which `k2`, `Δ₁` and `k1+k3` count as zero.
    pub fn tie(&self) -> R {
        let m = R::one() + self.k1.abs() + self.k3.abs();
        R::cst(1e-13) * m * m
    }

    /// `Δ₁ = (k1+k3)² − 4k2`
    pub fn delta1(&self) -> R {
        self.c() * self.c() - R::cst(4.0) * self.k2
    }

    pub fn f_case(&self) -> FCase {
        let tie = self.tie();
        if self.k2.abs() < tie {
            if self.c().abs() < tie {
                FCase::Exponential
            } else {
                FCase::Power
            }
        } else {
            let d1 = self.delta1();
            if d1.abs() < tie {
                FCase::ZeroDiscriminant
            } else if d1 > R::zero() {
                FCase::PositiveDiscriminant
            } else {
                FCase::NegativeDiscriminant
            }
        }
    }

    /// `g_u`: `(k1+u, k2+(k1+k3)u+u², k3+u, ε)`.
    pub fn transform_g(&self, u: R) -> Self {
        OdeParams {
            k1: self.k1 + u,
            k2: self.k2 + self.c() * u + u * u,
            k3: self.k3 + u,
            eps: self.eps,
            non_randers: self.non_randers,
        }
    }

    /// `h_v`: `(v²k1, v⁴k2, v²k3, vε)`.
    pub fn transform_h(&self, v: R) -> Result<Self> {
        if v == R::zero() {
            return Err(GeomError::InvalidParameter("h_v needs v != 0".into()));
        }
        let v2 = v * v;
        Ok(OdeParams {
            k1: v2 * self.k1,
            k2: v2 * v2 * self.k2,
            k3: v2 * self.k3,
            eps: v * self.eps,
            non_randers: self.non_randers,
        })
    }

    /// Largest `S` such that `1 + k1s² > 0` and `1 + (k1+k3)s² + k2s⁴ > 0` for
    /// all `|s| < S` (possibly infinite).
    pub fn validity_limit(&self) -> R {
        let mut t_min = R::infinity();
        if self.k1 < R::zero() {
            t_min = t_min.min(-R::one() / self.k1);
        }
        for t in positive_roots(self.k2, self.c(), self.tie()) {
            t_min = t_min.min(t);
        }
        t_min.sqrt()
    }

    /// `f(s) = φ − sφ′`, the case-matched closed form.
    pub fn f(&self, s: R) -> Result<R> {
        let t = s * s;
        if self.denom(t) <= R::zero() || R::one() + self.k1 * t <= R::zero() {
            return Err(GeomError::Regularity(format!(
                "1+k1 s^2 or 1+(k1+k3)s^2+k2 s^4 is not positive at s = {s}"
            )));
        }
        Ok(exp_kernel(self.k1, self.k3, self.k2, t, self.tie()))
    }

    /// `g(s) = φ″(s) = (k1 + k2s²)/(1 + (k1+k3)s² + k2s⁴) · f(s)`.
    pub fn second_derivative(&self, s: R) -> Result<R> {
        let t = s * s;
        Ok((self.k1 + self.k2 * t) / self.denom(t) * self.f(s)?)
    }
}

/// Positive roots of `k2 t² + c t + 1`.
pub(crate) fn positive_roots<R: Real>(k2: R, c: R, tie: R) -> Vec<R> {
    if k2.abs() < tie {
        if c < R::zero() {
            vec![-R::one() / c]
        } else {
            vec![]
        }
    } else {
        let d = c * c - R::cst(4.0) * k2;
        if d < R::zero() {
            return vec![];
        }
        let q = d.sqrt();
        // Stable quadratic roots.
        let w = -R::cst(0.5) * (c + c.signum() * q);
        let mut out = Vec::new();
        if w != R::zero() {
            for t in [w / k2, R::one() / w] {
                if t > R::zero() {
                    out.push(t);
                }
            }
        }
        out
    }
}

/// `exp(−½ ∫₀ᵗ (k_a + k2τ)/(1 + (k_a+k_b)τ + k2τ²) dτ)` in closed form.
///
/// With `(k_a, k_b, t) = (k1, k3, s²)` this is `f(s)`; with
/// `(k_a, k_b, t) = (k3, k1, b̄²)` it is the deformation factor `η(b̄²)`.
/// `t` may be any carrier, so derivatives in `t` come for free.
pub fn exp_kernel<S: Scalar>(ka: S::Real, kb: S::Real, k2: S::Real, t: S, tie: S::Real) -> S {
    let zero = S::Real::zero();
    let c = ka + kb;
    let r = S::from_real;
    let half = S::cst(0.5);
    let quarter = S::cst(0.25);
    if k2.abs() < tie {
        if c.abs() < tie {
            (-r(ka) * t * half).exp()
        } else {
            (-r(ka / (c + c)) * (r(c) * t).ln_1p()).exp()
        }
    } else {
        let d1 = c * c - S::Real::cst(4.0) * k2;
        let d = S::one() + r(c) * t + r(k2) * t * t;
        if d1.abs() < tie {
            let two = S::cst(2.0);
            (S::one() + r(c) * t * half).powf(-half)
                * (-r(ka - kb) * t / (two * (two + r(c) * t))).exp()
        } else if d1 > zero {
            let q = d1.sqrt();
            // c − q and c + q without cancellation: (c−q)(c+q) = 4k2.
            let four_k2 = S::Real::cst(4.0) * k2;
            let (cmq, cpq) = if c >= zero { (four_k2 / (c + q), c + q) } else { (c - q, four_k2 / (c - q)) };
            let two_k2t = r(k2 + k2) * t;
            let ratio = r(cpq / cmq) * ((r(cmq) + two_k2t) / (r(cpq) + two_k2t));
            ratio.powf(r((kb - ka) / (S::Real::cst(4.0) * q))) * d.powf(-quarter)
        } else {
            let q = (-d1).sqrt();
            let arg = ((r(c) + r(k2 + k2) * t) / r(q)).atan() - r((c / q).atan());
            (r((kb - ka) / (S::Real::cst(2.0) * q)) * arg).exp() * d.powf(-quarter)
        }
    }
}

/// `f(s)` for a parameter set.
pub fn f_factor<R: Real>(k: &OdeParams<R>, s: R) -> Result<R> {
    k.f(s)
}

/// Value and first two derivatives at a point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhiJet<R> {
    pub v: R,
    pub d1: R,
    pub d2: R,
}

impl<R: Real> PhiJet<R> {
    /// `φ − sφ′`
    pub fn f(&self, s: R) -> R {
        self.v - s * self.d1
    }

    fn from_hyper(h: HyperDual<R>) -> Self {
        PhiJet { v: h.re, d1: h.e1, d2: h.e12 }
    }
}

/// Evaluates `g` on a hyper-dual seeded at `s` and returns its jet.
fn hyper_jet<R: Real>(s: R, g: impl Fn(HyperDual<R>) -> HyperDual<R>) -> PhiJet<R> {
    PhiJet::from_hyper(g(HyperDual::new(s, R::one(), R::one(), R::zero())))
}

/// Closed-form φ with names.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NamedPhi<R> {
    /// φ = 1
    Riemann,
    /// φ = √(1+us²) + vs
    Randers { u: R, v: R },
    /// φ = (1+s)²
    Berwald,
    /// φ = (√(1+s²) + s)² / √(1+s²)
    BerwaldSqrt,
}

impl<R: Real> NamedPhi<R> {
    pub fn value<S: Scalar<Real = R>>(&self, s: S) -> S {
        let one = S::one();
        match *self {
            NamedPhi::Riemann => one,
            NamedPhi::Randers { u, v } => {
                (one + S::from_real(u) * s * s).sqrt() + S::from_real(v) * s
            }
            NamedPhi::Berwald => (one + s) * (one + s),
            NamedPhi::BerwaldSqrt => {
                let r = (one + s * s).sqrt();
                (r + s) * (r + s) / r
            }
        }
    }

    pub fn ode_params(&self) -> OdeParams<R> {
        match *self {
            NamedPhi::Riemann => OdeParams::from_f64(0.0, 0.0, 0.0, 0.0),
            NamedPhi::Randers { u, v } => OdeParams::new(u, u * u, u, v),
            NamedPhi::Berwald => OdeParams::from_f64(2.0, 0.0, -3.0, 2.0),
            NamedPhi::BerwaldSqrt => OdeParams::from_f64(3.0, 0.0, -2.0, 2.0),
        }
    }

    fn limit(&self) -> R {
        match *self {
            NamedPhi::Randers { u, .. } if u < R::zero() => (-R::one() / u).sqrt(),
            _ => R::infinity(),
        }
    }
}

/// The closed-form families `φ_{r,p}` solving `φ − sφ′ = (p + rs²)φ″`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FamilyKind {
    /// `r = −1/(2n)`, `p = δ/(2n)`
    Polynomial { n: u32, delta: i8 },
    /// `r = p = 1/(2n)`
    Arctan { n: u32 },
    /// `r = 1/(2n)`, `p = −1/(2n)`
    Log { n: u32 },
    /// `r = p = −1/(2n−1)`
    Asinh { n: u32 },
    /// `r = −1/(2n−1)`, `p = 1/(2n−1)`
    Arcsin { n: u32 },
    /// `r = 1/(2n−1)`, `p = δ/(2n−1)`, `n ≥ 2`
    DeltaSqrt { n: u32, delta: i8 },
    /// `r = 0`: power series
    ZeroP,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExplicitFamily<R> {
    pub r: Rational64,
    pub p: Rational64,
    pub kind: FamilyKind,
    pub eps: R,
}

/// `m!!` with `0!! = (−1)!! = 1`.
fn double_factorial(m: i64) -> f64 {
    let mut acc = 1.0;
    let mut k = m;
    while k > 1 {
        acc *= k as f64;
        k -= 2;
    }
    acc
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

impl<R: Real> ExplicitFamily<R> {
    /// Matches `(r, p)` against the listed shapes.
    pub fn new(r: Rational64, p: Rational64, eps: R) -> Result<Self> {
        let kind = Self::classify(r, p).ok_or_else(|| {
            GeomError::InvalidParameter(format!(
                "no closed form for (r, p) = ({r}, {p}); use the quadrature solution"
            ))
        })?;
        Ok(ExplicitFamily { r, p, kind, eps })
    }

    fn classify(r: Rational64, p: Rational64) -> Option<FamilyKind> {
        if p.is_zero() {
            return None;
        }
        if r.is_zero() {
            return Some(FamilyKind::ZeroP);
        }
        if !r.numer().abs().is_one() || !p.numer().abs().is_one() || r.denom() != p.denom() {
            return None;
        }
        let d = *r.denom();
        let rs = r.signum().to_integer();
        let ps = p.signum().to_integer() as i8;
        if d % 2 == 0 {
            let n = u32::try_from(d / 2).ok()?;
            match (rs, ps) {
                (-1, _) => Some(FamilyKind::Polynomial { n, delta: ps }),
                (1, 1) => Some(FamilyKind::Arctan { n }),
                (1, -1) => Some(FamilyKind::Log { n }),
                _ => None,
            }
        } else {
            let n = u32::try_from((d + 1) / 2).ok()?;
            match (rs, ps) {
                (-1, -1) => Some(FamilyKind::Asinh { n }),
                (-1, 1) => Some(FamilyKind::Arcsin { n }),
                (1, _) if n >= 2 => Some(FamilyKind::DeltaSqrt { n, delta: ps }),
                _ => None,
            }
        }
    }

    /// `k1 = 1/p`, `k2 = 0`, `k3 = (r−1)/p`.
    pub fn ode_params(&self) -> OdeParams<R> {
        let k1 = Rational64::one() / self.p;
        let k3 = (self.r - Rational64::one()) / self.p;
        let to_r = |q: Rational64| R::cst(*q.numer() as f64 / *q.denom() as f64);
        OdeParams::new(to_r(k1), R::zero(), to_r(k3), self.eps)
    }

    fn limit(&self) -> R {
        let domain = match self.kind {
            FamilyKind::Log { .. } | FamilyKind::Arcsin { .. } => R::one(),
            FamilyKind::DeltaSqrt { delta, .. } if delta < 0 => R::one(),
            _ => R::infinity(),
        };
        domain.min(self.ode_params().validity_limit())
    }

    /// The closed form on any carrier (not for [`FamilyKind::ZeroP`]).
    pub fn value<S: Scalar<Real = R>>(&self, s: S) -> S {
        let one = S::one();
        let eps = S::from_real(self.eps);
        let s2 = s * s;
        let cst = |v: f64| S::cst(v);
        match self.kind {
            FamilyKind::Polynomial { n, delta } => {
                let delta = delta as f64;
                let mut acc = one + eps * s;
                for m in 0..n {
                    let coef = 2.0 * n as f64 * (-1f64).powi(m as i32) * delta.powi(m as i32 + 1)
                        * binomial(n - 1, m)
                        / ((2 * m + 2) as f64 * (2 * m + 1) as f64);
                    acc = acc + cst(coef) * s2.powi(m as i32 + 1);
                }
                acc
            }
            FamilyKind::Arctan { n } => {
                let (lead, tail) = Self::odd_coefficients(n);
                let mut acc = eps * s + cst(lead) * (one + s * s.atan());
                for (k, t) in tail {
                    acc = acc - cst(t) * (one + s2).powi(-(k as i32));
                }
                acc
            }
            FamilyKind::Log { n } => {
                let (lead, tail) = Self::odd_coefficients(n);
                let log = ((one - s) / (one + s)).ln();
                let mut acc = eps * s + cst(lead) * (one + cst(0.5) * s * log);
                for (k, t) in tail {
                    acc = acc - cst(t) * (one - s2).powi(-(k as i32));
                }
                acc
            }
            FamilyKind::Asinh { n } => {
                let (lead, tail) = Self::odd_coefficients(n);
                let r = (one + s2).sqrt();
                let mut acc = eps * s + cst(lead) * (r - s * (s + r).ln());
                for (k, t) in tail {
                    acc = acc - cst(t) * r.powi(2 * k as i32 + 1);
                }
                acc
            }
            FamilyKind::Arcsin { n } => {
                let (lead, tail) = Self::odd_coefficients(n);
                let r = (one - s2).sqrt();
                let mut acc = eps * s + cst(lead) * (r + s * s.asin());
                for (k, t) in tail {
                    acc = acc - cst(t) * r.powi(2 * k as i32 + 1);
                }
                acc
            }
            FamilyKind::DeltaSqrt { n, delta } => {
                let d = cst(delta as f64);
                let n = n as i64;
                let lead = double_factorial(2 * n - 2) / double_factorial(2 * n - 3);
                let w = one + d * s2;
                let mut acc = eps * s + cst(lead) * (one + cst(2.0) * d * s2) / (cst(2.0) * w.sqrt());
                for k in 2..n {
                    let t = double_factorial(2 * n - 2) * double_factorial(2 * k - 3)
                        / (double_factorial(2 * n - 3) * double_factorial(2 * k));
                    acc = acc - cst(t) * w.sqrt().powi(-(2 * k as i32 - 1));
                }
                acc
            }
            FamilyKind::ZeroP => panic!("ZeroP has no closed form; evaluate it as a series"),
        }
    }

    /// `(2n−1)!!/(2n−2)!!` and `[(k, (2n−1)!!(2k−2)!!/((2n−2)!!(2k+1)!!))]_{k=1}^{n−1}`.
    fn odd_coefficients(n: u32) -> (f64, Vec<(u32, f64)>) {
        let n = n as i64;
        let lead = double_factorial(2 * n - 1) / double_factorial(2 * n - 2);
        let tail = (1..n)
            .map(|k| {
                let t = lead * double_factorial(2 * k - 2) / double_factorial(2 * k + 1);
                (k as u32, t)
            })
            .collect();
        (lead, tail)
    }

    pub fn jet(&self, s: R) -> Result<PhiJet<R>> {
        match self.kind {
            FamilyKind::ZeroP => {
                let p = R::cst(*self.p.numer() as f64 / *self.p.denom() as f64);
                series_zero_p(p, self.eps, s, R::cst(SERIES_TOL))
            }
            _ => Ok(hyper_jet(s, |x| self.value(x))),
        }
    }
}

/// A φ function together with its evaluation strategy.
#[derive(Clone, Debug, PartialEq)]
pub enum PhiSpec<R> {
    Named(NamedPhi<R>),
    /// The integral solution for `k`, by adaptive quadrature to absolute `tol`.
    Quadrature { k: OdeParams<R>, tol: R },
    /// `φ_σ = 1 + εs + Σ_{n≥1} ∏_{k=1}^n (k−σ−1)(2k−3)/(k(2k−1)) s^{2n}`.
    SeriesSigma { sigma: R, eps: R, tol: R },
    /// `φ_{0,p} = 1 + εs + (1/p) Σ_{n≥0} (−1)ⁿ s^{2n+2}/((2n+2)(2n+1) n! (2p)ⁿ)`.
    SeriesZeroP { p: R, eps: R, tol: R },
    Explicit(ExplicitFamily<R>),
    /// `ψ(s) = √(1+us²) φ(s/√(1+us²))`.
    GTransform { u: R, inner: Box<PhiSpec<R>> },
    /// `φ(vs)`.
    HScale { v: R, inner: Box<PhiSpec<R>> },
    /// `φ(s) + slope·s`.
    Shifted { inner: Box<PhiSpec<R>>, slope: R },
}

impl<R: Real> PhiSpec<R> {
    pub fn quadrature(k: OdeParams<R>) -> Self {
        PhiSpec::Quadrature { k, tol: R::cst(QUAD_TOL) }
    }

    pub fn sigma(sigma: R, eps: R) -> Self {
        PhiSpec::SeriesSigma { sigma, eps, tol: R::cst(SERIES_TOL) }
    }

    pub fn zero_p(p: R, eps: R) -> Self {
        PhiSpec::SeriesZeroP { p, eps, tol: R::cst(SERIES_TOL) }
    }

    pub fn randers(u: R, v: R) -> Self {
        PhiSpec::Named(NamedPhi::Randers { u, v })
    }

    pub fn g_transform(self, u: R) -> Self {
        PhiSpec::GTransform { u, inner: Box::new(self) }
    }

    pub fn h_scale(self, v: R) -> Self {
        PhiSpec::HScale { v, inner: Box::new(self) }
    }

    /// The parameters of the equation this φ solves, when known.
    pub fn ode_params(&self) -> Option<OdeParams<R>> {
        match self {
            PhiSpec::Named(n) => Some(n.ode_params()),
            PhiSpec::Quadrature { k, .. } => Some(*k),
            PhiSpec::SeriesSigma { sigma, eps, .. } => {
                let two = R::cst(2.0);
                Some(OdeParams::new(two * *sigma, R::zero(), -two * *sigma - R::one(), *eps))
            }
            PhiSpec::SeriesZeroP { p, eps, .. } => {
                let k1 = R::one() / *p;
                Some(OdeParams::new(k1, R::zero(), -k1, *eps))
            }
            PhiSpec::Explicit(f) => Some(f.ode_params()),
            PhiSpec::GTransform { u, inner } => inner.ode_params().map(|k| k.transform_g(*u)),
            PhiSpec::HScale { v, inner } => inner.ode_params().and_then(|k| k.transform_h(*v).ok()),
            PhiSpec::Shifted { inner, slope } => {
                inner.ode_params().map(|k| OdeParams { eps: k.eps + *slope, ..k })
            }
        }
    }

    /// `φ′(0)`.
    pub fn eps(&self) -> Result<R> {
        Ok(self.eval(R::zero())?.d1)
    }

    /// φ is evaluated only for `|s|` below this limit.
    pub fn validity_limit(&self) -> R {
        match self {
            PhiSpec::Named(n) => n.limit(),
            PhiSpec::Quadrature { k, .. } => k.validity_limit(),
            PhiSpec::SeriesSigma { .. } => R::cst(SERIES_GUARD),
            PhiSpec::SeriesZeroP { p, .. } => {
                let k1 = R::one() / *p;
                OdeParams::new(k1, R::zero(), -k1, R::zero()).validity_limit()
            }
            PhiSpec::Explicit(f) => f.limit(),
            PhiSpec::GTransform { u, inner } => {
                let l = inner.validity_limit();
                let u = *u;
                if l.is_infinite() {
                    if u < R::zero() {
                        (-R::one() / u).sqrt()
                    } else {
                        R::infinity()
                    }
                } else {
                    let w = R::one() - u * l * l;
                    if w > R::zero() {
                        l / w.sqrt()
                    } else {
                        R::infinity()
                    }
                }
            }
            PhiSpec::HScale { v, inner } => inner.validity_limit() / v.abs(),
            PhiSpec::Shifted { inner, .. } => inner.validity_limit(),
        }
    }

    /// `(φ, φ′, φ″)` at `s`.
    pub fn eval(&self, s: R) -> Result<PhiJet<R>> {
        let limit = self.validity_limit();
        if !(s.abs() < limit) {
            return Err(GeomError::OutsideValidity {
                s: s.to_f64().unwrap_or(f64::NAN),
                limit: limit.to_f64().unwrap_or(f64::NAN),
            });
        }
        match self {
            PhiSpec::Named(n) => Ok(hyper_jet(s, |x| n.value(x))),
            PhiSpec::Quadrature { k, tol } => phi_from_quadrature(k, k.eps, s, *tol),
            PhiSpec::SeriesSigma { sigma, eps, tol } => phi_series_sigma(*sigma, *eps, s, *tol),
            PhiSpec::SeriesZeroP { p, eps, tol } => series_zero_p(*p, *eps, s, *tol),
            PhiSpec::Explicit(f) => f.jet(s),
            PhiSpec::GTransform { u, inner } => {
                let x = HyperDual::new(s, R::one(), R::one(), R::zero());
                let w = (HyperDual::one() + HyperDual::from_real(*u) * x * x).sqrt();
                let t = x / w;
                let j = inner.eval(t.re)?;
                Ok(PhiJet::from_hyper(w * t.chain(j.v, j.d1, j.d2)))
            }
            PhiSpec::HScale { v, inner } => {
                let j = inner.eval(*v * s)?;
                Ok(PhiJet { v: j.v, d1: *v * j.d1, d2: *v * *v * j.d2 })
            }
            PhiSpec::Shifted { inner, slope } => {
                let j = inner.eval(s)?;
                Ok(PhiJet { v: j.v + *slope * s, d1: j.d1 + *slope, d2: j.d2 })
            }
        }
    }

    pub fn value(&self, s: R) -> Result<R> {
        Ok(self.eval(s)?.v)
    }

    /// φ on any carrier.
    pub fn apply<S: Scalar<Real = R>>(&self, s: S) -> Result<S> {
        let j = self.eval(s.re())?;
        Ok(s.chain(j.v, j.d1, j.d2))
    }

    /// Largest `b ≤ cap` (on a grid of `grid` steps) such that φ > 0, and
    /// `1 + k1s² > 0`, `1 + (k1+k3)s² + k2s⁴ > 0` when parameters are known,
    /// for all `|s| ≤ b`.
    pub fn positivity_interval(&self, cap: R, grid: usize) -> R {
        let limit = self.validity_limit();
        let cap = cap.min(limit * R::cst(1.0 - 1e-9));
        let k = self.ode_params();
        let steps = grid.max(2);
        let mut best = R::zero();
        for i in 1..=steps {
            let b = cap * R::from_usize(i).unwrap() / R::from_usize(steps).unwrap();
            let ok = [b, -b].iter().all(|&s| {
                let phi_ok = matches!(self.value(s), Ok(v) if v > R::zero());
                let k_ok = k.map_or(true, |k| {
                    let t = s * s;
                    k.denom(t) > R::zero() && R::one() + k.k1 * t > R::zero()
                });
                phi_ok && k_ok
            });
            if !ok {
                break;
            }
            best = b;
        }
        best
    }

    pub fn describe(&self) -> String {
        match self {
            PhiSpec::Named(NamedPhi::Riemann) => "1".into(),
            PhiSpec::Named(NamedPhi::Randers { u, v }) => format!("sqrt(1+{u}s^2)+{v}s"),
            PhiSpec::Named(NamedPhi::Berwald) => "(1+s)^2".into(),
            PhiSpec::Named(NamedPhi::BerwaldSqrt) => "(sqrt(1+s^2)+s)^2/sqrt(1+s^2)".into(),
            PhiSpec::Quadrature { k, .. } => {
                format!("quadrature k=({}, {}, {}) eps={}", k.k1, k.k2, k.k3, k.eps)
            }
            PhiSpec::SeriesSigma { sigma, eps, .. } => format!("phi_sigma sigma={sigma} eps={eps}"),
            PhiSpec::SeriesZeroP { p, eps, .. } => format!("phi_0,p p={p} eps={eps}"),
            PhiSpec::Explicit(f) => format!("phi_{{{},{}}} eps={}", f.r, f.p, f.eps),
            PhiSpec::GTransform { u, inner } => format!("g_{u}({})", inner.describe()),
            PhiSpec::HScale { v, inner } => format!("h_{v}({})", inner.describe()),
            PhiSpec::Shifted { inner, slope } => format!("{} + {slope}s", inner.describe()),
        }
    }
}

/// `{1+(k1+k3)s²+k2s⁴}φ″ − (k1+k2s²)(φ − sφ′)`.
pub fn ode_residual<R: Real>(phi: &PhiSpec<R>, k: &OdeParams<R>, s: R) -> Result<R> {
    let j = phi.eval(s)?;
    let t = s * s;
    Ok(k.denom(t) * j.d2 - (k.k1 + k.k2 * t) * j.f(s))
}

/// `φ(s) = 1 + εs + ∫₀ˢ (s−σ) g(σ) dσ`, `φ′ = ε + ∫₀ˢ g`, `φ″ = g(s)`.
pub fn phi_from_quadrature<R: Real>(k: &OdeParams<R>, eps: R, s: R, tol: R) -> Result<PhiJet<R>> {
    if !(tol > R::zero()) {
        return Err(GeomError::InvalidParameter("quadrature tolerance must be positive".into()));
    }
    let limit = k.validity_limit();
    if !(s.abs() < limit) {
        return Err(GeomError::OutsideValidity {
            s: s.to_f64().unwrap_or(f64::NAN),
            limit: limit.to_f64().unwrap_or(f64::NAN),
        });
    }
    let d2 = k.second_derivative(s)?;
    if s == R::zero() {
        return Ok(PhiJet { v: R::one(), d1: eps, d2 });
    }
    let g = |x: R| k.second_derivative(x).unwrap_or(R::nan());
    let half = tol * R::cst(0.5);
    let i1 = integrate(&g, R::zero(), s, half)?;
    let i2 = integrate(|x| (s - x) * g(x), R::zero(), s, half)?;
    Ok(PhiJet { v: R::one() + eps * s + i2.value, d1: eps + i1.value, d2 })
}

fn check_series_arg<R: Real>(s: R, tol: R) -> Result<()> {
    if !(tol > R::zero()) {
        return Err(GeomError::InvalidParameter("series tolerance must be positive".into()));
    }
    if !(s.abs() < R::cst(SERIES_GUARD)) {
        return Err(GeomError::OutsideValidity {
            s: s.to_f64().unwrap_or(f64::NAN),
            limit: SERIES_GUARD,
        });
    }
    Ok(())
}

fn small<R: Real>(term: R, sum: R, tol: R) -> bool {
    term.abs() < tol * sum.abs().max(R::one())
}

/// Series for `φ_σ` with termwise derivatives.
pub fn phi_series_sigma<R: Real>(sigma: R, eps: R, s: R, tol: R) -> Result<PhiJet<R>> {
    check_series_arg(s, tol)?;
    let s2 = s * s;
    let mut v = R::one() + eps * s;
    let mut d1 = eps;
    let mut d2 = R::zero();
    let mut coef = R::one();
    let mut pow = R::one(); // s^{2n−2}
    for n in 1..=SERIES_MAX_TERMS {
        let nr = R::from_usize(n).unwrap();
        let two_n = nr + nr;
        coef = coef * (nr - sigma - R::one()) * (two_n - R::cst(3.0)) / (nr * (two_n - R::one()));
        let t2 = coef * two_n * (two_n - R::one()) * pow;
        let t1 = coef * two_n * pow * s;
        let t0 = coef * pow * s2;
        v = v + t0;
        d1 = d1 + t1;
        d2 = d2 + t2;
        if coef == R::zero() || (small(t0, v, tol) && small(t1, d1, tol) && small(t2, d2, tol)) {
            return Ok(PhiJet { v, d1, d2 });
        }
        pow = pow * s2;
    }
    Err(GeomError::SeriesTruncation { terms: SERIES_MAX_TERMS })
}

/// Series for `φ_{0,p}` with termwise derivatives.
pub fn series_zero_p<R: Real>(p: R, eps: R, s: R, tol: R) -> Result<PhiJet<R>> {
    if !(tol > R::zero()) {
        return Err(GeomError::InvalidParameter("series tolerance must be positive".into()));
    }
    if p == R::zero() {
        return Err(GeomError::InvalidParameter("p must be nonzero".into()));
    }
    let s2 = s * s;
    let x = -s2 / (p + p);
    let mut a = R::one() / p; // (1/p) xⁿ/n!
    let mut v = R::one() + eps * s;
    let mut d1 = eps;
    let mut d2 = R::zero();
    for n in 0..SERIES_MAX_TERMS {
        if n > 0 {
            a = a * x / R::from_usize(n).unwrap();
        }
        let m = R::from_usize(2 * n + 1).unwrap();
        let t2 = a;
        let t1 = a * s / m;
        let t0 = a * s2 / (m * (m + R::one()));
        v = v + t0;
        d1 = d1 + t1;
        d2 = d2 + t2;
        if small(t0, v, tol) && small(t1, d1, tol) && small(t2, d2, tol) {
            return Ok(PhiJet { v, d1, d2 });
        }
    }
    Err(GeomError::SeriesTruncation { terms: SERIES_MAX_TERMS })
}

/// Closed-form `φ_{r,p}(s)` for the listed families (series for `r = 0`).
pub fn phi_explicit_family<R: Real>(
    r: Rational64,
    p: Rational64,
    eps: R,
    s: R,
) -> Result<PhiJet<R>> {
    let fam = ExplicitFamily::new(r, p, eps)?;
    PhiSpec::Explicit(fam).eval(s)
}

/// Outcome of the regularity scan.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegularityReport<R> {
    /// Largest grid level `b` at which every check passed.
    pub b0_max: R,
    /// Minimum of `φ − sφ′ + (b² − s²)φ″` over `|s| ≤ b ≤ b0`.
    pub min_margin: R,
    /// Minimum of φ over `|s| ≤ b0`.
    pub min_phi: R,
    /// Minimum of `1 + k1s²` and `1 + (k1+k3)s² + k2s⁴` (∞ without parameters).
    pub min_lemma: R,
    pub pass: bool,
}

/// Checks the strong convexity inequality and positivity of φ on
/// `|s| ≤ b ≤ b0`, sampled on `2·grid + 1` points in `s`.
///
/// The inequality is affine in `b²`, so for each `s` only `b = |s|` and
/// `b = b0` need to be checked.
pub fn regularity_check<R: Real>(phi: &PhiSpec<R>, b0: R, grid: usize) -> Result<RegularityReport<R>> {
    if !(b0 > R::zero()) || grid < 2 {
        return Err(GeomError::InvalidParameter("regularity check needs b0 > 0 and grid >= 2".into()));
    }
    let m = grid;
    let k = phi.ode_params();
    let mr = R::from_usize(m).unwrap();
    // Jets at s_j = b0 j/m, j = −m..m.
    let mut jets = Vec::with_capacity(2 * m + 1);
    for j in -(m as i64)..=(m as i64) {
        let s = b0 * R::from_i64(j).unwrap() / mr;
        jets.push((s, phi.eval(s)));
    }
    let mut min_margin = R::infinity();
    let mut min_phi = R::infinity();
    let mut min_lemma = R::infinity();
    let mut b0_max = R::zero();
    let mut all_ok = true;
    // Level by level so that b0_max is the largest fully verified level.
    for level in 0..=m {
        let b = b0 * R::from_usize(level).unwrap() / mr;
        let mut level_ok = true;
        for idx in [m - level, m + level] {
            let (s, jet) = &jets[idx];
            let jet = match jet {
                Ok(j) => *j,
                Err(e) => {
                    if level == m || all_ok {
                        return Err(e.clone());
                    }
                    level_ok = false;
                    continue;
                }
            };
            let s = *s;
            let f = jet.f(s);
            min_phi = min_phi.min(jet.v);
            // Margins for this s at b = |s| and for every b between |s| and the current level.
            min_margin = min_margin.min(f).min(f + (b * b - s * s) * jet.d2);
            if let Some(k) = k {
                let t = s * s;
                min_lemma = min_lemma.min(R::one() + k.k1 * t).min(k.denom(t));
            }
        }
        // Inner points see the larger b as well.
        for idx in (m - level)..=(m + level) {
            if let (s, Ok(jet)) = &jets[idx] {
                let s = *s;
                min_margin = min_margin.min(jet.f(s) + (b * b - s * s) * jet.d2);
            }
        }
        level_ok = level_ok
            && min_margin > R::zero()
            && min_phi > R::zero()
            && min_lemma > R::zero();
        if level_ok && all_ok {
            b0_max = b;
        } else {
            all_ok = false;
        }
    }
    let pass = all_ok && min_margin > R::zero() && min_phi > R::zero() && min_lemma > R::zero();
    Ok(RegularityReport { b0_max, min_margin, min_phi, min_lemma, pass })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k(k1: f64, k2: f64, k3: f64) -> OdeParams<f64> {
        OdeParams::from_f64(k1, k2, k3, 0.0)
    }

    #[test]
    fn f_case_dispatch() {
        assert_eq!(k(2.0, 0.0, -2.0).f_case(), FCase::Exponential);
        assert_eq!(k(2.0, 0.0, -3.0).f_case(), FCase::Power);
        assert_eq!(k(1.0, 0.5, -3.0).f_case(), FCase::PositiveDiscriminant);
        assert_eq!(k(2.0, 1.0, 0.0).f_case(), FCase::ZeroDiscriminant);
        assert_eq!(k(0.0, 1.0, 0.0).f_case(), FCase::NegativeDiscriminant);
    }

    #[test]
    fn f_exponential_case_value() {
        let v = k(2.0, 0.0, -2.0).f(1.0).unwrap();
        assert!((v - (-1f64).exp()).abs() < 1e-15);
        assert_eq!(k(0.3, 0.7, 0.1).f(0.0).unwrap(), 1.0);
    }

    #[test]
    fn named_jets() {
        let phi = PhiSpec::Named(NamedPhi::Berwald);
        let j = phi.eval(0.3).unwrap();
        assert!((j.v - 1.69).abs() < 1e-15);
        assert!((j.d1 - 2.6).abs() < 1e-15);
        assert!((j.d2 - 2.0).abs() < 1e-15);
    }

    #[test]
    fn berwald_solves_its_equation() {
        let phi = PhiSpec::Named(NamedPhi::Berwald);
        let r = ode_residual(&phi, &k(2.0, 0.0, -3.0), 0.3).unwrap();
        assert!(r.abs() < 1e-14);
        let phi = PhiSpec::Named(NamedPhi::BerwaldSqrt);
        let r = ode_residual(&phi, &k(3.0, 0.0, -2.0), 0.5).unwrap();
        assert!(r.abs() < 1e-14);
    }

    #[test]
    fn quadrature_reproduces_berwald() {
        let kk = OdeParams::from_f64(2.0, 0.0, -3.0, 2.0);
        let j = phi_from_quadrature(&kk, 2.0, 0.4, 1e-12).unwrap();
        assert!((j.v - 1.96).abs() < 1e-12);
        assert!((j.d1 - 2.8).abs() < 1e-12);
        assert!((j.d2 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn sigma_series_special_cases() {
        let j = phi_series_sigma(1.0, 2.0, 0.25, 1e-14).unwrap();
        assert!((j.v - 1.5625).abs() < 1e-14);
        let j = phi_series_sigma(0.0, 1.0, -0.7, 1e-14).unwrap();
        assert!((j.v - 0.3).abs() < 1e-15);
        assert!(phi_series_sigma(0.0, 1.0, 0.999, 1e-14).is_err());
        assert_eq!(phi_series_sigma(2.0, 0.0, 0.0, 1e-14).unwrap().v, 1.0);
    }

    #[test]
    fn explicit_family_matching() {
        let q = |a, b| Rational64::new(a, b);
        let fam = ExplicitFamily::<f64>::new(q(-1, 2), q(1, 2), 0.0).unwrap();
        assert_eq!(fam.kind, FamilyKind::Polynomial { n: 1, delta: 1 });
        let k = fam.ode_params();
        assert_eq!((k.k1, k.k2, k.k3), (2.0, 0.0, -3.0));
        assert_eq!(ExplicitFamily::<f64>::new(q(1, 2), q(1, 2), 0.0).unwrap().kind, FamilyKind::Arctan { n: 1 });
        assert_eq!(ExplicitFamily::<f64>::new(q(1, 4), q(-1, 4), 0.0).unwrap().kind, FamilyKind::Log { n: 2 });
        assert_eq!(ExplicitFamily::<f64>::new(q(-1, 3), q(-1, 3), 0.0).unwrap().kind, FamilyKind::Asinh { n: 2 });
        assert_eq!(ExplicitFamily::<f64>::new(q(-1, 1), q(1, 1), 0.0).unwrap().kind, FamilyKind::Arcsin { n: 1 });
        assert_eq!(
            ExplicitFamily::<f64>::new(q(1, 3), q(-1, 3), 0.0).unwrap().kind,
            FamilyKind::DeltaSqrt { n: 2, delta: -1 }
        );
        assert!(ExplicitFamily::<f64>::new(q(1, 1), q(1, 1), 0.0).is_err());
        assert!(ExplicitFamily::<f64>::new(q(2, 3), q(1, 3), 0.0).is_err());
        assert_eq!(ExplicitFamily::<f64>::new(q(0, 1), q(3, 1), 0.0).unwrap().kind, FamilyKind::ZeroP);
    }

    #[test]
    fn regularity_examples() {
        let rep = regularity_check(&PhiSpec::randers(0.0, 1.0), 0.99, 50).unwrap();
        assert!(rep.pass);
        assert!((rep.min_margin - 1.0).abs() < 1e-14);
        let rep = regularity_check(&PhiSpec::Named(NamedPhi::Berwald), 0.9, 90).unwrap();
        assert!(rep.pass);
        assert!((rep.min_margin - 0.19).abs() < 1e-12);
        let rep = regularity_check(&PhiSpec::Named(NamedPhi::Berwald), 1.1, 110).unwrap();
        assert!(!rep.pass);
        assert!(rep.b0_max < 1.0);
    }

    #[test]
    fn transforms_of_parameters() {
        let p = OdeParams::from_f64(2.0, 0.0, -3.0, 2.0);
        let g = p.transform_g(1.0);
        assert_eq!((g.k1, g.k2, g.k3, g.eps), (3.0, 0.0, -2.0, 2.0));
        let h = OdeParams::from_f64(1.0, 1.0, 1.0, 1.0).transform_h(2.0).unwrap();
        assert_eq!((h.k1, h.k2, h.k3, h.eps), (4.0, 16.0, 4.0, 2.0));
        assert!(p.transform_h(0.0).is_err());
    }

    #[test]
    fn validity_limits() {
        assert!((k(2.0, 0.0, -3.0).validity_limit() - 1.0).abs() < 1e-15);
        assert!(k(0.0, 1.0, 0.0).validity_limit().is_infinite());
        assert!((k(-4.0, 0.0, 0.0).validity_limit() - 0.5).abs() < 1e-15);
        let g = PhiSpec::randers(-1.0, 0.5);
        assert!((g.validity_limit() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn g_transform_of_linear_is_randers() {
        let lin = PhiSpec::randers(0.0, 0.4);
        let g = lin.g_transform(0.7);
        let r = PhiSpec::randers(0.7, 0.4);
        for s in [-0.6, -0.1, 0.0, 0.3, 0.8] {
            let a = g.eval(s).unwrap();
            let b = r.eval(s).unwrap();
            assert!((a.v - b.v).abs() < 1e-14);
            assert!((a.d1 - b.d1).abs() < 1e-13);
            assert!((a.d2 - b.d2).abs() < 1e-12);
        }
    }
}
