//! β-deformations.
//!
//! Three elementary moves act on a pair `(α, β)` through scalar factors of
//! `t = b² = ‖β‖²_α`:
//!
//! ```text
//! stretch    α̃² = α² − κ(b²)β²     β̃ = β
//! conformal  α̂  = e^{ρ(b²)} α̃      β̂ = β̃
//! rescale    ᾱ  = α̂                β̄ = ν(b²) β̂
//! ```
//!
//! All deformed fields are ordinary [`MetricField`]s and [`OneFormField`]s,
//! evaluated generically so that their derivatives (and hence Christoffel
//! symbols and covariant derivatives) are exact.

use std::fmt;
use std::sync::Arc;

use num_traits::{Float, One, Zero};

use crate::diffgeo::CovariantData;
use crate::error::{GeomError, Result};
use crate::field::{
    check_domain, form_at, metric_at, working_radius, AnalyticForm, AnalyticMetric, Form, Metric,
    MetricField, OneFormField,
};
use crate::linalg::Matrix;
use crate::phi::{exp_kernel, positive_roots, OdeParams, PhiJet};
use crate::sampling::{sample_points, DEFAULT_SEED};
use crate::scalar::{HyperDual, Real, Scalar};

type FactorFn<R> = dyn Fn(HyperDual<R>) -> HyperDual<R> + Send + Sync;

/// A smooth function of `t = b²`.
#[derive(Clone)]
pub struct ScalarFactor<R: Real = f64> {
    name: String,
    f: Arc<FactorFn<R>>,
}

impl<R: Real> fmt::Debug for ScalarFactor<R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ScalarFactor({})", self.name)
    }
}

impl<R: Real> ScalarFactor<R> {
    /// Wraps an analytic expression in `t`.
    pub fn new(name: impl Into<String>, f: impl Fn(HyperDual<R>) -> HyperDual<R> + Send + Sync + 'static) -> Self {
        ScalarFactor { name: name.into(), f: Arc::new(f) }
    }

    pub fn constant(c: R) -> Self {
        Self::new(format!("{c}"), move |_| HyperDual::constant(c))
    }

    /// `Σ c_k t^k`
    pub fn poly(coeffs: Vec<R>) -> Self {
        let name = format!("poly{coeffs:?}");
        Self::new(name, move |t| {
            coeffs.iter().rev().fold(HyperDual::zero(), |acc, &c| acc * t + HyperDual::constant(c))
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// `(v, v′, v″)` at `t`.
    pub fn jet(&self, t: R) -> PhiJet<R> {
        let h = (self.f)(HyperDual::new(t, R::one(), R::one(), R::zero()));
        PhiJet { v: h.re, d1: h.e1, d2: h.e12 }
    }

    pub fn value(&self, t: R) -> R {
        self.jet(t).v
    }

    pub fn derivative(&self, t: R) -> R {
        self.jet(t).d1
    }

    /// The factor on any carrier.
    pub fn apply<S: Scalar<Real = R>>(&self, t: S) -> S {
        let j = self.jet(t.re());
        t.chain(j.v, j.d1, j.d2)
    }

    /// `g ∘ self`.
    pub fn map(
        &self,
        name: impl Into<String>,
        g: impl Fn(HyperDual<R>) -> HyperDual<R> + Send + Sync + 'static,
    ) -> Self {
        let f = self.f.clone();
        Self::new(name, move |t| g(f(t)))
    }

    /// Pointwise product.
    pub fn mul(&self, other: &Self) -> Self {
        let (f, g) = (self.f.clone(), other.f.clone());
        Self::new(format!("({})*({})", self.name, other.name), move |t| f(t) * g(t))
    }
}

/// `‖β‖²_α` on any carrier (NaN for a singular metric).
fn norm2<S: Scalar>(a: &Matrix<S>, b: &[S]) -> S {
    match a.inverse() {
        Ok(inv) => inv.quad(b),
        Err(_) => S::nan(),
    }
}

/// `A(t)·a_ij + B(t)·b_i b_j` with `t = ‖β_n‖²_{α_n}` for a norm source `(α_n, β_n)`.
#[derive(Clone, Debug)]
pub struct FactorMetric<R: Real> {
    pub a: Metric<R>,
    pub b: Form<R>,
    pub norm_source: Option<(Metric<R>, Form<R>)>,
    pub scale: ScalarFactor<R>,
    pub stretch: ScalarFactor<R>,
}

/// `C(t)·b_i` with `t` as in [`FactorMetric`].
#[derive(Clone, Debug)]
pub struct FactorForm<R: Real> {
    pub a: Metric<R>,
    pub b: Form<R>,
    pub norm_source: Option<(Metric<R>, Form<R>)>,
    pub scale: ScalarFactor<R>,
}

fn source_t<S: Scalar>(
    a: &Matrix<S>,
    b: &[S],
    src: &Option<(Metric<S::Real>, Form<S::Real>)>,
    x: &[S],
) -> S {
    match src {
        None => norm2(a, b),
        Some((na, nb)) => norm2(&metric_at(na.as_ref(), x), &form_at(nb.as_ref(), x)),
    }
}

impl<R: Real> AnalyticMetric<R> for FactorMetric<R> {
    fn dim(&self) -> usize {
        self.a.dim()
    }
    fn domain_radius(&self) -> R {
        self.a.domain_radius()
    }
    fn matrix<S: Scalar<Real = R>>(&self, x: &[S]) -> Matrix<S> {
        let a = metric_at(self.a.as_ref(), x);
        let b = form_at(self.b.as_ref(), x);
        let t = source_t(&a, &b, &self.norm_source, x);
        let ca = self.scale.apply(t);
        let cb = self.stretch.apply(t);
        let n = b.len();
        Matrix::from_fn(n, |i, j| ca * a[(i, j)] + cb * b[i] * b[j])
    }
}

impl<R: Real> AnalyticForm<R> for FactorForm<R> {
    fn dim(&self) -> usize {
        self.b.dim()
    }
    fn covector<S: Scalar<Real = R>>(&self, x: &[S]) -> Vec<S> {
        let a = metric_at(self.a.as_ref(), x);
        let b = form_at(self.b.as_ref(), x);
        let t = source_t(&a, &b, &self.norm_source, x);
        let c = self.scale.apply(t);
        b.into_iter().map(|v| c * v).collect()
    }
}

/// Builds `(A a + B bbᵀ, C b)` with `t = ‖β‖²_α`.
pub fn factor_pair<R: Real>(
    a: &Metric<R>,
    b: &Form<R>,
    scale: ScalarFactor<R>,
    stretch: ScalarFactor<R>,
    form_scale: ScalarFactor<R>,
) -> (Metric<R>, Form<R>) {
    let m = FactorMetric { a: a.clone(), b: b.clone(), norm_source: None, scale, stretch };
    let f = FactorForm { a: a.clone(), b: b.clone(), norm_source: None, scale: form_scale };
    (Arc::new(m), Arc::new(f))
}

/// Checks `pred(t) > 0` for `t = ‖β‖²_α` at the origin and at seeded points
/// within 0.8 of the working radius.
pub fn check_on_samples<R: Real>(
    a: &dyn MetricField<R>,
    b: &dyn OneFormField<R>,
    what: &str,
    pred: impl Fn(R) -> R,
) -> Result<()> {
    let n = a.dim();
    let r = working_radius(a) * R::cst(0.8);
    let mut pts = sample_points(n, r, 32, DEFAULT_SEED);
    pts.push(vec![R::zero(); n]);
    for x in pts {
        check_domain(a, &x)?;
        let t = norm2(&a.eval_real(&x), &b.eval_real(&x));
        let v = pred(t);
        if !(v > R::zero()) {
            return Err(GeomError::Regularity(format!("{what} = {v} at b^2 = {t}")));
        }
    }
    Ok(())
}

/// `ã_ij = a_ij − κ(b²) b_i b_j`, `β̃ = β`.
pub fn deform_stretch<R: Real>(a: &Metric<R>, b: &Form<R>, kappa: &ScalarFactor<R>) -> Result<(Metric<R>, Form<R>)> {
    check_on_samples(a.as_ref(), b.as_ref(), "1 - kappa b^2", |t| R::one() - kappa.value(t) * t)?;
    let neg = kappa.map(format!("-{}", kappa.name()), |v| -v);
    let m = FactorMetric { a: a.clone(), b: b.clone(), norm_source: None, scale: ScalarFactor::constant(R::one()), stretch: neg };
    Ok((Arc::new(m), b.clone()))
}

/// `â_ij = e^{2ρ(b²)} a_ij`, `β̂ = β`.
pub fn deform_conformal<R: Real>(a: &Metric<R>, b: &Form<R>, rho: &ScalarFactor<R>) -> Result<(Metric<R>, Form<R>)> {
    let scale = rho.map(format!("exp(2*{})", rho.name()), |v| (v + v).exp());
    let m = FactorMetric { a: a.clone(), b: b.clone(), norm_source: None, scale, stretch: ScalarFactor::constant(R::zero()) };
    Ok((Arc::new(m), b.clone()))
}

/// `ᾱ = α`, `β̄_i = ν(b²) b_i`.
pub fn deform_rescale<R: Real>(a: &Metric<R>, b: &Form<R>, nu: &ScalarFactor<R>) -> Result<(Metric<R>, Form<R>)> {
    check_on_samples(a.as_ref(), b.as_ref(), "nu", |t| nu.value(t))?;
    let f = FactorForm { a: a.clone(), b: b.clone(), norm_source: None, scale: nu.clone() };
    Ok((a.clone(), Arc::new(f)))
}

/// Spray and covariant derivative predicted by one of the deformation lemmas.
#[derive(Clone, Debug)]
pub struct LemmaPrediction<R: Real> {
    pub spray: Vec<R>,
    pub bij: Matrix<R>,
}

fn add_scaled<R: Real>(acc: &mut [R], k: R, v: &[R]) {
    for (a, &x) in acc.iter_mut().zip(v) {
        *a = *a + k * x;
    }
}

/// Stretch lemma. All contractions refer to `(α, β)` before the stretch.
pub fn lemma_stretch<R: Real>(cd: &CovariantData<R>, g_alpha: &[R], y: &[R], kappa: &ScalarFactor<R>) -> LemmaPrediction<R> {
    let n = cd.dim();
    let b2 = cd.b2;
    let PhiJet { v: k, d1: dk, .. } = kappa.jet(b2);
    let w = R::one() - k * b2;
    let two = R::cst(2.0);
    let beta = cd.beta(y);
    let (r00, r0, s0, r) = (cd.r00(y), cd.r0(y), cd.s0(y), cd.r());
    let (r_up, s_up, s_up0) = (cd.r_up(), cd.s_up(), cd.s_up0(y));
    let mut g = g_alpha.to_vec();
    let c1 = -k / (two * w);
    add_scaled(&mut g, c1 * two * w * beta, &s_up0);
    add_scaled(&mut g, c1 * (r00 + two * k * s0 * beta), &cd.b_up);
    let c2 = dk / (two * w);
    let rs_up: Vec<R> = (0..n).map(|i| r_up[i] + s_up[i]).collect();
    add_scaled(&mut g, c2 * w * beta * beta, &rs_up);
    add_scaled(&mut g, c2 * (k * r * beta * beta - two * (r0 + s0) * beta), &cd.b_up);

    let (ri, si) = (cd.r_i(), cd.s_i());
    let b = &cd.b;
    let bij = Matrix::from_fn(n, |i, j| {
        cd.bij[(i, j)] + k / w * (b2 * cd.rij[(i, j)] + b[i] * si[j] + b[j] * si[i])
            - dk / w * (r * b[i] * b[j] - b2 * b[i] * (ri[j] + si[j]) - b2 * b[j] * (ri[i] + si[i]))
    });
    LemmaPrediction { spray: g, bij }
}

/// Conformal lemma after a stretch by `κ` (pass `κ ≡ 0` for a plain
/// conformal change). Contractions refer to the original `(α, β)`; `g_tilde`
/// and `bij_tilde` belong to the stretched pair.
pub fn lemma_conformal<R: Real>(
    cd: &CovariantData<R>,
    g_tilde: &[R],
    bij_tilde: &Matrix<R>,
    y: &[R],
    kappa: &ScalarFactor<R>,
    rho: &ScalarFactor<R>,
) -> LemmaPrediction<R> {
    let n = cd.dim();
    let b2 = cd.b2;
    let k = kappa.value(b2);
    let drho = rho.derivative(b2);
    let w = R::one() - k * b2;
    let two = R::cst(2.0);
    let beta = cd.beta(y);
    let alpha2 = cd.a.quad(y);
    let (r0, s0, r) = (cd.r0(y), cd.s0(y), cd.r());
    let (r_up, s_up) = (cd.r_up(), cd.s_up());
    let tilde2 = alpha2 - k * beta * beta;
    let g = (0..n)
        .map(|i| {
            g_tilde[i]
                + drho * (two * (r0 + s0) * y[i] - tilde2 * (r_up[i] + s_up[i] + k / w * r * cd.b_up[i]))
        })
        .collect();
    let (ri, si) = (cd.r_i(), cd.s_i());
    let b = &cd.b;
    let bij = Matrix::from_fn(n, |i, j| {
        bij_tilde[(i, j)]
            - two * drho
                * (b[i] * (ri[j] + si[j]) + b[j] * (ri[i] + si[i]) - r / w * (cd.a[(i, j)] - k * b[i] * b[j]))
    });
    LemmaPrediction { spray: g, bij }
}

/// Rescale lemma. Contractions refer to the original `(α, β)`; `g_hat` and
/// `bij_hat` belong to the pair being rescaled.
pub fn lemma_rescale<R: Real>(cd: &CovariantData<R>, g_hat: &[R], bij_hat: &Matrix<R>, nu: &ScalarFactor<R>) -> LemmaPrediction<R> {
    let n = cd.dim();
    let PhiJet { v, d1, .. } = nu.jet(cd.b2);
    let (ri, si) = (cd.r_i(), cd.s_i());
    let two = R::cst(2.0);
    let bij = Matrix::from_fn(n, |i, j| v * bij_hat[(i, j)] + two * d1 * cd.b[i] * (ri[j] + si[j]));
    LemmaPrediction { spray: g_hat.to_vec(), bij }
}

/// Forward or inverse direction of a chain.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

/// The universal factor triple for a parameter set.
#[derive(Clone, Debug)]
pub struct DeformChain<R: Real = f64> {
    pub kappa: ScalarFactor<R>,
    pub rho: ScalarFactor<R>,
    pub nu: ScalarFactor<R>,
    pub params: OdeParams<R>,
    pub direction: Direction,
}

/// `η(t) = exp(−∫₀ᵗ (k3+k2τ)/(2(1+(k1+k3)τ+k2τ²)) dτ)` on any carrier.
pub fn eta_generic<S: Scalar>(k: &OdeParams<S::Real>, t: S) -> S {
    exp_kernel(k.k3, k.k1, k.k2, t, k.tie())
}

/// Positivity of `1 + (k1+k3)τ + k2τ²` on `[0, t]`.
pub fn denom_positive_on<R: Real>(k: &OdeParams<R>, t: R) -> bool {
    t >= R::zero() && positive_roots(k.k2, k.c(), k.tie()).iter().all(|&r| r > t) && k.denom(t) > R::zero()
}

/// Case-matched `η(b̄²)`.
pub fn eta_factor<R: Real>(k: &OdeParams<R>, bbar2: R) -> Result<R> {
    if !denom_positive_on(k, bbar2) {
        return Err(GeomError::Regularity(format!(
            "1+(k1+k3)t+k2t^2 is not positive on [0, {bbar2}]"
        )));
    }
    Ok(eta_generic(k, bbar2))
}

/// `κ = −(k1+k3+k2b²)`, `ρ = −ln η`, `ν = √(1+(k1+k3)b²+k2b⁴)/η`.
pub fn standard_factors<R: Real>(k: &OdeParams<R>) -> DeformChain<R> {
    let (c, k2) = (k.c(), k.k2);
    let kappa = ScalarFactor::new("-(k1+k3+k2 t)", move |t: HyperDual<R>| {
        -(HyperDual::constant(c) + HyperDual::constant(k2) * t)
    });
    let kk = *k;
    let rho = ScalarFactor::new("-ln eta", move |t| -eta_generic(&kk, t).ln());
    let nu = ScalarFactor::new("sqrt(D)/eta", move |t| {
        (HyperDual::one() + HyperDual::constant(c) * t + HyperDual::constant(k2) * t * t).sqrt()
            / eta_generic(&kk, t)
    });
    DeformChain { kappa, rho, nu, params: *k, direction: Direction::Forward }
}

impl<R: Real> DeformChain<R> {
    pub fn inverse(mut self) -> Self {
        self.direction = Direction::Inverse;
        self
    }

    pub fn apply(&self, a: &Metric<R>, b: &Form<R>) -> Result<(Metric<R>, Form<R>)> {
        match self.direction {
            Direction::Forward => forward_chain(a, b, &self.params),
            Direction::Inverse => inverse_chain(a, b, &self.params),
        }
    }
}

/// `{1+(k1+k3)t+k2t²}κ′ + κ² + (k1+k3)κ + k2` for a factor `κ`.
pub fn riccati_residual<R: Real>(k: &OdeParams<R>, kappa: &ScalarFactor<R>, t: R) -> R {
    let PhiJet { v, d1, .. } = kappa.jet(t);
    k.denom(t) * d1 + v * v + k.c() * v + k.k2
}

fn check_params<R: Real>(a: &Metric<R>, b: &Form<R>, k: &OdeParams<R>) -> Result<()> {
    check_on_samples(a.as_ref(), b.as_ref(), "min of 1+(k1+k3)t+k2t^2 on [0, b^2]", |t| {
        if denom_positive_on(k, t) {
            k.denom(t)
        } else {
            positive_roots(k.k2, k.c(), k.tie()).into_iter().filter(|&r| r <= t).fold(k.denom(t), |m, r| {
                let v = k.denom(r);
                if v < m { v } else { m }
            }).min(R::zero())
        }
    })
}

/// Stretch, conformal change and rescale with the standard factors, each
/// evaluated at the original `b²`.
pub fn forward_chain<R: Real>(a: &Metric<R>, b: &Form<R>, k: &OdeParams<R>) -> Result<(Metric<R>, Form<R>)> {
    check_params(a, b, k)?;
    let ch = standard_factors(k);
    let e2rho = ch.rho.map("exp(2 rho)", |v| (v + v).exp());
    let stretch = e2rho.mul(&ch.kappa).map("-exp(2 rho) kappa", |v| -v);
    Ok(factor_pair(a, b, e2rho, stretch, ch.nu))
}

/// The stagewise pairs `(α̃, β̃)`, `(α̂, β̂)`, `(ᾱ, β̄)` of the forward chain.
#[derive(Clone, Debug)]
pub struct ChainStages<R: Real> {
    pub tilde: (Metric<R>, Form<R>),
    pub hat: (Metric<R>, Form<R>),
    pub bar: (Metric<R>, Form<R>),
}

/// Forward chain one step at a time, with every factor read at the original `b²`.
pub fn forward_stages<R: Real>(a: &Metric<R>, b: &Form<R>, k: &OdeParams<R>) -> Result<ChainStages<R>> {
    check_params(a, b, k)?;
    let ch = standard_factors(k);
    let src = Some((a.clone(), b.clone()));
    let one = ScalarFactor::constant(R::one());
    let zero = ScalarFactor::constant(R::zero());
    let neg_kappa = ch.kappa.map("-kappa", |v| -v);
    let tilde: Metric<R> = Arc::new(FactorMetric {
        a: a.clone(),
        b: b.clone(),
        norm_source: src.clone(),
        scale: one,
        stretch: neg_kappa,
    });
    let hat: Metric<R> = Arc::new(FactorMetric {
        a: tilde.clone(),
        b: b.clone(),
        norm_source: src.clone(),
        scale: ch.rho.map("exp(2 rho)", |v| (v + v).exp()),
        stretch: zero,
    });
    let bar_b: Form<R> = Arc::new(FactorForm { a: hat.clone(), b: b.clone(), norm_source: src, scale: ch.nu });
    Ok(ChainStages { tilde: (tilde, b.clone()), hat: (hat.clone(), b.clone()), bar: (hat, bar_b) })
}

/// `α = η√(ᾱ² − (k1+k3+k2b̄²)/(1+(k1+k3)b̄²+k2b̄⁴) β̄²)`,
/// `β = η/√(1+(k1+k3)b̄²+k2b̄⁴) β̄`, with `b̄² = ‖β̄‖²_ᾱ`.
pub fn inverse_chain<R: Real>(abar: &Metric<R>, bbar: &Form<R>, k: &OdeParams<R>) -> Result<(Metric<R>, Form<R>)> {
    check_params(abar, bbar, k)?;
    let (c, k2) = (k.c(), k.k2);
    let kk = *k;
    let denom = move |t: HyperDual<R>| HyperDual::one() + HyperDual::constant(c) * t + HyperDual::constant(k2) * t * t;
    let eta2 = ScalarFactor::new("eta^2", move |t| {
        let e = eta_generic(&kk, t);
        e * e
    });
    let stretch = ScalarFactor::new("-eta^2 (k1+k3+k2 t)/D", move |t| {
        let e = eta_generic(&kk, t);
        -e * e * (HyperDual::constant(c) + HyperDual::constant(k2) * t) / denom(t)
    });
    let form = ScalarFactor::new("eta/sqrt(D)", move |t| eta_generic(&kk, t) / denom(t).sqrt());
    Ok(factor_pair(abar, bbar, eta2, stretch, form))
}

/// The two-step Berwald chain: forward `ρ = ln(1−b²)`, `ν = √(1−b²)`;
/// inverse `α = (1+b̄²)ᾱ`, `β = √(1+b̄²)β̄`.
pub fn berwald_chain<R: Real>(a: &Metric<R>, b: &Form<R>, direction: Direction) -> Result<(Metric<R>, Form<R>)> {
    let zero = ScalarFactor::constant(R::zero());
    match direction {
        Direction::Forward => {
            check_on_samples(a.as_ref(), b.as_ref(), "1 - b^2", |t| R::one() - t)?;
            let sc = ScalarFactor::new("(1-t)^2", |t: HyperDual<R>| {
                let u = HyperDual::one() - t;
                u * u
            });
            let f = ScalarFactor::new("sqrt(1-t)", |t: HyperDual<R>| (HyperDual::one() - t).sqrt());
            Ok(factor_pair(a, b, sc, zero, f))
        }
        Direction::Inverse => {
            let sc = ScalarFactor::new("(1+t)^2", |t: HyperDual<R>| {
                let u = HyperDual::one() + t;
                u * u
            });
            let f = ScalarFactor::new("sqrt(1+t)", |t: HyperDual<R>| (HyperDual::one() + t).sqrt());
            Ok(factor_pair(a, b, sc, zero, f))
        }
    }
}

/// Maximum entrywise differences of two pairs at a point.
pub fn pair_difference<R: Real>(
    p: &(Metric<R>, Form<R>),
    q: &(Metric<R>, Form<R>),
    x: &[R],
) -> (R, R) {
    let da = p.0.eval_real(x).max_abs_diff(&q.0.eval_real(x));
    let (bp, bq) = (p.1.eval_real(x), q.1.eval_real(x));
    let db = bp.iter().zip(&bq).fold(R::zero(), |m, (u, v)| m.max((*u - *v).abs()));
    (da, db)
}

/// `‖β‖²_α` at a real point.
pub fn norm2_at<R: Real>(a: &dyn MetricField<R>, b: &dyn OneFormField<R>, x: &[R]) -> R {
    norm2(&a.eval_real(x), &b.eval_real(x))
}
