//! Metric and 1-form fields on a coordinate ball.
//!
//! Concrete fields implement the generic [`AnalyticMetric`] / [`AnalyticForm`]
//! traits once; blanket impls turn them into the object-safe [`MetricField`] /
//! [`OneFormField`] used everywhere else, with evaluation on reals, duals and
//! hyper-duals.

use std::fmt::Debug;
use std::sync::Arc;

use num_traits::{Float, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{GeomError, Result};
use crate::linalg::{dot, Matrix};
use crate::scalar::{Dual, HyperDual, Real, Scalar};

/// Object-safe Riemannian metric field `x ↦ a_ij(x)`.
pub trait MetricField<R: Real>: Send + Sync + Debug {
    fn dim(&self) -> usize;
    /// Radius of the open coordinate ball the field lives on (may be infinite).
    fn domain_radius(&self) -> R;
    fn eval_real(&self, x: &[R]) -> Matrix<R>;
    fn eval_dual(&self, x: &[Dual<R>]) -> Matrix<Dual<R>>;
    fn eval_hyper(&self, x: &[HyperDual<R>]) -> Matrix<HyperDual<R>>;
}

/// Object-safe 1-form field `x ↦ b_i(x)`.
pub trait OneFormField<R: Real>: Send + Sync + Debug {
    fn dim(&self) -> usize;
    fn eval_real(&self, x: &[R]) -> Vec<R>;
    fn eval_dual(&self, x: &[Dual<R>]) -> Vec<Dual<R>>;
    fn eval_hyper(&self, x: &[HyperDual<R>]) -> Vec<HyperDual<R>>;
}

/// A metric written once for every scalar carrier.
pub trait AnalyticMetric<R: Real>: Send + Sync + Debug {
    fn dim(&self) -> usize;
    fn domain_radius(&self) -> R {
        R::infinity()
    }
    fn matrix<S: Scalar<Real = R>>(&self, x: &[S]) -> Matrix<S>;
}

/// A 1-form written once for every scalar carrier.
pub trait AnalyticForm<R: Real>: Send + Sync + Debug {
    fn dim(&self) -> usize;
    fn covector<S: Scalar<Real = R>>(&self, x: &[S]) -> Vec<S>;
}

impl<R: Real, T: AnalyticMetric<R>> MetricField<R> for T {
    fn dim(&self) -> usize {
        AnalyticMetric::dim(self)
    }
    fn domain_radius(&self) -> R {
        AnalyticMetric::domain_radius(self)
    }
    fn eval_real(&self, x: &[R]) -> Matrix<R> {
        self.matrix(x)
    }
    fn eval_dual(&self, x: &[Dual<R>]) -> Matrix<Dual<R>> {
        self.matrix(x)
    }
    fn eval_hyper(&self, x: &[HyperDual<R>]) -> Matrix<HyperDual<R>> {
        self.matrix(x)
    }
}

impl<R: Real, T: AnalyticForm<R>> OneFormField<R> for T {
    fn dim(&self) -> usize {
        AnalyticForm::dim(self)
    }
    fn eval_real(&self, x: &[R]) -> Vec<R> {
        self.covector(x)
    }
    fn eval_dual(&self, x: &[Dual<R>]) -> Vec<Dual<R>> {
        self.covector(x)
    }
    fn eval_hyper(&self, x: &[HyperDual<R>]) -> Vec<HyperDual<R>> {
        self.covector(x)
    }
}

/// A vector field `x ↦ W^i(x)`, real evaluation only.
pub trait VectorField<R: Real>: Send + Sync + Debug {
    fn dim(&self) -> usize;
    fn eval_real(&self, x: &[R]) -> Vec<R>;
}

pub type Metric<R = f64> = Arc<dyn MetricField<R>>;
pub type Form<R = f64> = Arc<dyn OneFormField<R>>;
pub type Vector<R = f64> = Arc<dyn VectorField<R>>;

/// Evaluates a shared metric on any carrier.
#[inline]
pub fn metric_at<S: Scalar>(a: &dyn MetricField<S::Real>, x: &[S]) -> Matrix<S> {
    S::eval_metric(a, x)
}

/// Evaluates a shared 1-form on any carrier.
#[inline]
pub fn form_at<S: Scalar>(b: &dyn OneFormField<S::Real>, x: &[S]) -> Vec<S> {
    S::eval_form(b, x)
}

/// Radius used for sampling and geodesic stopping: the domain radius, or 1
/// for unbounded fields.
pub fn working_radius<R: Real>(a: &dyn MetricField<R>) -> R {
    let r = a.domain_radius();
    if r.is_finite() {
        r
    } else {
        R::one()
    }
}

/// Rejects points on or outside the domain boundary.
pub fn check_domain<S: Scalar>(a: &dyn MetricField<S::Real>, x: &[S]) -> Result<()> {
    if x.len() != a.dim() {
        return Err(GeomError::InvalidParameter(format!(
            "point has {} coordinates, field dimension is {}",
            x.len(),
            a.dim()
        )));
    }
    let r2 = x.iter().fold(S::Real::zero(), |acc, v| acc + v.re() * v.re());
    let norm = r2.sqrt();
    let radius = a.domain_radius();
    if !norm.is_finite() || norm >= radius {
        return Err(GeomError::Domain {
            norm: norm.to_f64().unwrap_or(f64::NAN),
            radius: radius.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(())
}


// Basic fields ---------------------------------------------------------------

/// The flat metric `δ_ij`.
#[derive(Clone, Debug)]
pub struct Euclidean {
    pub n: usize,
}

impl<R: Real> AnalyticMetric<R> for Euclidean {
    fn dim(&self) -> usize {
        self.n
    }
    fn matrix<S: Scalar<Real = R>>(&self, _x: &[S]) -> Matrix<S> {
        Matrix::identity(self.n)
    }
}

/// A constant positive-definite metric.
#[derive(Clone, Debug)]
pub struct ConstantMetric<R> {
    pub a: Matrix<R>,
}

impl<R: Real> AnalyticMetric<R> for ConstantMetric<R> {
    fn dim(&self) -> usize {
        self.a.dim()
    }
    fn matrix<S: Scalar<Real = R>>(&self, _x: &[S]) -> Matrix<S> {
        self.a.map(S::from_real)
    }
}

/// A constant covector.
#[derive(Clone, Debug)]
pub struct ConstantForm<R> {
    pub b: Vec<R>,
}

impl<R: Real> AnalyticForm<R> for ConstantForm<R> {
    fn dim(&self) -> usize {
        self.b.len()
    }
    fn covector<S: Scalar<Real = R>>(&self, _x: &[S]) -> Vec<S> {
        self.b.iter().map(|&v| S::from_real(v)).collect()
    }
}

/// `b_i(x) = c_i + L_ij x^j`.
#[derive(Clone, Debug)]
pub struct AffineForm<R> {
    pub c: Vec<R>,
    pub l: Matrix<R>,
}

impl<R: Real> AffineForm<R> {
    /// `b_i = λ x_i`.
    pub fn radial(n: usize, lambda: R) -> Self {
        AffineForm { c: vec![R::zero(); n], l: Matrix::identity(n).scale(lambda) }
    }

    /// The single-entry form `b_i = x^j` for `i = row`, `j = col`.
    pub fn coordinate(n: usize, row: usize, col: usize) -> Self {
        let mut l = Matrix::zeros(n);
        l[(row, col)] = R::one();
        AffineForm { c: vec![R::zero(); n], l }
    }
}

impl<R: Real> AnalyticForm<R> for AffineForm<R> {
    fn dim(&self) -> usize {
        self.c.len()
    }
    fn covector<S: Scalar<Real = R>>(&self, x: &[S]) -> Vec<S> {
        let l = self.l.map(S::from_real);
        let lx = l.mul_vec(x);
        self.c.iter().zip(lx).map(|(&c, v)| S::from_real(c) + v).collect()
    }
}

/// `(c₀ + ⟨w, x⟩) · a_ij(x)`.
#[derive(Clone, Debug)]
pub struct AffineScaledMetric<R: Real> {
    pub inner: Metric<R>,
    pub c0: R,
    pub w: Vec<R>,
}

impl<R: Real> AnalyticMetric<R> for AffineScaledMetric<R> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn domain_radius(&self) -> R {
        self.inner.domain_radius()
    }
    fn matrix<S: Scalar<Real = R>>(&self, x: &[S]) -> Matrix<S> {
        let w: Vec<S> = self.w.iter().map(|&v| S::from_real(v)).collect();
        let f = S::from_real(self.c0) + dot(&w, x);
        metric_at(&*self.inner, x).scale(f)
    }
}

/// `W = c + λx`.
#[derive(Clone, Debug)]
pub struct AffineVector<R> {
    pub c: Vec<R>,
    pub lambda: R,
}

impl<R: Real> VectorField<R> for AffineVector<R> {
    fn dim(&self) -> usize {
        self.c.len()
    }
    fn eval_real(&self, x: &[R]) -> Vec<R> {
        self.c.iter().zip(x).map(|(&c, &xi)| c + self.lambda * xi).collect()
    }
}

/// Smooth randomly drawn metric
/// `a(x) = e^{⟨w,x⟩}(M(x)M(x)ᵀ + I)`, `M(x) = M₀ + Σ_k x^k M_k + sin(x¹)·M_s`.
#[derive(Clone, Debug)]
pub struct RandomAnalyticMetric<R> {
    n: usize,
    m0: Matrix<R>,
    mk: Vec<Matrix<R>>,
    ms: Matrix<R>,
    w: Vec<R>,
}

impl<R: Real> RandomAnalyticMetric<R> {
    pub fn new(n: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = |scale: f64| {
            Matrix::from_fn(n, |_, _| R::from_f64(scale * rng.gen_range(-1.0..1.0)).unwrap())
        };
        let m0 = draw(0.5);
        let mk = (0..n).map(|_| draw(0.4)).collect();
        let ms = draw(0.3);
        let w = (0..n)
            .map(|_| R::from_f64(0.3 * rng.gen_range(-1.0..1.0)).unwrap())
            .collect();
        RandomAnalyticMetric { n, m0, mk, ms, w }
    }
}

impl<R: Real> AnalyticMetric<R> for RandomAnalyticMetric<R> {
    fn dim(&self) -> usize {
        self.n
    }
    fn domain_radius(&self) -> R {
        R::one()
    }
    fn matrix<S: Scalar<Real = R>>(&self, x: &[S]) -> Matrix<S> {
        let mut m = self.m0.map(S::from_real);
        for (k, mk) in self.mk.iter().enumerate() {
            m = &m + &mk.map(|v| S::from_real(v) * x[k]);
        }
        let s = x[0].sin();
        m = &m + &self.ms.map(|v| S::from_real(v) * s);
        let mmt = &m * &m.transpose();
        let w: Vec<S> = self.w.iter().map(|&v| S::from_real(v)).collect();
        (&mmt + &Matrix::identity(self.n)).scale(dot(&w, x).exp())
    }
}

/// Smooth randomly drawn 1-form `b_i = c_i + L_ij x^j + d_i cos(⟨v, x⟩)`.
#[derive(Clone, Debug)]
pub struct RandomAnalyticForm<R> {
    c: Vec<R>,
    l: Matrix<R>,
    d: Vec<R>,
    v: Vec<R>,
}

impl<R: Real> RandomAnalyticForm<R> {
    /// Coefficients scaled by `size` so that `b` stays small on the unit ball.
    pub fn new(n: usize, seed: u64, size: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
        let mut g = |s: f64| R::from_f64(s * rng.gen_range(-1.0..1.0)).unwrap();
        let c = (0..n).map(|_| g(size)).collect();
        let l = Matrix::from_fn(n, |_, _| g(size));
        let d = (0..n).map(|_| g(0.5 * size)).collect();
        let v = (0..n).map(|_| g(1.0)).collect();
        RandomAnalyticForm { c, l, d, v }
    }
}

impl<R: Real> AnalyticForm<R> for RandomAnalyticForm<R> {
    fn dim(&self) -> usize {
        self.c.len()
    }
    fn covector<S: Scalar<Real = R>>(&self, x: &[S]) -> Vec<S> {
        let v: Vec<S> = self.v.iter().map(|&t| S::from_real(t)).collect();
        let cs = dot(&v, x).cos();
        let lx = self.l.map(S::from_real).mul_vec(x);
        (0..self.c.len())
            .map(|i| S::from_real(self.c[i]) + lx[i] + S::from_real(self.d[i]) * cs)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_metric_is_positive_definite() {
        for seed in 0..20 {
            let a = RandomAnalyticMetric::<f64>::new(3, seed);
            let m = a.matrix(&[0.3, -0.5, 0.2]);
            assert!(m.is_positive_definite());
        }
    }

    #[test]
    fn dyn_dispatch_agrees_with_generic() {
        let a: Metric = Arc::new(RandomAnalyticMetric::<f64>::new(3, 7));
        let x = [0.1, 0.2, 0.3];
        let direct = a.eval_real(&x);
        let xd: Vec<Dual<f64>> = x.iter().map(|&v| Dual::constant(v)).collect();
        let viad = metric_at(&*a, &xd).re();
        assert!(direct.max_abs_diff(&viad) == 0.0);
    }

    #[test]
    fn domain_guard() {
        let a = RandomAnalyticMetric::<f64>::new(2, 1);
        assert!(check_domain::<f64>(&a, &[0.5, 0.5]).is_ok());
        assert!(matches!(check_domain::<f64>(&a, &[1.0, 0.0]), Err(GeomError::Domain { .. })));
        assert!(check_domain::<f64>(&a, &[0.1]).is_err());
    }
}
