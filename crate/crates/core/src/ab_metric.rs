//! (α,β)-metrics `F = α φ(β/α)`, their fundamental tensor and spray, and
//! Zermelo navigation for Randers metrics.

use crate::diffgeo::{covariant_from_parts, metric_jet, CovariantData};
use crate::error::{GeomError, Result};
use crate::field::{check_domain, form_at, metric_at, Form, Metric, MetricField, OneFormField, Vector};
use crate::linalg::{dot, is_zero_vec, Matrix};
use crate::phi::PhiSpec;
use crate::scalar::{HyperDual, Real, Scalar};

/// `F = α φ(β/α)`.
#[derive(Clone, Debug)]
pub struct ABMetric<R: Real = f64> {
    pub alpha: Metric<R>,
    pub beta: Form<R>,
    pub phi: PhiSpec<R>,
}

/// `g_ij = [½F²]_{y^i y^j}` with its smallest eigenvalue.
#[derive(Clone, Debug)]
pub struct FundamentalTensor<R: Real> {
    pub g: Matrix<R>,
    pub min_eigenvalue: R,
    pub positive_definite: bool,
}

impl<R: Real> ABMetric<R> {
    pub fn new(alpha: Metric<R>, beta: Form<R>, phi: PhiSpec<R>) -> Result<Self> {
        if alpha.dim() != beta.dim() {
            return Err(GeomError::InvalidParameter(format!(
                "metric dimension {} differs from 1-form dimension {}",
                alpha.dim(),
                beta.dim()
            )));
        }
        Ok(ABMetric { alpha, beta, phi })
    }

    pub fn dim(&self) -> usize {
        self.alpha.dim()
    }

    pub fn domain_radius(&self) -> R {
        self.alpha.domain_radius()
    }

    /// `F(x, y)` on any carrier. No domain check.
    pub fn eval<S: Scalar<Real = R>>(&self, x: &[S], y: &[S]) -> Result<S> {
        let a = metric_at(self.alpha.as_ref(), x);
        let b = form_at(self.beta.as_ref(), x);
        let alpha = a.quad(y).sqrt();
        if !(alpha.re() > R::zero()) {
            return Err(GeomError::ZeroVector);
        }
        let s = dot(&b, y) / alpha;
        Ok(alpha * self.phi.apply(s)?)
    }

    /// `F(x, y)` with domain and zero-vector checks.
    pub fn f_eval(&self, x: &[R], y: &[R]) -> Result<R> {
        check_domain(self.alpha.as_ref(), x)?;
        if y.len() != x.len() {
            return Err(GeomError::InvalidParameter("x and y differ in length".into()));
        }
        if is_zero_vec(y) {
            return Err(GeomError::ZeroVector);
        }
        self.eval(x, y)
    }

    pub fn fundamental_tensor(&self, x: &[R], y: &[R]) -> Result<FundamentalTensor<R>> {
        self.f_eval(x, y)?;
        let n = x.len();
        let xh: Vec<HyperDual<R>> = x.iter().map(|&v| HyperDual::constant(v)).collect();
        let mut g = Matrix::zeros(n);
        for i in 0..n {
            for j in i..n {
                let yh: Vec<HyperDual<R>> = (0..n)
                    .map(|k| {
                        let e1 = if k == i { R::one() } else { R::zero() };
                        let e2 = if k == j { R::one() } else { R::zero() };
                        HyperDual::new(y[k], e1, e2, R::zero())
                    })
                    .collect();
                let f = self.eval(&xh, &yh)?;
                let v = (f * f).e12 * R::cst(0.5);
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
        }
        let min_eigenvalue = g.min_eigenvalue();
        Ok(FundamentalTensor { g, min_eigenvalue, positive_definite: min_eigenvalue > R::zero() })
    }

    /// Spray coefficients `G^i`.
    pub fn spray(&self, x: &[R], y: &[R]) -> Result<Vec<R>> {
        spray_ab(self, x, y)
    }

    /// `‖β‖_α` at `x`.
    pub fn norm_b(&self, x: &[R]) -> Result<R> {
        crate::diffgeo::norm_b(self.alpha.as_ref(), self.beta.as_ref(), x)
    }
}

/// `Q = φ′/(φ − sφ′)`, `Θ`, `Ψ` at `(s, b²)`.
pub fn qtp<R: Real>(phi: &PhiSpec<R>, s: R, b2: R) -> Result<(R, R, R)> {
    let j = phi.eval(s)?;
    let f = j.f(s);
    if !(f > R::zero()) {
        return Err(GeomError::Regularity(format!("phi - s phi' = {f} at s = {s}")));
    }
    let den = f + (b2 - s * s) * j.d2;
    if !(den > R::zero()) {
        return Err(GeomError::Regularity(format!(
            "phi - s phi' + (b^2 - s^2) phi'' = {den} at s = {s}, b^2 = {b2}"
        )));
    }
    let two = R::cst(2.0);
    let q = j.d1 / f;
    let theta = (f * j.d1 - s * j.v * j.d2) / (two * j.v * den);
    let psi = j.d2 / (two * den);
    Ok((q, theta, psi))
}

/// Spray of `F = αφ(β/α)` from the spray of α and the covariant derivative of β.
pub fn spray_ab<R: Real>(m: &ABMetric<R>, x: &[R], y: &[R]) -> Result<Vec<R>> {
    if is_zero_vec(y) {
        return Err(GeomError::ZeroVector);
    }
    let jet = metric_jet(m.alpha.as_ref(), x)?;
    let gamma = jet.christoffel();
    let cd = covariant_from_parts(jet.a, jet.a_inv, &gamma, m.beta.as_ref(), x);
    let half = R::cst(0.5);
    let g_alpha: Vec<R> = gamma.contract(y, y).into_iter().map(|v| v * half).collect();
    spray_from_parts(&m.phi, &cd, &g_alpha, y)
}

/// Assembles `G^i` from `G^i_α` and the covariant data of β.
pub fn spray_from_parts<R: Real>(
    phi: &PhiSpec<R>,
    cd: &CovariantData<R>,
    g_alpha: &[R],
    y: &[R],
) -> Result<Vec<R>> {
    let alpha = cd.alpha(y);
    let s = cd.beta(y) / alpha;
    let (q, theta, psi) = qtp(phi, s, cd.b2)?;
    let s_up0 = cd.s_up0(y);
    let two = R::cst(2.0);
    let k = -two * alpha * q * cd.s0(y) + cd.r00(y);
    Ok((0..y.len())
        .map(|i| g_alpha[i] + alpha * q * s_up0[i] + theta * k / alpha * y[i] + psi * k * cd.b_up[i])
        .collect())
}

/// Zermelo data: a Riemannian metric `h` and a wind `W` with `|W|_h < 1`.
#[derive(Clone, Debug)]
pub struct NavigationData<R: Real = f64> {
    pub h: Metric<R>,
    pub w: Vector<R>,
}

/// Pointwise navigation data recovered from a Randers pair.
#[derive(Clone, Debug, PartialEq)]
pub struct NavigationSample<R: Real> {
    pub h: Matrix<R>,
    pub w: Vec<R>,
}

/// `a_ij = ((1−|W|²)h_ij + W_iW_j)/(1−|W|²)²`, `b_i = −W_i/(1−|W|²)`.
pub fn navigation_to_randers<R: Real>(nav: &NavigationData<R>, x: &[R]) -> Result<(Matrix<R>, Vec<R>)> {
    check_domain(nav.h.as_ref(), x)?;
    let h = nav.h.eval_real(x);
    let w = nav.w.eval_real(x);
    navigation_to_randers_at(&h, &w)
}

pub fn navigation_to_randers_at<R: Real>(h: &Matrix<R>, w: &[R]) -> Result<(Matrix<R>, Vec<R>)> {
    let w_flat = h.mul_vec(w);
    let w2 = dot(&w_flat, w);
    let lam = R::one() - w2;
    if !(lam > R::zero()) {
        return Err(GeomError::Regularity(format!("|W|_h^2 = {w2} is not below 1")));
    }
    let a = (&h.scale(lam) + &Matrix::outer(&w_flat, &w_flat)).scale(R::one() / (lam * lam));
    let b = w_flat.iter().map(|&v| -v / lam).collect();
    Ok((a, b))
}

/// `h = (1−b²)(α² − β²)` as a matrix, `W♭ = −(1−b²)β`, `W = h⁻¹W♭`.
pub fn randers_to_navigation<R: Real>(
    alpha: &dyn MetricField<R>,
    beta: &dyn OneFormField<R>,
    x: &[R],
) -> Result<NavigationSample<R>> {
    check_domain(alpha, x)?;
    randers_to_navigation_at(&alpha.eval_real(x), &beta.eval_real(x))
}

pub fn randers_to_navigation_at<R: Real>(a: &Matrix<R>, b: &[R]) -> Result<NavigationSample<R>> {
    let b2 = a.inverse()?.quad(b);
    let lam = R::one() - b2;
    if !(lam > R::zero()) {
        return Err(GeomError::Regularity(format!("b^2 = {b2} is not below 1")));
    }
    let h = (a - &Matrix::outer(b, b)).scale(lam);
    let w_flat: Vec<R> = b.iter().map(|&v| -lam * v).collect();
    let w = h.solve(&w_flat)?;
    Ok(NavigationSample { h, w })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::field::{AffineForm, ConstantForm, Euclidean};
    use crate::phi::NamedPhi;

    fn minkowski_randers() -> ABMetric<f64> {
        ABMetric::new(
            Arc::new(Euclidean { n: 3 }),
            Arc::new(ConstantForm { b: vec![0.2, 0.1, -0.3] }),
            PhiSpec::randers(0.0, 1.0),
        )
        .unwrap()
    }

    #[test]
    fn riemannian_tensor_is_metric() {
        let m = ABMetric::new(
            Arc::new(Euclidean { n: 3 }),
            Arc::new(AffineForm::radial(3, 0.3)),
            PhiSpec::Named(NamedPhi::Riemann),
        )
        .unwrap();
        let t = m.fundamental_tensor(&[0.1, 0.2, 0.3], &[1.0, -2.0, 0.5]).unwrap();
        assert!(t.g.max_abs_diff(&Matrix::identity(3)) < 1e-14);
        assert!(t.positive_definite);
    }

    #[test]
    fn qtp_linear_and_riemann() {
        let (q, t, p) = qtp::<f64>(&PhiSpec::randers(0.0, 1.0), 0.3, 0.5).unwrap();
        assert!((q - 1.0).abs() < 1e-15);
        assert!((t - 1.0 / 2.6).abs() < 1e-15);
        assert_eq!(p, 0.0);
        let (q, t, p) = qtp(&PhiSpec::Named(NamedPhi::Riemann), 0.3, 0.5).unwrap();
        assert_eq!((q, t, p), (0.0, 0.0, 0.0));
    }

    #[test]
    fn parallel_form_keeps_riemann_spray() {
        let m = minkowski_randers();
        let g = m.spray(&[0.1, 0.0, 0.2], &[1.0, 0.5, 0.2]).unwrap();
        assert!(g.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn zero_vector_rejected() {
        let m = minkowski_randers();
        assert_eq!(m.f_eval(&[0.0; 3], &[0.0; 3]), Err(GeomError::ZeroVector));
    }

    #[test]
    fn navigation_zero_wind() {
        let h = Matrix::from_rows(&[vec![2.0, 0.1], vec![0.1, 1.0]]);
        let (a, b) = navigation_to_randers_at(&h, &[0.0, 0.0]).unwrap();
        assert!(a.max_abs_diff(&h) < 1e-15);
        assert!(b.iter().all(|&v| v == 0.0));
        assert!(navigation_to_randers_at(&h, &[1.0, 0.0]).is_err());
    }
}
