//! Riemannian primitives: Christoffel symbols, spray, covariant derivative of
//! a 1-form and its r/s decomposition.

use crate::error::Result;
use crate::field::{check_domain, form_at, metric_at, MetricField, OneFormField};
use crate::linalg::{dot, Matrix};
use crate::scalar::{Dual, Real};

/// `Γ^i_jk`, stored as `gamma[i][(j, k)]`.
#[derive(Clone, Debug)]
pub struct Christoffel<R: Real> {
    pub gamma: Vec<Matrix<R>>,
}

impl<R: Real> Christoffel<R> {
    pub fn dim(&self) -> usize {
        self.gamma.len()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> R {
        self.gamma[i][(j, k)]
    }

    /// `Γ^i_jk u^j v^k`.
    pub fn contract(&self, u: &[R], v: &[R]) -> Vec<R> {
        self.gamma.iter().map(|g| g.bilinear(u, v)).collect()
    }
}

/// Metric, its inverse and first partials at a point.
#[derive(Clone, Debug)]
pub struct MetricJet<R: Real> {
    pub a: Matrix<R>,
    pub a_inv: Matrix<R>,
    /// `da[k][(i, j)] = ∂_k a_ij`.
    pub da: Vec<Matrix<R>>,
}

pub fn metric_jet<R: Real>(a: &dyn MetricField<R>, x: &[R]) -> Result<MetricJet<R>> {
    check_domain(a, x)?;
    let n = x.len();
    let mut xd: Vec<Dual<R>> = x.iter().map(|&v| Dual::constant(v)).collect();
    let mut da = Vec::with_capacity(n);
    let mut a0 = None;
    for k in 0..n {
        xd[k].eps = R::one();
        let m = metric_at(a, &xd);
        xd[k].eps = R::zero();
        da.push(m.map(|v| v.eps));
        if a0.is_none() {
            a0 = Some(m.re());
        }
    }
    let a0 = a0.unwrap_or_else(|| a.eval_real(x));
    let a_inv = a0.inverse()?;
    Ok(MetricJet { a: a0, a_inv, da })
}

impl<R: Real> MetricJet<R> {
    pub fn christoffel(&self) -> Christoffel<R> {
        let n = self.a.dim();
        let half = R::cst(0.5);
        // Γ_ljk = ½(∂_j a_lk + ∂_k a_jl − ∂_l a_jk)
        let lower: Vec<Matrix<R>> = (0..n)
            .map(|l| {
                Matrix::from_fn(n, |j, k| {
                    half * (self.da[j][(l, k)] + self.da[k][(j, l)] - self.da[l][(j, k)])
                })
            })
            .collect();
        let gamma = (0..n)
            .map(|i| {
                Matrix::from_fn(n, |j, k| {
                    (0..n).fold(R::zero(), |acc, l| acc + self.a_inv[(i, l)] * lower[l][(j, k)])
                })
            })
            .collect();
        Christoffel { gamma }
    }
}

pub fn christoffel<R: Real>(a: &dyn MetricField<R>, x: &[R]) -> Result<Christoffel<R>> {
    Ok(metric_jet(a, x)?.christoffel())
}

/// `G^i_α = ½ Γ^i_jk y^j y^k`.
pub fn spray_riemann<R: Real>(a: &dyn MetricField<R>, x: &[R], y: &[R]) -> Result<Vec<R>> {
    let g = christoffel(a, x)?;
    let half = R::cst(0.5);
    Ok(g.contract(y, y).into_iter().map(|v| v * half).collect())
}

/// `b_i(x)` and `∂_j b_i` as `(b, db)` with `db[(i, j)] = ∂_j b_i`.
pub fn form_jet<R: Real>(b: &dyn OneFormField<R>, x: &[R]) -> (Vec<R>, Matrix<R>) {
    let n = x.len();
    let mut xd: Vec<Dual<R>> = x.iter().map(|&v| Dual::constant(v)).collect();
    let mut db = Matrix::zeros(n);
    let mut b0 = b.eval_real(x);
    for j in 0..n {
        xd[j].eps = R::one();
        let v = form_at(b, &xd);
        xd[j].eps = R::zero();
        for i in 0..n {
            db[(i, j)] = v[i].eps;
        }
        if j == 0 {
            b0 = v.iter().map(|d| d.re).collect();
        }
    }
    (b0, db)
}

/// Covariant derivative of β with respect to α at a point, with the usual
/// contractions. Indices are raised and lowered with `a`.
#[derive(Clone, Debug)]
pub struct CovariantData<R: Real> {
    pub a: Matrix<R>,
    pub a_inv: Matrix<R>,
    pub b: Vec<R>,
    /// `b^i = a^{ij} b_j`
    pub b_up: Vec<R>,
    /// `b² = a^{ij} b_i b_j`
    pub b2: R,
    /// `b_{i|j}`
    pub bij: Matrix<R>,
    pub rij: Matrix<R>,
    pub sij: Matrix<R>,
}

pub fn covariant_derivative<R: Real>(
    b: &dyn OneFormField<R>,
    a: &dyn MetricField<R>,
    x: &[R],
) -> Result<CovariantData<R>> {
    let jet = metric_jet(a, x)?;
    let gamma = jet.christoffel();
    Ok(covariant_from_parts(jet.a, jet.a_inv, &gamma, b, x))
}

pub(crate) fn covariant_from_parts<R: Real>(
    a: Matrix<R>,
    a_inv: Matrix<R>,
    gamma: &Christoffel<R>,
    b: &dyn OneFormField<R>,
    x: &[R],
) -> CovariantData<R> {
    let n = x.len();
    let (bv, db) = form_jet(b, x);
    let bij = Matrix::from_fn(n, |i, j| {
        db[(i, j)] - (0..n).fold(R::zero(), |acc, k| acc + bv[k] * gamma.get(k, i, j))
    });
    let b_up = a_inv.mul_vec(&bv);
    let b2 = dot(&bv, &b_up);
    let rij = bij.symmetric_part();
    let sij = bij.antisymmetric_part();
    CovariantData { a, a_inv, b: bv, b_up, b2, bij, rij, sij }
}

impl<R: Real> CovariantData<R> {
    pub fn dim(&self) -> usize {
        self.b.len()
    }

    /// `b = √b²`
    pub fn norm(&self) -> R {
        self.b2.max(R::zero()).sqrt()
    }

    /// `r_j = b^i r_ij`
    pub fn r_i(&self) -> Vec<R> {
        self.rij.transpose().mul_vec(&self.b_up)
    }

    /// `s_j = b^i s_ij`
    pub fn s_i(&self) -> Vec<R> {
        self.sij.transpose().mul_vec(&self.b_up)
    }

    /// `r = r_ij b^i b^j`
    pub fn r(&self) -> R {
        self.rij.quad(&self.b_up)
    }

    /// `r^i = a^{ij} r_j`
    pub fn r_up(&self) -> Vec<R> {
        self.a_inv.mul_vec(&self.r_i())
    }

    /// `s^i = a^{ij} s_j`
    pub fn s_up(&self) -> Vec<R> {
        self.a_inv.mul_vec(&self.s_i())
    }

    /// `r_00 = r_ij y^i y^j`
    pub fn r00(&self, y: &[R]) -> R {
        self.rij.quad(y)
    }

    /// `r_0 = r_i y^i`
    pub fn r0(&self, y: &[R]) -> R {
        dot(&self.r_i(), y)
    }

    /// `s_0 = s_i y^i`
    pub fn s0(&self, y: &[R]) -> R {
        dot(&self.s_i(), y)
    }

    /// `s_{i0} = s_ij y^j`
    pub fn s_i0(&self, y: &[R]) -> Vec<R> {
        self.sij.mul_vec(y)
    }

    /// `s^i_0 = a^{ij} s_jk y^k`
    pub fn s_up0(&self, y: &[R]) -> Vec<R> {
        self.a_inv.mul_vec(&self.sij.mul_vec(y))
    }

    /// `α(y)`
    pub fn alpha(&self, y: &[R]) -> R {
        self.a.quad(y).sqrt()
    }

    /// `β(y)`
    pub fn beta(&self, y: &[R]) -> R {
        dot(&self.b, y)
    }

    /// Maximum entry of `s_ij`.
    pub fn closedness_residual(&self) -> R {
        self.sij.max_abs()
    }

    /// Trace fit `c = a^{ij} r_ij / n` and the Frobenius norm of `r_ij − c a_ij`.
    pub fn conformal_fit(&self) -> (R, R) {
        let n = R::from_usize(self.dim()).unwrap();
        let c = self.a_inv.contract(&self.rij) / n;
        let res = (&self.rij - &self.a.scale(c)).frobenius();
        (c, res)
    }
}

/// `‖β‖_α = √(a^{ij} b_i b_j)`.
pub fn norm_b<R: Real>(a: &dyn MetricField<R>, b: &dyn OneFormField<R>, x: &[R]) -> Result<R> {
    check_domain(a, x)?;
    let a_inv = a.eval_real(x).inverse()?;
    let bv = b.eval_real(x);
    Ok(a_inv.quad(&bv).max(R::zero()).sqrt())
}

/// `b² = a^{ij} b_i b_j` for generic carriers, given already evaluated fields.
pub fn norm2_generic<S: crate::scalar::Scalar>(a: &Matrix<S>, b: &[S]) -> Result<S> {
    let inv = a.inverse()?;
    Ok(inv.quad(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{AffineForm, ConstantForm, Euclidean, RandomAnalyticMetric};

    #[test]
    fn euclidean_is_flat() {
        let g = christoffel::<f64>(&Euclidean { n: 3 }, &[0.1, 0.2, 0.3]).unwrap();
        assert!(g.gamma.iter().all(|m| m.max_abs() == 0.0));
        let s = spray_riemann::<f64>(&Euclidean { n: 3 }, &[0.1, 0.2, 0.3], &[1.0, 2.0, 3.0]).unwrap();
        assert!(s.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn christoffel_symmetric_in_lower_indices() {
        let a = RandomAnalyticMetric::<f64>::new(3, 3);
        let g = christoffel::<f64>(&a, &[0.2, -0.1, 0.4]).unwrap();
        for m in &g.gamma {
            assert!(m.max_abs_diff(&m.transpose()) < 1e-15);
        }
    }

    #[test]
    fn radial_form_on_euclidean() {
        let b = AffineForm::<f64>::radial(3, 0.7);
        let cd = covariant_derivative::<f64>(&b, &Euclidean { n: 3 }, &[0.1, 0.2, 0.3]).unwrap();
        assert!(cd.bij.max_abs_diff(&Matrix::identity(3).scale(0.7)) < 1e-15);
        assert_eq!(cd.sij.max_abs(), 0.0);
        let (c, res) = cd.conformal_fit();
        assert!((c - 0.7).abs() < 1e-15 && res < 1e-15);
    }

    #[test]
    fn non_closed_witness() {
        // b_2 = x¹ (0-based: b[1] = x[0])
        let b = AffineForm::<f64>::coordinate(3, 1, 0);
        let cd = covariant_derivative::<f64>(&b, &Euclidean { n: 3 }, &[0.3, 0.2, 0.1]).unwrap();
        assert!((cd.sij[(0, 1)] + 0.5).abs() < 1e-15);
        assert!((cd.sij[(1, 0)] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn constant_form_norm() {
        let b = ConstantForm { b: vec![0.3, 0.4, 0.0] };
        let v = norm_b::<f64>(&Euclidean { n: 3 }, &b, &[0.0, 0.0, 0.0]).unwrap();
        assert!((v - 0.5).abs() < 1e-15);
    }
}
