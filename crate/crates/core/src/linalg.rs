//! Small dense square matrices over any [`Scalar`].

use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_traits::{Float, ToPrimitive, Zero};

use crate::error::{GeomError, Result};
use crate::scalar::{Real, Scalar};

/// Condition estimate above which a matrix is declared singular.
pub const SINGULAR_COND: f64 = 1e12;

/// Row-major `n × n` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<S> {
    n: usize,
    data: Vec<S>,
}

impl<S: Scalar> Matrix<S> {
    pub fn zeros(n: usize) -> Self {
        Matrix { n, data: vec![S::zero(); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, |i, j| if i == j { S::one() } else { S::zero() })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> S) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Matrix { n, data }
    }

    /// Builds from rows; panics if not square.
    pub fn from_rows(rows: &[Vec<S>]) -> Self {
        let n = rows.len();
        assert!(rows.iter().all(|r| r.len() == n), "matrix must be square");
        Self::from_fn(n, |i, j| rows[i][j])
    }

    pub fn diagonal(d: &[S]) -> Self {
        Self::from_fn(d.len(), |i, j| if i == j { d[i] } else { S::zero() })
    }

    /// `u vᵀ`.
    pub fn outer(u: &[S], v: &[S]) -> Self {
        assert_eq!(u.len(), v.len());
        Self::from_fn(u.len(), |i, j| u[i] * v[j])
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[S] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[S] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn to_rows(&self) -> Vec<Vec<S>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(S) -> T) -> Matrix<T> {
        Matrix { n: self.n, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    /// Real parts.
    pub fn re(&self) -> Matrix<S::Real> {
        self.map(|v| v.re())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.n, |i, j| self[(j, i)])
    }

    pub fn scale(&self, k: S) -> Self {
        self.map(|v| v * k)
    }

    pub fn mul_vec(&self, v: &[S]) -> Vec<S> {
        assert_eq!(v.len(), self.n);
        (0..self.n).map(|i| dot(self.row(i), v)).collect()
    }

    /// `uᵀ A v`.
    pub fn bilinear(&self, u: &[S], v: &[S]) -> S {
        dot(u, &self.mul_vec(v))
    }

    /// `yᵀ A y`.
    pub fn quad(&self, y: &[S]) -> S {
        self.bilinear(y, y)
    }

    pub fn trace(&self) -> S {
        (0..self.n).fold(S::zero(), |acc, i| acc + self[(i, i)])
    }

    /// Sum of `A_ij B_ij`.
    pub fn contract(&self, other: &Self) -> S {
        assert_eq!(self.n, other.n);
        self.data.iter().zip(&other.data).fold(S::zero(), |acc, (&a, &b)| acc + a * b)
    }

    pub fn symmetric_part(&self) -> Self {
        let half = S::cst(0.5);
        Self::from_fn(self.n, |i, j| (self[(i, j)] + self[(j, i)]) * half)
    }

    pub fn antisymmetric_part(&self) -> Self {
        let half = S::cst(0.5);
        Self::from_fn(self.n, |i, j| (self[(i, j)] - self[(j, i)]) * half)
    }

    /// LU factorisation with partial pivoting on the real parts.
    fn lu(&self) -> Result<(Vec<S>, Vec<usize>, bool)> {
        let n = self.n;
        let mut a = self.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut odd = false;
        for k in 0..n {
            let mut p = k;
            let mut best = a[k * n + k].re().abs();
            for i in k + 1..n {
                let v = a[i * n + k].re().abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == S::Real::zero() || !best.is_finite() {
                return Err(GeomError::Singular { cond: f64::INFINITY });
            }
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
                odd = !odd;
            }
            let pivot = a[k * n + k];
            for i in k + 1..n {
                let f = a[i * n + k] / pivot;
                a[i * n + k] = f;
                for j in k + 1..n {
                    let t = a[k * n + j];
                    a[i * n + j] = a[i * n + j] - f * t;
                }
            }
        }
        Ok((a, perm, odd))
    }

    fn lu_solve(lu: &[S], perm: &[usize], n: usize, b: &[S]) -> Vec<S> {
        let mut x: Vec<S> = perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                let t = lu[i * n + j] * x[j];
                x[i] = x[i] - t;
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                let t = lu[i * n + j] * x[j];
                x[i] = x[i] - t;
            }
            x[i] = x[i] / lu[i * n + i];
        }
        x
    }

    /// Inverse, rejecting matrices whose 1-norm condition estimate exceeds
    /// [`SINGULAR_COND`].
    pub fn inverse(&self) -> Result<Self> {
        let n = self.n;
        let (lu, perm, _) = self.lu()?;
        let mut inv = Self::zeros(n);
        let mut e = vec![S::zero(); n];
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = S::zero());
            e[j] = S::one();
            let col = Self::lu_solve(&lu, &perm, n, &e);
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        let cond = norm1(&self.re()) * norm1(&inv.re());
        let cond = cond.to_f64().unwrap_or(f64::INFINITY);
        if !(cond <= SINGULAR_COND) {
            return Err(GeomError::Singular { cond });
        }
        Ok(inv)
    }

    pub fn solve(&self, b: &[S]) -> Result<Vec<S>> {
        Ok(self.inverse()?.mul_vec(b))
    }

    pub fn det(&self) -> S {
        match self.lu() {
            Ok((lu, _, odd)) => {
                let d = (0..self.n).fold(S::one(), |acc, i| acc * lu[i * self.n + i]);
                if odd {
                    -d
                } else {
                    d
                }
            }
            Err(_) => S::zero(),
        }
    }
}

fn norm1<R: Real>(m: &Matrix<R>) -> R {
    (0..m.n)
        .map(|j| (0..m.n).fold(R::zero(), |acc, i| acc + m[(i, j)].abs()))
        .fold(R::zero(), R::max)
}

impl<R: Real> Matrix<R> {
    /// Frobenius norm.
    pub fn frobenius(&self) -> R {
        self.data.iter().fold(R::zero(), |acc, &v| acc + v * v).sqrt()
    }

    pub fn max_abs(&self) -> R {
        self.data.iter().fold(R::zero(), |acc, &v| acc.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> R {
        (self - other).max_abs()
    }

    /// Eigenvalues of the symmetric part by cyclic Jacobi rotations, ascending.
    pub fn sym_eigenvalues(&self) -> Vec<R> {
        let n = self.n;
        let mut a = self.symmetric_part();
        let two = R::one() + R::one();
        for _sweep in 0..100 {
            let mut off = R::zero();
            for i in 0..n {
                for j in i + 1..n {
                    off = off + a[(i, j)] * a[(i, j)];
                }
            }
            let scale = a.frobenius();
            if off.sqrt() <= R::epsilon() * scale || off == R::zero() {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    let apq = a[(p, q)];
                    if apq == R::zero() {
                        continue;
                    }
                    let theta = (a[(q, q)] - a[(p, p)]) / (two * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + R::one()).sqrt());
                    let c = R::one() / (t * t + R::one()).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[(k, p)];
                        let akq = a[(k, q)];
                        a[(k, p)] = c * akp - s * akq;
                        a[(k, q)] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[(p, k)];
                        let aqk = a[(q, k)];
                        a[(p, k)] = c * apk - s * aqk;
                        a[(q, k)] = s * apk + c * aqk;
                    }
                }
            }
        }
        let mut ev: Vec<R> = (0..n).map(|i| a[(i, i)]).collect();
        ev.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
        ev
    }

    /// Smallest eigenvalue of the symmetric part.
    pub fn min_eigenvalue(&self) -> R {
        self.sym_eigenvalues().first().copied().unwrap_or(R::zero())
    }

    pub fn is_positive_definite(&self) -> bool {
        self.min_eigenvalue() > R::zero()
    }
}

impl<S: Scalar> Index<(usize, usize)> for Matrix<S> {
    type Output = S;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &S {
        &self.data[i * self.n + j]
    }
}

impl<S: Scalar> IndexMut<(usize, usize)> for Matrix<S> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut S {
        &mut self.data[i * self.n + j]
    }
}

impl<'a, S: Scalar> Add for &'a Matrix<S> {
    type Output = Matrix<S>;
    fn add(self, o: Self) -> Matrix<S> {
        assert_eq!(self.n, o.n);
        Matrix { n: self.n, data: self.data.iter().zip(&o.data).map(|(&a, &b)| a + b).collect() }
    }
}

impl<'a, S: Scalar> Sub for &'a Matrix<S> {
    type Output = Matrix<S>;
    fn sub(self, o: Self) -> Matrix<S> {
        assert_eq!(self.n, o.n);
        Matrix { n: self.n, data: self.data.iter().zip(&o.data).map(|(&a, &b)| a - b).collect() }
    }
}

impl<'a, S: Scalar> Mul for &'a Matrix<S> {
    type Output = Matrix<S>;
    fn mul(self, o: Self) -> Matrix<S> {
        assert_eq!(self.n, o.n);
        let n = self.n;
        Matrix::from_fn(n, |i, j| (0..n).fold(S::zero(), |acc, k| acc + self[(i, k)] * o[(k, j)]))
    }
}

impl<S: Scalar> Add for Matrix<S> {
    type Output = Matrix<S>;
    fn add(self, o: Self) -> Matrix<S> {
        &self + &o
    }
}

impl<S: Scalar> Sub for Matrix<S> {
    type Output = Matrix<S>;
    fn sub(self, o: Self) -> Matrix<S> {
        &self - &o
    }
}

// Vector helpers -------------------------------------------------------------

#[inline]
pub fn dot<S: Scalar>(u: &[S], v: &[S]) -> S {
    debug_assert_eq!(u.len(), v.len());
    u.iter().zip(v).fold(S::zero(), |acc, (&a, &b)| acc + a * b)
}

#[inline]
pub fn norm<S: Scalar>(v: &[S]) -> S {
    dot(v, v).sqrt()
}

pub fn axpy<S: Scalar>(a: S, x: &[S], y: &[S]) -> Vec<S> {
    x.iter().zip(y).map(|(&xi, &yi)| a * xi + yi).collect()
}

pub fn scale<S: Scalar>(a: S, x: &[S]) -> Vec<S> {
    x.iter().map(|&v| a * v).collect()
}

pub fn sub<S: Scalar>(x: &[S], y: &[S]) -> Vec<S> {
    x.iter().zip(y).map(|(&a, &b)| a - b).collect()
}

pub fn add<S: Scalar>(x: &[S], y: &[S]) -> Vec<S> {
    x.iter().zip(y).map(|(&a, &b)| a + b).collect()
}

pub fn max_abs<R: Real>(v: &[R]) -> R {
    v.iter().fold(R::zero(), |acc, &x| acc.max(x.abs()))
}

pub fn is_zero_vec<S: Scalar>(v: &[S]) -> bool {
    v.iter().all(|x| x.re().is_zero())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_of_known_matrix() {
        let a = Matrix::from_rows(&[vec![4.0, 1.0, 0.0], vec![1.0, 3.0, 1.0], vec![0.0, 1.0, 2.0]]);
        let inv = a.inverse().unwrap();
        let prod = &a * &inv;
        assert!(prod.max_abs_diff(&Matrix::identity(3)) < 1e-14);
        assert!((a.det() - 18.0).abs() < 1e-12);
    }

    #[test]
    fn pivoting_handles_zero_leading_entry() {
        let a = Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        let inv = a.inverse().unwrap();
        assert_eq!(inv, a);
        assert_eq!(a.det(), -1.0);
    }

    #[test]
    fn near_singular_is_rejected() {
        let a = Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0 + 1e-14]]);
        assert!(matches!(a.inverse(), Err(GeomError::Singular { .. })));
        let z = Matrix::<f64>::zeros(2);
        assert!(z.inverse().is_err());
    }

    #[test]
    fn jacobi_eigenvalues() {
        let a = Matrix::from_rows(&[vec![2.0, -1.0, 0.0], vec![-1.0, 2.0, -1.0], vec![0.0, -1.0, 2.0]]);
        let ev = a.sym_eigenvalues();
        let s2 = 2f64.sqrt();
        let expect = [2.0 - s2, 2.0, 2.0 + s2];
        for (e, x) in ev.iter().zip(expect) {
            assert!((e - x).abs() < 1e-13);
        }
        assert!(a.is_positive_definite());
        let b = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]);
        assert!(!b.is_positive_definite());
    }

    #[test]
    fn works_on_f32() {
        let a: Matrix<f32> = Matrix::from_rows(&[vec![2.0, 0.5], vec![0.5, 1.0]]);
        let inv = a.inverse().unwrap();
        assert!((&a * &inv).max_abs_diff(&Matrix::identity(2)) < 1e-6);
    }
}
