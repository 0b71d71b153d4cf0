//! Central finite differences on plain `f64` functions.
//!
//! These never touch the dual-number carriers and serve as independent
//! oracles for the analytic derivatives, and as the `FiniteDifference`
//! engine of the flatness checks.

use crate::error::Result;
use crate::field::{MetricField, OneFormField};
use crate::linalg::Matrix;

/// `cbrt(ε)·max(1, |v|)`, the first-derivative step.
pub fn step1(v: f64) -> f64 {
    f64::EPSILON.cbrt() * v.abs().max(1.0)
}

/// `ε^{1/4}·max(1, |v|)`, the second-derivative step.
pub fn step2(v: f64) -> f64 {
    f64::EPSILON.powf(0.25) * v.abs().max(1.0)
}

fn shifted(x: &[f64], k: usize, h: f64) -> Vec<f64> {
    let mut v = x.to_vec();
    v[k] += h;
    v
}

/// `∂f/∂x^k`.
pub fn partial(f: impl Fn(&[f64]) -> f64, x: &[f64], k: usize) -> f64 {
    let h = step1(x[k]);
    (f(&shifted(x, k, h)) - f(&shifted(x, k, -h))) / (2.0 * h)
}

/// `∇f`.
pub fn gradient(f: impl Fn(&[f64]) -> f64, x: &[f64]) -> Vec<f64> {
    (0..x.len()).map(|k| partial(&f, x, k)).collect()
}

/// `d/dt f(x + t v)` at `t = 0`.
pub fn directional(f: impl Fn(&[f64]) -> f64, x: &[f64], v: &[f64]) -> f64 {
    let scale = x.iter().fold(1.0f64, |m, c| m.max(c.abs()));
    let h = step1(scale) / v.iter().fold(1e-300f64, |m, c| m.max(c.abs()));
    let p: Vec<f64> = x.iter().zip(v).map(|(a, b)| a + h * b).collect();
    let m: Vec<f64> = x.iter().zip(v).map(|(a, b)| a - h * b).collect();
    (f(&p) - f(&m)) / (2.0 * h)
}

/// `∂²f/∂u^k∂v^l` for `f(u, v)`.
pub fn mixed(f: impl Fn(&[f64], &[f64]) -> f64, u: &[f64], v: &[f64], k: usize, l: usize) -> f64 {
    let (hu, hv) = (step2(u[k]), step2(v[l]));
    let (up, um) = (shifted(u, k, hu), shifted(u, k, -hu));
    let (vp, vm) = (shifted(v, l, hv), shifted(v, l, -hv));
    (f(&up, &vp) - f(&up, &vm) - f(&um, &vp) + f(&um, &vm)) / (4.0 * hu * hv)
}

/// `∂²f/∂v^k∂v^l`.
pub fn hessian(f: impl Fn(&[f64]) -> f64, v: &[f64]) -> Matrix<f64> {
    let n = v.len();
    let mut h = Matrix::zeros(n);
    for k in 0..n {
        for l in k..n {
            let val = mixed(|a, b| f(&add(a, b, v)), v, v, k, l);
            h[(k, l)] = val;
            h[(l, k)] = val;
        }
    }
    h
}

// f(a + b − v): both shifts act on the same argument.
fn add(a: &[f64], b: &[f64], v: &[f64]) -> Vec<f64> {
    a.iter().zip(b).zip(v).map(|((p, q), r)| p + q - r).collect()
}

/// `∂_k a_ij` for every `k`.
pub fn metric_partials(a: &dyn MetricField<f64>, x: &[f64]) -> Vec<Matrix<f64>> {
    (0..x.len())
        .map(|k| {
            let h = step1(x[k]);
            let p = a.eval_real(&shifted(x, k, h));
            let m = a.eval_real(&shifted(x, k, -h));
            (&p - &m).scale(1.0 / (2.0 * h))
        })
        .collect()
}

/// Christoffel symbols from differenced metric entries.
pub fn christoffel(a: &dyn MetricField<f64>, x: &[f64]) -> Result<Vec<Matrix<f64>>> {
    let n = x.len();
    let inv = a.eval_real(x).inverse()?;
    let da = metric_partials(a, x);
    Ok((0..n)
        .map(|i| {
            Matrix::from_fn(n, |j, k| {
                (0..n).fold(0.0, |acc, l| {
                    acc + 0.5 * inv[(i, l)] * (da[j][(l, k)] + da[k][(j, l)] - da[l][(j, k)])
                })
            })
        })
        .collect())
}

/// Riemannian spray from the Euler–Lagrange equations of `L = a_jk y^j y^k`:
/// `G = ½ a⁻¹ (D_y(a y) − ½ ∇_x L)`.
pub fn spray_riemann(a: &dyn MetricField<f64>, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    let n = x.len();
    let inv = a.eval_real(x).inverse()?;
    let grad_l = gradient(|p| a.eval_real(p).quad(y), x);
    let d_ay: Vec<f64> = (0..n)
        .map(|l| directional(|p| a.eval_real(p).mul_vec(y)[l], x, y))
        .collect();
    let rhs: Vec<f64> = (0..n).map(|l| 0.5 * (d_ay[l] - 0.5 * grad_l[l])).collect();
    Ok(inv.mul_vec(&rhs))
}

/// `b_{i|j}` from differenced form entries and differenced Christoffel symbols.
pub fn covariant_derivative(
    b: &dyn OneFormField<f64>,
    a: &dyn MetricField<f64>,
    x: &[f64],
) -> Result<Matrix<f64>> {
    let n = x.len();
    let gamma = christoffel(a, x)?;
    let bv = b.eval_real(x);
    let db: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let h = step1(x[j]);
            let p = b.eval_real(&shifted(x, j, h));
            let m = b.eval_real(&shifted(x, j, -h));
            p.iter().zip(&m).map(|(u, v)| (u - v) / (2.0 * h)).collect()
        })
        .collect();
    Ok(Matrix::from_fn(n, |i, j| {
        db[j][i] - (0..n).fold(0.0, |acc, k| acc + bv[k] * gamma[k][(i, j)])
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradient_of_quadratic() {
        let g = gradient(|x| x[0] * x[0] + 3.0 * x[0] * x[1], &[1.0, 2.0]);
        assert!((g[0] - 8.0).abs() < 1e-8 && (g[1] - 3.0).abs() < 1e-8);
    }

    #[test]
    fn mixed_partial_of_product() {
        let v = mixed(|u, v| u[0] * u[0] * v[1], &[1.5, 0.0], &[0.0, 2.0], 0, 1);
        assert!((v - 3.0).abs() < 1e-6);
    }

    #[test]
    fn hessian_of_cubic() {
        let h = hessian(|v| v[0].powi(3) + v[0] * v[1], &[1.0, 2.0]);
        assert!((h[(0, 0)] - 6.0).abs() < 1e-6);
        assert!((h[(0, 1)] - 1.0).abs() < 1e-6);
        assert!(h[(1, 1)].abs() < 1e-6);
    }
}
