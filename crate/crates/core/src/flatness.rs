//! Projective flatness checks.
//!
//! A metric on a coordinate ball is projectively flat when its geodesics are
//! straight lines, equivalently when Hamel's equations
//! `F_{x^k y^l} = F_{x^l y^k}` hold, or Rapcsák's `F_{x^k y^l} y^k = F_{x^l}`,
//! or the spray is `G^i = P y^i` with `P = F_{x^k} y^k / (2F)`.

use rayon::prelude::*;

use crate::ab_metric::{spray_ab, ABMetric};
use crate::diffgeo::{covariant_derivative, spray_riemann};
use crate::error::{GeomError, Result};
use crate::fd;
use crate::field::{check_domain, working_radius, MetricField, OneFormField};
use crate::linalg::{axpy, dot, is_zero_vec, norm, sub, Matrix};
use crate::phi::OdeParams;
use crate::sampling::{rng, sample_pairs, unit_vector, DEFAULT_SEED};
use crate::scalar::{Dual, HyperDual};

/// Default tolerance with analytic derivatives.
pub const ANALYTIC_TOL: f64 = 1e-6;
/// Default tolerance with finite differences.
pub const FD_TOL: f64 = 1e-3;

/// Derivative engine for the residuals.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Engine {
    #[default]
    Analytic,
    FiniteDifference,
}

impl Engine {
    pub fn default_tolerance(self) -> f64 {
        match self {
            Engine::Analytic => ANALYTIC_TOL,
            Engine::FiniteDifference => FD_TOL,
        }
    }
}

fn lift_dual(x: &[f64], dir: &[f64]) -> Vec<Dual<f64>> {
    x.iter().zip(dir).map(|(&a, &b)| Dual::new(a, b)).collect()
}

fn consts(x: &[f64]) -> Vec<HyperDual<f64>> {
    x.iter().map(|&v| HyperDual::constant(v)).collect()
}

fn unit(n: usize, k: usize) -> Vec<f64> {
    (0..n).map(|i| if i == k { 1.0 } else { 0.0 }).collect()
}

/// `M[k][l] = F_{x^k y^l}`.
fn mixed_matrix(m: &ABMetric, x: &[f64], y: &[f64], engine: Engine) -> Result<Matrix<f64>> {
    m.f_eval(x, y)?;
    let n = x.len();
    let mut out = Matrix::zeros(n);
    match engine {
        Engine::Analytic => {
            for k in 0..n {
                let mut xh = consts(x);
                xh[k].e1 = 1.0;
                for l in 0..n {
                    let mut yh = consts(y);
                    yh[l].e2 = 1.0;
                    out[(k, l)] = m.eval(&xh, &yh)?.e12;
                }
            }
        }
        Engine::FiniteDifference => {
            let f = real_f(m);
            for k in 0..n {
                for l in 0..n {
                    out[(k, l)] = fd::mixed(&f, x, y, k, l);
                }
            }
        }
    }
    Ok(out)
}

fn real_f(m: &ABMetric) -> impl Fn(&[f64], &[f64]) -> f64 + '_ {
    move |x: &[f64], y: &[f64]| m.eval(x, y).unwrap_or(f64::NAN)
}

/// `∇_x F`.
fn x_gradient(m: &ABMetric, x: &[f64], y: &[f64], engine: Engine) -> Result<Vec<f64>> {
    let n = x.len();
    match engine {
        Engine::Analytic => {
            let yd: Vec<Dual<f64>> = y.iter().map(|&v| Dual::constant(v)).collect();
            (0..n).map(|l| Ok(m.eval(&lift_dual(x, &unit(n, l)), &yd)?.eps)).collect()
        }
        Engine::FiniteDifference => {
            let f = real_f(m);
            Ok(fd::gradient(|p| f(p, y), x))
        }
    }
}

/// `max_{k,l} |F_{x^k y^l} − F_{x^l y^k}|`.
pub fn hamel_residual(m: &ABMetric, x: &[f64], y: &[f64]) -> Result<f64> {
    hamel_residual_with(m, x, y, Engine::Analytic)
}

pub fn hamel_residual_with(m: &ABMetric, x: &[f64], y: &[f64], engine: Engine) -> Result<f64> {
    let h = mixed_matrix(m, x, y, engine)?;
    Ok((&h - &h.transpose()).max_abs())
}

/// `max_l |F_{x^k y^l} y^k − F_{x^l}|`.
pub fn rapcsak_residual(m: &ABMetric, x: &[f64], y: &[f64]) -> Result<f64> {
    rapcsak_residual_with(m, x, y, Engine::Analytic)
}

pub fn rapcsak_residual_with(m: &ABMetric, x: &[f64], y: &[f64], engine: Engine) -> Result<f64> {
    let n = x.len();
    let fx = x_gradient(m, x, y, engine)?;
    let lhs: Vec<f64> = match engine {
        Engine::Analytic => {
            // e1 moves x along y, e2 picks y^l.
            let xh: Vec<HyperDual<f64>> =
                x.iter().zip(y).map(|(&a, &b)| HyperDual::new(a, b, 0.0, 0.0)).collect();
            (0..n)
                .map(|l| {
                    let mut yh = consts(y);
                    yh[l].e2 = 1.0;
                    Ok(m.eval(&xh, &yh)?.e12)
                })
                .collect::<Result<_>>()?
        }
        Engine::FiniteDifference => mixed_matrix(m, x, y, engine)?.transpose().mul_vec(y),
    };
    Ok(lhs.iter().zip(&fx).fold(0.0, |acc, (a, b)| acc.max((a - b).abs())))
}

/// `P = F_{x^k} y^k / (2F)`.
pub fn projective_factor(m: &ABMetric, x: &[f64], y: &[f64]) -> Result<f64> {
    projective_factor_with(m, x, y, Engine::Analytic)
}

pub fn projective_factor_with(m: &ABMetric, x: &[f64], y: &[f64], engine: Engine) -> Result<f64> {
    let f = m.f_eval(x, y)?;
    let d = match engine {
        Engine::Analytic => {
            let yd: Vec<Dual<f64>> = y.iter().map(|&v| Dual::constant(v)).collect();
            m.eval(&lift_dual(x, y), &yd)?.eps
        }
        Engine::FiniteDifference => {
            let g = real_f(m);
            fd::directional(|p| g(p, y), x, y)
        }
    };
    Ok(d / (2.0 * f))
}

/// `max_i |G^i − P y^i|`.
pub fn spray_proportionality_residual(m: &ABMetric, x: &[f64], y: &[f64]) -> Result<f64> {
    let p = projective_factor(m, x, y)?;
    let g = spray_ab(m, x, y)?;
    Ok(g.iter().zip(y).fold(0.0, |acc, (gi, yi)| acc.max((gi - p * yi).abs())))
}

/// `‖G − Py‖ / (‖G‖ + 1)`.
pub fn spray_deviation(m: &ABMetric, x: &[f64], y: &[f64], engine: Engine) -> Result<f64> {
    let p = projective_factor_with(m, x, y, engine)?;
    let g = spray_ab(m, x, y)?;
    let r = axpy(-p, y, &g);
    Ok(norm(&r) / (norm(&g) + 1.0))
}

/// Component of `v` orthogonal to `y` (Euclidean) for a Riemannian spray:
/// `max |G_α − (G_α·y/|y|²) y|`, zero iff the spray is proportional to `y`.
pub fn riemann_proportionality_residual(a: &dyn MetricField<f64>, x: &[f64], y: &[f64]) -> Result<f64> {
    let g = spray_riemann(a, x, y)?;
    Ok(orthogonal_part(&g, y).iter().fold(0.0, |m: f64, v| m.max(v.abs())))
}

fn orthogonal_part(v: &[f64], y: &[f64]) -> Vec<f64> {
    let c = dot(v, y) / dot(y, y);
    axpy(-c, y, v)
}

/// Maxima of the three residuals over a sample sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct FlatnessReport {
    pub max_hamel: f64,
    pub max_rapcsak: f64,
    pub max_spray_dev: f64,
    pub samples: usize,
    pub tolerance: f64,
    pub pass: bool,
}

/// Sampling and tolerance settings for [`flatness_report`].
#[derive(Clone, Copy, Debug)]
pub struct SweepConfig {
    pub samples: usize,
    pub seed: u64,
    /// Sample radius as a fraction of the working radius.
    pub radius_fraction: f64,
    pub tolerance: f64,
    pub engine: Engine,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            samples: 100,
            seed: DEFAULT_SEED,
            radius_fraction: 0.8,
            tolerance: ANALYTIC_TOL,
            engine: Engine::Analytic,
        }
    }
}

impl SweepConfig {
    pub fn with_samples(mut self, samples: usize) -> Self {
        self.samples = samples;
        self
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tolerance = tol;
        self
    }

    pub fn with_engine(mut self, engine: Engine) -> Self {
        self.engine = engine;
        self.tolerance = engine.default_tolerance();
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_radius_fraction(mut self, f: f64) -> Self {
        self.radius_fraction = f;
        self
    }

    /// The seeded `(x, y)` pairs for a metric of dimension `n` and radius `r`.
    pub fn pairs(&self, n: usize, r: f64) -> Vec<(Vec<f64>, Vec<f64>)> {
        sample_pairs(n, r * self.radius_fraction, self.samples, self.seed)
    }
}

/// Hamel, Rapcsák and spray residuals over seeded samples, evaluated in
/// parallel and reduced in sample order.
pub fn flatness_report(m: &ABMetric, cfg: &SweepConfig) -> Result<FlatnessReport> {
    if cfg.samples == 0 {
        return Err(GeomError::InvalidParameter("samples must be at least 1".into()));
    }
    let pairs = cfg.pairs(m.dim(), working_radius(m.alpha.as_ref()));
    let rows: Vec<Result<(f64, f64, f64)>> = pairs
        .par_iter()
        .map(|(x, y)| {
            Ok((
                hamel_residual_with(m, x, y, cfg.engine)?,
                rapcsak_residual_with(m, x, y, cfg.engine)?,
                spray_deviation(m, x, y, cfg.engine)?,
            ))
        })
        .collect();
    let (mut h, mut r, mut s) = (0.0f64, 0.0f64, 0.0f64);
    for row in rows {
        let (a, b, c) = row?;
        h = h.max(a);
        r = r.max(b);
        s = s.max(c);
    }
    let tol = cfg.tolerance;
    Ok(FlatnessReport {
        max_hamel: h,
        max_rapcsak: r,
        max_spray_dev: s,
        samples: cfg.samples,
        tolerance: tol,
        pass: h <= tol && r <= tol && s <= tol,
    })
}

/// A sampled geodesic `x(t)` with velocities.
#[derive(Clone, Debug, PartialEq)]
pub struct GeodesicTrace {
    pub times: Vec<f64>,
    pub points: Vec<Vec<f64>>,
    pub velocities: Vec<Vec<f64>>,
    pub step: f64,
    /// Set when a step left the domain and the trace was cut short.
    pub truncated: bool,
}

/// Step limit for [`integrate_geodesic`].
pub const MAX_STEPS: usize = 1_000_000;

type State = (Vec<f64>, Vec<f64>);

fn rk4_step(spray: &impl Fn(&[f64], &[f64]) -> Result<Vec<f64>>, x: &[f64], y: &[f64], h: f64) -> Result<State> {
    let acc = |x: &[f64], y: &[f64]| -> Result<Vec<f64>> { Ok(spray(x, y)?.into_iter().map(|g| -2.0 * g).collect()) };
    let k1x = y.to_vec();
    let k1y = acc(x, y)?;
    let x2 = axpy(0.5 * h, &k1x, x);
    let y2 = axpy(0.5 * h, &k1y, y);
    let k2y = acc(&x2, &y2)?;
    let x3 = axpy(0.5 * h, &y2, x);
    let y3 = axpy(0.5 * h, &k2y, y);
    let k3y = acc(&x3, &y3)?;
    let x4 = axpy(h, &y3, x);
    let y4 = axpy(h, &k3y, y);
    let k4y = acc(&x4, &y4)?;
    let n = x.len();
    let xn = (0..n).map(|i| x[i] + h / 6.0 * (k1x[i] + 2.0 * y2[i] + 2.0 * y3[i] + y4[i])).collect();
    let yn = (0..n).map(|i| y[i] + h / 6.0 * (k1y[i] + 2.0 * k2y[i] + 2.0 * k3y[i] + k4y[i])).collect();
    Ok((xn, yn))
}

/// RK4 for `x″ + 2G(x, x′) = 0` until `|x| ≥ stop_radius` or `max_steps`.
pub fn integrate_spray(
    spray: impl Fn(&[f64], &[f64]) -> Result<Vec<f64>>,
    x0: &[f64],
    y0: &[f64],
    stop_radius: f64,
    step: f64,
    max_steps: usize,
) -> Result<GeodesicTrace> {
    if !(step > 0.0) {
        return Err(GeomError::InvalidParameter("step must be positive".into()));
    }
    if is_zero_vec(y0) {
        return Err(GeomError::ZeroVector);
    }
    if !(norm(x0) < stop_radius) {
        return Err(GeomError::InvalidParameter("start point is not inside the stop radius".into()));
    }
    let mut tr = GeodesicTrace {
        times: vec![0.0],
        points: vec![x0.to_vec()],
        velocities: vec![y0.to_vec()],
        step,
        truncated: false,
    };
    let (mut x, mut y) = (x0.to_vec(), y0.to_vec());
    for i in 1..=max_steps {
        match rk4_step(&spray, &x, &y, step) {
            Ok((xn, yn)) => {
                x = xn;
                y = yn;
            }
            Err(GeomError::Domain { .. }) => {
                tr.truncated = true;
                break;
            }
            Err(e) => return Err(e),
        }
        tr.times.push(i as f64 * step);
        tr.points.push(x.clone());
        tr.velocities.push(y.clone());
        if norm(&x) >= stop_radius {
            break;
        }
    }
    Ok(tr)
}

/// Geodesic of an (α,β)-metric.
pub fn integrate_geodesic(m: &ABMetric, x0: &[f64], y0: &[f64], stop_radius: f64, step: f64) -> Result<GeodesicTrace> {
    check_domain(m.alpha.as_ref(), x0)?;
    integrate_spray(|x, y| spray_ab(m, x, y), x0, y0, stop_radius, step, MAX_STEPS)
}

/// Geodesic of a Riemannian metric.
pub fn integrate_riemann(a: &dyn MetricField<f64>, x0: &[f64], y0: &[f64], stop_radius: f64, step: f64) -> Result<GeodesicTrace> {
    check_domain(a, x0)?;
    integrate_spray(|x, y| spray_riemann(a, x, y), x0, y0, stop_radius, step, MAX_STEPS)
}

/// State after exactly `steps` RK4 steps of size `t_end / steps`.
pub fn integrate_fixed(
    spray: impl Fn(&[f64], &[f64]) -> Result<Vec<f64>>,
    x0: &[f64],
    y0: &[f64],
    t_end: f64,
    steps: usize,
) -> Result<State> {
    let h = t_end / steps as f64;
    let (mut x, mut y) = (x0.to_vec(), y0.to_vec());
    for _ in 0..steps {
        (x, y) = rk4_step(&spray, &x, &y, h)?;
    }
    Ok((x, y))
}

/// `err(h)/err(h/2)` with `err(h) = |x_h(T) − x_{h/2}(T)|`; close to 16 for
/// a fourth-order scheme.
pub fn rk4_order_ratio(
    spray: impl Fn(&[f64], &[f64]) -> Result<Vec<f64>>,
    x0: &[f64],
    y0: &[f64],
    t_end: f64,
    steps: usize,
) -> Result<f64> {
    let a = integrate_fixed(&spray, x0, y0, t_end, steps)?.0;
    let b = integrate_fixed(&spray, x0, y0, t_end, 2 * steps)?.0;
    let c = integrate_fixed(&spray, x0, y0, t_end, 4 * steps)?.0;
    Ok(norm(&sub(&a, &b)) / norm(&sub(&b, &c)))
}

/// Largest Euclidean distance of the trace from the line through its start
/// point along its initial velocity.
pub fn straightness_deviation(trace: &GeodesicTrace) -> Result<f64> {
    if trace.points.len() < 3 {
        return Err(GeomError::InvalidParameter("trace needs at least 3 points".into()));
    }
    let x0 = &trace.points[0];
    let y0 = &trace.velocities[0];
    let u: Vec<f64> = y0.iter().map(|v| v / norm(y0)).collect();
    Ok(trace.points.iter().fold(0.0, |m: f64, p| {
        let d = sub(p, x0);
        m.max(norm(&axpy(-dot(&d, &u), &u, &d)))
    }))
}

/// Residuals of the structure equations
/// `G^i_α = ξ y^i − τ(k1α² + k2β²) b^i` and
/// `b_{i|j} = 2τ{(1 + k1b²) a_ij + (k3 + k2b²) b_i b_j}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StructureResidual {
    pub tau: f64,
    /// Frobenius norm of the `b_{i|j}` equation.
    pub bij: f64,
    /// Largest `y`-orthogonal part of `G_α + τ(k1α² + k2β²) b♯` over unit `y`.
    pub spray: f64,
}

/// Number of directions tested by [`structure_residual`].
pub const STRUCTURE_DIRECTIONS: usize = 8;

pub fn structure_residual(
    a: &dyn MetricField<f64>,
    b: &dyn OneFormField<f64>,
    k: &OdeParams<f64>,
    x: &[f64],
) -> Result<StructureResidual> {
    let n = x.len();
    let cd = covariant_derivative(b, a, x)?;
    let b2 = cd.b2;
    let den = 2.0 * (n as f64 * (1.0 + k.k1 * b2) + (k.k3 + k.k2 * b2) * b2);
    if den.abs() < 1e-300 {
        return Err(GeomError::Regularity("vanishing trace denominator".into()));
    }
    let tau = cd.a_inv.contract(&cd.bij) / den;
    let model = Matrix::from_fn(n, |i, j| {
        2.0 * tau * ((1.0 + k.k1 * b2) * cd.a[(i, j)] + (k.k3 + k.k2 * b2) * cd.b[i] * cd.b[j])
    });
    let bij = (&cd.bij - &model).frobenius();
    let mut g = rng(DEFAULT_SEED ^ 0x5eed);
    let mut spray = 0.0f64;
    for _ in 0..STRUCTURE_DIRECTIONS {
        let y: Vec<f64> = unit_vector(&mut g, n);
        let ga = spray_riemann(a, x, &y)?;
        let c = tau * (k.k1 * cd.a.quad(&y) + k.k2 * cd.beta(&y).powi(2));
        let v = axpy(c, &cd.b_up, &ga);
        spray = spray.max(norm(&orthogonal_part(&v, &y)));
    }
    Ok(StructureResidual { tau, bij, spray })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::field::{AffineForm, ConstantForm, Euclidean};
    use crate::phi::PhiSpec;

    fn minkowski() -> ABMetric {
        ABMetric::new(Arc::new(Euclidean { n: 3 }), Arc::new(ConstantForm { b: vec![0.2, 0.0, 0.1] }), PhiSpec::randers(0.0, 1.0))
            .unwrap()
    }

    fn witness() -> ABMetric {
        ABMetric::new(Arc::new(Euclidean { n: 3 }), Arc::new(AffineForm::coordinate(3, 1, 0)), PhiSpec::randers(0.0, 1.0))
            .unwrap()
    }

    #[test]
    fn minkowski_is_exactly_flat() {
        let m = minkowski();
        let (x, y) = ([0.3, 0.1, -0.2], [0.5, 0.7, 0.1]);
        assert_eq!(hamel_residual(&m, &x, &y).unwrap(), 0.0);
        assert_eq!(rapcsak_residual(&m, &x, &y).unwrap(), 0.0);
        assert_eq!(projective_factor(&m, &x, &y).unwrap(), 0.0);
    }

    #[test]
    fn non_closed_randers_is_not_flat() {
        let m = witness();
        let (x, y) = ([0.5, 0.2, 0.0], [1.0, 1.0, 0.0]);
        assert!(hamel_residual(&m, &x, &y).unwrap() > 1e-3);
        assert!(rapcsak_residual(&m, &x, &y).unwrap() > 1e-3);
        assert!(spray_proportionality_residual(&m, &x, &y).unwrap() > 1e-4);
    }

    #[test]
    fn engines_agree_on_witness() {
        let m = witness();
        let (x, y) = ([0.5, 0.2, 0.0], [1.0, 1.0, 0.0]);
        let a = hamel_residual_with(&m, &x, &y, Engine::Analytic).unwrap();
        let f = hamel_residual_with(&m, &x, &y, Engine::FiniteDifference).unwrap();
        assert!((a - f).abs() < 1e-5);
    }

    #[test]
    fn euclidean_geodesic_is_straight() {
        let tr = integrate_riemann(&Euclidean { n: 3 }, &[0.1, 0.0, 0.2], &[1.0, -0.5, 0.3], 0.9, 1e-2).unwrap();
        assert!(straightness_deviation(&tr).unwrap() < 1e-15);
        assert!(!tr.truncated);
        assert!(tr.times.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn parallel_form_structure() {
        let k = OdeParams::from_f64(1.0, 0.0, 0.0, 0.0);
        let r = structure_residual(&Euclidean { n: 3 }, &ConstantForm { b: vec![0.1, 0.2, 0.0] }, &k, &[0.2, 0.0, 0.1]).unwrap();
        assert_eq!((r.tau, r.bij, r.spray), (0.0, 0.0, 0.0));
    }
}
