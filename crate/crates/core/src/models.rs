//! Concrete metrics and 1-forms.
//!
//! Ball models live on the open unit ball. Space forms of curvature `μ < 0`
//! live on the ball of radius `1/√(−μ)`, all others on the whole space.

use std::fmt;
use std::sync::Arc;

use crate::ab_metric::ABMetric;
use crate::deform::inverse_chain;
use crate::diffgeo::covariant_derivative;
use crate::error::{GeomError, Result};
use crate::field::{
    check_domain, AffineForm, AnalyticForm, AnalyticMetric, ConstantForm, Euclidean, Form, Metric, VectorField,
};
use crate::linalg::{dot, Matrix};
use crate::phi::{regularity_check, NamedPhi, OdeParams, PhiSpec};
use crate::sampling::{sample_points, DEFAULT_SEED};
use crate::scalar::{Real, Scalar};

/// `b0` used when checking the σ-family for regularity.
pub const FAMILY_B0: f64 = 0.9;

/// Grid size of the regularity scans run here.
pub const FAMILY_GRID: usize = 200;

/// `((1−|x|²)δ_ij + x_i x_j) / (1−|x|²)^power` on the unit ball.
#[derive(Clone, Debug)]
pub struct BallMetric<R> {
    pub n: usize,
    pub power: R,
}

impl<R: Real> AnalyticMetric<R> for BallMetric<R> {
    fn dim(&self) -> usize {
        self.n
    }
    fn domain_radius(&self) -> R {
        R::one()
    }
    fn matrix<S: Scalar<Real = R>>(&self, x: &[S]) -> Matrix<S> {
        let w = S::one() - dot(x, x);
        let scale = w.powf(-S::from_real(self.power));
        Matrix::from_fn(self.n, |i, j| {
            let d = if i == j { w } else { S::zero() };
            (d + x[i] * x[j]) * scale
        })
    }
}

/// `coef · x_i / (1−|x|²)^power`.
#[derive(Clone, Debug)]
pub struct BallForm<R> {
    pub n: usize,
    pub coef: R,
    pub power: R,
}

impl<R: Real> AnalyticForm<R> for BallForm<R> {
    fn dim(&self) -> usize {
        self.n
    }
    fn covector<S: Scalar<Real = R>>(&self, x: &[S]) -> Vec<S> {
        let w = S::one() - dot(x, x);
        let f = S::from_real(self.coef) * w.powf(-S::from_real(self.power));
        x.iter().map(|&v| v * f).collect()
    }
}

/// Constant curvature metric `((1+μ|x|²)δ_ij − μx_i x_j)/(1+μ|x|²)²`.
#[derive(Clone, Debug)]
pub struct SpaceForm<R> {
    pub n: usize,
    pub mu: R,
}

impl<R: Real> SpaceForm<R> {
    pub fn new(mu: R, n: usize) -> Result<Self> {
        if n < 1 || !mu.is_finite() {
            return Err(GeomError::InvalidParameter(format!("space form needs n >= 1 and finite mu, got n={n}, mu={mu}")));
        }
        Ok(SpaceForm { n, mu })
    }

    pub fn radius(&self) -> R {
        if self.mu < R::zero() {
            (-R::one() / self.mu).sqrt()
        } else {
            R::infinity()
        }
    }
}

impl<R: Real> AnalyticMetric<R> for SpaceForm<R> {
    fn dim(&self) -> usize {
        self.n
    }
    fn domain_radius(&self) -> R {
        self.radius()
    }
    fn matrix<S: Scalar<Real = R>>(&self, x: &[S]) -> Matrix<S> {
        let mu = S::from_real(self.mu);
        let w = S::one() + mu * dot(x, x);
        let inv = (w * w).recip();
        Matrix::from_fn(self.n, |i, j| {
            let d = if i == j { w } else { S::zero() };
            (d - mu * x[i] * x[j]) * inv
        })
    }
}

/// `(λx_i + (1+μ|x|²)a_i − μ⟨a,x⟩x_i) / (1+μ|x|²)^{3/2}`.
#[derive(Clone, Debug)]
pub struct ClosedConformalForm<R> {
    pub mu: R,
    pub lambda: R,
    pub a: Vec<R>,
}

impl<R: Real> AnalyticForm<R> for ClosedConformalForm<R> {
    fn dim(&self) -> usize {
        self.a.len()
    }
    fn covector<S: Scalar<Real = R>>(&self, x: &[S]) -> Vec<S> {
        let mu = S::from_real(self.mu);
        let lambda = S::from_real(self.lambda);
        let a: Vec<S> = self.a.iter().map(|&v| S::from_real(v)).collect();
        let w = S::one() + mu * dot(x, x);
        let ax = dot(&a, x);
        let scale = w.powf(S::cst(-1.5));
        (0..x.len())
            .map(|i| (lambda * x[i] + w * a[i] - mu * ax * x[i]) * scale)
            .collect()
    }
}

/// Parameters of a conformal vector field of a space form.
#[derive(Clone, Debug, PartialEq)]
pub struct ConformalFieldParams {
    pub mu: f64,
    pub lambda: f64,
    /// Antisymmetric.
    pub q: Matrix<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl ConformalFieldParams {
    pub fn zero(mu: f64, n: usize) -> Self {
        ConformalFieldParams { mu, lambda: 0.0, q: Matrix::zeros(n), a: vec![0.0; n], b: vec![0.0; n] }
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }

    fn validate(&self) -> Result<()> {
        let n = self.dim();
        if n < 3 {
            return Err(GeomError::InvalidParameter(format!("conformal field family needs n >= 3, got {n}")));
        }
        if self.q.dim() != n || self.b.len() != n {
            return Err(GeomError::InvalidParameter("q, a, b must share one dimension".into()));
        }
        let asym = (&self.q + &self.q.transpose()).max_abs();
        if asym > 1e-12 * (1.0 + self.q.max_abs()) {
            return Err(GeomError::InvalidParameter(format!("q is not antisymmetric (|q + qT| = {asym:e})")));
        }
        Ok(())
    }

    /// `W = (λ√(1+μ|x|²) + ⟨a,x⟩)x − |x|²a/(√(1+μ|x|²)+1) + qx + b + μ⟨b,x⟩x`.
    pub fn field_at<S: Scalar<Real = f64>>(&self, x: &[S]) -> Vec<S> {
        let c = |v: f64| S::from_real(v);
        let mu = c(self.mu);
        let r2 = dot(x, x);
        let root = (S::one() + mu * r2).sqrt();
        let a: Vec<S> = self.a.iter().map(|&v| c(v)).collect();
        let b: Vec<S> = self.b.iter().map(|&v| c(v)).collect();
        let qx = self.q.map(c).mul_vec(x);
        let radial = c(self.lambda) * root + dot(&a, x) + mu * dot(&b, x);
        let inv = (root + S::one()).recip();
        (0..x.len()).map(|i| radial * x[i] - r2 * a[i] * inv + qx[i] + b[i]).collect()
    }
}

/// The field `W` of [`ConformalFieldParams`].
#[derive(Clone, Debug)]
pub struct ConformalField {
    pub params: ConformalFieldParams,
}

impl VectorField<f64> for ConformalField {
    fn dim(&self) -> usize {
        self.params.dim()
    }
    fn eval_real(&self, x: &[f64]) -> Vec<f64> {
        self.params.field_at(x)
    }
}

/// `W♭ = hW` for the space form `h` of curvature `μ`.
#[derive(Clone, Debug)]
pub struct ConformalDual {
    pub params: ConformalFieldParams,
}

impl AnalyticForm<f64> for ConformalDual {
    fn dim(&self) -> usize {
        self.params.dim()
    }
    fn covector<S: Scalar<Real = f64>>(&self, x: &[S]) -> Vec<S> {
        let h = SpaceForm { n: self.params.dim(), mu: self.params.mu }.matrix(x);
        h.mul_vec(&self.params.field_at(x))
    }
}

/// Largest closedness and conformality residuals of `b` with respect to `a`
/// over `count` seeded points in `0.8·radius`.
pub fn conformal_residuals(a: &Metric, b: &Form, count: usize) -> Result<(f64, f64)> {
    let radius = 0.8 * crate::field::working_radius(&**a);
    let mut pts = sample_points::<f64>(a.dim(), radius, count, DEFAULT_SEED);
    pts.push(vec![0.0; a.dim()]);
    let (mut closed, mut conf) = (0.0f64, 0.0f64);
    for x in &pts {
        let cd = covariant_derivative(&**b, &**a, x)?;
        closed = closed.max(cd.closedness_residual());
        conf = conf.max(cd.conformal_fit().1);
    }
    Ok((closed, conf))
}

fn check_dim(n: usize) -> Result<()> {
    if n < 2 {
        return Err(GeomError::InvalidParameter(format!("dimension must be at least 2, got {n}")));
    }
    Ok(())
}

/// The space form `h` of curvature `μ`.
pub fn space_form_metric(mu: f64, n: usize) -> Result<Metric> {
    Ok(Arc::new(SpaceForm::new(mu, n)?))
}

/// The conformal field `W` of a space form and its dual `W♭`.
pub fn conformal_field(p: ConformalFieldParams) -> Result<(Arc<ConformalField>, Form)> {
    p.validate()?;
    let dual: Form = Arc::new(ConformalDual { params: p.clone() });
    if cfg!(debug_assertions) {
        let h = space_form_metric(p.mu, p.dim())?;
        let (_, conf) = conformal_residuals(&h, &dual, 4)?;
        debug_assert!(conf < 1e-6 * (1.0 + p.lambda.abs() + p.q.max_abs()), "conformality residual {conf:e}");
    }
    Ok((Arc::new(ConformalField { params: p }), dual))
}

/// The closed conformal 1-form of the space form of curvature `μ`.
pub fn closed_conformal_form(mu: f64, lambda: f64, a: &[f64]) -> Result<Form> {
    let n = a.len();
    let h = space_form_metric(mu, n)?;
    let form: Form = Arc::new(ClosedConformalForm { mu, lambda, a: a.to_vec() });
    if cfg!(debug_assertions) {
        let (closed, conf) = conformal_residuals(&h, &form, 4)?;
        debug_assert!(closed < 1e-8 && conf < 1e-8, "closed conformal check failed: {closed:e}, {conf:e}");
    }
    Ok(form)
}

/// Evaluates a model at a point, rejecting points outside its domain.
pub fn model_value(m: &ABMetric, x: &[f64], y: &[f64]) -> Result<f64> {
    check_domain(&*m.alpha, x)?;
    m.f_eval(x, y)
}

/// Funk metric of the unit ball, `φ = 1 + s`.
pub fn funk_metric(n: usize) -> Result<ABMetric> {
    check_dim(n)?;
    let a: Metric = Arc::new(BallMetric { n, power: 2.0 });
    let b: Form = Arc::new(BallForm { n, coef: -1.0, power: 1.0 });
    ABMetric::new(a, b, PhiSpec::randers(0.0, 1.0))
}

/// Berwald metric of the unit ball, `φ = (1 + s)²`.
pub fn berwald_metric(n: usize) -> Result<ABMetric> {
    check_dim(n)?;
    let a: Metric = Arc::new(BallMetric { n, power: 4.0 });
    let b: Form = Arc::new(BallForm { n, coef: 1.0, power: 2.0 });
    ABMetric::new(a, b, PhiSpec::Named(NamedPhi::Berwald))
}

/// The σ-family on the unit ball:
/// `a = ((1−|x|²)δ + xxᵀ)/(1−|x|²)^{2σ+2}`, `b = x/(1−|x|²)^{σ+1}`, `φ = φ_σ`.
pub fn family_sigma_metric(sigma: f64, eps: f64, n: usize) -> Result<ABMetric> {
    check_dim(n)?;
    let phi = PhiSpec::sigma(sigma, eps);
    let report = regularity_check(&phi, FAMILY_B0, FAMILY_GRID)?;
    if !report.pass {
        return Err(GeomError::Regularity(format!(
            "phi_sigma with sigma={sigma}, eps={eps} fails on |s| <= {FAMILY_B0} (verified up to b0 = {})",
            report.b0_max
        )));
    }
    let a: Metric = Arc::new(BallMetric { n, power: 2.0 * sigma + 2.0 });
    let b: Form = Arc::new(BallForm { n, coef: 1.0, power: sigma + 1.0 });
    ABMetric::new(a, b, phi)
}

/// Admissible ε-interval of the σ-family for a given `b0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpsRange {
    pub lower: f64,
    pub upper: f64,
}

/// Bisection on the regularity check over `ε ∈ [−4, 4]`, starting from ε = 0.
pub fn eps_range(sigma: f64, b0: f64) -> Result<EpsRange> {
    let ok = |eps: f64| {
        regularity_check(&PhiSpec::sigma(sigma, eps), b0, FAMILY_GRID)
            .map(|r| r.pass)
            .unwrap_or(false)
    };
    if !ok(0.0) {
        return Err(GeomError::Regularity(format!("sigma={sigma} fails already at eps=0 on b0={b0}")));
    }
    let edge = |sign: f64| {
        if ok(4.0 * sign) {
            return 4.0 * sign;
        }
        let (mut good, mut bad) = (0.0, 4.0);
        while bad - good > 1e-6 {
            let mid = 0.5 * (good + bad);
            if ok(mid * sign) {
                good = mid;
            } else {
                bad = mid;
            }
        }
        good * sign
    };
    Ok(EpsRange { lower: edge(-1.0), upper: edge(1.0) })
}

/// Named models.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ModelKind {
    Funk,
    Berwald,
    SpaceForm(f64),
    FamilySigma { sigma: f64, eps: f64 },
    /// `k = (2·sign, 0, −2·sign)`, `φ = φ_{0,sign/2}`.
    ExampleExp { sign: i8, eps: f64 },
    /// `k = (0, 1, 0)` with a quadrature φ.
    ExampleQuadrature { eps: f64 },
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelKind::Funk => write!(f, "funk"),
            ModelKind::Berwald => write!(f, "berwald"),
            ModelKind::SpaceForm(mu) => write!(f, "space-form(mu={mu})"),
            ModelKind::FamilySigma { sigma, eps } => write!(f, "family-sigma(sigma={sigma}, eps={eps})"),
            ModelKind::ExampleExp { sign, eps } => {
                write!(f, "example-exp({}, eps={eps})", if *sign > 0 { "+" } else { "-" })
            }
            ModelKind::ExampleQuadrature { eps } => write!(f, "example-quadrature(eps={eps})"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelId {
    pub kind: ModelKind,
    pub dim: usize,
}

impl ModelId {
    pub fn new(kind: ModelKind, dim: usize) -> Result<Self> {
        check_dim(dim)?;
        match kind {
            ModelKind::ExampleExp { sign, .. } if sign != 1 && sign != -1 => {
                return Err(GeomError::InvalidParameter(format!("sign must be +1 or -1, got {sign}")))
            }
            ModelKind::FamilySigma { sigma, eps } if !(sigma.is_finite() && eps.is_finite()) => {
                return Err(GeomError::InvalidParameter("sigma and eps must be finite".into()))
            }
            _ => {}
        }
        Ok(ModelId { kind, dim })
    }

    /// Quadruple of the φ equation the model's φ solves, if any.
    pub fn quadruple(&self) -> Option<OdeParams<f64>> {
        match self.kind {
            ModelKind::Funk => Some(OdeParams::new(0.0, 0.0, 0.0, 1.0)),
            ModelKind::Berwald => Some(OdeParams::new(2.0, 0.0, -3.0, 2.0)),
            ModelKind::SpaceForm(_) => None,
            ModelKind::FamilySigma { sigma, eps } => Some(OdeParams::new(2.0 * sigma, 0.0, -2.0 * sigma - 1.0, eps)),
            ModelKind::ExampleExp { sign, eps } => {
                let s = f64::from(sign);
                Some(OdeParams::new(2.0 * s, 0.0, -2.0 * s, eps))
            }
            ModelKind::ExampleQuadrature { eps } => Some(OdeParams::new(0.0, 1.0, 0.0, eps)),
        }
    }
}

/// Default base pair: Euclidean `ᾱ`, `β̄ = 0.3⟨x, y⟩`.
pub fn default_base(n: usize) -> (Metric, Form) {
    (Arc::new(Euclidean { n }), Arc::new(AffineForm::radial(n, 0.3)))
}

/// Builds a model; the deformed examples use the default base pair.
pub fn example_metric(id: &ModelId) -> Result<ABMetric> {
    let (abar, bbar) = default_base(id.dim);
    example_metric_with(id, &abar, &bbar)
}

/// Builds a model. The deformed examples are assembled by the inverse
/// chain over `(ᾱ, β̄)`; the other models ignore the base pair.
pub fn example_metric_with(id: &ModelId, abar: &Metric, bbar: &Form) -> Result<ABMetric> {
    let n = id.dim;
    match id.kind {
        ModelKind::Funk => funk_metric(n),
        ModelKind::Berwald => berwald_metric(n),
        ModelKind::SpaceForm(mu) => ABMetric::new(
            space_form_metric(mu, n)?,
            Arc::new(ConstantForm { b: vec![0.0; n] }),
            PhiSpec::Named(NamedPhi::Riemann),
        ),
        ModelKind::FamilySigma { sigma, eps } => family_sigma_metric(sigma, eps, n),
        ModelKind::ExampleExp { sign, eps } => {
            let k = id.quadruple().expect("example has a quadruple");
            let (a, b) = inverse_chain(abar, bbar, &k)?;
            ABMetric::new(a, b, PhiSpec::zero_p(0.5 * f64::from(sign), eps))
        }
        ModelKind::ExampleQuadrature { .. } => {
            let k = id.quadruple().expect("example has a quadruple");
            let (a, b) = inverse_chain(abar, bbar, &k)?;
            ABMetric::new(a, b, PhiSpec::quadrature(k))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flatness::{hamel_residual, spray_proportionality_residual};
    use crate::phi::ode_residual;
    use crate::sampling::sample_pairs;

    #[test]
    fn funk_values() {
        let m = funk_metric(3).unwrap();
        assert!((m.f_eval(&[0.0; 3], &[0.0, 3.0, 4.0]).unwrap() - 5.0).abs() < 1e-14);
        let v = m.f_eval(&[0.5, 0.0, 0.0], &[1.0, 0.0, 0.0]).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-14);
        let x = [0.3, -0.2, 0.1];
        let nb = m.norm_b(&x).unwrap();
        assert!((nb - dot(&x, &x).sqrt()).abs() < 1e-13);
    }

    #[test]
    fn family_reproduces_funk_and_berwald() {
        let pairs = sample_pairs::<f64>(3, 0.8, 100, 7);
        let close = |u: f64, v: f64| (u - v).abs() < 1e-12 * v.abs().max(1.0);
        let funk = funk_metric(3).unwrap();
        let berwald = berwald_metric(3).unwrap();
        let fam0 = family_sigma_metric(0.0, 1.0, 3).unwrap();
        let fam0m = family_sigma_metric(0.0, -1.0, 3).unwrap();
        let fam1 = family_sigma_metric(1.0, 2.0, 3).unwrap();
        for (x, y) in &pairs {
            let neg: Vec<f64> = y.iter().map(|v| -v).collect();
            let f = funk.f_eval(x, y).unwrap();
            assert!(close(fam0.f_eval(x, &neg).unwrap(), f));
            assert!(close(fam0m.f_eval(x, y).unwrap(), f));
            assert!(close(fam1.f_eval(x, y).unwrap(), berwald.f_eval(x, y).unwrap()));
        }
    }

    #[test]
    fn family_matches_inverse_chain() {
        let sigma = 0.7;
        let n = 2;
        let (abar, bbar): (Metric, Form) = (Arc::new(Euclidean { n }), Arc::new(AffineForm::radial(n, 1.0)));
        let k = OdeParams::new(2.0 * sigma, 0.0, -2.0 * sigma - 1.0, 0.0);
        let (a, b) = inverse_chain(&abar, &bbar, &k).unwrap();
        let x = [0.2, -0.35];
        let direct = BallMetric { n, power: 2.0 * sigma + 2.0 }.matrix(&x);
        let form = BallForm { n, coef: 1.0, power: sigma + 1.0 }.covector(&x);
        assert!(direct.max_abs_diff(&a.eval_real(&x)) < 1e-12);
        assert!(crate::linalg::max_abs(&crate::linalg::sub(&form, &b.eval_real(&x))) < 1e-12);
    }

    #[test]
    fn space_form_basics() {
        let h = space_form_metric(0.0, 3).unwrap();
        assert!(h.eval_real(&[0.3, 0.1, 0.2]).max_abs_diff(&Matrix::identity(3)) == 0.0);
        assert!((space_form_metric(-4.0, 2).unwrap().domain_radius() - 0.5).abs() < 1e-15);
        for mu in [1.0, -1.0] {
            let h = space_form_metric(mu, 3).unwrap();
            for (x, y) in sample_pairs::<f64>(3, 0.8, 50, 3) {
                assert!(spray_proportionality_residual_riem(&h, &x, &y) < 1e-8);
            }
        }
    }

    fn spray_proportionality_residual_riem(h: &Metric, x: &[f64], y: &[f64]) -> f64 {
        let m = ABMetric::new(h.clone(), Arc::new(ConstantForm { b: vec![0.0; x.len()] }), PhiSpec::Named(NamedPhi::Riemann))
            .unwrap();
        spray_proportionality_residual(&m, x, y).unwrap()
    }

    #[test]
    fn closed_conformal_checks() {
        for (mu, lambda, a) in [(1.0, 1.0, vec![0.0, 0.0, 0.0]), (-0.5, 0.0, vec![1.0, 0.0, 0.0]), (0.0, 0.4, vec![0.2, -0.1, 0.3])] {
            let h = space_form_metric(mu, 3).unwrap();
            let b = closed_conformal_form(mu, lambda, &a).unwrap();
            let (closed, conf) = conformal_residuals(&h, &b, 50).unwrap();
            assert!(closed < 1e-9 && conf < 1e-8, "mu={mu}: {closed:e} {conf:e}");
        }
        let b = closed_conformal_form(0.0, 0.5, &[1.0, 2.0]).unwrap();
        let v = b.eval_real(&[0.2, 0.4]);
        assert!((v[0] - 1.1).abs() < 1e-15 && (v[1] - 2.2).abs() < 1e-15);
    }

    #[test]
    fn conformal_field_family() {
        let mut p = ConformalFieldParams::zero(0.0, 3);
        p.lambda = 1.0;
        let (w, dual) = conformal_field(p).unwrap();
        assert_eq!(w.eval_real(&[0.1, 0.2, 0.3]), vec![0.1, 0.2, 0.3]);
        let cd = covariant_derivative(&*dual, &*space_form_metric(0.0, 3).unwrap(), &[0.1, 0.2, 0.3]).unwrap();
        assert!((cd.conformal_fit().0 - 1.0).abs() < 1e-12);

        let (z, _) = conformal_field(ConformalFieldParams::zero(0.5, 3)).unwrap();
        assert!(z.eval_real(&[0.3, 0.1, -0.2]).iter().all(|&v| v == 0.0));

        for mu in [0.0, 1.0, -0.5] {
            let p = ConformalFieldParams {
                mu,
                lambda: 0.7,
                q: Matrix::from_rows(&[vec![0.0, 0.3, -0.2], vec![-0.3, 0.0, 0.5], vec![0.2, -0.5, 0.0]]),
                a: vec![0.4, -0.1, 0.2],
                b: vec![0.1, 0.3, -0.2],
            };
            let (_, dual) = conformal_field(p).unwrap();
            let h = space_form_metric(mu, 3).unwrap();
            let (closed, conf) = conformal_residuals(&h, &dual, 20).unwrap();
            assert!(conf < 1e-8, "mu={mu}: {conf:e}");
            assert!(closed > 1e-3);
        }
        assert!(conformal_field(ConformalFieldParams::zero(0.0, 2)).is_err());
    }

    #[test]
    fn eps_range_contains_known_values() {
        let r = eps_range(0.0, FAMILY_B0).unwrap();
        assert!(r.lower < -1.0 && r.upper > 1.0);
        assert!(family_sigma_metric(0.0, r.upper + 0.01, 2).is_err());
    }

    #[test]
    fn examples_are_flat() {
        for kind in [
            ModelKind::ExampleExp { sign: 1, eps: 0.5 },
            ModelKind::ExampleExp { sign: -1, eps: 0.2 },
            ModelKind::ExampleQuadrature { eps: 0.3 },
        ] {
            let id = ModelId::new(kind, 3).unwrap();
            let m = example_metric(&id).unwrap();
            let k = id.quadruple().unwrap();
            for s in [-0.25, 0.0, 0.25] {
                assert!(ode_residual(&m.phi, &k, s).unwrap().abs() < 1e-8);
            }
            for (x, y) in sample_pairs::<f64>(3, 0.8, 10, 11) {
                assert!(hamel_residual(&m, &x, &y).unwrap() < 1e-5, "{kind}");
            }
        }
    }

    #[test]
    fn example_exp_displayed_form() {
        let n = 2;
        let (abar, bbar) = default_base(n);
        let m = example_metric_with(&ModelId::new(ModelKind::ExampleExp { sign: 1, eps: 0.0 }, n).unwrap(), &abar, &bbar)
            .unwrap();
        let x = [0.4, -0.3];
        let t = 0.09 * dot(&x, &x);
        let a = m.alpha.eval_real(&x);
        let b = m.beta.eval_real(&x);
        assert!(a.max_abs_diff(&Matrix::identity(n).scale((2.0 * t).exp())) < 1e-12);
        assert!((b[0] - t.exp() * 0.3 * x[0]).abs() < 1e-12);
    }
}
