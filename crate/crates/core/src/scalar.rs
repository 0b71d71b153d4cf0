//! Scalar carriers.
//!
//! Every field in the crate is written once, generically over [`Scalar`], and
//! evaluated either on plain reals or on forward-mode differentiation carriers:
//!
//! * [`Dual`] carries one directional derivative,
//! * [`HyperDual`] carries two directional derivatives and their mixed second
//!   derivative, which is what Hamel's equations and the fundamental tensor need.
//!
//! Functions that are only known numerically (a quadrature solution of the
//! φ equation, say) enter the carriers through [`Scalar::chain`], which lifts
//! a function from its value and first two derivatives at the real part.

use std::cmp::Ordering;
use std::fmt::{self, Debug, Display};
use std::iter::{Product, Sum};
use std::num::FpCategory;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Rem, Sub, SubAssign};

use num_traits::{Float, FloatConst, FromPrimitive, Num, NumCast, One, ToPrimitive, Zero};

use crate::field::{MetricField, OneFormField};
use crate::linalg::Matrix;

/// A number type the geometry can be evaluated on.
pub trait Scalar: Float + FromPrimitive + Debug + Display + Send + Sync + 'static {
    /// The underlying real type (`f32` or `f64`).
    type Real: Real;

    fn from_real(r: Self::Real) -> Self;

    /// Real (value) part.
    fn re(&self) -> Self::Real;

    /// Applies a function known by its value `f0`, slope `f1` and curvature
    /// `f2` at `self.re()`.
    fn chain(&self, f0: Self::Real, f1: Self::Real, f2: Self::Real) -> Self;

    /// Numeric literal.
    #[inline]
    fn cst(x: f64) -> Self {
        Self::from_real(<Self::Real as FromPrimitive>::from_f64(x).expect("literal fits"))
    }

    /// Dispatches a dynamically typed metric field onto this carrier.
    fn eval_metric(field: &dyn MetricField<Self::Real>, x: &[Self]) -> Matrix<Self>;

    /// Dispatches a dynamically typed 1-form field onto this carrier.
    fn eval_form(field: &dyn OneFormField<Self::Real>, x: &[Self]) -> Vec<Self>;
}

/// Plain floating point reals.
pub trait Real: Scalar<Real = Self> + FloatConst + Default {}

macro_rules! impl_real {
    ($t:ty) => {
        impl Scalar for $t {
            type Real = $t;

            #[inline]
            fn from_real(r: $t) -> Self {
                r
            }

            #[inline]
            fn re(&self) -> $t {
                *self
            }

            #[inline]
            fn chain(&self, f0: $t, _f1: $t, _f2: $t) -> Self {
                f0
            }

            fn eval_metric(field: &dyn MetricField<$t>, x: &[Self]) -> Matrix<Self> {
                field.eval_real(x)
            }

            fn eval_form(field: &dyn OneFormField<$t>, x: &[Self]) -> Vec<Self> {
                field.eval_real(x)
            }
        }

        impl Real for $t {}
    };
}

impl_real!(f32);
impl_real!(f64);

/// First-order dual number `re + eps·ε` with `ε² = 0`.
#[derive(Clone, Copy, Default)]
pub struct Dual<R> {
    pub re: R,
    pub eps: R,
}

impl<R: Real> Dual<R> {
    #[inline]
    pub fn new(re: R, eps: R) -> Self {
        Dual { re, eps }
    }

    /// A variable seeded with unit derivative.
    #[inline]
    pub fn var(re: R) -> Self {
        Dual { re, eps: R::one() }
    }

    #[inline]
    pub fn constant(re: R) -> Self {
        Dual { re, eps: R::zero() }
    }

    #[inline]
    fn lift(&self, f0: R, f1: R, _f2: R) -> Self {
        Dual { re: f0, eps: f1 * self.eps }
    }

    #[inline]
    fn is_constant(&self) -> bool {
        self.eps == R::zero()
    }
}

/// Second-order hyper-dual number `re + e1·ε₁ + e2·ε₂ + e12·ε₁ε₂` with
/// `ε₁² = ε₂² = 0`.
///
/// Seeding ε₁ along one coordinate and ε₂ along another yields the mixed
/// second partial in `e12`.
#[derive(Clone, Copy, Default)]
pub struct HyperDual<R> {
    pub re: R,
    pub e1: R,
    pub e2: R,
    pub e12: R,
}

impl<R: Real> HyperDual<R> {
    #[inline]
    pub fn new(re: R, e1: R, e2: R, e12: R) -> Self {
        HyperDual { re, e1, e2, e12 }
    }

    #[inline]
    pub fn constant(re: R) -> Self {
        HyperDual { re, e1: R::zero(), e2: R::zero(), e12: R::zero() }
    }

    #[inline]
    fn lift(&self, f0: R, f1: R, f2: R) -> Self {
        HyperDual {
            re: f0,
            e1: f1 * self.e1,
            e2: f1 * self.e2,
            e12: f1 * self.e12 + f2 * self.e1 * self.e2,
        }
    }

    #[inline]
    fn is_constant(&self) -> bool {
        self.e1 == R::zero() && self.e2 == R::zero() && self.e12 == R::zero()
    }
}

// Arithmetic ---------------------------------------------------------------

impl<R: Real> Add for Dual<R> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Dual { re: self.re + o.re, eps: self.eps + o.eps }
    }
}

impl<R: Real> Sub for Dual<R> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Dual { re: self.re - o.re, eps: self.eps - o.eps }
    }
}

impl<R: Real> Mul for Dual<R> {
    type Output = Self;
    #[inline]
    fn mul(self, o: Self) -> Self {
        Dual { re: self.re * o.re, eps: self.re * o.eps + self.eps * o.re }
    }
}

impl<R: Real> Div for Dual<R> {
    type Output = Self;
    #[inline]
    fn div(self, o: Self) -> Self {
        let inv = R::one() / o.re;
        Dual { re: self.re * inv, eps: (self.eps * o.re - self.re * o.eps) * inv * inv }
    }
}

impl<R: Real> Neg for Dual<R> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Dual { re: -self.re, eps: -self.eps }
    }
}

impl<R: Real> Add for HyperDual<R> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        HyperDual {
            re: self.re + o.re,
            e1: self.e1 + o.e1,
            e2: self.e2 + o.e2,
            e12: self.e12 + o.e12,
        }
    }
}

impl<R: Real> Sub for HyperDual<R> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        HyperDual {
            re: self.re - o.re,
            e1: self.e1 - o.e1,
            e2: self.e2 - o.e2,
            e12: self.e12 - o.e12,
        }
    }
}

impl<R: Real> Mul for HyperDual<R> {
    type Output = Self;
    #[inline]
    fn mul(self, o: Self) -> Self {
        HyperDual {
            re: self.re * o.re,
            e1: self.re * o.e1 + self.e1 * o.re,
            e2: self.re * o.e2 + self.e2 * o.re,
            e12: self.re * o.e12 + self.e1 * o.e2 + self.e2 * o.e1 + self.e12 * o.re,
        }
    }
}

impl<R: Real> Div for HyperDual<R> {
    type Output = Self;
    #[inline]
    fn div(self, o: Self) -> Self {
        self * o.recip()
    }
}

impl<R: Real> Neg for HyperDual<R> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        HyperDual { re: -self.re, e1: -self.e1, e2: -self.e2, e12: -self.e12 }
    }
}

impl<R: Real> Debug for Dual<R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Dual({:?}, {:?})", self.re, self.eps)
    }
}

impl<R: Real> Display for Dual<R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} + {}ε", self.re, self.eps)
    }
}

impl<R: Real> Debug for HyperDual<R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "HyperDual({:?}, {:?}, {:?}, {:?})", self.re, self.e1, self.e2, self.e12)
    }
}

impl<R: Real> Display for HyperDual<R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} + {}ε₁ + {}ε₂ + {}ε₁ε₂", self.re, self.e1, self.e2, self.e12)
    }
}

/// Everything that only depends on `re`, `lift` and the arithmetic above.
macro_rules! impl_carrier {
    ($ty:ident, $eval:ident) => {
        impl<R: Real> $ty<R> {
            #[inline]
            fn from_re(re: R) -> Self {
                Self { re, ..Default::default() }
            }
        }

        impl<R: Real> PartialEq for $ty<R> {
            #[inline]
            fn eq(&self, o: &Self) -> bool {
                self.re == o.re
            }
        }

        impl<R: Real> PartialOrd for $ty<R> {
            #[inline]
            fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
                self.re.partial_cmp(&o.re)
            }
        }

        impl<R: Real> Rem for $ty<R> {
            type Output = Self;
            fn rem(self, o: Self) -> Self {
                self - (self / o).trunc() * o
            }
        }

        impl<R: Real> AddAssign for $ty<R> {
            #[inline]
            fn add_assign(&mut self, o: Self) {
                *self = *self + o;
            }
        }

        impl<R: Real> SubAssign for $ty<R> {
            #[inline]
            fn sub_assign(&mut self, o: Self) {
                *self = *self - o;
            }
        }

        impl<R: Real> MulAssign for $ty<R> {
            #[inline]
            fn mul_assign(&mut self, o: Self) {
                *self = *self * o;
            }
        }

        impl<R: Real> Sum for $ty<R> {
            fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
                iter.fold(Self::zero(), |a, b| a + b)
            }
        }

        impl<R: Real> Product for $ty<R> {
            fn product<I: Iterator<Item = Self>>(iter: I) -> Self {
                iter.fold(Self::one(), |a, b| a * b)
            }
        }

        impl<R: Real> Zero for $ty<R> {
            #[inline]
            fn zero() -> Self {
                Self::from_re(R::zero())
            }
            #[inline]
            fn is_zero(&self) -> bool {
                self.re.is_zero() && self.is_constant()
            }
        }

        impl<R: Real> One for $ty<R> {
            #[inline]
            fn one() -> Self {
                Self::from_re(R::one())
            }
        }

        impl<R: Real> Num for $ty<R> {
            type FromStrRadixErr = <R as Num>::FromStrRadixErr;
            fn from_str_radix(s: &str, radix: u32) -> Result<Self, Self::FromStrRadixErr> {
                R::from_str_radix(s, radix).map(Self::from_re)
            }
        }

        impl<R: Real> ToPrimitive for $ty<R> {
            fn to_i64(&self) -> Option<i64> {
                self.re.to_i64()
            }
            fn to_u64(&self) -> Option<u64> {
                self.re.to_u64()
            }
            fn to_f64(&self) -> Option<f64> {
                self.re.to_f64()
            }
        }

        impl<R: Real> NumCast for $ty<R> {
            fn from<T: ToPrimitive>(n: T) -> Option<Self> {
                <R as NumCast>::from(n).map(Self::from_re)
            }
        }

        impl<R: Real> FromPrimitive for $ty<R> {
            fn from_i64(n: i64) -> Option<Self> {
                R::from_i64(n).map(Self::from_re)
            }
            fn from_u64(n: u64) -> Option<Self> {
                R::from_u64(n).map(Self::from_re)
            }
            fn from_f64(n: f64) -> Option<Self> {
                R::from_f64(n).map(Self::from_re)
            }
        }

        impl<R: Real> Scalar for $ty<R> {
            type Real = R;

            #[inline]
            fn from_real(r: R) -> Self {
                Self::from_re(r)
            }

            #[inline]
            fn re(&self) -> R {
                self.re
            }

            #[inline]
            fn chain(&self, f0: R, f1: R, f2: R) -> Self {
                self.lift(f0, f1, f2)
            }

            fn eval_metric(field: &dyn MetricField<R>, x: &[Self]) -> Matrix<Self> {
                field.$eval(x)
            }

            fn eval_form(field: &dyn OneFormField<R>, x: &[Self]) -> Vec<Self> {
                field.$eval(x)
            }
        }

        impl<R: Real> Float for $ty<R> {
            fn nan() -> Self {
                Self::from_re(R::nan())
            }
            fn infinity() -> Self {
                Self::from_re(R::infinity())
            }
            fn neg_infinity() -> Self {
                Self::from_re(R::neg_infinity())
            }
            fn neg_zero() -> Self {
                Self::from_re(R::neg_zero())
            }
            fn min_value() -> Self {
                Self::from_re(R::min_value())
            }
            fn min_positive_value() -> Self {
                Self::from_re(R::min_positive_value())
            }
            fn max_value() -> Self {
                Self::from_re(R::max_value())
            }
            fn epsilon() -> Self {
                Self::from_re(R::epsilon())
            }
            fn is_nan(self) -> bool {
                self.re.is_nan()
            }
            fn is_infinite(self) -> bool {
                self.re.is_infinite()
            }
            fn is_finite(self) -> bool {
                self.re.is_finite()
            }
            fn is_normal(self) -> bool {
                self.re.is_normal()
            }
            fn classify(self) -> FpCategory {
                self.re.classify()
            }
            fn floor(self) -> Self {
                Self::from_re(self.re.floor())
            }
            fn ceil(self) -> Self {
                Self::from_re(self.re.ceil())
            }
            fn round(self) -> Self {
                Self::from_re(self.re.round())
            }
            fn trunc(self) -> Self {
                Self::from_re(self.re.trunc())
            }
            fn fract(self) -> Self {
                self - self.trunc()
            }
            fn abs(self) -> Self {
                if self.re < R::zero() {
                    -self
                } else {
                    self
                }
            }
            fn signum(self) -> Self {
                Self::from_re(self.re.signum())
            }
            fn is_sign_positive(self) -> bool {
                self.re.is_sign_positive()
            }
            fn is_sign_negative(self) -> bool {
                self.re.is_sign_negative()
            }
            fn mul_add(self, a: Self, b: Self) -> Self {
                self * a + b
            }
            fn recip(self) -> Self {
                let r = R::one() / self.re;
                self.lift(r, -r * r, (r + r) * r * r)
            }
            fn powi(self, n: i32) -> Self {
                match n {
                    0 => Self::one(),
                    1 => self,
                    _ => {
                        let x = self.re;
                        let nr = R::from_i32(n).unwrap();
                        let f1 = nr * x.powi(n - 1);
                        let f2 = nr * (nr - R::one()) * x.powi(n - 2);
                        self.lift(x.powi(n), f1, f2)
                    }
                }
            }
            fn powf(self, n: Self) -> Self {
                if n.is_constant() {
                    let p = n.re;
                    let x = self.re;
                    if p.is_zero() {
                        return Self::one();
                    }
                    let v = x.powf(p);
                    let f1 = p * x.powf(p - R::one());
                    let f2 = p * (p - R::one()) * x.powf(p - R::one() - R::one());
                    self.lift(v, f1, f2)
                } else {
                    (n * self.ln()).exp()
                }
            }
            fn sqrt(self) -> Self {
                let s = self.re.sqrt();
                let half = R::from_f64(0.5).unwrap();
                let f1 = half / s;
                self.lift(s, f1, -f1 * half / self.re)
            }
            fn exp(self) -> Self {
                let e = self.re.exp();
                self.lift(e, e, e)
            }
            fn exp2(self) -> Self {
                let v = self.re.exp2();
                let l = R::LN_2();
                self.lift(v, v * l, v * l * l)
            }
            fn ln(self) -> Self {
                let r = R::one() / self.re;
                self.lift(self.re.ln(), r, -r * r)
            }
            fn log(self, base: Self) -> Self {
                self.ln() / base.ln()
            }
            fn log2(self) -> Self {
                self.ln() / Self::from_re(R::LN_2())
            }
            fn log10(self) -> Self {
                self.ln() / Self::from_re(R::LN_10())
            }
            fn max(self, o: Self) -> Self {
                if self.re >= o.re || o.re.is_nan() {
                    self
                } else {
                    o
                }
            }
            fn min(self, o: Self) -> Self {
                if self.re <= o.re || o.re.is_nan() {
                    self
                } else {
                    o
                }
            }
            fn abs_sub(self, o: Self) -> Self {
                if self.re > o.re {
                    self - o
                } else {
                    Self::zero()
                }
            }
            fn cbrt(self) -> Self {
                let c = self.re.cbrt();
                let third = R::one() / R::from_f64(3.0).unwrap();
                let f1 = third * c / self.re;
                let f2 = -(R::one() + R::one()) * third * f1 / self.re;
                self.lift(c, f1, f2)
            }
            fn hypot(self, o: Self) -> Self {
                (self * self + o * o).sqrt()
            }
            fn sin(self) -> Self {
                let (s, c) = self.re.sin_cos();
                self.lift(s, c, -s)
            }
            fn cos(self) -> Self {
                let (s, c) = self.re.sin_cos();
                self.lift(c, -s, -c)
            }
            fn tan(self) -> Self {
                let t = self.re.tan();
                let f1 = R::one() + t * t;
                self.lift(t, f1, (t + t) * f1)
            }
            fn asin(self) -> Self {
                let x = self.re;
                let d = R::one() - x * x;
                let f1 = R::one() / d.sqrt();
                self.lift(x.asin(), f1, x * f1 / d)
            }
            fn acos(self) -> Self {
                let x = self.re;
                let d = R::one() - x * x;
                let f1 = -R::one() / d.sqrt();
                self.lift(x.acos(), f1, x * f1 / d)
            }
            fn atan(self) -> Self {
                let x = self.re;
                let d = R::one() / (R::one() + x * x);
                self.lift(x.atan(), d, -(x + x) * d * d)
            }
            fn atan2(self, o: Self) -> Self {
                // Derivatives of atan(y/x) coincide with those of atan2 off the branch cut.
                let base = (self / o).atan();
                base - Self::from_re(base.re) + Self::from_re(self.re.atan2(o.re))
            }
            fn sin_cos(self) -> (Self, Self) {
                (self.sin(), self.cos())
            }
            fn exp_m1(self) -> Self {
                let e = self.re.exp();
                self.lift(self.re.exp_m1(), e, e)
            }
            fn ln_1p(self) -> Self {
                let r = R::one() / (R::one() + self.re);
                self.lift(self.re.ln_1p(), r, -r * r)
            }
            fn sinh(self) -> Self {
                let (s, c) = (self.re.sinh(), self.re.cosh());
                self.lift(s, c, s)
            }
            fn cosh(self) -> Self {
                let (s, c) = (self.re.sinh(), self.re.cosh());
                self.lift(c, s, c)
            }
            fn tanh(self) -> Self {
                let t = self.re.tanh();
                let f1 = R::one() - t * t;
                self.lift(t, f1, -(t + t) * f1)
            }
            fn asinh(self) -> Self {
                let x = self.re;
                let d = R::one() + x * x;
                let f1 = R::one() / d.sqrt();
                self.lift(x.asinh(), f1, -x * f1 / d)
            }
            fn acosh(self) -> Self {
                let x = self.re;
                let d = x * x - R::one();
                let f1 = R::one() / d.sqrt();
                self.lift(x.acosh(), f1, -x * f1 / d)
            }
            fn atanh(self) -> Self {
                let x = self.re;
                let d = R::one() / (R::one() - x * x);
                self.lift(x.atanh(), d, (x + x) * d * d)
            }
            fn integer_decode(self) -> (u64, i16, i8) {
                self.re.integer_decode()
            }
        }
    };
}

impl_carrier!(Dual, eval_dual);
impl_carrier!(HyperDual, eval_hyper);

/// Shorthand for `S::cst`.
#[inline]
pub fn lit<S: Scalar>(x: f64) -> S {
    S::cst(x)
}

/// Gradient of a scalar function by one dual sweep per coordinate.
pub fn gradient<R: Real>(x: &[R], f: impl Fn(&[Dual<R>]) -> Dual<R>) -> (R, Vec<R>) {
    let mut value = R::zero();
    let mut grad = Vec::with_capacity(x.len());
    let mut xd: Vec<Dual<R>> = x.iter().map(|&v| Dual::constant(v)).collect();
    for k in 0..x.len() {
        xd[k].eps = R::one();
        let out = f(&xd);
        value = out.re;
        grad.push(out.eps);
        xd[k].eps = R::zero();
    }
    if x.is_empty() {
        value = f(&xd).re;
    }
    (value, grad)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd<F: Fn(f64) -> f64>(f: F, x: f64) -> (f64, f64) {
        let h = 1e-5;
        let d1 = (f(x + h) - f(x - h)) / (2.0 * h);
        let d2 = (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
        (d1, d2)
    }

    fn check(name: &str, x: f64, g: impl Fn(HyperDual<f64>) -> HyperDual<f64>, f: impl Fn(f64) -> f64) {
        let h = g(HyperDual::new(x, 1.0, 1.0, 0.0));
        let (d1, d2) = fd(&f, x);
        assert!((h.re - f(x)).abs() < 1e-14, "{name} value");
        assert!((h.e1 - d1).abs() < 1e-7 * (1.0 + d1.abs()), "{name} d1 {} vs {}", h.e1, d1);
        assert!((h.e2 - d1).abs() < 1e-7 * (1.0 + d1.abs()), "{name} d1'");
        assert!((h.e12 - d2).abs() < 1e-4 * (1.0 + d2.abs()), "{name} d2 {} vs {}", h.e12, d2);
    }

    #[test]
    fn elementary_functions_match_finite_differences() {
        check("sqrt", 0.7, |x| x.sqrt(), f64::sqrt);
        check("exp", 0.3, |x| x.exp(), f64::exp);
        check("ln", 1.7, |x| x.ln(), f64::ln);
        check("atan", 0.4, |x| x.atan(), f64::atan);
        check("asin", 0.4, |x| x.asin(), f64::asin);
        check("asinh", 0.4, |x| x.asinh(), f64::asinh);
        check("recip", 1.3, |x| x.recip(), |x| 1.0 / x);
        check("powf", 1.3, |x| x.powf(HyperDual::constant(-1.25)), |x| x.powf(-1.25));
        check("powi", 1.3, |x| x.powi(3), |x| x.powi(3));
        check("ln_1p", 0.2, |x| x.ln_1p(), f64::ln_1p);
        check("cbrt", 2.0, |x| x.cbrt(), f64::cbrt);
        check("tan", 0.5, |x| x.tan(), f64::tan);
        check("tanh", 0.5, |x| x.tanh(), f64::tanh);
        check("quotient", 0.5, |x| (x * x + HyperDual::one()) / (x + HyperDual::cst(2.0)), |x| {
            (x * x + 1.0) / (x + 2.0)
        });
    }

    #[test]
    fn mixed_partial_of_product() {
        // f(a,b) = a²b at (2,3): ∂a∂b f = 2a = 4
        let a = HyperDual::new(2.0, 1.0, 0.0, 0.0);
        let b = HyperDual::new(3.0, 0.0, 1.0, 0.0);
        let f = a * a * b;
        assert_eq!(f.re, 12.0);
        assert_eq!(f.e1, 12.0);
        assert_eq!(f.e2, 4.0);
        assert_eq!(f.e12, 4.0);
    }

    #[test]
    fn dual_division_and_gradient() {
        let (v, g) = gradient(&[1.0, 2.0], |x| x[0] * x[1] / (x[0] + x[1]));
        assert!((v - 2.0 / 3.0).abs() < 1e-15);
        assert!((g[0] - 4.0 / 9.0).abs() < 1e-15);
        assert!((g[1] - 1.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn chain_lifts_known_derivatives() {
        let x = HyperDual::new(0.5, 2.0, 3.0, 0.25);
        let y = x.chain(10.0, 4.0, 6.0);
        assert_eq!(y.re, 10.0);
        assert_eq!(y.e1, 8.0);
        assert_eq!(y.e2, 12.0);
        assert_eq!(y.e12, 4.0 * 0.25 + 6.0 * 6.0);
        let d = Dual::new(0.5, 2.0).chain(1.0, 3.0, 99.0);
        assert_eq!(d.eps, 6.0);
    }
}
