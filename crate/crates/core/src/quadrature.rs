//! Adaptive Gauss–Kronrod (7/15) integration.

use crate::error::{GeomError, Result};
use crate::scalar::Real;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

const MAX_DEPTH: u32 = 40;

#[derive(Clone, Copy, Debug)]
pub struct Integral<R> {
    pub value: R,
    pub error: R,
    pub evaluations: usize,
}

/// One 15-point Kronrod panel; returns (Kronrod estimate, |Kronrod − Gauss|).
fn gk15<R: Real>(f: &impl Fn(R) -> R, a: R, b: R) -> (R, R) {
    let c = |v: f64| R::from_f64(v).unwrap();
    let half = (b - a) * c(0.5);
    let mid = (a + b) * c(0.5);
    let fc = f(mid);
    let mut rk = fc * c(WGK[7]);
    let mut rg = fc * c(WG[3]);
    for j in 0..7 {
        let dx = half * c(XGK[j]);
        let s = f(mid - dx) + f(mid + dx);
        rk = rk + s * c(WGK[j]);
        if j % 2 == 1 {
            rg = rg + s * c(WG[j / 2]);
        }
    }
    (rk * half, ((rk - rg) * half).abs())
}

/// `∫_a^b f` to absolute tolerance `tol` by recursive bisection.
pub fn integrate<R: Real>(f: impl Fn(R) -> R, a: R, b: R, tol: R) -> Result<Integral<R>> {
    if a == b {
        return Ok(Integral { value: R::zero(), error: R::zero(), evaluations: 0 });
    }
    let mut evals = 0usize;
    let (value, error, ok) = recurse(&f, a, b, tol, 0, &mut evals);
    if !ok || !value.is_finite() {
        return Err(GeomError::Quadrature {
            estimate: error.to_f64().unwrap_or(f64::NAN),
            tol: tol.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(Integral { value, error, evaluations: evals })
}

fn recurse<R: Real>(
    f: &impl Fn(R) -> R,
    a: R,
    b: R,
    tol: R,
    depth: u32,
    evals: &mut usize,
) -> (R, R, bool) {
    let (v, e) = gk15(f, a, b);
    *evals += 15;
    if e <= tol || !e.is_finite() {
        return (v, e, e.is_finite());
    }
    // Below this width further bisection only measures rounding.
    let width = (b - a).abs();
    let floor = R::epsilon() * R::from_f64(50.0).unwrap() * (a.abs() + b.abs() + R::one());
    if depth >= MAX_DEPTH || width <= floor {
        return (v, e, e <= tol * R::from_f64(100.0).unwrap());
    }
    let m = (a + b) * R::from_f64(0.5).unwrap();
    let half_tol = tol * R::from_f64(0.5).unwrap();
    let (v1, e1, ok1) = recurse(f, a, m, half_tol, depth + 1, evals);
    let (v2, e2, ok2) = recurse(f, m, b, half_tol, depth + 1, evals);
    (v1 + v2, e1 + e2, ok1 && ok2)
}
