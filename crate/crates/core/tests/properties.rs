use proptest::prelude::*;

use finslerlab::classify::{invariants, same_type, transform_g, transform_h};
use finslerlab::deform::{forward_chain, inverse_chain, pair_difference};
use finslerlab::expr::Expr;
use finslerlab::field::{RandomAnalyticForm, RandomAnalyticMetric};
use finslerlab::flatness::spray_proportionality_residual;
use finslerlab::models::{funk_metric, berwald_metric, space_form_metric, closed_conformal_form};
use finslerlab::phi::NamedPhi;
use finslerlab::{ABMetric, Form, Metric, OdeParams, PhiSpec};
use std::sync::Arc;

fn quadruple() -> impl Strategy<Value = OdeParams<f64>> {
    (-2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64).prop_map(|(a, b, c, d)| OdeParams::new(a, b, c, d))
}

fn ball_point(n: usize, r: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, n).prop_map(move |v| {
        let norm = v.iter().map(|t| t * t).sum::<f64>().sqrt();
        if norm > 1.0 {
            v.iter().map(|t| t * r / norm).collect()
        } else {
            v.iter().map(|t| t * r).collect()
        }
    })
}

fn direction(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, n).prop_filter("nonzero", |v| v.iter().map(|t| t * t).sum::<f64>() > 1e-2)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn delta_identity_holds(k in quadruple()) {
        prop_assert!(invariants(&k).identity_residual() < 1e-10);
    }

    #[test]
    fn g_and_h_preserve_type(k in quadruple(), u in -1.0..1.0f64, v in 0.3..3.0f64) {
        let moved = transform_h(v, &transform_g(u, &k)).unwrap();
        prop_assert!(same_type(&k, &moved));
    }

    #[test]
    fn chains_invert(k in quadruple(), seed in 0u64..1000, x in ball_point(3, 0.6)) {
        let a: Metric = Arc::new(RandomAnalyticMetric::new(3, seed));
        let b: Form = Arc::new(RandomAnalyticForm::new(3, seed, 0.15));
        let up = inverse_chain(&a, &b, &k).unwrap();
        let down = forward_chain(&up.0, &up.1, &k).unwrap();
        let (da, db) = pair_difference(&(a, b), &down, &x);
        prop_assert!(da < 1e-9 && db < 1e-9);
    }

    #[test]
    fn finsler_function_is_positively_homogeneous(x in ball_point(3, 0.7), y in direction(3), t in 0.1..10.0f64) {
        for m in [funk_metric(3).unwrap(), berwald_metric(3).unwrap()] {
            let f1 = m.f_eval(&x, &y).unwrap();
            let ty: Vec<f64> = y.iter().map(|v| v * t).collect();
            let ft = m.f_eval(&x, &ty).unwrap();
            prop_assert!((ft - t * f1).abs() <= 1e-12 * ft.abs().max(1.0));
        }
    }

    #[test]
    fn space_form_sprays_are_projective(mu in -1.0..1.0f64, x in ball_point(3, 0.5), y in direction(3)) {
        let a = space_form_metric(mu, 3).unwrap();
        let b = closed_conformal_form(mu, 0.0, &[0.0; 3]).unwrap();
        let m = ABMetric::new(a, b, PhiSpec::Named(NamedPhi::Riemann)).unwrap();
        prop_assert!(spray_proportionality_residual(&m, &x, &y).unwrap() < 1e-10);
    }

    #[test]
    fn polynomial_expressions_evaluate(c in -3.0..3.0f64, x1 in -2.0..2.0f64, x2 in -2.0..2.0f64) {
        let e = Expr::parse(&format!("{c} * x1^2 - x1*x2 + (x2 - 1)/2")).unwrap();
        let want = c * x1 * x1 - x1 * x2 + (x2 - 1.0) / 2.0;
        prop_assert!((e.eval::<f64>(&[x1, x2]) - want).abs() < 1e-12 * want.abs().max(1.0));
        prop_assert_eq!(e.arity(), 2);
    }
}
