//! The ten acceptance criteria, one line each.
//!
//! Runs without the libtest harness so that every criterion prints its
//! verdict; the process exits nonzero when any criterion fails.

use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use rand::Rng;

use finslerlab::ab_metric::spray_ab;
use finslerlab::classify::{
    invariants, reversibilize, same_type, transform_g, transform_h, QValue, ReducedForm, ReducedKind,
};
use finslerlab::deform::{
    berwald_chain, forward_chain, forward_stages, inverse_chain, lemma_conformal, lemma_rescale, lemma_stretch,
    norm2_at, pair_difference, standard_factors, Direction,
};
use finslerlab::diffgeo::{christoffel, covariant_derivative, spray_riemann};
use finslerlab::fd;
use finslerlab::field::{RandomAnalyticForm, RandomAnalyticMetric};
use finslerlab::flatness::{
    flatness_report, hamel_residual, integrate_spray, rk4_order_ratio, straightness_deviation,
    structure_residual, SweepConfig,
};
use finslerlab::linalg::{max_abs, sub, Matrix};
use finslerlab::models::{
    berwald_metric, closed_conformal_form, conformal_field, conformal_residuals, funk_metric, space_form_metric,
    ConformalFieldParams,
};
use finslerlab::phi::{regularity_check, ode_residual, NamedPhi, FCase};
use finslerlab::sampling::{rng, sample_pairs, sample_points, DEFAULT_SEED};
use finslerlab::{ABMetric, Form, Metric, OdeParams, PhiSpec};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: String) -> Outcome {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn err(e: impl ToString) -> String {
    e.to_string()
}

/// Geodesics from seeded starts in `B(0.5)`, stopped at `|x| = 0.9`.
fn max_straightness(m: &ABMetric, count: usize, seed: u64) -> Result<f64, String> {
    let mut worst = 0.0f64;
    for (x, y) in sample_pairs::<f64>(m.dim(), 0.5, count, seed) {
        let tr = integrate_spray(|p, v| spray_ab(m, p, v), &x, &y, 0.9, 1e-3, 5000).map_err(err)?;
        worst = worst.max(straightness_deviation(&tr).map_err(err)?);
    }
    Ok(worst)
}

fn flat_suite(m: &ABMetric) -> Result<(f64, f64, f64), String> {
    let r = flatness_report(m, &SweepConfig::default().with_samples(100)).map_err(err)?;
    let dev = max_straightness(m, 10, DEFAULT_SEED + 1)?;
    Ok((r.max_hamel, r.max_rapcsak, dev))
}

fn criterion_1() -> Outcome {
    let m = funk_metric(3).map_err(err)?;
    let (h, r, d) = flat_suite(&m)?;
    ensure(h < 1e-6 && r < 1e-6 && d < 1e-6, format!("hamel {h:.1e}, rapcsak {r:.1e}, straightness {d:.1e}"))
}

fn criterion_2() -> Outcome {
    let m = berwald_metric(3).map_err(err)?;
    let (h, r, d) = flat_suite(&m)?;
    let k = OdeParams::new(2.0, 0.0, -3.0, 2.0);
    let mut s = 0.0f64;
    for x in sample_points::<f64>(3, 0.8, 50, DEFAULT_SEED) {
        let res = structure_residual(m.alpha.as_ref(), m.beta.as_ref(), &k, &x).map_err(err)?;
        s = s.max(res.bij).max(res.spray);
    }
    ensure(
        h < 1e-6 && r < 1e-6 && d < 1e-6 && s < 1e-7,
        format!("hamel {h:.1e}, rapcsak {r:.1e}, straightness {d:.1e}, structure {s:.1e}"),
    )
}

/// One quadruple per η case.
fn eta_cases() -> [(FCase, OdeParams<f64>); 5] {
    [
        (FCase::Exponential, OdeParams::new(2.0, 0.0, -2.0, 0.5)),
        (FCase::Power, OdeParams::new(2.0, 0.0, -3.0, 0.5)),
        (FCase::PositiveDiscriminant, OdeParams::new(1.0, 0.5, -3.0, 0.5)),
        (FCase::ZeroDiscriminant, OdeParams::new(2.0, 1.0, 0.0, 0.5)),
        (FCase::NegativeDiscriminant, OdeParams::new(0.0, 1.0, 0.0, 0.5)),
    ]
}

/// `(α, β)` from the inverse chain over a space form and a closed conformal form.
fn flat_pair(k: &OdeParams<f64>, n: usize) -> Result<(Metric, Form), String> {
    let mu = 0.5;
    let mut a = vec![0.0; n];
    a[0] = 0.1;
    let abar = space_form_metric(mu, n).map_err(err)?;
    let bbar = closed_conformal_form(mu, 0.3, &a).map_err(err)?;
    inverse_chain(&abar, &bbar, k).map_err(err)
}

fn max_hamel(m: &ABMetric, count: usize) -> Result<f64, String> {
    let mut h = 0.0f64;
    for (x, y) in sample_pairs::<f64>(m.dim(), 0.8, count, DEFAULT_SEED) {
        h = h.max(hamel_residual(m, &x, &y).map_err(err)?);
    }
    Ok(h)
}

fn criterion_3() -> Outcome {
    let mut worst = 0.0f64;
    let mut parts = Vec::new();
    for (case, k) in eta_cases() {
        if k.f_case() != case {
            return Err(format!("{k:?} is not in case {case:?}"));
        }
        for n in [2, 3] {
            let (a, b) = flat_pair(&k, n)?;
            let m = ABMetric::new(a, b, PhiSpec::quadrature(k)).map_err(err)?;
            let h = max_hamel(&m, 50).map_err(|e| format!("{case:?}, n={n}: {e}"))?;
            worst = worst.max(h);
        }
        parts.push(format!("{case:?}"));
    }
    ensure(worst < 1e-5, format!("max hamel {worst:.1e} over {} cases in n = 2, 3", parts.len()))
}

fn random_pair(n: usize, seed: u64) -> (Metric, Form) {
    (Arc::new(RandomAnalyticMetric::new(n, seed)), Arc::new(RandomAnalyticForm::new(n, seed, 0.15)))
}

fn random_quadruple(g: &mut impl Rng) -> OdeParams<f64> {
    OdeParams::new(g.gen_range(-1.0..1.0), g.gen_range(-1.0..1.0), g.gen_range(-1.0..1.0), g.gen_range(-1.0..1.0))
}

fn criterion_4() -> Outcome {
    let mut g = rng(DEFAULT_SEED ^ 4);
    let mut worst = 0.0f64;
    for i in 0..10 {
        let k = random_quadruple(&mut g);
        let n = 2 + i % 2;
        let pair = random_pair(n, 400 + i as u64);
        let pts = sample_points::<f64>(n, 0.8, 50, DEFAULT_SEED + i as u64);
        let bar = forward_chain(&pair.0, &pair.1, &k).map_err(err)?;
        let back = inverse_chain(&bar.0, &bar.1, &k).map_err(err)?;
        let up = inverse_chain(&pair.0, &pair.1, &k).map_err(err)?;
        let down = forward_chain(&up.0, &up.1, &k).map_err(err)?;
        for x in &pts {
            let (da, db) = pair_difference(&pair, &back, x);
            let (ea, eb) = pair_difference(&pair, &down, x);
            worst = worst.max(da).max(db).max(ea).max(eb);
        }
    }
    let mut bw = 0.0f64;
    let mut rel = 0.0f64;
    for i in 0..3u64 {
        let pair = random_pair(3, 450 + i);
        let bar = berwald_chain(&pair.0, &pair.1, Direction::Forward).map_err(err)?;
        let back = berwald_chain(&bar.0, &bar.1, Direction::Inverse).map_err(err)?;
        for x in sample_points::<f64>(3, 0.8, 50, DEFAULT_SEED + 40 + i) {
            let (da, db) = pair_difference(&pair, &back, &x);
            bw = bw.max(da).max(db);
            let b2 = norm2_at(pair.0.as_ref(), pair.1.as_ref(), &x);
            let bb2 = norm2_at(bar.0.as_ref(), bar.1.as_ref(), &x);
            rel = rel.max((bb2 - b2 / (1.0 - b2)).abs());
        }
    }
    ensure(
        worst < 1e-9 && bw < 1e-9 && rel < 1e-12,
        format!("chain round trips {worst:.1e}, berwald round trip {bw:.1e}, norm relation {rel:.1e}"),
    )
}

fn scaled_diff(p: &[f64], q: &[f64]) -> f64 {
    max_abs(&sub(p, q)) / (1.0 + max_abs(q))
}

fn scaled_mat_diff(p: &Matrix<f64>, q: &Matrix<f64>) -> f64 {
    p.max_abs_diff(q) / (1.0 + q.max_abs())
}

fn criterion_5() -> Outcome {
    let mut g = rng(DEFAULT_SEED ^ 5);
    let (mut s1, mut s2, mut s3) = (0.0f64, 0.0f64, 0.0f64);
    for i in 0..30u64 {
        let n = 2 + (i % 3) as usize;
        let k = random_quadruple(&mut g);
        let (a, b) = random_pair(n, 500 + i);
        let x: Vec<f64> = sample_points::<f64>(n, 0.5, 1, 900 + i).remove(0);
        let y: Vec<f64> = sample_pairs::<f64>(n, 0.5, 1, 950 + i).remove(0).1;
        let ch = standard_factors(&k);
        let st = forward_stages(&a, &b, &k).map_err(err)?;
        let cd = covariant_derivative(b.as_ref(), a.as_ref(), &x).map_err(err)?;
        let ga = spray_riemann(a.as_ref(), &x, &y).map_err(err)?;

        let g_t = spray_riemann(st.tilde.0.as_ref(), &x, &y).map_err(err)?;
        let b_t = covariant_derivative(st.tilde.1.as_ref(), st.tilde.0.as_ref(), &x).map_err(err)?.bij;
        let p1 = lemma_stretch(&cd, &ga, &y, &ch.kappa);
        s1 = s1.max(scaled_diff(&p1.spray, &g_t)).max(scaled_mat_diff(&p1.bij, &b_t));

        let g_h = spray_riemann(st.hat.0.as_ref(), &x, &y).map_err(err)?;
        let b_h = covariant_derivative(st.hat.1.as_ref(), st.hat.0.as_ref(), &x).map_err(err)?.bij;
        let p2 = lemma_conformal(&cd, &g_t, &b_t, &y, &ch.kappa, &ch.rho);
        s2 = s2.max(scaled_diff(&p2.spray, &g_h)).max(scaled_mat_diff(&p2.bij, &b_h));

        let g_b = spray_riemann(st.bar.0.as_ref(), &x, &y).map_err(err)?;
        let b_b = covariant_derivative(st.bar.1.as_ref(), st.bar.0.as_ref(), &x).map_err(err)?.bij;
        let p3 = lemma_rescale(&cd, &g_h, &b_h, &ch.nu);
        s3 = s3.max(scaled_diff(&p3.spray, &g_b)).max(scaled_mat_diff(&p3.bij, &b_b));
    }
    ensure(
        s1 < 1e-7 && s2 < 1e-7 && s3 < 1e-7,
        format!("stretch {s1:.1e}, conformal {s2:.1e}, rescale {s3:.1e} over 30 inputs"),
    )
}

fn grid() -> Vec<f64> {
    (0..=36).map(|j| -0.9 + 0.05 * j as f64).collect()
}

fn max_residual(phi: &PhiSpec<f64>, k: &OdeParams<f64>) -> Result<f64, String> {
    let mut m = 0.0f64;
    for s in grid() {
        m = m.max(ode_residual(phi, k, s).map_err(err)?.abs());
    }
    Ok(m)
}

fn criterion_6() -> Outcome {
    let mut worst = 0.0f64;
    worst = worst.max(max_residual(&PhiSpec::Named(NamedPhi::Berwald), &OdeParams::new(2.0, 0.0, -3.0, 2.0))?);
    worst = worst.max(max_residual(&PhiSpec::Named(NamedPhi::BerwaldSqrt), &OdeParams::new(3.0, 0.0, -2.0, 2.0))?);
    let mut g = rng(DEFAULT_SEED ^ 6);
    let mut count = 0;
    while count < 10 {
        let k = random_quadruple(&mut g);
        if k.validity_limit() <= 0.95 {
            continue;
        }
        worst = worst.max(max_residual(&PhiSpec::quadrature(k), &k)?);
        count += 1;
    }
    for sigma in [0.0, 1.0, 2.0] {
        let k = OdeParams::new(2.0 * sigma, 0.0, -2.0 * sigma - 1.0, 0.7);
        worst = worst.max(max_residual(&PhiSpec::sigma(sigma, 0.7), &k)?);
    }
    let mut ident = 0.0f64;
    for s in grid() {
        let b = PhiSpec::sigma(1.0, 2.0).value(s).map_err(err)?;
        let f = PhiSpec::sigma(0.0, 1.0).value(s).map_err(err)?;
        ident = ident.max((b - (1.0 + s).powi(2)).abs()).max((f - (1.0 + s)).abs());
    }
    ensure(worst < 1e-8 && ident < 1e-12, format!("max ode residual {worst:.1e}, closed-form identity {ident:.1e}"))
}

fn criterion_7() -> Outcome {
    let mut g = rng(DEFAULT_SEED ^ 7);
    let mut moved = 0.0f64;
    let mut ident = 0.0f64;
    for _ in 0..200 {
        let k0 = random_quadruple(&mut g);
        let mut k = k0;
        for _ in 0..g.gen_range(1..5) {
            k = if g.gen_bool(0.5) {
                transform_g(g.gen_range(-1.0..1.0), &k)
            } else {
                transform_h(g.gen_range(0.5..2.0), &k).map_err(err)?
            };
        }
        let (a, b) = (invariants(&k0), invariants(&k));
        ident = ident.max(a.identity_residual()).max(b.identity_residual());
        if !(a.p.same(&b.p) && a.q.same(&b.q)) {
            return Err(format!("invariants changed: {:?}/{:?} -> {:?}/{:?}", a.p, a.q, b.p, b.q));
        }
        for (u, v) in [(a.p.value(), b.p.value()), (a.q.value(), b.q.value())] {
            if let (Some(u), Some(v)) = (u, v) {
                moved = moved.max((u - v).abs() / u.abs().max(1.0));
            }
        }
    }
    let mut table = 0usize;
    for kind in [ReducedKind::D1p, ReducedKind::D1z, ReducedKind::D1n] {
        for _ in 0..20 {
            let sigma = match kind {
                ReducedKind::D1p => g.gen_range(-3.0..3.0),
                ReducedKind::D1z => if g.gen_bool(0.5) { 1.0 } else { -1.0 },
                ReducedKind::D1n => g.gen_range(-0.99..0.99),
            };
            let Ok(form) = ReducedForm::new(kind, sigma) else { continue };
            let sig = invariants(&form.quadruple(0.0));
            if !form.table_p().same(&sig.p) {
                return Err(format!("{kind} sigma={sigma}: table p {} vs invariant {}", form.table_p(), sig.p));
            }
            table += 1;
        }
    }
    let named = same_type(&OdeParams::new(2.0, 0.0, -3.0, 2.0), &OdeParams::new(3.0, 0.0, -2.0, 2.0));
    ensure(
        moved < 1e-9 && ident < 1e-12 && named,
        format!("200 orbits, value drift {moved:.1e}, identity {ident:.1e}, {table} table checks, berwald pair same type: {named}"),
    )
}

fn criterion_8() -> Outcome {
    let mut g = rng(DEFAULT_SEED ^ 8);
    let mut even = 0.0f64;
    let mut count = 0;
    while count < 10 {
        let k = random_quadruple(&mut g);
        if k.validity_limit() <= 0.95 {
            continue;
        }
        let phi = PhiSpec::quadrature(k);
        let orig = regularity_check(&phi, 0.5, 100).map_err(err)?;
        let b0 = if orig.pass { 0.5 } else { orig.b0_max };
        if !(b0 > 0.0) {
            continue;
        }
        let (rev, _) = reversibilize(&phi).map_err(err)?;
        for s in grid() {
            let d = rev.value(s).map_err(err)? - rev.value(-s).map_err(err)?;
            even = even.max(d.abs());
        }
        let rep = regularity_check(&rev, b0, 100).map_err(err)?;
        if !rep.pass {
            return Err(format!("reversible phi for {k:?} fails regularity on b0 = {b0}"));
        }
        let tag = rev.ode_params().map(|q| invariants(&q).q);
        if tag != Some(QValue::Zero) {
            return Err(format!("q of the reversible phi is {tag:?}"));
        }
        count += 1;
    }
    let mut h = 0.0f64;
    for (_, k) in eta_cases() {
        let (a, b) = flat_pair(&k, 3)?;
        let (rev, _) = reversibilize(&PhiSpec::quadrature(k)).map_err(err)?;
        let m = ABMetric::new(a, b, rev).map_err(err)?;
        h = h.max(max_hamel(&m, 50)?);
    }
    ensure(even < 1e-10 && h < 1e-5, format!("evenness {even:.1e}, reversible hamel {h:.1e}"))
}

fn criterion_9() -> Outcome {
    let (mut closed, mut conf) = (0.0f64, 0.0f64);
    for mu in [-0.5, 0.0, 1.0] {
        for (lambda, a) in [(1.0, vec![0.0, 0.0, 0.0]), (0.0, vec![1.0, 0.0, 0.0]), (0.4, vec![0.2, -0.3, 0.1])] {
            let h = space_form_metric(mu, 3).map_err(err)?;
            let b = closed_conformal_form(mu, lambda, &a).map_err(err)?;
            let (c, r) = conformal_residuals(&h, &b, 50).map_err(err)?;
            closed = closed.max(c);
            conf = conf.max(r);
        }
    }
    let mut witness = f64::INFINITY;
    let q = Matrix::from_rows(&[vec![0.0, 1.0, 0.0], vec![-1.0, 0.0, 0.0], vec![0.0, 0.0, 0.0]]);
    for p in [
        ConformalFieldParams { a: vec![1.0, 0.0, 0.0], ..ConformalFieldParams::zero(0.0, 3) },
        ConformalFieldParams { q, ..ConformalFieldParams::zero(0.0, 3) },
    ] {
        let (_, dual) = conformal_field(p).map_err(err)?;
        let h = space_form_metric(0.0, 3).map_err(err)?;
        let cd = covariant_derivative(dual.as_ref(), h.as_ref(), &[0.3, -0.2, 0.1]).map_err(err)?;
        witness = witness.min(cd.closedness_residual());
    }
    ensure(
        closed < 1e-8 && conf < 1e-8 && witness > 1e-3,
        format!("closedness {closed:.1e}, conformality {conf:.1e}, non-closed witness {witness:.2}"),
    )
}

fn criterion_10() -> Outcome {
    let mut worst = 0.0f64;
    for i in 0..50u64 {
        let n = 2 + (i % 3) as usize;
        let (a, b) = random_pair(n, 1000 + i);
        let (x, y) = sample_pairs::<f64>(n, 0.5, 1, 2000 + i).remove(0);
        let ga = christoffel(a.as_ref(), &x).map_err(err)?;
        let gf = fd::christoffel(a.as_ref(), &x).map_err(err)?;
        for (p, q) in ga.gamma.iter().zip(&gf) {
            worst = worst.max(scaled_mat_diff(p, q));
        }
        let sa = spray_riemann(a.as_ref(), &x, &y).map_err(err)?;
        let sf = fd::spray_riemann(a.as_ref(), &x, &y).map_err(err)?;
        worst = worst.max(scaled_diff(&sa, &sf));
        let ca = covariant_derivative(b.as_ref(), a.as_ref(), &x).map_err(err)?.bij;
        let cf = fd::covariant_derivative(b.as_ref(), a.as_ref(), &x).map_err(err)?;
        worst = worst.max(scaled_mat_diff(&ca, &cf));
    }
    let m = berwald_metric(2).map_err(err)?;
    let ratio = rk4_order_ratio(|p, v| spray_ab(&m, p, v), &[0.1, 0.2], &[0.6, -0.3], 1.0, 20).map_err(err)?;
    ensure(
        worst < 1e-6 && (8.0..=32.0).contains(&ratio),
        format!("analytic vs finite differences {worst:.1e}, rk4 step-halving ratio {ratio:.2}"),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("funk flatness", criterion_1),
        ("berwald flatness and structure equations", criterion_2),
        ("inverse chain end to end over five eta cases", criterion_3),
        ("chain round trips", criterion_4),
        ("deformation lemma fidelity", criterion_5),
        ("phi consistency", criterion_6),
        ("classification invariance", criterion_7),
        ("reversibilization", criterion_8),
        ("closed conformal certification", criterion_9),
        ("engine cross-validation", criterion_10),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(msg) => println!("criterion {:>2} PASS  {name}: {msg} [{secs:.2}s]", i + 1),
            Err(msg) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {msg} [{secs:.2}s]", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
