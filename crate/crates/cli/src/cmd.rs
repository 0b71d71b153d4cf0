//! The subcommands.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use rayon::prelude::*;
use serde_json::{json, Value};

use finslerlab::classify::{invariants, reduce, same_type, type_name, Transform};
use finslerlab::deform::{forward_chain, inverse_chain, pair_difference};
use finslerlab::flatness::{
    flatness_report, integrate_spray, riemann_proportionality_residual, straightness_deviation, Engine,
    GeodesicTrace, SweepConfig,
};
use finslerlab::ab_metric::spray_ab;
use finslerlab::models::conformal_residuals;
use finslerlab::phi::ode_residual;
use finslerlab::sampling::{sample_pairs, sample_points, DEFAULT_SEED};
use finslerlab::{ABMetric, GeomError, OdeParams, PhiSpec};

use crate::model::{build, parse_list, ModelArgs};
use crate::report::{emit, num, nums, Check, Report};
use crate::svg;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Debug, Args)]
pub struct OutputArgs {
    /// Report path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    /// Leave timing information out of the report.
    #[arg(long)]
    pub no_timestamp: bool,
}

impl OutputArgs {
    fn write(&self, report: &Report) -> Result<()> {
        let text = match self.format {
            Format::Json => serde_json::to_string_pretty(&report.to_json(!self.no_timestamp))? + "\n",
            Format::Csv => report.checks_csv()?,
        };
        emit(&text, self.out.as_deref())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum EngineArg {
    Analytic,
    Fd,
}

impl From<EngineArg> for Engine {
    fn from(e: EngineArg) -> Self {
        match e {
            EngineArg::Analytic => Engine::Analytic,
            EngineArg::Fd => Engine::FiniteDifference,
        }
    }
}

fn positive(v: f64, flag: &str) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        bail!("{flag} must be positive, got {v}");
    }
    Ok(())
}

fn at_least_one(v: usize, flag: &str) -> Result<()> {
    if v == 0 {
        bail!("{flag} must be at least 1");
    }
    Ok(())
}

/// Quadruple from `K1,K2,K3[,EPS]`.
fn parse_quadruple(src: &str, eps: Option<f64>) -> Result<OdeParams<f64>> {
    let n = src.split(',').count();
    let v = parse_list(src, if n == 4 { 4 } else { 3 }, "--k")?;
    let e = if n == 4 { v[3] } else { eps.unwrap_or(0.0) };
    Ok(OdeParams::new(v[0], v[1], v[2], e))
}

// verify ---------------------------------------------------------------------

#[derive(Clone, Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Defaults to 1e-6 for the analytic engine and 1e-3 for finite differences.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, value_enum, default_value = "analytic")]
    pub engine: EngineArg,
    /// Number of geodesics integrated for the straightness check.
    #[arg(long, default_value_t = 5)]
    pub geodesics: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub step: f64,
    #[arg(long, default_value_t = 2000)]
    pub max_steps: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// Geodesics from seeded points in half the working radius, stopped at 0.9
/// of it.
fn traces(m: &ABMetric, radius: f64, count: usize, seed: u64, step: f64, max_steps: usize) -> Vec<Result<GeodesicTrace, GeomError>> {
    let starts = sample_pairs::<f64>(m.dim(), 0.5 * radius, count, seed ^ 0x6765_6f64);
    starts
        .par_iter()
        .map(|(x, y)| integrate_spray(|p, v| spray_ab(m, p, v), x, y, 0.9 * radius, step, max_steps))
        .collect()
}

pub fn verify(args: &VerifyArgs) -> Result<bool> {
    at_least_one(args.samples, "--samples")?;
    positive(args.step, "--step")?;
    let engine: Engine = args.engine.into();
    let tol = args.tol.unwrap_or(engine.default_tolerance());
    positive(tol, "--tol")?;
    let built = build(&args.model)?;
    let m = &built.metric;
    let config = json!({
        "model": built.description,
        "samples": args.samples,
        "seed": args.seed,
        "tolerance": num(tol),
        "engine": format!("{:?}", args.engine).to_lowercase(),
        "geodesics": args.geodesics,
        "step": num(args.step),
        "max_steps": args.max_steps,
    });
    let mut report = Report::new("verify", config);
    let cfg = SweepConfig::default()
        .with_samples(args.samples)
        .with_seed(args.seed)
        .with_engine(engine)
        .with_tolerance(tol);
    match flatness_report(m, &cfg) {
        Ok(r) => {
            report.checks.push(Check::below("hamel", r.max_hamel, tol));
            report.checks.push(Check::below("rapcsak", r.max_rapcsak, tol));
            report.checks.push(Check::below("spray_projective", r.max_spray_dev, tol));
        }
        Err(e) => report.checks.push(Check::failed("flatness_sweep", tol, e)),
    }
    if args.geodesics > 0 {
        let mut worst = 0.0f64;
        let mut error = None;
        for t in traces(m, built.radius(), args.geodesics, args.seed, args.step, args.max_steps) {
            match t.and_then(|t| straightness_deviation(&t)) {
                Ok(d) => worst = worst.max(d),
                Err(e) => error = Some(e),
            }
        }
        report.checks.push(match error {
            Some(e) => Check::failed("geodesic_straightness", tol, e),
            None => Check::below("geodesic_straightness", worst, tol),
        });
    }
    args.output.write(&report)?;
    Ok(report.pass())
}

// classify -------------------------------------------------------------------

#[derive(Clone, Debug, Args)]
pub struct ClassifyArgs {
    /// `K1,K2,K3` or `K1,K2,K3,EPS`.
    #[arg(long, allow_hyphen_values = true)]
    pub k: String,
    #[arg(long, allow_hyphen_values = true)]
    pub eps: Option<f64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

fn transform_json(t: &Transform) -> Value {
    match *t {
        Transform::G(u) => json!({ "g": num(u) }),
        Transform::H(v) => json!({ "h": num(v) }),
    }
}

pub fn classify(args: &ClassifyArgs) -> Result<bool> {
    let k = parse_quadruple(&args.k, args.eps)?;
    if ![k.k1, k.k2, k.k3, k.eps].iter().all(|v| v.is_finite()) {
        bail!("quadruple must be finite");
    }
    let sig = invariants(&k);
    let config = json!({ "k": nums(&[k.k1, k.k2, k.k3]), "eps": num(k.eps) });
    let mut report = Report::new("classify", config);
    let reduced = match reduce(&k) {
        Ok((form, recipe)) => json!({
            "kind": form.kind.to_string(),
            "sigma": num(form.sigma),
            "recipe": Value::Array(recipe.steps.iter().map(transform_json).collect()),
        }),
        Err(e) => json!({ "none": e.to_string() }),
    };
    let named = [
        ("riemannian", OdeParams::new(0.0, 0.0, 0.0, 0.0)),
        ("randers", OdeParams::new(0.0, 0.0, 0.0, 1.0)),
        ("berwald", OdeParams::new(2.0, 0.0, -3.0, 2.0)),
    ];
    let mut same = serde_json::Map::new();
    for (name, q) in named {
        same.insert(name.into(), json!(same_type(&k, &q)));
    }
    report.details = json!({
        "delta1": num(sig.d1),
        "delta2": num(sig.d2),
        "delta3": num(sig.d3),
        "p": { "tag": sig.p.tag(), "value": sig.p.value().map(num), "text": sig.p.to_string() },
        "q": { "tag": sig.q.tag(), "value": sig.q.value().map(num), "text": sig.q.to_string() },
        "reduced": reduced,
        "type": type_name(&k),
        "same_type": same,
    });
    report.checks.push(Check::below("delta_identity", sig.identity_residual(), 1e-12));
    args.output.write(&report)?;
    Ok(report.pass())
}

// geodesics ------------------------------------------------------------------

#[derive(Clone, Debug, Args)]
pub struct GeodesicArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 20)]
    pub count: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub step: f64,
    #[arg(long, default_value_t = 5000)]
    pub max_steps: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// CSV of `(trace, t, x, y)` rows.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// SVG of the traces projected onto the first two coordinates.
    #[arg(long)]
    pub svg: Option<PathBuf>,
    /// Fail when a trace deviates from its chord by more than `--tol`.
    #[arg(long)]
    pub require_straight: bool,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

pub fn geodesics(args: &GeodesicArgs) -> Result<bool> {
    at_least_one(args.count, "--count")?;
    positive(args.step, "--step")?;
    positive(args.tol, "--tol")?;
    let built = build(&args.model)?;
    let m = &built.metric;
    let n = m.dim();
    let config = json!({
        "model": built.description,
        "count": args.count,
        "step": num(args.step),
        "max_steps": args.max_steps,
        "seed": args.seed,
        "require_straight": args.require_straight,
        "tolerance": num(args.tol),
    });
    let mut report = Report::new("geodesics", config);
    let results = traces(m, built.radius(), args.count, args.seed, args.step, args.max_steps);
    let mut rows = Vec::new();
    let mut good = Vec::new();
    let mut worst = 0.0f64;
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(tr) => {
                let dev = straightness_deviation(&tr).unwrap_or(f64::NAN);
                if dev.is_finite() {
                    worst = worst.max(dev);
                }
                rows.push(json!({
                    "trace": i,
                    "points": tr.points.len(),
                    "end_time": num(*tr.times.last().unwrap_or(&0.0)),
                    "deviation": num(dev),
                    "truncated": tr.truncated,
                }));
                good.push((i, tr));
            }
            Err(e) => rows.push(json!({ "trace": i, "error": e.to_string(), "truncated": true })),
        }
    }
    report.details = json!({ "max_deviation": num(worst), "traces": rows });
    if args.require_straight {
        let check = if good.len() == args.count {
            Check::below("geodesic_straightness", worst, args.tol)
        } else {
            Check::failed("geodesic_straightness", args.tol, "some traces could not be integrated")
        };
        report.checks.push(check);
    }
    if let Some(path) = &args.csv {
        let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot write {}", path.display()))?;
        let mut header = vec!["trace".to_string(), "t".to_string()];
        header.extend((1..=n).map(|i| format!("x{i}")));
        header.extend((1..=n).map(|i| format!("y{i}")));
        header.push("truncated".into());
        w.write_record(&header)?;
        for (i, tr) in &good {
            for ((t, x), y) in tr.times.iter().zip(&tr.points).zip(&tr.velocities) {
                let mut rec = vec![i.to_string(), format!("{t:.16e}")];
                rec.extend(x.iter().chain(y).map(|v| format!("{v:.16e}")));
                rec.push(tr.truncated.to_string());
                w.write_record(&rec)?;
            }
        }
        w.flush()?;
    }
    if let Some(path) = &args.svg {
        let traces: Vec<GeodesicTrace> = good.into_iter().map(|(_, t)| t).collect();
        std::fs::write(path, svg::render(&traces, built.radius()))?;
    }
    args.output.write(&report)?;
    Ok(report.pass())
}

// deform ---------------------------------------------------------------------

#[derive(Clone, Debug, Args)]
pub struct DeformArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// `K1,K2,K3` of the chain.
    #[arg(long, allow_hyphen_values = true)]
    pub k: String,
    #[arg(long, default_value_t = 50)]
    pub samples: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-9)]
    pub tol_roundtrip: f64,
    #[arg(long, default_value_t = 1e-7)]
    pub tol_conformal: f64,
    /// CSV of `(x, a_bar, b_bar)` samples.
    #[arg(long)]
    pub fields: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

pub fn deform(args: &DeformArgs) -> Result<bool> {
    at_least_one(args.samples, "--samples")?;
    positive(args.tol_roundtrip, "--tol-roundtrip")?;
    positive(args.tol_conformal, "--tol-conformal")?;
    let k = parse_quadruple(&args.k, None)?;
    let built = build(&args.model)?;
    let m = &built.metric;
    let config = json!({
        "model": built.description,
        "k": nums(&[k.k1, k.k2, k.k3]),
        "samples": args.samples,
        "seed": args.seed,
        "tol_roundtrip": num(args.tol_roundtrip),
        "tol_conformal": num(args.tol_conformal),
    });
    let mut report = Report::new("deform", config);
    let pair = (m.alpha.clone(), m.beta.clone());
    let bar = match forward_chain(&pair.0, &pair.1, &k) {
        Ok(bar) => bar,
        Err(e) => {
            report.details = json!({ "diagnostic": e.to_string() });
            report.checks.push(Check::failed("factor_positivity", 0.0, e));
            args.output.write(&report)?;
            return Ok(false);
        }
    };
    let points = sample_points::<f64>(m.dim(), 0.8 * built.radius(), args.samples, args.seed);
    let back = inverse_chain(&bar.0, &bar.1, &k)?;
    let (mut da, mut db) = (0.0f64, 0.0f64);
    for x in &points {
        let (a, b) = pair_difference(&pair, &back, x);
        da = da.max(a);
        db = db.max(b);
    }
    report.checks.push(Check::below("roundtrip_a", da, args.tol_roundtrip));
    report.checks.push(Check::below("roundtrip_b", db, args.tol_roundtrip));
    match conformal_residuals(&bar.0, &bar.1, args.samples) {
        Ok((closed, conf)) => {
            report.checks.push(Check::below("closedness", closed, args.tol_conformal));
            report.checks.push(Check::below("conformality", conf, args.tol_conformal));
        }
        Err(e) => report.checks.push(Check::failed("conformality", args.tol_conformal, e)),
    }
    let mut flat = 0.0f64;
    let mut flat_err = None;
    for (x, y) in sample_pairs::<f64>(m.dim(), 0.8 * built.radius(), args.samples, args.seed) {
        match riemann_proportionality_residual(bar.0.as_ref(), &x, &y) {
            Ok(r) => flat = flat.max(r),
            Err(e) => flat_err = Some(e),
        }
    }
    report.checks.push(match flat_err {
        Some(e) => Check::failed("alpha_bar_projectively_flat", args.tol_conformal, e),
        None => Check::below("alpha_bar_projectively_flat", flat, args.tol_conformal),
    });
    if let Some(path) = &args.fields {
        let n = m.dim();
        let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot write {}", path.display()))?;
        let mut header: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
        for i in 1..=n {
            for j in 1..=n {
                header.push(format!("abar{i}{j}"));
            }
        }
        header.extend((1..=n).map(|i| format!("bbar{i}")));
        w.write_record(&header)?;
        for x in &points {
            let a = bar.0.eval_real(x);
            let b = bar.1.eval_real(x);
            let mut rec: Vec<String> = x.iter().map(|v| format!("{v:.16e}")).collect();
            for i in 0..n {
                for j in 0..n {
                    rec.push(format!("{:.16e}", a[(i, j)]));
                }
            }
            rec.extend(b.iter().map(|v| format!("{v:.16e}")));
            w.write_record(&rec)?;
        }
        w.flush()?;
    }
    args.output.write(&report)?;
    Ok(report.pass())
}

// phi ------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Family {
    /// Quadrature solution for `--k`.
    Quadrature,
    Sigma,
    ZeroP,
    Berwald,
    BerwaldSqrt,
    Funk,
}

#[derive(Clone, Debug, Args)]
pub struct PhiArgs {
    #[arg(long, value_enum, default_value = "quadrature")]
    pub family: Family,
    /// `K1,K2,K3` or `K1,K2,K3,EPS`.
    #[arg(long, allow_hyphen_values = true)]
    pub k: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub eps: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub sigma: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub p: Option<f64>,
    /// Points per side; the table has `2·grid + 1` rows.
    #[arg(long, default_value_t = 50)]
    pub grid: usize,
    /// Half-width of the `s` range, also the `b` of the margin column.
    #[arg(long, default_value_t = 0.9)]
    pub range: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn phi_spec(args: &PhiArgs) -> Result<PhiSpec<f64>> {
    let eps = args.eps.unwrap_or(0.0);
    Ok(match args.family {
        Family::Quadrature => {
            let k = parse_quadruple(args.k.as_deref().context("--k is required for quadrature")?, args.eps)?;
            PhiSpec::quadrature(k)
        }
        Family::Sigma => PhiSpec::sigma(args.sigma.context("--sigma is required for sigma")?, eps),
        Family::ZeroP => {
            let p = args.p.context("--p is required for zero-p")?;
            if p == 0.0 {
                bail!("--p must be nonzero");
            }
            PhiSpec::zero_p(p, eps)
        }
        Family::Berwald => PhiSpec::Named(finslerlab::phi::NamedPhi::Berwald),
        Family::BerwaldSqrt => PhiSpec::Named(finslerlab::phi::NamedPhi::BerwaldSqrt),
        Family::Funk => PhiSpec::randers(0.0, 1.0),
    })
}

pub fn phi(args: &PhiArgs) -> Result<bool> {
    at_least_one(args.grid, "--grid")?;
    positive(args.range, "--range")?;
    let spec = phi_spec(args)?;
    let k = spec.ode_params();
    let b = args.range;
    let rows: Vec<(f64, Result<finslerlab::phi::PhiJet<f64>, GeomError>)> = (0..=2 * args.grid)
        .into_par_iter()
        .map(|j| {
            let s = b * (j as f64 - args.grid as f64) / args.grid as f64;
            (s, spec.eval(s))
        })
        .collect();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["s", "phi", "dphi", "d2phi", "ode_residual", "margin"])?;
    let mut all_ok = true;
    for (s, jet) in rows {
        match jet {
            Ok(jet) => {
                let res = k
                    .and_then(|k| ode_residual(&spec, &k, s).ok())
                    .map(|r| format!("{r:.16e}"))
                    .unwrap_or_default();
                let margin = jet.f(s) + (b * b - s * s) * jet.d2;
                w.write_record([
                    format!("{s:.16e}"),
                    format!("{:.16e}", jet.v),
                    format!("{:.16e}", jet.d1),
                    format!("{:.16e}", jet.d2),
                    res,
                    format!("{margin:.16e}"),
                ])?;
            }
            Err(e) => {
                if matches!(e, GeomError::InvalidParameter(_)) {
                    bail!(e);
                }
                all_ok = false;
                eprintln!("s = {s}: {e}");
                w.write_record([format!("{s:.16e}"), String::new(), String::new(), String::new(), String::new(), String::new()])?;
            }
        }
    }
    emit(&String::from_utf8(w.into_inner()?)?, args.out.as_deref())?;
    Ok(all_ok)
}
