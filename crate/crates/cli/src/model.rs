//! Model selection shared by the commands.

use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use serde_json::{json, Value};

use finslerlab::expr::custom_pair;
use finslerlab::field::{working_radius, AffineScaledMetric, ConstantForm, Euclidean};
use finslerlab::models::{
    closed_conformal_form, example_metric_with, space_form_metric, ModelId, ModelKind,
};
use finslerlab::phi::NamedPhi;
use finslerlab::{ABMetric, Form, Metric, OdeParams, PhiSpec};

use crate::report::num;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModelName {
    Funk,
    Berwald,
    Euclidean,
    SpaceForm,
    FamilySigma,
    ExampleExp,
    ExampleQuadrature,
    /// Funk with `a_ij` scaled by `1 + 0.1·x1`.
    PerturbedFunk,
    Custom,
}

#[derive(Clone, Debug, Args)]
pub struct ModelArgs {
    #[arg(long, value_enum, default_value = "funk")]
    pub model: ModelName,
    #[arg(long, default_value_t = 3)]
    pub dim: usize,
    /// Curvature of the space form, also the base metric of the examples.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub mu: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub sigma: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub eps: Option<f64>,
    /// Sign of the exponential example.
    #[arg(long, default_value_t = 1, allow_hyphen_values = true)]
    pub sign: i8,
    /// Coefficient of the base 1-form of the examples.
    #[arg(long, default_value_t = 0.3, allow_hyphen_values = true)]
    pub lambda: f64,
    /// Custom metric entries, row by row, separated by ';'.
    #[arg(long)]
    pub metric: Option<String>,
    /// Custom 1-form entries separated by ';'.
    #[arg(long)]
    pub form: Option<String>,
    /// Domain radius of a custom metric.
    #[arg(long, default_value_t = 1.0)]
    pub radius: f64,
    /// φ of a custom metric: riemann, funk, berwald, berwald-sqrt,
    /// randers:U,V, quadrature:K1,K2,K3,EPS or sigma:SIGMA,EPS.
    #[arg(long, default_value = "riemann")]
    pub phi: String,
}

pub struct Built {
    pub metric: ABMetric,
    pub description: Value,
}

impl Built {
    pub fn radius(&self) -> f64 {
        working_radius(self.metric.alpha.as_ref())
    }
}

pub fn parse_list(src: &str, len: usize, what: &str) -> Result<Vec<f64>> {
    let vals: Vec<f64> = src
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .with_context(|| format!("{what}: expected {len} comma-separated numbers, got '{src}'"))?;
    if vals.len() != len {
        bail!("{what}: expected {len} comma-separated numbers, got {}", vals.len());
    }
    Ok(vals)
}

pub fn parse_phi(src: &str) -> Result<PhiSpec<f64>> {
    let (name, args) = src.split_once(':').unwrap_or((src, ""));
    Ok(match name {
        "riemann" => PhiSpec::Named(NamedPhi::Riemann),
        "funk" => PhiSpec::randers(0.0, 1.0),
        "berwald" => PhiSpec::Named(NamedPhi::Berwald),
        "berwald-sqrt" => PhiSpec::Named(NamedPhi::BerwaldSqrt),
        "randers" => {
            let v = parse_list(args, 2, "randers")?;
            PhiSpec::randers(v[0], v[1])
        }
        "quadrature" => {
            let v = parse_list(args, 4, "quadrature")?;
            PhiSpec::quadrature(OdeParams::new(v[0], v[1], v[2], v[3]))
        }
        "sigma" => {
            let v = parse_list(args, 2, "sigma")?;
            PhiSpec::sigma(v[0], v[1])
        }
        _ => bail!("unknown phi '{src}'"),
    })
}

fn base_pair(args: &ModelArgs) -> Result<(Metric, Form)> {
    let a = space_form_metric(args.mu, args.dim)?;
    let b = closed_conformal_form(args.mu, args.lambda, &vec![0.0; args.dim])?;
    Ok((a, b))
}

pub fn build(args: &ModelArgs) -> Result<Built> {
    let n = args.dim;
    if n < 2 {
        bail!("--dim must be at least 2");
    }
    let name = args.model.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default();
    let mut desc = json!({ "model": name, "dim": n });
    let kind = match args.model {
        ModelName::Funk => Some(ModelKind::Funk),
        ModelName::Berwald => Some(ModelKind::Berwald),
        ModelName::SpaceForm => Some(ModelKind::SpaceForm(args.mu)),
        ModelName::FamilySigma => Some(ModelKind::FamilySigma {
            sigma: args.sigma.context("--sigma is required for family-sigma")?,
            eps: args.eps.context("--eps is required for family-sigma")?,
        }),
        ModelName::ExampleExp => Some(ModelKind::ExampleExp { sign: args.sign, eps: args.eps.unwrap_or(0.0) }),
        ModelName::ExampleQuadrature => Some(ModelKind::ExampleQuadrature { eps: args.eps.unwrap_or(0.0) }),
        _ => None,
    };
    let metric = if let Some(kind) = kind {
        desc["name"] = json!(kind.to_string());
        if matches!(kind, ModelKind::ExampleExp { .. } | ModelKind::ExampleQuadrature { .. }) {
            desc["base"] = json!({ "mu": num(args.mu), "lambda": num(args.lambda) });
        }
        let id = ModelId::new(kind, n)?;
        let (abar, bbar) = base_pair(args)?;
        example_metric_with(&id, &abar, &bbar)?
    } else {
        match args.model {
            ModelName::Euclidean => {
                ABMetric::new(Arc::new(Euclidean { n }), Arc::new(ConstantForm { b: vec![0.0; n] }), PhiSpec::Named(NamedPhi::Riemann))?
            }
            ModelName::PerturbedFunk => {
                let f = finslerlab::models::funk_metric(n)?;
                let mut w = vec![0.0; n];
                w[0] = 0.1;
                let a: Metric = Arc::new(AffineScaledMetric { inner: f.alpha.clone(), c0: 1.0, w });
                ABMetric::new(a, f.beta, f.phi)?
            }
            ModelName::Custom => {
                let m = args.metric.as_deref().context("--metric is required for custom")?;
                let zero = vec!["0"; n].join(";");
                let f = args.form.as_deref().unwrap_or(&zero);
                let (a, b) = custom_pair(m, f, n, args.radius)?;
                desc["metric"] = json!(m);
                desc["form"] = json!(f);
                desc["phi"] = json!(args.phi);
                ABMetric::new(a, b, parse_phi(&args.phi)?)?
            }
            _ => unreachable!("named models handled above"),
        }
    };
    desc["phi_spec"] = json!(metric.phi.describe());
    Ok(Built { metric, description: desc })
}
