//! Subcommand arguments and their implementations.

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use serde_with::skip_serializing_none;

use betajacobi::clt::{run_clt, run_covariance, run_independence, run_lln};
use betajacobi::ensembles::{empirical_measure, low_temp_check as check_low_temp, sample_tridiagonal, spectral_measure_sampled, SpectralMethod};
use betajacobi::exact_moments::{duality_check, format_rational, parse_rational};
use betajacobi::limit_measure::{moments_u, sigma_matrix};
use betajacobi::orthopoly::check_proposition;
use betajacobi::process::run_process_experiment_with_moments;
use betajacobi::{
    ExactParams, ExperimentSpec, LimitParams, LowTempParams, ModelParams, ProcessConfig, RandomStream, Scheme,
};
use betajacobi::process::ProcessExperiment;

use crate::config::{is_false, need};
use crate::output::{Cell, CommandOutput, Table};
use crate::{CliError, Common};

type Outcome = Result<CommandOutput, CliError>;

fn without(mut v: Value, key: &str) -> Value {
    if let Value::Object(m) = &mut v {
        m.remove(key);
    }
    v
}

#[skip_serializing_none]
#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct LimitMomentsArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub b: Option<f64>,
    #[arg(long)]
    pub c: Option<f64>,
    /// Largest order (default 10).
    #[arg(long)]
    pub kmax: Option<usize>,
}

pub fn limit_moments(args: LimitMomentsArgs) -> Outcome {
    let params = LimitParams::new(need(&args.a, "a")?, need(&args.b, "b")?, need(&args.c, "c")?)?;
    let kmax = args.kmax.unwrap_or(10);
    let u = moments_u(params, kmax);
    let mut table = Table::new(["k", "u_k"]);
    for k in 1..=kmax {
        table.push(vec![k.into(), u.get(k).into()]);
    }
    Ok(CommandOutput::new(table, json!({ "params": params, "kmax": kmax }), true))
}

#[skip_serializing_none]
#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct SigmaArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub b: Option<f64>,
    #[arg(long)]
    pub c: Option<f64>,
    /// Matrix size (default 4).
    #[arg(long)]
    pub m: Option<usize>,
}

pub fn sigma(args: SigmaArgs) -> Outcome {
    let params = LimitParams::new(need(&args.a, "a")?, need(&args.b, "b")?, need(&args.c, "c")?)?;
    let m = args.m.unwrap_or(4);
    let s = sigma_matrix(params, m)?;
    let mut table = Table::new(std::iter::once("k".to_string()).chain((1..=m).map(|l| format!("l{l}"))));
    for (k, row) in s.iter().enumerate() {
        let mut cells: Vec<Cell> = vec![(k + 1).into()];
        cells.extend(row.iter().map(|&v| Cell::from(v)));
        table.push(cells);
    }
    Ok(CommandOutput::new(table, json!({ "params": params, "m": m }), true))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasureKind {
    /// Uniform weights on the eigenvalues.
    Empirical,
    /// Spectral measure at the first basis vector.
    Spectral,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightMethod {
    Eigenvector,
    Dirichlet,
}

#[skip_serializing_none]
#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct SampleArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub b: Option<f64>,
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub n: Option<usize>,
    /// Overrides the default beta = 2c/N.
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long, value_enum)]
    pub measure: Option<MeasureKind>,
    /// Weights of the spectral measure (default eigenvector).
    #[arg(long, value_enum)]
    pub method: Option<WeightMethod>,
}

pub fn sample_ensemble(args: SampleArgs, common: &Common) -> Outcome {
    let (a, b, c, n) = (need(&args.a, "a")?, need(&args.b, "b")?, need(&args.c, "c")?, need(&args.n, "N")?);
    let params = match args.beta {
        Some(beta) => ModelParams::with_beta(a, b, c, n, beta)?,
        None => ModelParams::new(a, b, c, n)?,
    };
    let measure = args.measure.unwrap_or(MeasureKind::Empirical);
    let method = match args.method.unwrap_or(WeightMethod::Eigenvector) {
        WeightMethod::Eigenvector => SpectralMethod::Eigenvector,
        WeightMethod::Dirichlet => SpectralMethod::Dirichlet,
    };
    let mut rng = RandomStream::new(common.seed);
    let j = sample_tridiagonal(&params, &mut rng)?;
    let mu = match measure {
        MeasureKind::Empirical => empirical_measure(&j)?,
        MeasureKind::Spectral => spectral_measure_sampled(&j, method, params.beta, &mut rng)?,
    };
    let mut table = Table::new(["index", "location", "weight"]);
    for (i, atom) in mu.atoms().iter().enumerate() {
        table.push(vec![i.into(), atom.location.into(), atom.weight.into()]);
    }
    let summary = json!({ "params": params, "seed": common.seed, "measure": measure, "method": method });
    Ok(CommandOutput::new(table, summary, true))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CltCheck {
    /// Variances of the orthonormal statistics.
    Clt,
    /// Covariance of the moment statistics.
    Covariance,
    /// Asymptotic independence of the orthonormal statistics.
    Independence,
    /// Law of large numbers for the moments.
    Lln,
}

#[skip_serializing_none]
#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct CltArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub b: Option<f64>,
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub n: Option<usize>,
    /// Number of replicas (default 2000).
    #[arg(long)]
    pub replicas: Option<usize>,
    /// Highest orthonormal statistic (default 1).
    #[arg(long)]
    pub n_max: Option<usize>,
    /// Highest moment order for covariance and lln (default 3).
    #[arg(long)]
    pub orders: Option<usize>,
    #[arg(long, value_enum)]
    pub check: Option<CltCheck>,
    #[arg(long)]
    #[serde(default, skip_serializing_if = "is_false")]
    pub empirical_centering: bool,
    /// Skip the paired 2N run used for the finite-N allowance.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "is_false")]
    pub no_bias_pairing: bool,
}

pub fn clt(args: CltArgs, common: &Common) -> Outcome {
    let params = ModelParams::new(need(&args.a, "a")?, need(&args.b, "b")?, need(&args.c, "c")?, need(&args.n, "N")?)?;
    let mut spec = ExperimentSpec::new(params, args.replicas.unwrap_or(2000), common.seed)?;
    spec.n_max = args.n_max.unwrap_or(1);
    spec.orders = args.orders.unwrap_or(3);
    spec.empirical_centering = args.empirical_centering;
    spec.bias_pairing = !args.no_bias_pairing;
    let report = match args.check.unwrap_or(CltCheck::Clt) {
        CltCheck::Clt => run_clt(&spec),
        CltCheck::Covariance => run_covariance(&spec),
        CltCheck::Independence => run_independence(&spec),
        CltCheck::Lln => run_lln(&spec),
    }?;
    let mut table = Table::new([
        "label",
        "estimate",
        "target",
        "standard_error",
        "statistical_tolerance",
        "bias_allowance",
        "paired_estimate",
        "passed",
    ]);
    for r in &report.rows {
        table.push(vec![
            r.label.clone().into(),
            r.estimate.into(),
            r.target.into(),
            r.standard_error.into(),
            r.statistical_tolerance.into(),
            r.bias_allowance.into(),
            r.paired_estimate.into(),
            r.passed.into(),
        ]);
    }
    let passed = report.passed;
    let summary = without(serde_json::to_value(&report).expect("report serializes"), "rows");
    Ok(CommandOutput::new(table, summary, passed))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeArg {
    Euler,
    PairFlow,
}

#[skip_serializing_none]
#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ProcessArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub b: Option<f64>,
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub n: Option<usize>,
    /// Time horizon (default 2).
    #[arg(long = "T")]
    #[serde(rename = "T")]
    pub horizon: Option<f64>,
    /// Step size (default 1e-3).
    #[arg(long)]
    pub dt: Option<f64>,
    /// Number of replicas (default 100).
    #[arg(long)]
    pub replicas: Option<usize>,
    /// Moments S_1..S_kmax (default 4).
    #[arg(long)]
    pub kmax: Option<u32>,
    /// Highest orthonormal fluctuation (default 1).
    #[arg(long)]
    pub n_max: Option<usize>,
    /// Largest autocovariance lag in time units (default 0.5).
    #[arg(long)]
    pub max_lag: Option<f64>,
    /// Record every k-th step (default 5).
    #[arg(long)]
    pub record_stride: Option<usize>,
    #[arg(long, value_enum)]
    pub scheme: Option<SchemeArg>,
}

pub fn process(args: ProcessArgs, common: &Common) -> Outcome {
    let params = ModelParams::new(need(&args.a, "a")?, need(&args.b, "b")?, need(&args.c, "c")?, need(&args.n, "N")?)?;
    let mut config = ProcessConfig::new(params, args.horizon.unwrap_or(2.0), args.dt.unwrap_or(1e-3))?;
    config.record_stride = args.record_stride.unwrap_or(5);
    config.scheme = match args.scheme.unwrap_or(SchemeArg::PairFlow) {
        SchemeArg::Euler => Scheme::Euler,
        SchemeArg::PairFlow => Scheme::PairFlow,
    };
    config.validate()?;
    let exp = ProcessExperiment {
        config,
        replicas: args.replicas.unwrap_or(100),
        seed: common.seed,
        kmax: args.kmax.unwrap_or(4),
        n_max: args.n_max.unwrap_or(1),
        max_lag: args.max_lag.unwrap_or(0.5),
    };
    let (report, series) = run_process_experiment_with_moments(&exp)?;
    let mut columns = vec!["replica".to_string(), "t".to_string()];
    columns.extend((1..=exp.kmax).map(|k| format!("S_{k}")));
    let mut table = Table::new(columns);
    for (r, s) in series.iter().enumerate() {
        for (i, &t) in s.times.iter().enumerate() {
            let mut row: Vec<Cell> = vec![r.into(), t.into()];
            row.extend(s.moments.iter().map(|m| Cell::from(m[i])));
            table.push(row);
        }
    }
    let passed = report.passed;
    let mut out = CommandOutput::new(table, json!({ "experiment": exp }), passed);
    out.diagnostics = Some(serde_json::to_value(&report).expect("report serializes"));
    Ok(out)
}

#[skip_serializing_none]
#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct DualityArgs {
    /// Moment order.
    #[arg(long)]
    pub k: Option<usize>,
    /// Matrix size, as an exact rational.
    #[arg(long = "N", allow_hyphen_values = true)]
    #[serde(rename = "N")]
    pub n: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub kappa: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub b: Option<String>,
}

pub fn duality(args: DualityArgs) -> Outcome {
    let k = need(&args.k, "k")?;
    let rational = |v: &Option<String>, flag: &str| {
        let s = need(v, flag)?;
        parse_rational(&s).map_err(|e| CliError::Usage(format!("--{flag}: {e}")))
    };
    let params = ExactParams::new(
        rational(&args.n, "N")?,
        rational(&args.kappa, "kappa")?,
        rational(&args.a, "a")?,
        rational(&args.b, "b")?,
    );
    let check = duality_check(k, &params)?;
    let mut table = Table::new(["k", "direct", "dual", "equal"]);
    let (direct, dual) = (format_rational(&check.direct), format_rational(&check.dual));
    table.push(vec![k.into(), direct.into(), dual.into(), check.equal.into()]);
    let summary = json!({
        "k": k,
        "N": format_rational(&params.n),
        "kappa": format_rational(&params.kappa),
        "a": format_rational(&params.a),
        "b": format_rational(&params.b),
    });
    Ok(CommandOutput::new(table, summary, check.equal))
}

#[skip_serializing_none]
#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct OrthoArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub b: Option<f64>,
    #[arg(long)]
    pub c: Option<f64>,
    /// Highest degree (default 10).
    #[arg(long)]
    pub n_max: Option<usize>,
}

pub fn ortho_check(args: OrthoArgs) -> Outcome {
    let params = LimitParams::new(need(&args.a, "a")?, need(&args.b, "b")?, need(&args.c, "c")?)?;
    let report = check_proposition(params, args.n_max.unwrap_or(10))?;
    let mut table = Table::new(["n", "gamma_n", "residual", "norm_sq", "alpha_tilde_sq"]);
    for r in &report.rows {
        table.push(vec![r.n.into(), r.gamma_n.into(), r.residual.into(), r.norm_sq.into(), r.alpha_tilde_sq.into()]);
    }
    let passed = report.passed;
    let summary = without(serde_json::to_value(&report).expect("report serializes"), "rows");
    Ok(CommandOutput::new(table, summary, passed))
}

#[skip_serializing_none]
#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct LowTempArgs {
    #[arg(long = "A")]
    #[serde(rename = "A")]
    pub big_a: Option<f64>,
    #[arg(long = "B")]
    #[serde(rename = "B")]
    pub big_b: Option<f64>,
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub n: Option<usize>,
    /// Highest power of the dual matrix (default 8).
    #[arg(long)]
    pub n_max: Option<usize>,
}

pub fn low_temp_check(args: LowTempArgs) -> Outcome {
    let params = LowTempParams::new(need(&args.big_a, "A")?, need(&args.big_b, "B")?, need(&args.n, "N")?)?;
    let report = check_low_temp(&params, args.n_max.unwrap_or(8))?;
    let mut table = Table::new(["kind", "index", "lhs", "rhs"]);
    for (i, (t, h)) in report.eigenvalues_t.iter().zip(&report.eigenvalues_h).enumerate() {
        table.push(vec!["eigenvalue".to_string().into(), i.into(), (*t).into(), (*h).into()]);
    }
    for (k, (l, r)) in report.dual_moments.iter().zip(&report.predicted_moments).enumerate() {
        table.push(vec!["dual_moment".to_string().into(), k.into(), (*l).into(), (*r).into()]);
    }
    let summary = json!({
        "params": report.params,
        "max_eigen_gap": report.max_eigen_gap,
        "max_moment_error": report.max_moment_error,
        "passed": report.passed,
    });
    Ok(CommandOutput::new(table, summary, report.passed))
}
