//! Monte Carlo checks of the law of large numbers and the central limit
//! theorem for linear statistics of the high-temperature ensemble.
//!
//! Every replica owns `RandomStream::new(seed).substream(level).substream(r)`
//! where `level` is 0 for size `N` and 1 for the paired size `2N`. Replicas are
//! generated in parallel and reduced in replica order, so reports are
//! bit-for-bit reproducible.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dense::Matrix;
use crate::ensembles::{sample_tridiagonal, ModelParams};
use crate::error::{Error, Result};
use crate::exact_moments::rate_check;
use crate::limit_measure::{moments_u, sigma2_tilde_p, sigma_matrix, LimitParams};
use crate::orthopoly::{covariance_diagonalization, limit_expectation, orthonormal_primitives};
use crate::poly::Poly;
use crate::rng::RandomStream;
use crate::stats::{correlation, neumaier_sum, Summary};

pub const MIN_REPLICAS: usize = 100;
pub const MIN_PARTICLES: usize = 10;
/// Off-diagonal bound for the deterministic `C Σ Cᵀ` check.
pub const DIAGONALIZATION_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub params: ModelParams,
    pub replicas: usize,
    pub seed: u64,
    /// Statistics `P̃_0..P̃_{n_max}`.
    pub n_max: usize,
    /// Moment orders `1..=orders` for the covariance and LLN checks.
    pub orders: usize,
    /// Centre at the replica mean instead of `⟨ν_c, ·⟩`.
    pub empirical_centering: bool,
    /// Run the paired `2N` experiment to estimate the finite-`N` bias.
    pub bias_pairing: bool,
}

impl ExperimentSpec {
    pub fn new(params: ModelParams, replicas: usize, seed: u64) -> Result<Self> {
        let s = Self {
            params,
            replicas,
            seed,
            n_max: 1,
            orders: 3,
            empirical_centering: false,
            bias_pairing: true,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.replicas < MIN_REPLICAS {
            return Err(Error::Parameter { name: "replicas", value: self.replicas as f64, reason: "must be at least 100" });
        }
        if self.params.n < MIN_PARTICLES {
            return Err(Error::Parameter { name: "N", value: self.params.n as f64, reason: "must be at least 10" });
        }
        let expected = 2.0 * self.params.c / self.params.n as f64;
        if (self.params.beta - expected).abs() > 1e-12 * expected {
            return Err(Error::Parameter {
                name: "beta",
                value: self.params.beta,
                reason: "the limit theorems need beta = 2c/N",
            });
        }
        Ok(())
    }

    fn limit(&self) -> Result<LimitParams> {
        LimitParams::new(self.params.a, self.params.b, self.params.c)
    }

    fn doubled(&self) -> Result<ModelParams> {
        ModelParams::new(self.params.a, self.params.b, self.params.c, 2 * self.params.n)
    }
}

/// One checked quantity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatRow {
    pub label: String,
    pub estimate: f64,
    pub target: f64,
    pub standard_error: f64,
    /// Purely statistical part of the threshold.
    pub statistical_tolerance: f64,
    /// Finite-`N` allowance added to it.
    pub bias_allowance: f64,
    /// The same estimate at `2N`, when the paired run was made.
    pub paired_estimate: Option<f64>,
    pub passed: bool,
}

impl StatRow {
    fn judge(
        label: String,
        estimate: f64,
        target: f64,
        standard_error: f64,
        statistical_tolerance: f64,
        bias_allowance: f64,
        paired_estimate: Option<f64>,
    ) -> Self {
        let passed = (estimate - target).abs() <= statistical_tolerance + bias_allowance;
        Self { label, estimate, target, standard_error, statistical_tolerance, bias_allowance, paired_estimate, passed }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MCReport {
    pub kind: String,
    pub spec: ExperimentSpec,
    pub rows: Vec<StatRow>,
    /// Empirical `N·Cov` (covariance check) or correlation matrix
    /// (independence check).
    pub matrix: Option<Matrix>,
    pub notes: Vec<String>,
    pub passed: bool,
}

impl MCReport {
    fn new(kind: &str, spec: &ExperimentSpec, rows: Vec<StatRow>, matrix: Option<Matrix>, notes: Vec<String>) -> Self {
        let passed = rows.iter().all(|r| r.passed);
        Self { kind: kind.into(), spec: *spec, rows, matrix, notes, passed }
    }
}

/// Empirical measure integrals for every replica: `values[r][i] = ⟨L_r, f_i⟩`.
pub fn replica_integrals(params: &ModelParams, replicas: usize, stream: &RandomStream, fs: &[Poly]) -> Result<Vec<Vec<f64>>> {
    params.validate()?;
    (0..replicas)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream.substream(r as u64);
            let j = sample_tridiagonal(params, &mut rng)?;
            let eig = j.eig_with_first_components(params.n)?.eigenvalues;
            let n = eig.len() as f64;
            Ok(fs.iter().map(|f| neumaier_sum(eig.iter().map(|&x| f.eval(x))) / n).collect())
        })
        .collect()
}

fn column(values: &[Vec<f64>], i: usize) -> Vec<f64> {
    values.iter().map(|v| v[i]).collect()
}

fn level_stream(spec: &ExperimentSpec, level: u64) -> RandomStream {
    RandomStream::new(spec.seed).substream(level)
}

/// `√N (⟨L, f⟩ − centre)` per replica.
fn rescaled(values: &[f64], n: usize, centre: f64) -> Vec<f64> {
    let s = (n as f64).sqrt();
    values.iter().map(|v| s * (v - centre)).collect()
}

/// Second moment about the centre; with empirical centring this is the
/// unbiased sample variance.
fn spread(xs: &[f64], empirical: bool) -> f64 {
    if empirical {
        Summary::from_slice(xs).variance
    } else {
        neumaier_sum(xs.iter().map(|x| x * x)) / xs.len() as f64
    }
}

/// Finite-size allowance `|C_bias|/√N` with `C_bias` fitted from estimates at
/// `N` and `2N` under an `N^{−1/2}` bias model.
pub fn paired_bias_allowance(at_n: f64, at_2n: f64) -> f64 {
    (at_n - at_2n).abs() / (1.0 - std::f64::consts::FRAC_1_SQRT_2)
}

fn centre_of(values: &[f64], spec: &ExperimentSpec, limit_value: f64) -> f64 {
    if spec.empirical_centering {
        Summary::from_slice(values).mean
    } else {
        limit_value
    }
}

/// Variance of `√N(⟨L, P̃_n⟩ − ⟨ν_c, P̃_n⟩)` against `σ²_{P̃_n} = Z*/γ_n`, with
/// tolerance `3σ²√(2/M)` plus the paired bias allowance.
pub fn run_clt(spec: &ExperimentSpec) -> Result<MCReport> {
    spec.validate()?;
    let limit = spec.limit()?;
    let prims = orthonormal_primitives(limit, spec.n_max + 1)?;
    let centres: Vec<f64> = prims.iter().map(|p| limit_expectation(limit, p)).collect();
    let spread_at = |params: &ModelParams, level: u64| -> Result<Vec<f64>> {
        let values = replica_integrals(params, spec.replicas, &level_stream(spec, level), &prims)?;
        Ok((0..prims.len())
            .map(|i| {
                let col = column(&values, i);
                let centre = centre_of(&col, spec, centres[i]);
                spread(&rescaled(&col, params.n, centre), spec.empirical_centering)
            })
            .collect())
    };
    let at_n = spread_at(&spec.params, 0)?;
    let at_2n = if spec.bias_pairing { Some(spread_at(&spec.doubled()?, 1)?) } else { None };
    let m = spec.replicas as f64;
    let mut rows = Vec::new();
    for n in 0..prims.len() {
        let target = sigma2_tilde_p(limit, n)?;
        let se = target * (2.0 / m).sqrt();
        let paired = at_2n.as_ref().map(|v| v[n]);
        let allowance = paired.map_or(0.0, |p| paired_bias_allowance(at_n[n], p));
        rows.push(StatRow::judge(format!("var P~{n}"), at_n[n], target, se, 3.0 * se, allowance, paired));
    }
    let notes = vec![
        "standard error of a variance estimate: sigma^2 * sqrt(2/M) (Gaussian fourth moment)".into(),
        "bias allowance: |v(N) - v(2N)| / (1 - 1/sqrt(2)), i.e. |C_bias|/sqrt(N) under a 1/sqrt(N) bias model".into(),
    ];
    Ok(MCReport::new("clt", spec, rows, None, notes))
}

/// Empirical `N·Cov(⟨L,x^k⟩, ⟨L,x^l⟩)` for `1 ≤ k, l ≤ orders` against the
/// limiting covariance, elementwise within `4·SE`; the SE is the delta-method
/// standard error of a sample covariance.
pub fn run_covariance(spec: &ExperimentSpec) -> Result<MCReport> {
    spec.validate()?;
    let limit = spec.limit()?;
    let k = spec.orders;
    let fs: Vec<Poly> = (1..=k).map(Poly::monomial).collect();
    let values = replica_integrals(&spec.params, spec.replicas, &level_stream(spec, 0), &fs)?;
    let target = sigma_matrix(limit, k)?;
    let n = spec.params.n as f64;
    let m = spec.replicas as f64;
    let cols: Vec<Vec<f64>> = (0..k).map(|i| column(&values, i)).collect();
    let means: Vec<f64> = cols.iter().map(|c| Summary::from_slice(c).mean).collect();
    let mut matrix = vec![vec![0.0; k]; k];
    let mut rows = Vec::new();
    for i in 0..k {
        for j in 0..k {
            let prods: Vec<f64> = cols[i]
                .iter()
                .zip(&cols[j])
                .map(|(x, y)| n * (x - means[i]) * (y - means[j]))
                .collect();
            let s = Summary::from_slice(&prods);
            let cov = s.mean * m / (m - 1.0);
            matrix[i][j] = cov;
            if j >= i {
                let se = s.standard_error();
                rows.push(StatRow::judge(
                    format!("N cov(x^{}, x^{})", i + 1, j + 1),
                    cov,
                    target[i][j],
                    se,
                    4.0 * se,
                    0.0,
                    None,
                ));
            }
        }
    }
    let notes = vec!["standard error: sample standard deviation of centred products / sqrt(M)".into()];
    Ok(MCReport::new("covariance", spec, rows, Some(matrix), notes))
}

/// Pairwise correlations of `√N⟨L, P̃_n⟩`, `n ≤ n_max`, within `4/√M` plus
/// the paired allowance, and the deterministic `C Σ Cᵀ` diagonalization.
pub fn run_independence(spec: &ExperimentSpec) -> Result<MCReport> {
    spec.validate()?;
    let limit = spec.limit()?;
    let prims = orthonormal_primitives(limit, spec.n_max + 1)?;
    let corr_at = |params: &ModelParams, level: u64| -> Result<Matrix> {
        let values = replica_integrals(params, spec.replicas, &level_stream(spec, level), &prims)?;
        let cols: Vec<Vec<f64>> = (0..prims.len()).map(|i| column(&values, i)).collect();
        Ok((0..prims.len())
            .map(|i| (0..prims.len()).map(|j| if i == j { 1.0 } else { correlation(&cols[i], &cols[j]) }).collect())
            .collect())
    };
    let at_n = corr_at(&spec.params, 0)?;
    let at_2n = if spec.bias_pairing && spec.n_max > 0 { Some(corr_at(&spec.doubled()?, 1)?) } else { None };
    let bound = 4.0 / (spec.replicas as f64).sqrt();
    let mut rows = Vec::new();
    for i in 0..prims.len() {
        for j in i + 1..prims.len() {
            let paired = at_2n.as_ref().map(|c| c[i][j]);
            let allowance = paired.map_or(0.0, |p| paired_bias_allowance(at_n[i][j], p));
            rows.push(StatRow::judge(
                format!("corr(P~{i}, P~{j})"),
                at_n[i][j],
                0.0,
                1.0 / (spec.replicas as f64).sqrt(),
                bound,
                allowance,
                paired,
            ));
        }
    }
    let d = covariance_diagonalization(limit, prims.len())?;
    rows.push(StatRow::judge(
        format!("max offdiag C Sigma C^T (M_orders = {})", prims.len()),
        d.max_off_diagonal,
        0.0,
        0.0,
        DIAGONALIZATION_TOLERANCE,
        0.0,
        None,
    ));
    rows.push(StatRow::judge(
        "max |diag C Sigma C^T - sigma^2_P~n|".into(),
        d.max_diagonal_error,
        0.0,
        0.0,
        DIAGONALIZATION_TOLERANCE,
        0.0,
        None,
    ));
    let notes = vec!["correlation bound 4/sqrt(M) plus |rho(N) - rho(2N)| / (1 - 1/sqrt(2))".into()];
    Ok(MCReport::new("independence", spec, rows, Some(at_n), notes))
}

/// Replica means of `⟨L, x^k⟩`, `0 ≤ k ≤ orders`, against `u_k` within
/// `4·SE + C/N`, where `C` is the largest `N'·|m_k(N') − u_k|` over
/// `N' ∈ {N/4, N/2, N}` from exact expectations.
pub fn run_lln(spec: &ExperimentSpec) -> Result<MCReport> {
    spec.validate()?;
    let limit = spec.limit()?;
    let k = spec.orders;
    let fs: Vec<Poly> = (0..=k).map(Poly::monomial).collect();
    let values = replica_integrals(&spec.params, spec.replicas, &level_stream(spec, 0), &fs)?;
    let u = moments_u(limit, k);
    let exact = |v: f64| num_rational::BigRational::from_float(v).ok_or_else(|| Error::Domain("non-finite parameter".into()));
    let (a, b, c) = (exact(spec.params.a)?, exact(spec.params.b)?, exact(spec.params.c)?);
    let n = spec.params.n;
    let mut n_list: Vec<usize> = [n / 4, n / 2, n].into_iter().filter(|&v| v >= 1).collect();
    n_list.dedup();
    let mut rows = Vec::new();
    for order in 0..=k {
        let s = Summary::from_slice(&column(&values, order));
        let se = s.standard_error();
        let allowance = if order == 0 {
            0.0
        } else {
            let rep = rate_check(order, &c, &a, &b, &n_list)?;
            rep.rows.iter().map(|r| r.scaled_diff).fold(0.0, f64::max) / n as f64
        };
        rows.push(StatRow::judge(format!("mean x^{order}"), s.mean, u.get(order), se, 4.0 * se, allowance, None));
    }
    let notes = vec!["C/N from exact expectations m_k(N', c/N', a, b) at N' in {N/4, N/2, N}".into()];
    Ok(MCReport::new("lln", spec, rows, None, notes))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(n: usize, m: usize) -> ExperimentSpec {
        ExperimentSpec::new(ModelParams::new(0.0, 0.0, 1.0, n).unwrap(), m, 1).unwrap()
    }

    #[test]
    fn spec_validation() {
        let p = ModelParams::new(0.0, 0.0, 1.0, 20).unwrap();
        assert!(ExperimentSpec::new(p, 99, 0).is_err());
        let p9 = ModelParams::new(0.0, 0.0, 1.0, 9).unwrap();
        assert!(ExperimentSpec::new(p9, 100, 0).is_err());
        let off = ModelParams::with_beta(0.0, 0.0, 1.0, 20, 1.0).unwrap();
        assert!(ExperimentSpec::new(off, 100, 0).is_err());
    }

    #[test]
    fn reports_are_reproducible() {
        let s = spec(20, 200);
        assert_eq!(run_clt(&s).unwrap(), run_clt(&s).unwrap());
        let json = serde_json::to_string(&run_lln(&s).unwrap()).unwrap();
        assert_eq!(json, serde_json::to_string(&run_lln(&s).unwrap()).unwrap());
    }

    #[test]
    fn constant_statistic_has_no_spread() {
        let s = spec(20, 100);
        let values = replica_integrals(&s.params, 100, &level_stream(&s, 0), &[Poly::constant(1.0)]).unwrap();
        let col = column(&values, 0);
        assert!(col.iter().all(|&v| (v - 1.0).abs() < 1e-15));
        let r = rescaled(&col, 20, 1.0);
        assert!(spread(&r, false) < 1e-26);
    }

    #[test]
    fn clt_small_run_passes() {
        let mut s = spec(50, 1000);
        s.n_max = 1;
        let r = run_clt(&s).unwrap();
        assert_eq!(r.rows[0].target, 0.0375);
        assert!((r.rows[1].target - 0.015).abs() < 1e-16);
        assert!(r.passed, "{r:#?}");
        s.empirical_centering = true;
        s.bias_pairing = false;
        assert!(run_clt(&s).unwrap().passed);
    }

    #[test]
    fn covariance_small_run_passes() {
        let mut s = ExperimentSpec::new(ModelParams::new(1.0, 0.5, 2.0, 60).unwrap(), 2000, 3).unwrap();
        s.orders = 3;
        let r = run_covariance(&s).unwrap();
        assert!(r.passed, "{r:#?}");
        let mat = r.matrix.unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(mat[i][j], mat[j][i]);
            }
        }
    }

    #[test]
    fn independence_trivial_and_deterministic_part() {
        let mut s = spec(30, 200);
        s.n_max = 0;
        let r = run_independence(&s).unwrap();
        assert!(r.passed);
        assert!(r.rows.iter().all(|row| !row.label.starts_with("corr")));
        s.n_max = 3;
        let r = run_independence(&s).unwrap();
        let diag = r.rows.iter().find(|row| row.label.starts_with("max offdiag")).unwrap();
        assert!(diag.estimate <= 1e-8);
    }

    #[test]
    fn lln_small_run_passes() {
        let mut s = spec(100, 500);
        s.orders = 6;
        let r = run_lln(&s).unwrap();
        assert!(r.passed, "{r:#?}");
        assert_eq!(r.rows[0].estimate, 1.0);
        assert_eq!(r.rows[0].standard_error, 0.0);
        assert!((r.rows[2].target - 0.35).abs() < 1e-15);
    }

    #[test]
    fn bias_allowance_formula() {
        let v = paired_bias_allowance(0.04, 0.039);
        assert!((v - 0.001 / (1.0 - 0.5f64.sqrt())).abs() < 1e-15);
    }
}
