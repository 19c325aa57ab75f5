//! Beta Jacobi ensembles: the random tridiagonal model at finite `N` and the
//! frozen matrices of the low-temperature limit.

use serde::{Deserialize, Serialize};

use crate::distributions::{sample_beta, sample_dirichlet, BetaParams};
use crate::error::{Error, Result};
use crate::poly::Poly;
use crate::rng::RandomStream;
use crate::tridiag::{DiscreteMeasure, JacobiMatrix};

/// Parameters of the beta Jacobi ensemble with `N` particles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub beta: f64,
}

impl ModelParams {
    /// High-temperature scaling `β = 2c/N`.
    pub fn new(a: f64, b: f64, c: f64, n: usize) -> Result<Self> {
        Self::with_beta(a, b, c, n, 2.0 * c / n.max(1) as f64)
    }

    /// Explicit `β`; `c` is kept as given and only used by callers that need it.
    pub fn with_beta(a: f64, b: f64, c: f64, n: usize, beta: f64) -> Result<Self> {
        let p = Self { a, b, c, n, beta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("a", self.a), ("b", self.b)] {
            if !(v > -1.0 && v.is_finite()) {
                return Err(Error::Parameter { name, value: v, reason: "must be finite and > -1" });
            }
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::Parameter { name: "c", value: self.c, reason: "must be finite and > 0" });
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::Parameter { name: "beta", value: self.beta, reason: "must be finite and > 0" });
        }
        if self.n == 0 {
            return Err(Error::Parameter { name: "N", value: 0.0, reason: "must be at least 1" });
        }
        Ok(())
    }

    /// Shapes of `p_n`, `n = 1..=N`.
    pub fn p_shape(&self, n: usize) -> (f64, f64) {
        let h = (self.n - n) as f64 * self.beta / 2.0;
        (h + self.a + 1.0, h + self.b + 1.0)
    }

    /// Shapes of `q_n`, `n = 1..N`.
    pub fn q_shape(&self, n: usize) -> (f64, f64) {
        let h = (self.n - n) as f64 * self.beta / 2.0;
        let h1 = (self.n - n - 1) as f64 * self.beta / 2.0;
        (h, h1 + self.a + self.b + 2.0)
    }
}

/// One draw of `J_{N,β}`. Variables are drawn in the order
/// `p_1, q_1, p_2, q_2, …, p_N`.
pub fn sample_tridiagonal(params: &ModelParams, rng: &mut RandomStream) -> Result<JacobiMatrix> {
    params.validate()?;
    let n = params.n;
    let mut p = Vec::with_capacity(n);
    let mut q = Vec::with_capacity(n.saturating_sub(1));
    for i in 1..=n {
        let (al, be) = params.p_shape(i);
        p.push(sample_beta(BetaParams::new(al, be)?, rng));
        if i < n {
            let (al, be) = params.q_shape(i);
            q.push(sample_beta(BetaParams::new(al, be)?, rng));
        }
    }
    let s: Vec<f64> = (0..n).map(|i| p[i] * (1.0 - if i == 0 { 0.0 } else { q[i - 1] })).collect();
    let t: Vec<f64> = (0..n - 1).map(|i| q[i] * (1.0 - p[i])).collect();
    JacobiMatrix::from_bidiagonal_product(&s, &t)
}

fn finite_size(j: &JacobiMatrix) -> Result<usize> {
    j.size()
        .ok_or_else(|| Error::Domain("expected a finite matrix".into()))
}

/// `L = (1/N) Σ δ_{λ_i}`.
pub fn empirical_measure(j: &JacobiMatrix) -> Result<DiscreteMeasure> {
    let n = finite_size(j)?;
    DiscreteMeasure::uniform(j.eig_with_first_components(n)?.eigenvalues)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpectralMethod {
    /// Squared first eigenvector components of `J`.
    Eigenvector,
    /// Independent symmetric Dirichlet(β/2) weights.
    Dirichlet,
}

/// Spectral measure of a sampled `J` under either weight model.
pub fn spectral_measure_sampled(
    j: &JacobiMatrix,
    method: SpectralMethod,
    beta: f64,
    rng: &mut RandomStream,
) -> Result<DiscreteMeasure> {
    let n = finite_size(j)?;
    match method {
        SpectralMethod::Eigenvector => j.spectral_measure(n),
        SpectralMethod::Dirichlet => {
            let eig = j.eig_with_first_components(n)?;
            let w = sample_dirichlet(n, beta / 2.0, rng)?;
            DiscreteMeasure::new(eig.eigenvalues, w)
        }
    }
}

/// `(A, B, N)` of the low-temperature regime `(β, a, b) = (2κ, Aκ, Bκ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowTempParams {
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "N")]
    pub n: usize,
}

impl LowTempParams {
    pub fn new(a: f64, b: f64, n: usize) -> Result<Self> {
        for (name, v) in [("A", a), ("B", b)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Parameter { name, value: v, reason: "must be finite and > 0" });
            }
        }
        if n == 0 {
            return Err(Error::Parameter { name: "N", value: 0.0, reason: "must be at least 1" });
        }
        Ok(Self { a, b, n })
    }

    /// `λ_n` of the Jacobi matrix of Beta(A, B). At `n = 0` the second factor
    /// cancels, which matters when `A + B = 1`.
    pub fn lambda(&self, n: usize) -> f64 {
        if n == 0 {
            return self.a / (self.a + self.b);
        }
        let (a, b, n) = (self.a, self.b, n as f64);
        (n + a) / (2.0 * n + a + b) * (n + a + b - 1.0) / (2.0 * n + a + b - 1.0)
    }

    /// `μ_n` of the Jacobi matrix of Beta(A, B); `μ_0 = 0`.
    pub fn mu(&self, n: usize) -> f64 {
        if n == 0 {
            return 0.0;
        }
        let (a, b, n) = (self.a, self.b, n as f64);
        n / (2.0 * n + a + b - 1.0) * (n + b - 1.0) / (2.0 * n + a + b - 2.0)
    }

    /// Diagonal `a_n = λ_{n−1} + μ_{n−1}` of `H`, `n ≥ 1`.
    pub fn h_diag(&self, n: usize) -> f64 {
        self.lambda(n - 1) + self.mu(n - 1)
    }

    /// `b_n² = λ_{n−1} μ_n` of `H`, `n ≥ 1`.
    pub fn h_offdiag_sq(&self, n: usize) -> f64 {
        self.lambda(n - 1) * self.mu(n)
    }
}

fn checked_ratio(num: f64, den: f64, what: &str, n: usize) -> Result<f64> {
    if den == 0.0 {
        return Err(Error::Domain(format!("zero denominator in {what}_{n}")));
    }
    Ok(num / den)
}

/// The frozen matrices of the low-temperature limit.
#[derive(Debug, Clone)]
pub struct LowTempMatrices {
    pub t: JacobiMatrix,
    pub t_star: JacobiMatrix,
    pub h: JacobiMatrix,
}

/// `T_N` from the limits `c_n`, `d_n` of the Beta variables.
pub fn low_temp_t(params: &LowTempParams) -> Result<JacobiMatrix> {
    let (a, b) = (params.a, params.b);
    let big_n = params.n as f64;
    let mut s = Vec::with_capacity(params.n);
    s.push(checked_ratio(1.0 - big_n - a, 2.0 - 2.0 * big_n - a - b, "c", 1)?);
    for n in 2..=params.n {
        let nf = n as f64;
        let first = checked_ratio(nf - big_n - a, 2.0 * nf - 2.0 * big_n - a - b, "c", n)?;
        let second = checked_ratio(nf - big_n - a - b, 2.0 * nf - 2.0 * big_n - a - b - 1.0, "c", n)?;
        s.push(first * second);
    }
    let mut t = Vec::with_capacity(params.n.saturating_sub(1));
    for n in 1..params.n {
        let nf = n as f64;
        let first = checked_ratio(nf - big_n, 2.0 * nf - 2.0 * big_n - a - b + 1.0, "d", n)?;
        let second = checked_ratio(nf - big_n - b, 2.0 * nf - 2.0 * big_n - a - b, "d", n)?;
        t.push(first * second);
    }
    JacobiMatrix::from_bidiagonal_product(&s, &t)
}

/// `T_N`, `T*_N` and the top-left `N × N` block of `H`.
pub fn low_temp_matrices(params: &LowTempParams) -> Result<LowTempMatrices> {
    let n = params.n;
    let diag: Vec<f64> = (1..=n).map(|i| params.h_diag(i)).collect();
    let offdiag: Vec<f64> = (1..n).map(|i| params.h_offdiag_sq(i).sqrt()).collect();
    let t_star = JacobiMatrix::finite(
        diag.iter().rev().copied().collect(),
        offdiag.iter().rev().copied().collect(),
    )?;
    Ok(LowTempMatrices {
        t: low_temp_t(params)?,
        t_star,
        h: JacobiMatrix::finite(diag, offdiag)?,
    })
}

/// Dual polynomials `Q_0, …, Q_{N−1}`: monic orthogonal polynomials of `T*_N`.
pub fn dual_polynomials(params: &LowTempParams) -> Vec<Poly> {
    let n = params.n;
    let mut out = vec![Poly::constant(1.0)];
    if n >= 2 {
        out.push(Poly::new(vec![-params.h_diag(n), 1.0]));
    }
    for k in 1..n.saturating_sub(1) {
        let next = &(&out[k].mul_x() - &out[k].scale(params.h_diag(n - k)))
            - &out[k - 1].scale(params.h_offdiag_sq(n - k));
        out.push(next);
    }
    out
}

/// `μ*_N = (1/Z*) Σ y_i(1 − y_i) δ_{y_i}` over the eigenvalues of `H_[N]`.
pub fn dual_measure(params: &LowTempParams) -> Result<DiscreteMeasure> {
    let m = low_temp_matrices(params)?;
    let y = m.h.eig_with_first_components(params.n)?.eigenvalues;
    let w: Vec<f64> = y.iter().map(|v| v * (1.0 - v)).collect();
    let z: f64 = w.iter().sum();
    DiscreteMeasure::new(y, w.iter().map(|v| v / z).collect())
}

/// Tolerance for the low-temperature identities.
pub const LOW_TEMP_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowTempReport {
    pub params: LowTempParams,
    pub eigenvalues_t: Vec<f64>,
    pub eigenvalues_h: Vec<f64>,
    pub max_eigen_gap: f64,
    /// `(T*_N)^k(1,1)` for `k = 0..=n_max`.
    pub dual_moments: Vec<f64>,
    /// The same moments from `T_N` via the corner-moment identity.
    pub predicted_moments: Vec<f64>,
    pub max_moment_error: f64,
    pub passed: bool,
}

/// Compares the spectra of `T_N` and `H_[N]` and checks
/// `(T*)^k(1,1) = (T^{k+1}(1,1) − T^{k+2}(1,1)) / (T(1,1) − T²(1,1))`.
pub fn low_temp_check(params: &LowTempParams, n_max: usize) -> Result<LowTempReport> {
    let m = low_temp_matrices(params)?;
    let eigenvalues_t = m.t.eig_with_first_components(params.n)?.eigenvalues;
    let eigenvalues_h = m.h.eig_with_first_components(params.n)?.eigenvalues;
    let max_eigen_gap = eigenvalues_t
        .iter()
        .zip(&eigenvalues_h)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    let t1 = m.t.power_entry11(1);
    let t2 = m.t.power_entry11(2);
    let dual_moments: Vec<f64> = (0..=n_max).map(|k| m.t_star.power_entry11(k)).collect();
    let predicted_moments: Vec<f64> = (0..=n_max)
        .map(|k| (m.t.power_entry11(k + 1) - m.t.power_entry11(k + 2)) / (t1 - t2))
        .collect();
    let max_moment_error = dual_moments
        .iter()
        .zip(&predicted_moments)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    let passed = max_eigen_gap <= LOW_TEMP_TOLERANCE && max_moment_error <= LOW_TEMP_TOLERANCE;
    Ok(LowTempReport {
        params: *params,
        eigenvalues_t,
        eigenvalues_h,
        max_eigen_gap,
        dual_moments,
        predicted_moments,
        max_moment_error,
        passed,
    })
}
