//! The limiting measure ν_c and its x(1−x)-reweighted dual ν*_c.
//!
//! Neither measure is available through a density here. ν_c is the spectral
//! measure of the semi-infinite Jacobi matrix `J_c` and ν*_c that of `J*_c`;
//! everything else (moments, `Z*_c`, the limiting covariance of the moment
//! statistics) is computed from their coefficients or from the stationary
//! moment recursion.

use serde::{Deserialize, Serialize};

use crate::dense::{self, Matrix};
use crate::error::{Error, Result};
use crate::tridiag::JacobiMatrix;

/// `(a, b, c)` with `a, b > −1`, `c > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl LimitParams {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        if !(a > -1.0 && a.is_finite()) {
            return Err(Error::Parameter { name: "a", value: a, reason: "must exceed -1" });
        }
        if !(b > -1.0 && b.is_finite()) {
            return Err(Error::Parameter { name: "b", value: b, reason: "must exceed -1" });
        }
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::Parameter { name: "c", value: c, reason: "must be positive" });
        }
        Ok(Self { a, b, c })
    }

    /// `γ_n = (n+1)(n+2c+a+b+2)`, the relaxation rate of the n-th fluctuation mode.
    pub fn gamma(&self, n: usize) -> f64 {
        let n = n as f64;
        (n + 1.0) * (n + 2.0 * self.c + self.a + self.b + 2.0)
    }
}

fn assert_unit(name: &str, n: usize, v: f64) -> f64 {
    assert!(v > 0.0 && v < 1.0, "{name}({n}) = {v} outside (0, 1)");
    v
}

/// Coefficient rules of `J_c` and `J*_c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitCoefficients {
    pub params: LimitParams,
}

impl LimitCoefficients {
    pub fn new(params: LimitParams) -> Self {
        Self { params }
    }

    pub fn hat_lambda0(&self) -> f64 {
        let LimitParams { a, b, c } = self.params;
        assert_unit("hat_lambda", 0, (c + a + 1.0) / (2.0 * c + a + b + 2.0))
    }

    /// λ_n; only `n ≥ 1` enters `J_c` and only those are range-checked.
    pub fn lambda(&self, n: usize) -> f64 {
        let LimitParams { a, b, c } = self.params;
        let n_ = n as f64;
        let v = (n_ + c + a + 1.0) / (2.0 * n_ + 2.0 * c + a + b + 2.0)
            * (n_ + c + a + b + 1.0)
            / (2.0 * n_ + 2.0 * c + a + b + 1.0);
        if n >= 1 {
            assert_unit("lambda", n, v)
        } else {
            v
        }
    }

    /// μ_n; only `n ≥ 1` enters `J_c` and only those are range-checked.
    pub fn mu(&self, n: usize) -> f64 {
        let LimitParams { a, b, c } = self.params;
        let n_ = n as f64;
        let v = (n_ + c) / (2.0 * n_ + 2.0 * c + a + b + 1.0) * (n_ + c + b)
            / (2.0 * n_ + 2.0 * c + a + b);
        if n >= 1 {
            assert_unit("mu", n, v)
        } else {
            v
        }
    }

    pub fn lambda_star(&self, n: usize) -> f64 {
        let LimitParams { a, b, c } = self.params;
        let n_ = n as f64;
        assert_unit(
            "lambda_star",
            n,
            (n_ + c + a + 1.0) / (2.0 * n_ + 2.0 * c + a + b + 2.0) * (n_ + c + a + b + 2.0)
                / (2.0 * n_ + 2.0 * c + a + b + 3.0),
        )
    }

    pub fn mu_star(&self, n: usize) -> f64 {
        let LimitParams { a, b, c } = self.params;
        let n_ = n as f64;
        assert_unit(
            "mu_star",
            n,
            (n_ + c + 1.0) / (2.0 * n_ + 2.0 * c + a + b + 3.0) * (n_ + c + b + 2.0)
                / (2.0 * n_ + 2.0 * c + a + b + 4.0),
        )
    }

    /// Diagonal `a*_n = λ*_{n−1} + μ*_{n−1}` of `J*_c`, `n ≥ 1`.
    pub fn star_diag(&self, n: usize) -> f64 {
        self.lambda_star(n - 1) + self.mu_star(n - 1)
    }

    /// Squared off-diagonal `(b*_n)² = μ*_{n−1} λ*_n` of `J*_c`, `n ≥ 1`.
    pub fn star_offdiag_sq(&self, n: usize) -> f64 {
        self.mu_star(n - 1) * self.lambda_star(n)
    }

    /// `Z*_c = λ̂_0 (1 − λ̂_0 − μ_1)`.
    pub fn z_star_spectral(&self) -> f64 {
        let l0 = self.hat_lambda0();
        l0 * (1.0 - l0 - self.mu(1))
    }

    /// `J_c = B Bᵀ` with bidiagonal factors `s = (λ̂_0, λ_1, λ_2, …)`, `t = (μ_1, μ_2, …)`.
    pub fn j_c(&self) -> JacobiMatrix {
        let coef = *self;
        let coef2 = *self;
        JacobiMatrix::from_bidiagonal_rules(
            move |n| if n == 1 { coef.hat_lambda0() } else { coef.lambda(n - 1) },
            move |n| coef2.mu(n),
        )
    }

    pub fn j_c_star(&self) -> JacobiMatrix {
        let coef = *self;
        JacobiMatrix::from_rule(std::sync::Arc::new(move |n: usize| {
            (coef.star_diag(n), coef.star_offdiag_sq(n).sqrt())
        }))
    }
}

/// `u_0, …, u_K`, the moments of ν_c.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentSequence(pub Vec<f64>);

impl MomentSequence {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, k: usize) -> f64 {
        self.0[k]
    }

    pub fn max_order(&self) -> usize {
        self.0.len() - 1
    }

    /// Moments of ν*_c: `(u_{n+1} − u_{n+2}) / (u_1 − u_2)` for `n = 0..=K−2`.
    pub fn dual_moments(&self) -> Vec<f64> {
        let u = &self.0;
        let z = u[1] - u[2];
        (0..u.len().saturating_sub(2)).map(|n| (u[n + 1] - u[n + 2]) / z).collect()
    }
}

/// Stationary moment recursion:
/// `u_k (2c+a+b+k+1) = (a+k) u_{k−1} + c Σ_{i<k} u_i u_{k−1−i} − c Σ_{j=1}^{k−1} u_j u_{k−j}`.
pub fn moments_u(params: LimitParams, kmax: usize) -> MomentSequence {
    let LimitParams { a, b, c } = params;
    let mut u = Vec::with_capacity(kmax + 1);
    u.push(1.0);
    for k in 1..=kmax {
        let kf = k as f64;
        let conv_prev: f64 = (0..k).map(|i| u[i] * u[k - 1 - i]).sum();
        let conv_inner: f64 = (1..k).map(|j| u[j] * u[k - j]).sum();
        let num = (a + kf) * u[k - 1] + c * conv_prev - c * conv_inner;
        u.push(num / (2.0 * c + a + b + kf + 1.0));
    }
    MomentSequence(u)
}

/// Agreement required between the two closed forms of `Z*_c`.
pub const Z_STAR_TOLERANCE: f64 = 1e-14;

/// `Z*_c = ⟨ν_c, x(1−x)⟩`, cross-checked between its explicit rational form and
/// `λ̂_0 (1 − λ̂_0 − μ_1)`.
pub fn z_star(params: LimitParams) -> Result<f64> {
    let LimitParams { a, b, c } = params;
    let s = 2.0 * c + a + b;
    let explicit = (c + a + 1.0) * (c + b + 1.0) * (c + a + b + 2.0) / ((s + 2.0) * (s + 2.0) * (s + 3.0));
    let spectral = LimitCoefficients::new(params).z_star_spectral();
    if (explicit - spectral).abs() > Z_STAR_TOLERANCE {
        return Err(Error::Consistency(format!(
            "Z* closed forms disagree: {explicit} vs {spectral}"
        )));
    }
    Ok(explicit)
}

/// `σ²_{P̃_n} = Z*_c / γ_n`.
pub fn sigma2_tilde_p(params: LimitParams, n: usize) -> Result<f64> {
    Ok(z_star(params)? / params.gamma(n))
}

pub const SIGMA_SYMMETRY_TOLERANCE: f64 = 1e-10;
pub const SIGMA_PSD_TOLERANCE: f64 = 1e-10;

/// Limiting covariance `σ_{k,l}`, `1 ≤ k,l ≤ m`, filled column by column
/// (fixed `l`, ascending `k`) from
/// `σ_{k,l} (k+2c+a+b+1) = l(u_l − u_{k+l}) − b Σ_{i<k} σ_{i,l} − 2c Σ_{i<k} u_i σ_{k−i,l}`.
///
/// The result is returned unsymmetrized; symmetry and positive
/// semidefiniteness are asserted as transcription guards.
pub fn sigma_matrix(params: LimitParams, m: usize) -> Result<Matrix> {
    if m == 0 {
        return Err(Error::Domain("sigma matrix size must be at least 1".into()));
    }
    let LimitParams { a, b, c } = params;
    let u = moments_u(params, 2 * m);
    let u = u.values();
    let mut sigma = dense::zeros(m, m);
    for l in 1..=m {
        for k in 1..=m {
            let mut acc = l as f64 * (u[l] - u[k + l]);
            for i in 1..k {
                acc -= b * sigma[i - 1][l - 1];
                acc -= 2.0 * c * u[i] * sigma[k - i - 1][l - 1];
            }
            sigma[k - 1][l - 1] = acc / (k as f64 + 2.0 * c + a + b + 1.0);
        }
    }
    let asym = dense::asymmetry(&sigma);
    if asym > SIGMA_SYMMETRY_TOLERANCE {
        return Err(Error::Consistency(format!("sigma recursion asymmetric by {asym}")));
    }
    let min_eig = dense::symmetric_eigenvalues(&sigma)[0];
    if min_eig < -SIGMA_PSD_TOLERANCE {
        return Err(Error::Consistency(format!("sigma has negative eigenvalue {min_eig}")));
    }
    Ok(sigma)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn grid() -> Vec<LimitParams> {
        let ab = [-0.4, 0.0, 1.0, 3.0];
        let cs = [0.1, 1.0, 10.0];
        let mut out = Vec::new();
        for &a in &ab {
            for &b in &ab {
                for &c in &cs {
                    out.push(LimitParams::new(a, b, c).unwrap());
                }
            }
        }
        out
    }

    fn base() -> LimitParams {
        LimitParams::new(0.0, 0.0, 1.0).unwrap()
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(LimitParams::new(-1.0, 0.0, 1.0).is_err());
        assert!(LimitParams::new(0.0, -1.5, 1.0).is_err());
        assert!(LimitParams::new(0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn hand_evaluated_coefficients() {
        let co = LimitCoefficients::new(base());
        assert_eq!(co.hat_lambda0(), 0.5);
        assert!((co.mu(1) - 0.2).abs() < 1e-16);
        assert!((co.lambda_star(0) - 0.3).abs() < 1e-16);
        assert!((co.mu_star(0) - 0.2).abs() < 1e-16);
        assert!((co.star_diag(1) - 0.5).abs() < 1e-16);
    }

    #[test]
    fn first_moments() {
        let u = moments_u(base(), 2);
        assert_eq!(u.get(0), 1.0);
        assert_eq!(u.get(1), 0.5);
        assert!((u.get(2) - 0.35).abs() < 1e-15);
        let j = LimitCoefficients::new(base()).j_c();
        assert_eq!(j.power_entry11(1), 0.5);
        assert!((j.power_entry11(2) - 0.35).abs() < 1e-15);
    }

    #[test]
    fn z_star_values_and_identity() {
        let z = z_star(base()).unwrap();
        assert!((z - 0.15).abs() < 1e-15);
        assert!((z - 2.0 * 2.0 * 3.0 / (16.0 * 5.0)).abs() < 1e-16);
        for p in grid() {
            let z = z_star(p).unwrap();
            let u = moments_u(p, 2);
            assert!((u.get(1) - u.get(2) - z).abs() < 1e-14);
        }
        let zs: Vec<f64> = [0.0, 5.0, 50.0]
            .iter()
            .map(|&a| z_star(LimitParams::new(a, 0.5, 1.0).unwrap()).unwrap())
            .collect();
        assert!(zs[0] > zs[1] && zs[1] > zs[2] && zs[2] > 0.0);
    }

    #[test]
    fn recursion_matches_spectral_truncation_on_grid() {
        for p in grid() {
            let u = moments_u(p, 20);
            let j = LimitCoefficients::new(p).j_c();
            for k in 0..=20 {
                assert!((u.get(k) - j.power_entry11(k)).abs() <= 1e-12, "{p:?} k={k}");
            }
        }
    }

    #[test]
    fn moment_sequence_is_strictly_decreasing() {
        for p in grid() {
            let u = moments_u(p, 30);
            for k in 1..30 {
                assert!(u.get(k + 1) > 0.0 && u.get(k + 1) < u.get(k) && u.get(k) < 1.0);
            }
        }
    }

    #[test]
    fn hankel_matrices_positive_definite() {
        for p in grid() {
            let u = moments_u(p, 14);
            let h: Matrix = (0..6).map(|i| (0..6).map(|j| u.get(i + j)).collect()).collect();
            let hs: Matrix = (0..6)
                .map(|i| (0..6).map(|j| u.get(i + j + 1) - u.get(i + j + 2)).collect())
                .collect();
            assert!(dense::symmetric_eigenvalues(&h)[0] > 0.0, "{p:?}");
            assert!(dense::symmetric_eigenvalues(&hs)[0] > 0.0, "{p:?}");
        }
    }

    #[test]
    fn dual_matrix_reproduces_reweighted_moments() {
        for p in grid() {
            let u = moments_u(p, 17);
            let star = u.dual_moments();
            let js = LimitCoefficients::new(p).j_c_star();
            for n in 0..=15 {
                assert!((js.power_entry11(n) - star[n]).abs() <= 1e-12, "{p:?} n={n}");
            }
        }
    }

    #[test]
    fn sigma_base_case() {
        let s = sigma_matrix(base(), 1).unwrap();
        assert!((s[0][0] - 0.0375).abs() < 1e-15);
        for p in grid() {
            let s = sigma_matrix(p, 6).unwrap();
            let expected = z_star(p).unwrap() / (2.0 * p.c + p.a + p.b + 2.0);
            assert!((s[0][0] - expected).abs() <= 1e-14);
            assert!((s[0][0] - sigma2_tilde_p(p, 0).unwrap()).abs() <= 1e-14);
        }
    }

    #[test]
    fn sigma2_tilde_values() {
        assert!((sigma2_tilde_p(base(), 0).unwrap() - 0.0375).abs() < 1e-16);
        assert!((sigma2_tilde_p(base(), 1).unwrap() - 0.015).abs() < 1e-16);
        assert_eq!(base().gamma(0), 4.0);
        assert_eq!(base().gamma(1), 10.0);
        assert_eq!(base().gamma(2), 18.0);
    }
}
