//! Orthogonal polynomials of ν*_c and the fluctuation transform 𝓛.
//!
//! `p_n` are the monic orthogonal polynomials of ν*_c (three-term recurrence
//! from `J*_c`), `p̃_n` their orthonormal versions and `P̃_n` the primitives
//! with zero constant term. All integrals against ν_c or ν*_c go through
//! moment sequences; no quadrature is involved.

use num_bigint::BigInt;
use num_traits::{Float, One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::dense::{self, Matrix};
use crate::error::{Error, Result};
use crate::limit_measure::{moments_u, sigma2_tilde_p, sigma_matrix, z_star, LimitCoefficients, LimitParams};
use crate::poly::{Poly, DEGREE_CAP};

/// Relative agreement required between the moment-based norm and the
/// coefficient-product formula.
pub const NORM_TOLERANCE: f64 = 1e-10;
/// Relative residual allowed in the degree ≥ 1 part of `𝓛(p_n) + γ_n P_n`.
pub const PROPOSITION_TOLERANCE: f64 = 1e-9;

fn check_order(n_max: usize) -> Result<()> {
    if n_max > DEGREE_CAP {
        return Err(Error::DegreeCap { degree: n_max, cap: DEGREE_CAP });
    }
    Ok(())
}

fn recurrence(params: LimitParams, n_max: usize, p0: Poly, p1: Poly) -> Result<Vec<Poly>> {
    check_order(n_max)?;
    let co = LimitCoefficients::new(params);
    let mut out = vec![p0, p1];
    for n in 1..n_max {
        // p_{n+1} = x p_n − a*_{n+1} p_n − (b*_n)² p_{n−1}
        let next = &(&out[n].mul_x() - &out[n].scale(co.star_diag(n + 1)))
            - &out[n - 1].scale(co.star_offdiag_sq(n));
        out.push(next);
    }
    out.truncate(n_max + 1);
    Ok(out)
}

/// Monic `p_0, …, p_{n_max}` orthogonal under ν*_c.
pub fn p_sequence(params: LimitParams, n_max: usize) -> Result<Vec<Poly>> {
    let a1 = LimitCoefficients::new(params).star_diag(1);
    recurrence(params, n_max, Poly::constant(1.0), Poly::new(vec![-a1, 1.0]))
}

/// Secondary sequence: same recurrence, `q_0 = 0`, `q_1 = 1`.
pub fn q_sequence(params: LimitParams, n_max: usize) -> Result<Vec<Poly>> {
    recurrence(params, n_max, Poly::zero(), Poly::constant(1.0))
}

/// `⟨ν*_c, p_n²⟩ = ∏_{i=1}^n λ*_i μ*_{i−1}`.
pub fn norm_sq_product(params: LimitParams, n: usize) -> f64 {
    let co = LimitCoefficients::new(params);
    (1..=n).map(|i| co.star_offdiag_sq(i)).product()
}

/// Moments of ν*_c up to `order`.
pub fn dual_moments(params: LimitParams, order: usize) -> Vec<f64> {
    moments_u(params, order + 2).dual_moments()
}

/// Fractional bits of the fixed-point moment recursion.
const MOMENT_BITS: u64 = 1024;

/// Moment functional of ν_c or ν*_c evaluated without cancellation.
///
/// The moment recursion runs in `2^-1024` fixed point. Every `f64`
/// coefficient is an exact dyadic rational, so products and moment sums run
/// in big-integer arithmetic and only the final value is rounded.
/// Monomial-basis integrals in `f64` lose most of their digits to
/// cancellation once degrees pass ten.
#[derive(Debug, Clone)]
pub struct MomentFunctional {
    /// `moments[k] · 2^-MOMENT_BITS`.
    moments: Vec<BigInt>,
}

/// `v · 2^MOMENT_BITS`, exact for any parameter above `2^-1024`.
fn to_fixed(v: f64) -> BigInt {
    let (m, e, sign) = v.integer_decode();
    let shift = i64::from(e) + MOMENT_BITS as i64;
    let m = BigInt::from(m) * i64::from(sign);
    if shift >= 0 {
        m << shift as usize
    } else {
        m >> (-shift) as usize
    }
}

fn fixed_mul(x: &BigInt, y: &BigInt) -> BigInt {
    (x * y) >> MOMENT_BITS as usize
}

fn fixed_div(x: &BigInt, y: &BigInt) -> BigInt {
    (x << MOMENT_BITS as usize) / y
}

/// Moment recursion for `u_k`, `k ≤ kmax`, in fixed point.
fn moments_u_fixed(params: LimitParams, kmax: usize) -> Vec<BigInt> {
    let (a, b, c) = (to_fixed(params.a), to_fixed(params.b), to_fixed(params.c));
    let one = BigInt::one() << MOMENT_BITS as usize;
    let base = &c + &c + &a + &b + &one;
    let mut u = vec![one.clone()];
    for k in 1..=kmax {
        let kf = &one * BigInt::from(k);
        let mut conv = BigInt::zero();
        for i in 0..k {
            conv += &u[i] * &u[k - 1 - i];
        }
        for j in 1..k {
            conv -= &u[j] * &u[k - j];
        }
        let conv = conv >> MOMENT_BITS as usize;
        let num = fixed_mul(&(&a + &kf), &u[k - 1]) + fixed_mul(&c, &conv);
        u.push(fixed_div(&num, &(&base + &kf)));
    }
    u
}

fn dual_from_u(u: &[BigInt]) -> Vec<BigInt> {
    let z = &u[1] - &u[2];
    (0..u.len() - 2).map(|n| fixed_div(&(&u[n + 1] - &u[n + 2]), &z)).collect()
}

/// `2^exp · Σ mant_k x^k`.
struct ScaledPoly {
    mant: Vec<BigInt>,
    exp: i64,
}

impl ScaledPoly {
    fn from_poly(p: &Poly) -> Self {
        let parts: Vec<(BigInt, i64)> = p
            .coeffs()
            .iter()
            .map(|&c| {
                let (m, e, sign) = c.integer_decode();
                (BigInt::from(m) * i64::from(sign), i64::from(e))
            })
            .collect();
        let exp = parts.iter().filter(|(m, _)| !m.is_zero()).map(|&(_, e)| e).min().unwrap_or(0);
        let mant = parts
            .into_iter()
            .map(|(m, e)| if m.is_zero() { m } else { m << (e - exp) as usize })
            .collect();
        Self { mant, exp }
    }

    fn one() -> Self {
        Self { mant: vec![BigInt::one()], exp: 0 }
    }

    fn mul(&self, other: &Self) -> Self {
        if self.mant.is_empty() || other.mant.is_empty() {
            return Self { mant: Vec::new(), exp: 0 };
        }
        let mut mant = vec![BigInt::zero(); self.mant.len() + other.mant.len() - 1];
        for (i, x) in self.mant.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (j, y) in other.mant.iter().enumerate() {
                mant[i + j] += x * y;
            }
        }
        Self { mant, exp: self.exp + other.exp }
    }
}

/// `mant · 2^exp` rounded to `f64`.
fn dyadic_to_f64(mant: &BigInt, exp: i64) -> f64 {
    let bits = mant.bits() as i64;
    let shift = (bits - 64).max(0);
    let head = (mant >> shift as usize).to_f64().unwrap_or(f64::NAN);
    let e = exp + shift;
    let half = (e / 2) as i32;
    head * 2f64.powi(half) * 2f64.powi(e as i32 - half)
}

impl MomentFunctional {
    /// ν_c with moments up to `order`.
    pub fn limit(params: LimitParams, order: usize) -> Self {
        Self { moments: moments_u_fixed(params, order) }
    }

    /// ν*_c with moments up to `order`.
    pub fn dual(params: LimitParams, order: usize) -> Self {
        Self { moments: dual_from_u(&moments_u_fixed(params, order + 2)) }
    }

    /// `(ν_c, ν*_c)` from one run of the moment recursion; ν*_c gets two
    /// fewer moments.
    pub fn pair(params: LimitParams, order: usize) -> (Self, Self) {
        let u = moments_u_fixed(params, order.max(2));
        let star = dual_from_u(&u);
        (Self { moments: u }, Self { moments: star })
    }

    pub fn max_order(&self) -> usize {
        self.moments.len() - 1
    }

    /// `⟨μ, ∏ factors⟩`.
    pub fn integrate_product(&self, factors: &[&Poly]) -> f64 {
        let prod = factors
            .iter()
            .fold(ScaledPoly::one(), |acc, f| acc.mul(&ScaledPoly::from_poly(f)));
        assert!(
            prod.mant.len() <= self.moments.len(),
            "need {} moments, have {}",
            prod.mant.len(),
            self.moments.len()
        );
        let total: BigInt = prod.mant.iter().zip(&self.moments).map(|(c, m)| c * m).sum();
        dyadic_to_f64(&total, prod.exp - MOMENT_BITS as i64)
    }

    pub fn inner(&self, f: &Poly, g: &Poly) -> f64 {
        self.integrate_product(&[f, g])
    }
}

/// `⟨ν*_c, f g⟩`.
pub fn dual_inner(params: LimitParams, f: &Poly, g: &Poly) -> f64 {
    let order = f.coeffs().len() + g.coeffs().len();
    MomentFunctional::dual(params, order).inner(f, g)
}

/// `(p̃_n, ⟨ν*_c, p_n²⟩)` for a monic orthogonal `p_n`, checking the
/// moment-based norm against the coefficient product.
pub fn normalize(p_n: &Poly, params: LimitParams) -> Result<(Poly, f64)> {
    let order = 2 * p_n.coeffs().len();
    normalize_with(p_n, params, &MomentFunctional::dual(params, order))
}

/// [`normalize`] against a prebuilt ν*_c functional.
pub fn normalize_with(p_n: &Poly, params: LimitParams, dual: &MomentFunctional) -> Result<(Poly, f64)> {
    let n = p_n
        .degree()
        .ok_or_else(|| Error::Domain("cannot normalize the zero polynomial".into()))?;
    let by_moments = dual.inner(p_n, p_n);
    let by_product = norm_sq_product(params, n);
    if (by_moments - by_product).abs() > NORM_TOLERANCE * by_product {
        return Err(Error::Consistency(format!(
            "norm of p_{n}: moments give {by_moments}, coefficients give {by_product}"
        )));
    }
    Ok((p_n.scale(1.0 / by_product.sqrt()), by_product))
}

/// Orthonormal `p̃_0, …, p̃_{n_max}`.
pub fn orthonormal_sequence(params: LimitParams, n_max: usize) -> Result<Vec<Poly>> {
    let dual = MomentFunctional::dual(params, 2 * n_max + 2);
    p_sequence(params, n_max)?
        .iter()
        .map(|p| normalize_with(p, params, &dual).map(|(q, _)| q))
        .collect()
}

/// `P̃_0, …, P̃_{m−1}`: primitives of `p̃_n` with zero constant term.
pub fn orthonormal_primitives(params: LimitParams, m: usize) -> Result<Vec<Poly>> {
    if m == 0 {
        return Ok(Vec::new());
    }
    Ok(orthonormal_sequence(params, m - 1)?.iter().map(Poly::primitive).collect())
}

/// Lower-triangular `C` with `(P̃_0, …, P̃_{m−1})ᵀ = C (x, …, x^m)ᵀ`.
pub fn coefficient_matrix(params: LimitParams, m: usize) -> Result<Matrix> {
    let prims = orthonormal_primitives(params, m)?;
    let mut c = dense::zeros(m, m);
    for (n, p) in prims.iter().enumerate() {
        for j in 1..=m {
            c[n][j - 1] = p.coeff(j);
        }
    }
    Ok(c)
}

/// `𝓛(p)(x) = 2c ∫ (x(1−x)p(x) − y(1−y)p(y))/(x−y) dν_c(y)
///           + (a+1)p − (a+b+2)x p + x(1−x)p′`.
pub fn l_transform(p: &Poly, params: LimitParams) -> Result<Poly> {
    p.check_cap(DEGREE_CAP - 2)?;
    let LimitParams { a, b, c } = params;
    let x_one_minus_x = Poly::new(vec![0.0, 1.0, -1.0]);
    let weighted = &x_one_minus_x * p;
    let u = moments_u(params, weighted.coeffs().len());
    let integral = weighted.divided_difference_integral(u.values()).scale(2.0 * c);
    let local = &(&p.scale(a + 1.0) - &p.mul_x().scale(a + b + 2.0)) + &(&x_one_minus_x * &p.derivative());
    Ok(&integral + &local)
}

/// One row of the `ortho-check` table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropositionRow {
    pub n: usize,
    pub gamma_n: f64,
    /// Max |coefficient| of degree ≥ 1 in `𝓛(p_n) + γ_n P_n`, relative to the
    /// largest coefficient of `γ_n P_n`.
    pub residual: f64,
    pub norm_sq: f64,
    /// `⟨ν_c, 2x(1−x) p̃_n²⟩`; equals `2 Z*_c`.
    pub alpha_tilde_sq: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropositionReport {
    pub params: LimitParams,
    pub tolerance: f64,
    pub rows: Vec<PropositionRow>,
    pub passed: bool,
}

/// `⟨ν_c, 2x(1−x) f²⟩`.
pub fn alpha_sq(params: LimitParams, f: &Poly) -> f64 {
    let order = 2 * f.coeffs().len() + 2;
    MomentFunctional::limit(params, order).integrate_product(&[&Poly::new(vec![0.0, 2.0, -2.0]), f, f])
}

/// Checks `𝓛(p_n) = −γ_n P_n + const` for `n ≤ n_max`.
pub fn check_proposition(params: LimitParams, n_max: usize) -> Result<PropositionReport> {
    check_order(n_max + 2)?;
    let ps = p_sequence(params, n_max)?;
    let (limit, dual) = MomentFunctional::pair(params, 2 * n_max + 4);
    let weight = Poly::new(vec![0.0, 2.0, -2.0]);
    let mut rows = Vec::with_capacity(ps.len());
    for (n, p) in ps.iter().enumerate() {
        let gamma_n = params.gamma(n);
        let scaled_primitive = p.primitive().scale(gamma_n);
        let r = &l_transform(p, params)? + &scaled_primitive;
        let worst = r.coeffs().iter().skip(1).fold(0.0f64, |m, c| m.max(c.abs()));
        let (pt, norm_sq) = normalize_with(p, params, &dual)?;
        rows.push(PropositionRow {
            n,
            gamma_n,
            residual: worst / scaled_primitive.max_abs_coeff(),
            norm_sq,
            alpha_tilde_sq: limit.integrate_product(&[&weight, &pt, &pt]),
        });
    }
    let passed = rows.iter().all(|r| r.residual <= PROPOSITION_TOLERANCE);
    Ok(PropositionReport { params, tolerance: PROPOSITION_TOLERANCE, rows, passed })
}

/// `C Σ Cᵀ` together with its distance from `diag(σ²_{P̃_0}, …, σ²_{P̃_{m−1}})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagonalization {
    pub product: Matrix,
    pub target_diagonal: Vec<f64>,
    pub max_off_diagonal: f64,
    pub max_diagonal_error: f64,
}

pub fn covariance_diagonalization(params: LimitParams, m: usize) -> Result<Diagonalization> {
    let c = coefficient_matrix(params, m)?;
    let sigma = sigma_matrix(params, m)?;
    let product = dense::matmul(&dense::matmul(&c, &sigma), &dense::transpose(&c));
    let target_diagonal: Vec<f64> = (0..m).map(|n| sigma2_tilde_p(params, n)).collect::<Result<_>>()?;
    let max_diagonal_error = (0..m)
        .map(|i| (product[i][i] - target_diagonal[i]).abs())
        .fold(0.0, f64::max);
    Ok(Diagonalization {
        max_off_diagonal: dense::max_off_diagonal(&product),
        product,
        target_diagonal,
        max_diagonal_error,
    })
}

/// `⟨ν_c, f⟩` through the moment recursion.
pub fn limit_expectation(params: LimitParams, f: &Poly) -> f64 {
    MomentFunctional::limit(params, f.coeffs().len()).integrate_product(&[f])
}

/// `2 Z*_c`, the value every `alpha_tilde_sq` must take.
pub fn alpha_tilde_sq_expected(params: LimitParams) -> Result<f64> {
    Ok(2.0 * z_star(params)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> LimitParams {
        LimitParams::new(0.0, 0.0, 1.0).unwrap()
    }

    fn grid() -> Vec<LimitParams> {
        let ab = [-0.4, 0.0, 1.0, 3.0];
        let mut out = Vec::new();
        for &a in &ab {
            for &b in &ab {
                for &c in &[0.1, 1.0, 10.0] {
                    out.push(LimitParams::new(a, b, c).unwrap());
                }
            }
        }
        out
    }

    #[test]
    fn fixed_point_moments_match_float_recursion() {
        for p in grid() {
            let (limit, dual) = MomentFunctional::pair(p, 12);
            let u = moments_u(p, 12);
            let star = dual_moments(p, 10);
            for k in 0..=10 {
                let xk = Poly::monomial(k);
                assert!((limit.integrate_product(&[&xk]) - u.get(k)).abs() <= 1e-14);
                assert!((dual.integrate_product(&[&xk]) - star[k]).abs() <= 1e-13);
            }
            assert_eq!(dual.max_order(), 10);
        }
    }

    #[test]
    fn first_polynomials() {
        let ps = p_sequence(base(), 3).unwrap();
        assert_eq!(ps[0], Poly::constant(1.0));
        assert!((ps[1].coeff(0) + 0.5).abs() < 1e-16 && ps[1].coeff(1) == 1.0);
        for (n, p) in ps.iter().enumerate() {
            assert_eq!(p.degree(), Some(n));
            assert_eq!(p.leading(), 1.0);
        }
        let qs = q_sequence(base(), 2).unwrap();
        assert!(qs[0].is_zero());
        assert_eq!(qs[1], Poly::constant(1.0));
        let a2 = LimitCoefficients::new(base()).star_diag(2);
        assert_eq!(qs[2], Poly::new(vec![-a2, 1.0]));
        assert!(p_sequence(base(), DEGREE_CAP + 1).is_err());
    }

    #[test]
    fn gram_matrices() {
        for p in grid() {
            let dual = MomentFunctional::dual(p, 18);
            let ps = p_sequence(p, 8).unwrap();
            for m in 0..=8 {
                for n in 0..m {
                    let g = dual.inner(&ps[m], &ps[n]);
                    let scale = (norm_sq_product(p, m) * norm_sq_product(p, n)).sqrt();
                    assert!(g.abs() <= 1e-10 * scale.max(1e-300).max(1.0), "{p:?} m={m} n={n}: {g}");
                }
            }
            let pts = orthonormal_sequence(p, 8).unwrap();
            for m in 0..=8 {
                for n in 0..=8 {
                    let g = dual.inner(&pts[m], &pts[n]);
                    let target = if m == n { 1.0 } else { 0.0 };
                    assert!((g - target).abs() <= 1e-9, "{p:?} m={m} n={n}: {g}");
                }
            }
        }
    }

    #[test]
    fn normalization_values() {
        let (p0, n0) = normalize(&Poly::constant(1.0), base()).unwrap();
        assert_eq!((p0, n0), (Poly::constant(1.0), 1.0));
        let ps = p_sequence(base(), 1).unwrap();
        let (_, n1) = normalize(&ps[1], base()).unwrap();
        let co = LimitCoefficients::new(base());
        assert!((n1 - co.lambda_star(1) * co.mu_star(0)).abs() < 1e-15);
        assert!(normalize(&Poly::zero(), base()).is_err());
        // A non-orthogonal monic polynomial fails the consistency check.
        assert!(normalize(&Poly::new(vec![0.1, 1.0]), base()).is_err());
    }

    #[test]
    fn alpha_tilde_is_twice_z_star() {
        for p in grid() {
            let expected = alpha_tilde_sq_expected(p).unwrap();
            let rep = check_proposition(p, 8).unwrap();
            for row in rep.rows {
                assert!((row.alpha_tilde_sq - expected).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn three_term_consistency() {
        for p in grid() {
            let co = LimitCoefficients::new(p);
            let pts = orthonormal_sequence(p, 9).unwrap();
            let dual = MomentFunctional::dual(p, 20);
            for n in 1..8 {
                let xp = pts[n].mul_x();
                let below = dual.inner(&xp, &pts[n - 1]);
                let same = dual.inner(&xp, &pts[n]);
                let above = dual.inner(&xp, &pts[n + 1]);
                assert!((below - co.star_offdiag_sq(n).sqrt()).abs() <= 1e-10);
                assert!((same - co.star_diag(n + 1)).abs() <= 1e-10);
                assert!((above - co.star_offdiag_sq(n + 1).sqrt()).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn q_equals_divided_difference_integral() {
        for p in grid() {
            let ps = p_sequence(p, 6).unwrap();
            let qs = q_sequence(p, 6).unwrap();
            let star = dual_moments(p, 8);
            for n in 0..=6 {
                let oracle = ps[n].divided_difference_integral(&star);
                let diff = &oracle - &qs[n];
                assert!(diff.max_abs_coeff() <= 1e-10, "{p:?} n={n}");
            }
        }
    }

    #[test]
    fn l_transform_of_constant() {
        for p in grid() {
            let l = l_transform(&Poly::constant(1.0), p).unwrap();
            let gamma0 = p.gamma(0);
            assert_eq!(l.degree(), Some(1));
            assert!((l.coeff(1) + gamma0).abs() <= 1e-15 * gamma0);
        }
    }

    #[test]
    fn l_transform_is_linear() {
        let p = Poly::new(vec![0.3, -1.2, 0.7, 2.0]);
        let q = Poly::new(vec![-0.5, 0.1, 0.0, 0.0, 1.5]);
        for params in grid() {
            let (al, be) = (1.7, -0.6);
            let lhs = l_transform(&(&p.scale(al) + &q.scale(be)), params).unwrap();
            let rhs = &l_transform(&p, params).unwrap().scale(al) + &l_transform(&q, params).unwrap().scale(be);
            assert!((&lhs - &rhs).max_abs_coeff() <= 1e-12 * lhs.max_abs_coeff().max(1.0));
        }
    }

    #[test]
    fn l_transform_of_p1_at_base() {
        let ps = p_sequence(base(), 1).unwrap();
        let r = &l_transform(&ps[1], base()).unwrap() + &ps[1].primitive().scale(10.0);
        assert!(r.coeffs().iter().skip(1).all(|c| c.abs() <= 1e-10));
    }

    #[test]
    fn proposition_holds_on_grid() {
        for p in grid() {
            let rep = check_proposition(p, 10).unwrap();
            assert!(rep.passed, "{p:?}: {:?}", rep.rows.iter().map(|r| r.residual).collect::<Vec<_>>());
            assert!(rep.rows[0].residual <= 1e-15);
        }
        let rep = check_proposition(base(), 2).unwrap();
        let gammas: Vec<f64> = rep.rows.iter().map(|r| r.gamma_n).collect();
        assert_eq!(gammas, vec![4.0, 10.0, 18.0]);
    }

    #[test]
    fn primitives_vanish_at_zero() {
        let prims = orthonormal_primitives(base(), 6).unwrap();
        let pts = orthonormal_sequence(base(), 5).unwrap();
        for (pp, pt) in prims.iter().zip(&pts) {
            assert_eq!(pp.eval(0.0), 0.0);
            assert!((&pp.derivative() - pt).max_abs_coeff() <= 1e-15 * pt.max_abs_coeff());
        }
        let c = coefficient_matrix(base(), 4).unwrap();
        for i in 0..4 {
            for j in i + 1..4 {
                assert_eq!(c[i][j], 0.0);
            }
        }
    }

    #[test]
    fn covariance_is_diagonalized() {
        for p in [
            LimitParams::new(1.0, 0.5, 2.0).unwrap(),
            base(),
            LimitParams::new(-0.4, 3.0, 0.1).unwrap(),
        ] {
            let d = covariance_diagonalization(p, 4).unwrap();
            assert!(d.max_off_diagonal <= 1e-8, "{p:?}: {}", d.max_off_diagonal);
            assert!(d.max_diagonal_error <= 1e-8);
        }
    }
}
