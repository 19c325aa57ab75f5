//! Exact expansion of `E[(J_{N,β})^k(1,1)]` as a polynomial in the Beta
//! variables, and its evaluation as a rational function of `(N, κ, a, b)`.
//!
//! `J` is similar, through a diagonal matrix, to the non-symmetric tridiagonal
//! `M` with diagonal `s_n + t_{n−1}`, superdiagonal `s_n t_n` and unit
//! subdiagonal. Diagonal entries of powers agree, and `M` needs no square
//! roots.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exact rational scalar.
pub type RationalScalar = BigRational;

/// A Beta variable of the tridiagonal model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variable {
    P(usize),
    Q(usize),
}

impl Variable {
    fn slot(self) -> usize {
        match self {
            Variable::P(i) => 2 * (i - 1),
            Variable::Q(i) => 2 * (i - 1) + 1,
        }
    }

    fn from_slot(slot: usize) -> Self {
        if slot % 2 == 0 {
            Variable::P(slot / 2 + 1)
        } else {
            Variable::Q(slot / 2 + 1)
        }
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Variable::P(i) => write!(f, "p{i}"),
            Variable::Q(i) => write!(f, "q{i}"),
        }
    }
}

/// Exponents by slot (`p_1, q_1, p_2, q_2, …`), trailing zeros trimmed.
type Monomial = Vec<u32>;

fn trim(mut m: Monomial) -> Monomial {
    while m.last() == Some(&0) {
        m.pop();
    }
    m
}

fn mul_monomials(x: &Monomial, y: &Monomial) -> Monomial {
    let mut out = vec![0; x.len().max(y.len())];
    for (i, e) in x.iter().enumerate() {
        out[i] += e;
    }
    for (i, e) in y.iter().enumerate() {
        out[i] += e;
    }
    out
}

/// Sparse polynomial in `p_i, q_i` with rational coefficients; zero
/// coefficients are never stored.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RationalPoly {
    terms: BTreeMap<Monomial, BigRational>,
}

impl RationalPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: BigRational) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(Vec::new(), c);
        }
        Self { terms }
    }

    pub fn one() -> Self {
        Self::constant(BigRational::one())
    }

    pub fn var(v: Variable) -> Self {
        let mut m = vec![0; v.slot() + 1];
        m[v.slot()] = 1;
        let mut terms = BTreeMap::new();
        terms.insert(m, BigRational::one());
        Self { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// `(variable exponents, coefficient)` pairs in canonical order.
    pub fn terms(&self) -> impl Iterator<Item = (Vec<(Variable, u32)>, &BigRational)> {
        self.terms.iter().map(|(m, c)| {
            let vars = m
                .iter()
                .enumerate()
                .filter(|(_, &e)| e > 0)
                .map(|(slot, &e)| (Variable::from_slot(slot), e))
                .collect();
            (vars, c)
        })
    }

    /// Largest total degree of a stored monomial.
    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(|m| m.iter().sum()).max().unwrap_or(0)
    }

    fn add_term(&mut self, m: Monomial, c: BigRational) {
        if c.is_zero() {
            return;
        }
        let m = trim(m);
        let remove = match self.terms.get_mut(&m) {
            Some(existing) => {
                *existing += c;
                existing.is_zero()
            }
            None => {
                self.terms.insert(m.clone(), c);
                false
            }
        };
        if remove {
            self.terms.remove(&m);
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), -c.clone());
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero();
        for (mx, cx) in &self.terms {
            for (my, cy) in &other.terms {
                out.add_term(mul_monomials(mx, my), cx * cy);
            }
        }
        out
    }

    pub fn scale(&self, s: &BigRational) -> Self {
        let mut out = Self::zero();
        for (m, c) in &self.terms {
            out.add_term(m.clone(), c * s);
        }
        out
    }

    /// Numeric value with `p_i = p[i−1]`, `q_i = q[i−1]`.
    pub fn eval_f64(&self, p: &[f64], q: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(m, c)| {
                let mut v = c.to_f64().unwrap_or(f64::NAN);
                for (slot, &e) in m.iter().enumerate() {
                    if e > 0 {
                        let x = match Variable::from_slot(slot) {
                            Variable::P(i) => p[i - 1],
                            Variable::Q(i) => q[i - 1],
                        };
                        v *= x.powi(e as i32);
                    }
                }
                v
            })
            .sum()
    }
}

/// Number of rows of `J` reached by closed walks of length `k` from row 1.
pub fn rows_needed(k: usize) -> usize {
    k / 2 + 1
}

/// Smallest structural size at which the `(1,1)` expansion is uniform in `N`.
pub fn min_structural_size(k: usize) -> usize {
    k / 2 + 2
}

/// `s_n = p_n (1 − q_{n−1})` with `q_0 = 0` and `t_n = q_n (1 − p_n)`.
fn bidiagonal_symbols(rows: usize) -> (Vec<RationalPoly>, Vec<RationalPoly>) {
    let one = RationalPoly::one();
    let s = (1..=rows)
        .map(|n| {
            let p = RationalPoly::var(Variable::P(n));
            if n == 1 {
                p
            } else {
                p.mul(&one.sub(&RationalPoly::var(Variable::Q(n - 1))))
            }
        })
        .collect();
    let t = (1..rows)
        .map(|n| RationalPoly::var(Variable::Q(n)).mul(&one.sub(&RationalPoly::var(Variable::P(n)))))
        .collect();
    (s, t)
}

/// `M v` for the square-root-free similar form of `J`, restricted to `rows`.
fn apply_walk_matrix(v: &[RationalPoly], s: &[RationalPoly], t: &[RationalPoly]) -> Vec<RationalPoly> {
    let rows = v.len();
    (0..rows)
        .map(|n| {
            let mut diag = s[n].clone();
            if n > 0 {
                diag = diag.add(&t[n - 1]);
            }
            let mut out = diag.mul(&v[n]);
            if n + 1 < rows {
                out = out.add(&s[n].mul(&t[n]).mul(&v[n + 1]));
            }
            if n > 0 {
                out = out.add(&v[n - 1]);
            }
            out
        })
        .collect()
}

/// Symbolic `(J^k)(1,1)`, valid for every `N ≥ structural_size`.
pub fn expand_entry11(structural_size: usize, k: usize) -> Result<RationalPoly> {
    if structural_size < min_structural_size(k) {
        return Err(Error::Domain(format!(
            "structural size {structural_size} is below {} required for k = {k}",
            min_structural_size(k)
        )));
    }
    let rows = rows_needed(k);
    let (s, t) = bidiagonal_symbols(rows);
    // Row vector e_1ᵀ M^j, so that (M^k)(1,1) is its first entry after k steps.
    let mut v = vec![RationalPoly::zero(); rows];
    v[0] = RationalPoly::one();
    for _ in 0..k {
        v = apply_walk_matrix_transposed(&v, &s, &t);
    }
    Ok(v.swap_remove(0))
}

/// `Mᵀ v`.
fn apply_walk_matrix_transposed(v: &[RationalPoly], s: &[RationalPoly], t: &[RationalPoly]) -> Vec<RationalPoly> {
    let rows = v.len();
    (0..rows)
        .map(|n| {
            let mut diag = s[n].clone();
            if n > 0 {
                diag = diag.add(&t[n - 1]);
            }
            let mut out = diag.mul(&v[n]);
            if n + 1 < rows {
                out = out.add(&v[n + 1]);
            }
            if n > 0 {
                out = out.add(&s[n - 1].mul(&t[n - 1]).mul(&v[n - 1]));
            }
            out
        })
        .collect()
}

/// Symbolic `N^{−1} tr(J^k)` for the exact size `n`.
pub fn expand_trace(n: usize, k: usize) -> Result<RationalPoly> {
    if n == 0 {
        return Err(Error::Domain("size must be at least 1".into()));
    }
    let (s, t) = bidiagonal_symbols(n);
    let mut total = RationalPoly::zero();
    for start in 0..n {
        let mut v = vec![RationalPoly::zero(); n];
        v[start] = RationalPoly::one();
        for _ in 0..k {
            v = apply_walk_matrix(&v, &s, &t);
        }
        total = total.add(&v[start]);
    }
    Ok(total.scale(&BigRational::new(BigInt::one(), BigInt::from(n))))
}

/// `(N, κ, a, b)` as exact rationals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactParams {
    pub n: BigRational,
    pub kappa: BigRational,
    pub a: BigRational,
    pub b: BigRational,
}

impl ExactParams {
    pub fn new(n: BigRational, kappa: BigRational, a: BigRational, b: BigRational) -> Self {
        Self { n, kappa, a, b }
    }

    /// `(−κN, 1/κ, −a/κ, −b/κ)`.
    pub fn dual(&self) -> Result<Self> {
        if self.kappa.is_zero() {
            return Err(Error::Pole("kappa = 0 has no dual".into()));
        }
        Ok(Self {
            n: -(&self.kappa * &self.n),
            kappa: self.kappa.recip(),
            a: -(&self.a / &self.kappa),
            b: -(&self.b / &self.kappa),
        })
    }
}

/// Beta shapes attached to each variable.
pub trait ShapeRule {
    fn shapes(&self, v: Variable) -> (BigRational, BigRational);
}

impl ShapeRule for ExactParams {
    /// `p_i ~ ((N−i)κ+a+1, (N−i)κ+b+1)`, `q_i ~ ((N−i)κ, (N−i−1)κ+a+b+2)`.
    fn shapes(&self, v: Variable) -> (BigRational, BigRational) {
        let one = BigRational::one();
        let two = &one + &one;
        match v {
            Variable::P(i) => {
                let h = (&self.n - int(i)) * &self.kappa;
                (&h + &self.a + &one, &h + &self.b + &one)
            }
            Variable::Q(i) => {
                let h = (&self.n - int(i)) * &self.kappa;
                let h1 = (&self.n - int(i) - &one) * &self.kappa;
                (h, h1 + &self.a + &self.b + two)
            }
        }
    }
}

/// The `N → ∞`, `κN → c` limit: every `p_i ~ (c+a+1, c+b+1)`, `q_i ~ (c, c+a+b+2)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LimitShapes {
    pub c: BigRational,
    pub a: BigRational,
    pub b: BigRational,
}

impl ShapeRule for LimitShapes {
    fn shapes(&self, v: Variable) -> (BigRational, BigRational) {
        let one = BigRational::one();
        match v {
            Variable::P(_) => (&self.c + &self.a + &one, &self.c + &self.b + &one),
            Variable::Q(_) => (self.c.clone(), &self.c + &self.a + &self.b + &one + &one),
        }
    }
}

fn int(i: usize) -> BigRational {
    BigRational::from_integer(BigInt::from(i))
}

/// `E[X^e] = ∏_{r<e} (α+r)/(α+β+r)` for `X ~ Beta(α, β)`, exactly.
pub fn beta_moment_exact(alpha: &BigRational, beta: &BigRational, e: u32, what: Variable) -> Result<BigRational> {
    let mut acc = BigRational::one();
    for r in 0..e {
        let r = int(r as usize);
        let den = alpha + beta + &r;
        if den.is_zero() {
            return Err(Error::Pole(format!(
                "E[{what}^{e}]: α+β+{r} vanishes at shapes ({alpha}, {beta})"
            )));
        }
        acc *= (alpha + &r) / den;
    }
    Ok(acc)
}

/// Replaces every monomial by the product of independent Beta moments.
pub fn expect(poly: &RationalPoly, shapes: &impl ShapeRule) -> Result<BigRational> {
    let mut cache: HashMap<(Variable, u32), BigRational> = HashMap::new();
    let mut total = BigRational::zero();
    for (vars, c) in poly.terms() {
        let mut term = c.clone();
        for (v, e) in vars {
            let m = match cache.get(&(v, e)) {
                Some(m) => m.clone(),
                None => {
                    let (al, be) = shapes.shapes(v);
                    let m = beta_moment_exact(&al, &be, e, v)?;
                    cache.insert((v, e), m.clone());
                    m
                }
            };
            if m.is_zero() {
                term = BigRational::zero();
                break;
            }
            term *= m;
        }
        total += term;
    }
    Ok(total)
}

/// `m_k(N, κ, a, b)`.
pub fn mean_moment(k: usize, params: &ExactParams) -> Result<BigRational> {
    expect(&expand_entry11(min_structural_size(k), k)?, params)
}

/// Both sides of `m_k(N, κ, a, b) = m_k(−κN, 1/κ, −a/κ, −b/κ)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DualityCheck {
    pub k: usize,
    pub direct: BigRational,
    pub dual: BigRational,
    pub equal: bool,
}

pub fn duality_check(k: usize, params: &ExactParams) -> Result<DualityCheck> {
    let poly = expand_entry11(min_structural_size(k), k)?;
    let direct = expect(&poly, params)?;
    let dual = expect(&poly, &params.dual()?)?;
    let equal = direct == dual;
    Ok(DualityCheck { k, direct, dual, equal })
}

/// One row of a convergence-rate table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    #[serde(rename = "N")]
    pub n: usize,
    pub moment: f64,
    pub abs_diff: f64,
    pub scaled_diff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub k: usize,
    pub limit: f64,
    pub rows: Vec<RateRow>,
    /// `max_N N·|diff| ≤ 2 · (N·|diff| at the largest N)`.
    pub bounded: bool,
}

/// `|m_k(N, c/N, a, b) − m_k^∞|` across `n_list`, all in exact arithmetic.
pub fn rate_check(k: usize, c: &BigRational, a: &BigRational, b: &BigRational, n_list: &[usize]) -> Result<RateReport> {
    if n_list.is_empty() {
        return Err(Error::Domain("empty N list".into()));
    }
    let poly = expand_entry11(min_structural_size(k), k)?;
    let limit = expect(&poly, &LimitShapes { c: c.clone(), a: a.clone(), b: b.clone() })?;
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let params = ExactParams::new(int(n), c / int(n), a.clone(), b.clone());
        let m = expect(&poly, &params)?;
        let diff = (&m - &limit).abs();
        rows.push(RateRow {
            n,
            moment: m.to_f64().unwrap_or(f64::NAN),
            abs_diff: diff.to_f64().unwrap_or(f64::NAN),
            scaled_diff: (diff * int(n)).to_f64().unwrap_or(f64::NAN),
        });
    }
    let largest = rows.iter().max_by_key(|r| r.n).map(|r| r.scaled_diff).unwrap_or(0.0);
    let worst = rows.iter().map(|r| r.scaled_diff).fold(0.0, f64::max);
    Ok(RateReport { k, limit: limit.to_f64().unwrap_or(f64::NAN), rows, bounded: worst <= 2.0 * largest })
}

/// Parses `"p/q"`, an integer, or a finite decimal such as `"-0.25"`, exactly.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::Domain(format!("not a rational number: {s:?}"));
    if let Some((num, den)) = s.split_once('/') {
        let num = BigInt::from_str(num.trim()).map_err(|_| bad())?;
        let den = BigInt::from_str(den.trim()).map_err(|_| bad())?;
        if den.is_zero() {
            return Err(Error::Pole(format!("zero denominator in {s:?}")));
        }
        return Ok(BigRational::new(num, den));
    }
    if let Some((whole, frac)) = s.split_once('.') {
        if frac.is_empty() || !frac.chars().all(|ch| ch.is_ascii_digit()) {
            return Err(bad());
        }
        let negative = whole.starts_with('-');
        let digits = format!("{}{frac}", whole.trim_start_matches(['-', '+']));
        let mag = BigInt::from_str(&digits).map_err(|_| bad())?;
        let scale = num_traits::pow(BigInt::from(10), frac.len());
        let v = BigRational::new(mag, scale);
        return Ok(if negative { -v } else { v });
    }
    BigInt::from_str(s).map(BigRational::from_integer).map_err(|_| bad())
}

/// `numerator/denominator`, or just the integer when the denominator is 1.
pub fn format_rational(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}
