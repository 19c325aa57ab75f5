//! Symmetric tridiagonal (Jacobi) matrices and their spectral measures.
//!
//! A [`JacobiMatrix`] is either finite, stored as its diagonal and
//! off-diagonal, or semi-infinite and generated on demand by a coefficient
//! rule `n -> (a_n, b_n)` (1-based). The eigensolver is implicit-shift QL
//! that accumulates only the first row of the orthogonal transform, which is
//! all the spectral measure needs.

use std::fmt;
use std::io::{BufRead, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::neumaier_sum;

/// Coefficient rule for a semi-infinite Jacobi matrix: `n -> (a_n, b_n)`, n >= 1.
pub type CoefficientRule = Arc<dyn Fn(usize) -> (f64, f64) + Send + Sync>;

/// Maximum implicit QL sweeps spent on any single eigenvalue.
pub const MAX_QL_ITERATIONS: usize = 50;

#[derive(Clone)]
enum Extent {
    Finite { diag: Vec<f64>, offdiag: Vec<f64> },
    Rule(CoefficientRule),
}

/// Symmetric tridiagonal matrix with non-negative off-diagonal.
#[derive(Clone)]
pub struct JacobiMatrix {
    extent: Extent,
}

impl fmt::Debug for JacobiMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.extent {
            Extent::Finite { diag, offdiag } => f
                .debug_struct("JacobiMatrix")
                .field("diag", diag)
                .field("offdiag", offdiag)
                .finish(),
            Extent::Rule(_) => f.write_str("JacobiMatrix(rule-generated)"),
        }
    }
}

/// Wire format of a finite Jacobi matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JacobiMatrixJson {
    pub diag: Vec<f64>,
    pub offdiag: Vec<f64>,
}

fn check_finite_nonneg(xs: &[f64], what: &str) -> Result<()> {
    for (i, &x) in xs.iter().enumerate() {
        if !x.is_finite() || x < 0.0 {
            return Err(Error::Domain(format!("{what}[{i}] = {x} must be finite and non-negative")));
        }
    }
    Ok(())
}

impl JacobiMatrix {
    pub fn finite(diag: Vec<f64>, offdiag: Vec<f64>) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::Domain("Jacobi matrix must have size at least 1".into()));
        }
        if offdiag.len() + 1 != diag.len() {
            return Err(Error::Domain(format!(
                "off-diagonal length {} does not match size {}",
                offdiag.len(),
                diag.len()
            )));
        }
        if let Some(i) = diag.iter().position(|x| !x.is_finite()) {
            return Err(Error::Domain(format!("diag[{i}] is not finite")));
        }
        check_finite_nonneg(&offdiag, "offdiag")?;
        Ok(Self { extent: Extent::Finite { diag, offdiag } })
    }

    pub fn from_rule(rule: CoefficientRule) -> Self {
        Self { extent: Extent::Rule(rule) }
    }

    /// `B Bᵀ` with `B` lower bidiagonal, diagonal `√s_n`, subdiagonal `√t_n`:
    /// `a_n = s_n + t_{n-1}` (`t_0 = 0`), `b_n = √(s_n t_n)`.
    pub fn from_bidiagonal_product(s: &[f64], t: &[f64]) -> Result<Self> {
        if s.is_empty() || t.len() + 1 != s.len() {
            return Err(Error::Domain(format!(
                "bidiagonal factors need len(t) = len(s) - 1, got {} and {}",
                s.len(),
                t.len()
            )));
        }
        check_finite_nonneg(s, "s")?;
        check_finite_nonneg(t, "t")?;
        let diag = (0..s.len())
            .map(|n| s[n] + if n == 0 { 0.0 } else { t[n - 1] })
            .collect();
        let offdiag = t.iter().zip(s).map(|(tn, sn)| (sn * tn).sqrt()).collect();
        Self::finite(diag, offdiag)
    }

    /// Rule-generated `B Bᵀ`; `s(n)`, `t(n)` are 1-based and `t(0)` is never called.
    pub fn from_bidiagonal_rules<S, T>(s: S, t: T) -> Self
    where
        S: Fn(usize) -> f64 + Send + Sync + 'static,
        T: Fn(usize) -> f64 + Send + Sync + 'static,
    {
        Self::from_rule(Arc::new(move |n: usize| {
            let sn = s(n);
            let prev = if n == 1 { 0.0 } else { t(n - 1) };
            (sn + prev, (sn * t(n)).sqrt())
        }))
    }

    /// `None` for rule-generated matrices.
    pub fn size(&self) -> Option<usize> {
        match &self.extent {
            Extent::Finite { diag, .. } => Some(diag.len()),
            Extent::Rule(_) => None,
        }
    }

    /// `(a_n, b_n)` for 1-based `n`; `b_N = 0` at the last row of a finite matrix.
    pub fn coefficient(&self, n: usize) -> (f64, f64) {
        assert!(n >= 1, "coefficients are 1-based");
        match &self.extent {
            Extent::Finite { diag, offdiag } => {
                (diag[n - 1], offdiag.get(n - 1).copied().unwrap_or(0.0))
            }
            Extent::Rule(rule) => rule(n),
        }
    }

    /// Top-left `m × m` block as diagonal and off-diagonal vectors.
    pub fn block(&self, m: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        if m == 0 {
            return Err(Error::Domain("block size must be at least 1".into()));
        }
        if let Some(n) = self.size() {
            if m > n {
                return Err(Error::Domain(format!("block size {m} exceeds matrix size {n}")));
            }
        }
        let mut diag = Vec::with_capacity(m);
        let mut offdiag = Vec::with_capacity(m.saturating_sub(1));
        for n in 1..=m {
            let (a, b) = self.coefficient(n);
            diag.push(a);
            if n < m {
                offdiag.push(b);
            }
        }
        Ok((diag, offdiag))
    }

    /// Top-left `m × m` block as a finite matrix.
    pub fn truncate(&self, m: usize) -> Result<Self> {
        let (d, o) = self.block(m)?;
        Self::finite(d, o)
    }

    pub fn to_json(&self) -> Result<JacobiMatrixJson> {
        match &self.extent {
            Extent::Finite { diag, offdiag } => Ok(JacobiMatrixJson {
                diag: diag.clone(),
                offdiag: offdiag.clone(),
            }),
            Extent::Rule(_) => Err(Error::Contract(
                "rule-generated matrices must be truncated before serialization".into(),
            )),
        }
    }

    pub fn from_json(json: JacobiMatrixJson) -> Result<Self> {
        Self::finite(json.diag, json.offdiag)
    }

    /// Exact (1,1) entry of `J^k` by repeated application to `e_1`.
    ///
    /// A closed walk of length `k` from row 1 never leaves rows `1..=k/2+1`,
    /// so the computation runs on the block of size `k/2 + 2` (or the whole
    /// matrix when smaller) and is independent of any larger truncation.
    pub fn power_entry11(&self, k: usize) -> f64 {
        let needed = k / 2 + 2;
        let m = self.size().map_or(needed, |n| n.min(needed));
        let (diag, offdiag) = self.block(m).expect("block within bounds");
        power_entry11_on_block(&diag, &offdiag, k)
    }

    /// `J^k(1,1)` for `k = 0..=kmax`, sharing one sweep.
    pub fn spectral_moments(&self, kmax: usize) -> Vec<f64> {
        let needed = kmax / 2 + 2;
        let m = self.size().map_or(needed, |n| n.min(needed));
        let (diag, offdiag) = self.block(m).expect("block within bounds");
        let mut v = vec![0.0; m];
        v[0] = 1.0;
        let mut out = Vec::with_capacity(kmax + 1);
        out.push(1.0);
        let mut w = vec![0.0; m];
        for _ in 0..kmax {
            apply_tridiagonal(&diag, &offdiag, &v, &mut w);
            std::mem::swap(&mut v, &mut w);
            out.push(v[0]);
        }
        out
    }

    /// Eigenvalues (increasing) and squared first eigenvector components of
    /// the top-left `n × n` block.
    pub fn eig_with_first_components(&self, n: usize) -> Result<SpectralDecomposition> {
        let (diag, offdiag) = self.block(n)?;
        ql_first_row(diag, offdiag)
    }

    /// Spectral measure `Σ v_i(1)² δ_{λ_i}` of the top-left `n × n` block.
    pub fn spectral_measure(&self, n: usize) -> Result<DiscreteMeasure> {
        let dec = self.eig_with_first_components(n)?;
        DiscreteMeasure::new(dec.eigenvalues, dec.first_components_squared)
    }
}

fn apply_tridiagonal(diag: &[f64], offdiag: &[f64], v: &[f64], out: &mut [f64]) {
    let m = diag.len();
    for i in 0..m {
        let mut acc = diag[i] * v[i];
        if i > 0 {
            acc += offdiag[i - 1] * v[i - 1];
        }
        if i + 1 < m {
            acc += offdiag[i] * v[i + 1];
        }
        out[i] = acc;
    }
}

fn power_entry11_on_block(diag: &[f64], offdiag: &[f64], k: usize) -> f64 {
    let m = diag.len();
    let mut v = vec![0.0; m];
    v[0] = 1.0;
    let mut w = vec![0.0; m];
    for _ in 0..k {
        apply_tridiagonal(diag, offdiag, &v, &mut w);
        std::mem::swap(&mut v, &mut w);
    }
    v[0]
}

/// Output of [`JacobiMatrix::eig_with_first_components`].
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    pub first_components_squared: Vec<f64>,
}

/// Implicit-shift QL with Wilkinson shifts; rotations are applied only to the
/// first row of the accumulated eigenvector matrix.
fn ql_first_row(mut d: Vec<f64>, offdiag: Vec<f64>) -> Result<SpectralDecomposition> {
    let n = d.len();
    let mut e = offdiag;
    e.push(0.0);
    let mut z = vec![0.0; n];
    z[0] = 1.0;

    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > MAX_QL_ITERATIONS {
                return Err(Error::NoConvergence { index: l, iterations: MAX_QL_ITERATIONS });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut underflow = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                let zf = z[i + 1];
                z[i + 1] = s * z[i] + c * zf;
                z[i] = c * z[i] - s * zf;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].total_cmp(&d[j]));
    Ok(SpectralDecomposition {
        eigenvalues: order.iter().map(|&i| d[i]).collect(),
        first_components_squared: order.iter().map(|&i| z[i] * z[i]).collect(),
    })
}

/// One atom of a discrete measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub location: f64,
    pub weight: f64,
}

/// Finite probability measure, canonically ordered by location.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteMeasure {
    atoms: Vec<Atom>,
}

/// Weights below this are treated as exact zeros.
pub const WEIGHT_FLOOR: f64 = 1e-300;
/// Allowed deviation of the total mass from 1 before renormalization.
pub const MASS_TOLERANCE: f64 = 1e-12;

impl DiscreteMeasure {
    /// Canonicalizes: sorts by location, merges coincident atoms, clamps tiny
    /// weights to zero and renormalizes.
    pub fn new(locations: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if locations.len() != weights.len() || locations.is_empty() {
            return Err(Error::Domain(format!(
                "measure needs equally many (>= 1) locations and weights, got {} and {}",
                locations.len(),
                weights.len()
            )));
        }
        for (i, (&x, &w)) in locations.iter().zip(&weights).enumerate() {
            if !x.is_finite() {
                return Err(Error::Domain(format!("atom {i} has non-finite location")));
            }
            if !(w >= 0.0) || !w.is_finite() {
                return Err(Error::Domain(format!("atom {i} has invalid weight {w}")));
            }
        }
        let mut atoms: Vec<Atom> = locations
            .into_iter()
            .zip(weights)
            .map(|(location, w)| Atom { location, weight: if w < WEIGHT_FLOOR { 0.0 } else { w } })
            .collect();
        atoms.sort_by(|x, y| x.location.total_cmp(&y.location));
        let mut merged: Vec<Atom> = Vec::with_capacity(atoms.len());
        for a in atoms {
            match merged.last_mut() {
                Some(last) if last.location == a.location => last.weight += a.weight,
                _ => merged.push(a),
            }
        }
        let total = neumaier_sum(merged.iter().map(|a| a.weight));
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::Consistency(format!("total mass {total} differs from 1")));
        }
        for a in &mut merged {
            a.weight /= total;
        }
        Ok(Self { atoms: merged })
    }

    /// Uniform weights `1/n` on the given points.
    pub fn uniform(locations: Vec<f64>) -> Result<Self> {
        let n = locations.len();
        Self::new(locations, vec![1.0 / n as f64; n])
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn locations(&self) -> Vec<f64> {
        self.atoms.iter().map(|a| a.location).collect()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.atoms.iter().map(|a| a.weight).collect()
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        neumaier_sum(self.atoms.iter().map(|a| a.weight * f(a.location)))
    }

    pub fn moment(&self, k: i32) -> f64 {
        self.integrate(|x| x.powi(k))
    }

    /// CSV with header `location,weight`, 18 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "location,weight")?;
        for a in &self.atoms {
            writeln!(out, "{:.17e},{:.17e}", a.location, a.weight)?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        match lines.next() {
            Some(Ok(h)) if h.trim() == "location,weight" => {}
            _ => return Err(Error::Domain("missing `location,weight` header".into())),
        }
        let (mut xs, mut ws) = (Vec::new(), Vec::new());
        for (i, line) in lines.enumerate() {
            let line = line.map_err(|e| Error::Domain(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split(',');
            let parse = |f: Option<&str>| -> Result<f64> {
                f.and_then(|s| s.trim().parse().ok())
                    .ok_or_else(|| Error::Domain(format!("bad CSV row {}", i + 2)))
            };
            xs.push(parse(fields.next())?);
            ws.push(parse(fields.next())?);
        }
        Self::new(xs, ws)
    }
}
