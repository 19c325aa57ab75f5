//! Gamma, Beta and Dirichlet sampling plus exact beta moments.
//!
//! Gamma variates come from the Marsaglia–Tsang squeeze method, carried in log
//! space so that the very small shapes arising at high temperature
//! (shape ≈ c/N) do not underflow. Beta variates are the ratio of two Gamma
//! variates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RandomStream;
use crate::stats::neumaier_sum;

/// Shape parameters of Beta(alpha, beta), density ∝ x^(alpha-1) (1-x)^(beta-1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaParams {
    alpha: f64,
    beta: f64,
}

impl BetaParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::Parameter {
                name: "alpha",
                value: alpha,
                reason: "beta shape must be positive and finite",
            });
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::Parameter {
                name: "beta",
                value: beta,
                reason: "beta shape must be positive and finite",
            });
        }
        Ok(Self { alpha, beta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn mean(&self) -> f64 {
        self.alpha / (self.alpha + self.beta)
    }
}

/// Natural log of a Gamma(shape, 1) variate.
pub fn sample_log_gamma(shape: f64, rng: &mut RandomStream) -> Result<f64> {
    if !(shape > 0.0 && shape.is_finite()) {
        return Err(Error::Parameter {
            name: "shape",
            value: shape,
            reason: "gamma shape must be positive and finite",
        });
    }
    Ok(log_gamma_unchecked(shape, rng))
}

fn log_gamma_unchecked(shape: f64, rng: &mut RandomStream) -> f64 {
    if shape < 1.0 {
        // G(shape) = G(shape + 1) * U^(1/shape)
        log_gamma_ge1(shape + 1.0, rng) + rng.open01().ln() / shape
    } else {
        log_gamma_ge1(shape, rng)
    }
}

fn log_gamma_ge1(shape: f64, rng: &mut RandomStream) -> f64 {
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let x = rng.standard_normal();
        let v = 1.0 + c * x;
        if v <= 0.0 {
            continue;
        }
        let v = v * v * v;
        let u = rng.open01();
        let x2 = x * x;
        if u < 1.0 - 0.0331 * x2 * x2 || u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
            return d.ln() + v.ln();
        }
    }
}

pub fn sample_gamma(shape: f64, rng: &mut RandomStream) -> Result<f64> {
    sample_log_gamma(shape, rng).map(f64::exp)
}

/// One Beta draw, clamped into the open interval (0, 1).
pub fn sample_beta(params: BetaParams, rng: &mut RandomStream) -> f64 {
    let lx = log_gamma_unchecked(params.alpha, rng);
    let ly = log_gamma_unchecked(params.beta, rng);
    // x / (x + y) = logistic(lx - ly)
    let z = lx - ly;
    let v = if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    };
    v.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

/// E[X^k] = ∏_{r=0}^{k-1} (alpha + r) / (alpha + beta + r).
pub fn beta_moment(params: BetaParams, k: u32) -> f64 {
    (0..k)
        .map(|r| {
            let r = f64::from(r);
            (params.alpha + r) / (params.alpha + params.beta + r)
        })
        .product()
}

/// Symmetric Dirichlet(concentration, ..., concentration) weights of length `n`.
pub fn sample_dirichlet(n: usize, concentration: f64, rng: &mut RandomStream) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::Domain("dirichlet dimension must be at least 1".into()));
    }
    if !(concentration > 0.0 && concentration.is_finite()) {
        return Err(Error::Parameter {
            name: "concentration",
            value: concentration,
            reason: "dirichlet concentration must be positive and finite",
        });
    }
    if n == 1 {
        return Ok(vec![1.0]);
    }
    let logs: Vec<f64> = (0..n)
        .map(|_| sample_log_gamma(concentration, rng))
        .collect::<Result<_>>()?;
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut w: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
    let total = neumaier_sum(w.iter().copied());
    for x in &mut w {
        *x /= total;
    }
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::Summary;

    fn params(a: f64, b: f64) -> BetaParams {
        BetaParams::new(a, b).unwrap()
    }

    // Composite Simpson on (0,1) of x^k * density, with the endpoint
    // singularities absent for shapes >= 1.
    fn quadrature_moment(a: f64, b: f64, k: i32) -> f64 {
        let n = 20_000;
        let h = 1.0 / n as f64;
        let f = |x: f64| x.powi(k) * x.powf(a - 1.0) * (1.0 - x).powf(b - 1.0);
        let g = |x: f64| x.powf(a - 1.0) * (1.0 - x).powf(b - 1.0);
        let simpson = |fun: &dyn Fn(f64) -> f64| {
            let mut s = fun(0.0) + fun(1.0);
            for i in 1..n {
                let x = i as f64 * h;
                s += if i % 2 == 1 { 4.0 } else { 2.0 } * fun(x);
            }
            s * h / 3.0
        };
        simpson(&f) / simpson(&g)
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(BetaParams::new(0.0, 1.0).is_err());
        assert!(BetaParams::new(1.0, -2.0).is_err());
        assert!(BetaParams::new(f64::NAN, 1.0).is_err());
        assert!(sample_dirichlet(0, 1.0, &mut RandomStream::new(0)).is_err());
        assert!(sample_dirichlet(3, 0.0, &mut RandomStream::new(0)).is_err());
    }

    #[test]
    fn moment_formula_matches_quadrature() {
        // Standard convention: the product starts at r = 0.
        let q = quadrature_moment(2.0, 3.0, 2);
        assert!((q - 0.2).abs() < 1e-10, "quadrature gave {q}");
        assert_eq!(beta_moment(params(2.0, 3.0), 0), 1.0);
        assert!((beta_moment(params(2.0, 3.0), 1) - 0.4).abs() < 1e-15);
        assert!((beta_moment(params(2.0, 3.0), 2) - q).abs() < 1e-10);
        for &(a, b) in &[(2.0, 5.0), (3.0, 1.0), (4.0, 7.0)] {
            for k in 0..6 {
                let exact = beta_moment(params(a, b), k);
                let quad = quadrature_moment(a, b, k as i32);
                assert!((exact - quad).abs() < 1e-9, "a={a} b={b} k={k}");
            }
        }
    }

    #[test]
    fn moments_strictly_decrease() {
        for &(a, b) in &[(0.01, 0.02), (2.0, 3.0), (50.0, 0.5)] {
            let p = params(a, b);
            let mut prev = beta_moment(p, 0);
            assert_eq!(prev, 1.0);
            for k in 1..20 {
                let m = beta_moment(p, k);
                assert!(m > 0.0 && m < prev);
                prev = m;
            }
        }
    }

    #[test]
    fn uniform_and_beta23_sample_moments() {
        let mut rng = RandomStream::new(2024);
        let n = 100_000;
        let uni: Vec<f64> = (0..n).map(|_| sample_beta(params(1.0, 1.0), &mut rng)).collect();
        assert!(uni.iter().all(|&x| x > 0.0 && x < 1.0));
        let s = Summary::from_slice(&uni);
        assert!((s.mean - 0.5).abs() <= 3.0 * s.standard_error());

        let xs: Vec<f64> = (0..n).map(|_| sample_beta(params(2.0, 3.0), &mut rng)).collect();
        let s = Summary::from_slice(&xs);
        assert!((s.mean - 0.4).abs() <= 3.0 * s.standard_error());
        let sq: Vec<f64> = xs.iter().map(|x| x * x).collect();
        let s2 = Summary::from_slice(&sq);
        assert!((s2.mean - 0.2).abs() <= 3.0 * s2.standard_error());
    }

    #[test]
    fn tiny_shapes_stay_inside_unit_interval() {
        let mut rng = RandomStream::new(5);
        for _ in 0..10_000 {
            let x = sample_beta(params(0.005, 2.0), &mut rng);
            assert!(x > 0.0 && x < 1.0 && x.is_finite());
        }
    }

    #[test]
    fn sampler_moments_match_formula_on_random_params() {
        let mut pick = RandomStream::new(99);
        let mut rng = RandomStream::new(100);
        for _ in 0..10 {
            let a = 0.2 + 5.0 * pick.open01();
            let b = 0.2 + 5.0 * pick.open01();
            let p = params(a, b);
            let xs: Vec<f64> = (0..100_000).map(|_| sample_beta(p, &mut rng)).collect();
            for k in 1..=4 {
                let pw: Vec<f64> = xs.iter().map(|x| x.powi(k)).collect();
                let s = Summary::from_slice(&pw);
                let exact = beta_moment(p, k as u32);
                assert!(
                    (s.mean - exact).abs() <= 4.0 * s.standard_error(),
                    "a={a} b={b} k={k}: {} vs {exact}",
                    s.mean
                );
            }
        }
    }

    #[test]
    fn dirichlet_single_atom_and_sums() {
        let mut rng = RandomStream::new(3);
        assert_eq!(sample_dirichlet(1, 0.3, &mut rng).unwrap(), vec![1.0]);
        for &n in &[2usize, 10, 1000, 10_000] {
            for &conc in &[0.001, 0.5, 3.0] {
                let w = sample_dirichlet(n, conc, &mut rng).unwrap();
                assert!(w.iter().all(|&x| x >= 0.0));
                assert!((neumaier_sum(w.iter().copied()) - 1.0).abs() <= 1e-14);
            }
        }
    }

    #[test]
    fn dirichlet_marginal_mean_and_variance() {
        let mut rng = RandomStream::new(4);
        let draws: Vec<Vec<f64>> = (0..100_000)
            .map(|_| sample_dirichlet(4, 0.5, &mut rng).unwrap())
            .collect();
        for i in 0..4 {
            let xs: Vec<f64> = draws.iter().map(|w| w[i]).collect();
            let s = Summary::from_slice(&xs);
            assert!((s.mean - 0.25).abs() <= 3.0 * s.standard_error());
        }

        // Var = a_i (a_0 - a_i) / (a_0^2 (a_0 + 1)) = 1 * 2 / (9 * 4) = 1/18.
        let target = 1.0 * 2.0 / (9.0 * 4.0);
        assert!((target - 1.0 / 18.0_f64).abs() < 1e-16);
        let draws: Vec<Vec<f64>> = (0..100_000)
            .map(|_| sample_dirichlet(3, 1.0, &mut rng).unwrap())
            .collect();
        for i in 0..3 {
            let xs: Vec<f64> = draws.iter().map(|w| w[i]).collect();
            let s = Summary::from_slice(&xs);
            // Sample variance SE via the fourth central moment.
            let m4 = xs.iter().map(|x| (x - s.mean).powi(4)).sum::<f64>() / xs.len() as f64;
            let se = ((m4 - s.variance * s.variance) / xs.len() as f64).sqrt();
            assert!((s.variance - target).abs() <= 3.0 * se, "{} vs {target}", s.variance);
        }
    }
}
