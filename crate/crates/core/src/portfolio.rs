//! Pairwise DCC(1,1) correlations, hedge ratios and minimum-variance weights.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::{self, Options};
use crate::series::{mean, variance};
use crate::special::logistic;
#[allow(unused_imports)] // std inherents shadow it when std is linked
use num_traits::Float;

pub const MIN_DCC_LEN: usize = 250;
/// Below this news coefficient the decay coefficient is not identified.
pub const UNIDENTIFIED_A: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DccFit {
    pub a: f64,
    pub b: f64,
    /// Correlation target (2x2, row-major).
    pub qbar: [f64; 4],
    pub rho: Vec<f64>,
    pub h_ii: Vec<f64>,
    pub h_jj: Vec<f64>,
    pub h_ij: Vec<f64>,
    /// Correlation part of the Gaussian quasi-likelihood.
    pub loglik: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl DccFit {
    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathSummary {
    pub mean: f64,
    pub std_dev: f64,
    pub min: f64,
    pub max: f64,
    /// Number of defined values summarized.
    pub n: usize,
}

/// Summary over the finite values; NaN fields when fewer than two exist.
pub fn summarize(x: impl IntoIterator<Item = f64>) -> PathSummary {
    let v: Vec<f64> = x.into_iter().filter(|x| x.is_finite()).collect();
    if v.len() < 2 {
        let only = v.first().copied().unwrap_or(f64::NAN);
        return PathSummary {
            mean: only,
            std_dev: f64::NAN,
            min: only,
            max: only,
            n: v.len(),
        };
    }
    PathSummary {
        mean: mean(&v),
        std_dev: variance(&v).sqrt(),
        min: v.iter().copied().fold(f64::INFINITY, f64::min),
        max: v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        n: v.len(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HedgePath {
    pub beta: Vec<f64>,
    pub summary: PathSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightPath {
    /// Unclamped weight of asset i; `None` where the denominator vanishes.
    pub raw: Vec<Option<f64>>,
    /// Weight of asset i clamped into [0, 1].
    pub w: Vec<Option<f64>>,
    /// True where clamping changed the value.
    pub clamped: Vec<bool>,
    pub summary: PathSummary,
}

/// Sample correlation target with unit diagonal.
pub fn correlation_target(z_i: &[f64], z_j: &[f64]) -> Result<[f64; 4]> {
    let (mi, mj) = (mean(z_i), mean(z_j));
    let (mut sij, mut sii, mut sjj) = (0.0, 0.0, 0.0);
    for (&x, &y) in z_i.iter().zip(z_j) {
        sij += (x - mi) * (y - mj);
        sii += (x - mi) * (x - mi);
        sjj += (y - mj) * (y - mj);
    }
    if sii <= 0.0 || sjj <= 0.0 {
        return Err(Error::Degenerate("standardized residuals are constant"));
    }
    let r = sij / (sii * sjj).sqrt();
    Ok([1.0, r, r, 1.0])
}

/// Conditional correlations from
/// `Q_t = (1 - a - b) Qbar + a z_{t-1} z_{t-1}' + b Q_{t-1}`, `Q_1 = Qbar`.
pub fn dcc_correlations(a: f64, b: f64, qbar: &[f64; 4], z_i: &[f64], z_j: &[f64]) -> Vec<f64> {
    let n = z_i.len().min(z_j.len());
    let c = 1.0 - a - b;
    let (mut q11, mut q12, mut q22) = (qbar[0], qbar[1], qbar[3]);
    let mut rho = Vec::with_capacity(n);
    for t in 0..n {
        if t > 0 {
            let (x, y) = (z_i[t - 1], z_j[t - 1]);
            q11 = c * qbar[0] + a * x * x + b * q11;
            q12 = c * qbar[1] + a * x * y + b * q12;
            q22 = c * qbar[3] + a * y * y + b * q22;
        }
        rho.push(q12 / (q11 * q22).sqrt());
    }
    rho
}

fn correlation_quasi_loglik(rho: &[f64], z_i: &[f64], z_j: &[f64]) -> f64 {
    let mut ll = 0.0;
    for ((&r, &x), &y) in rho.iter().zip(z_i).zip(z_j) {
        let d = 1.0 - r * r;
        if !(d > 0.0) {
            return f64::NEG_INFINITY;
        }
        ll -= 0.5 * (d.ln() + (x * x + y * y - 2.0 * r * x * y) / d - x * x - y * y);
    }
    ll
}

fn check_inputs(z_i: &[f64], z_j: &[f64], h_i: &[f64], h_j: &[f64]) -> Result<()> {
    let n = z_i.len();
    for other in [z_j.len(), h_i.len(), h_j.len()] {
        if other != n {
            return Err(Error::LengthMismatch(n, other));
        }
    }
    if n < MIN_DCC_LEN {
        return Err(Error::TooShort {
            needed: MIN_DCC_LEN,
            got: n,
        });
    }
    if z_i.iter().chain(z_j).any(|x| !x.is_finite()) {
        return Err(Error::Precondition("standardized residuals must be finite".into()));
    }
    if h_i.iter().chain(h_j).any(|h| !(*h > 0.0 && h.is_finite())) {
        return Err(Error::Precondition("conditional variances must be positive".into()));
    }
    Ok(())
}

fn assemble(a: f64, b: f64, qbar: [f64; 4], z_i: &[f64], z_j: &[f64], h_i: &[f64], h_j: &[f64]) -> Result<DccFit> {
    let rho = dcc_correlations(a, b, &qbar, z_i, z_j);
    if rho.iter().any(|r| !(r.abs() <= 1.0)) {
        return Err(Error::Infeasible("correlation path left [-1, 1]"));
    }
    let h_ij = rho
        .iter()
        .zip(h_i.iter().zip(h_j))
        .map(|(r, (x, y))| r * (x * y).sqrt())
        .collect();
    Ok(DccFit {
        a,
        b,
        qbar,
        loglik: correlation_quasi_loglik(&rho, z_i, z_j),
        rho,
        h_ii: h_i.to_vec(),
        h_jj: h_j.to_vec(),
        h_ij,
        converged: true,
        iterations: 0,
    })
}

/// DCC path with fixed `(a, b)`.
pub fn fit_dcc_fixed(z_i: &[f64], z_j: &[f64], h_i: &[f64], h_j: &[f64], a: f64, b: f64) -> Result<DccFit> {
    check_inputs(z_i, z_j, h_i, h_j)?;
    if !(a >= 0.0 && b >= 0.0 && a + b < 1.0) {
        return Err(Error::Infeasible("DCC requires a, b >= 0 and a + b < 1"));
    }
    assemble(a, b, correlation_target(z_i, z_j)?, z_i, z_j, h_i, h_j)
}

/// Two-step DCC(1,1): correlation targeting, then quasi-ML for `(a, b)`.
pub fn fit_dcc(z_i: &[f64], z_j: &[f64], h_i: &[f64], h_j: &[f64]) -> Result<DccFit> {
    check_inputs(z_i, z_j, h_i, h_j)?;
    let qbar = correlation_target(z_i, z_j)?;
    // a + b = logistic(s0), a = (a + b) logistic(s1)
    let decode = |s: &[f64]| {
        let p = logistic(s[0]);
        let a = p * logistic(s[1]);
        (a, p - a)
    };
    let objective = |s: &[f64]| {
        if s.iter().any(|x| x.abs() > 30.0) {
            return f64::INFINITY;
        }
        let (a, b) = decode(s);
        let rho = dcc_correlations(a, b, &qbar, z_i, z_j);
        -correlation_quasi_loglik(&rho, z_i, z_j)
    };
    let opts = Options {
        max_iter: 1000,
        simplex_iter: 100,
        f_tol: 1e-10,
        g_tol: 1e-4,
    };
    let mut best: Option<optim::Minimum> = None;
    for x0 in [[3.0, -3.0], [0.0, -1.0], [-2.0, 0.0]] {
        let m = optim::minimize(objective, &x0, &[0.5, 0.5], &opts);
        if best.as_ref().is_none_or(|b| m.f < b.f) {
            best = Some(m);
        }
    }
    let m = best.expect("at least one start");
    if !m.f.is_finite() {
        return Err(Error::Infeasible("DCC quasi-likelihood is not finite"));
    }
    if !m.converged {
        return Err(Error::NonConvergence(m.iterations));
    }
    let (a, mut b) = decode(&m.x);
    if a < UNIDENTIFIED_A {
        // with no news term the likelihood is flat in b; report the constant-correlation limit
        b = 0.0;
    }
    let mut fit = assemble(a, b, qbar, z_i, z_j, h_i, h_j)?;
    fit.iterations = m.iterations;
    Ok(fit)
}

/// Units of asset j shorted per unit of asset i: `h_ij / h_jj`.
pub fn hedge_ratio_at(h_ij: f64, h_jj: f64) -> f64 {
    h_ij / h_jj
}

/// Minimum-variance weight of asset i, `(h_jj - h_ij) / (h_ii - 2 h_ij + h_jj)`, unclamped.
pub fn portfolio_weight_at(h_ii: f64, h_jj: f64, h_ij: f64) -> Option<f64> {
    let d = h_ii - 2.0 * h_ij + h_jj;
    (d != 0.0 && d.is_finite()).then(|| (h_jj - h_ij) / d)
}

fn hedge_path(beta: Vec<f64>) -> HedgePath {
    let summary = summarize(beta.iter().copied());
    HedgePath { beta, summary }
}

/// Long i hedged with j.
pub fn hedge_ratio(fit: &DccFit) -> HedgePath {
    hedge_path(
        fit.h_ij
            .iter()
            .zip(&fit.h_jj)
            .map(|(c, v)| hedge_ratio_at(*c, *v))
            .collect(),
    )
}

/// Long j hedged with i.
pub fn hedge_ratio_reverse(fit: &DccFit) -> HedgePath {
    hedge_path(
        fit.h_ij
            .iter()
            .zip(&fit.h_ii)
            .map(|(c, v)| hedge_ratio_at(*c, *v))
            .collect(),
    )
}

/// Weight of asset i in a fully invested two-asset portfolio, clamped to [0, 1].
pub fn portfolio_weights(fit: &DccFit) -> WeightPath {
    let raw: Vec<Option<f64>> = (0..fit.len())
        .map(|t| portfolio_weight_at(fit.h_ii[t], fit.h_jj[t], fit.h_ij[t]))
        .collect();
    let w: Vec<Option<f64>> = raw.iter().map(|r| r.map(|x| x.clamp(0.0, 1.0))).collect();
    let clamped = raw.iter().zip(&w).map(|(r, c)| r != c).collect();
    let summary = summarize(w.iter().flatten().copied());
    WeightPath {
        raw,
        w,
        clamped,
        summary,
    }
}

/// Correlated Gaussian pairs with constant correlation (test and demo data).
pub fn simulate_constant_correlation(n: usize, rho: f64, seed: u64) -> (Vec<f64>, Vec<f64>) {
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let s = (1.0 - rho * rho).sqrt();
    let mut x = vec![0.0; n];
    let mut y = vec![0.0; n];
    for t in 0..n {
        let e1: f64 = StandardNormal.sample(&mut rng);
        let e2: f64 = StandardNormal.sample(&mut rng);
        x[t] = e1;
        y[t] = rho * e1 + s * e2;
    }
    (x, y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ones(n: usize) -> Vec<f64> {
        vec![1.0; n]
    }

    #[test]
    fn spot_values() {
        assert_eq!(hedge_ratio_at(0.42, 1.0), 0.42);
        assert_eq!(hedge_ratio_at(0.7, 0.7), 1.0);
        assert_eq!(portfolio_weight_at(2.0, 2.0, 0.3), Some(0.5));
        assert_eq!(portfolio_weight_at(4.0, 1.0, 0.0), Some(0.2));
        assert_eq!(portfolio_weight_at(1.0, 1.0, 1.0), None);
    }

    #[test]
    fn negative_weight_is_clamped_and_flagged() {
        // raw weight (1 - 1.4) / (4 - 2.8 + 1) = -0.4 / 2.2 < 0
        let n = 300;
        let (z1, z2) = simulate_constant_correlation(n, 0.5, 1);
        let mut fit = fit_dcc_fixed(&z1, &z2, &ones(n), &ones(n), 0.0, 0.0).unwrap();
        fit.h_ii[0] = 4.0;
        fit.h_ij[0] = 1.4;
        let w = portfolio_weights(&fit);
        assert!(w.raw[0].unwrap() < 0.0);
        assert_eq!(w.w[0], Some(0.0));
        assert!(w.clamped[0]);
        assert!(w.w.iter().flatten().all(|x| (0.0..=1.0).contains(x)));
    }

    #[test]
    fn fixed_zero_parameters_give_constant_target() {
        let n = 400;
        let (z1, z2) = simulate_constant_correlation(n, 0.3, 2);
        let fit = fit_dcc_fixed(&z1, &z2, &ones(n), &ones(n), 0.0, 0.0).unwrap();
        let r = fit.qbar[1];
        assert!(fit.rho.iter().all(|x| (x - r).abs() < 1e-15));
        assert!(fit_dcc_fixed(&z1, &z2, &ones(n), &ones(n), 0.5, 0.5).is_err());
    }

    #[test]
    fn constant_correlation_recovery() {
        let (z1, z2) = simulate_constant_correlation(5000, 0.4, 3);
        let fit = fit_dcc(&z1, &z2, &ones(5000), &ones(5000)).unwrap();
        let m = summarize(fit.rho.iter().copied()).mean;
        assert!((m - 0.4).abs() < 0.03, "{m}");
        assert!(fit.a + fit.b < 0.15 || fit.a < 0.01, "a={} b={}", fit.a, fit.b);
        assert!(fit.rho.iter().all(|r| r.abs() <= 1.0));
    }

    #[test]
    fn recovers_dynamic_correlation_parameters() {
        use rand::SeedableRng;
        use rand_distr::{Distribution, StandardNormal};
        let (a, b) = (0.05, 0.9);
        let n = 4000;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(10);
        let (mut q11, mut q12, mut q22) = (1.0f64, 0.5f64, 1.0f64);
        let (mut z1, mut z2) = (vec![0.0; n], vec![0.0; n]);
        for t in 0..n {
            if t > 0 {
                let (x, y) = (z1[t - 1], z2[t - 1]);
                q11 = (1.0 - a - b) + a * x * x + b * q11;
                q12 = (1.0 - a - b) * 0.5 + a * x * y + b * q12;
                q22 = (1.0 - a - b) + a * y * y + b * q22;
            }
            let r: f64 = q12 / (q11 * q22).sqrt();
            let e1: f64 = StandardNormal.sample(&mut rng);
            let e2: f64 = StandardNormal.sample(&mut rng);
            z1[t] = e1;
            z2[t] = r * e1 + (1.0 - r * r).sqrt() * e2;
        }
        let fit = fit_dcc(&z1, &z2, &ones(n), &ones(n)).unwrap();
        assert!((fit.a - a).abs() < 0.03, "{}", fit.a);
        assert!((fit.b - b).abs() < 0.06, "{}", fit.b);
    }

    #[test]
    fn replay_reproduces_path() {
        let (z1, z2) = simulate_constant_correlation(1000, -0.2, 4);
        let h1: Vec<f64> = (0..1000).map(|t| 1.0 + 0.5 * ((t as f64) / 50.0).sin()).collect();
        let fit = fit_dcc(&z1, &z2, &h1, &ones(1000)).unwrap();
        let again = dcc_correlations(fit.a, fit.b, &fit.qbar, &z1, &z2);
        for (x, y) in fit.rho.iter().zip(&again) {
            assert!((x - y).abs() < 1e-10);
        }
        for t in 0..1000 {
            assert!((fit.h_ij[t] - fit.rho[t] * h1[t].sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn independent_residuals_near_zero() {
        let (z1, z2) = simulate_constant_correlation(3000, 0.0, 5);
        let fit = fit_dcc(&z1, &z2, &ones(3000), &ones(3000)).unwrap();
        assert!(summarize(fit.rho.iter().copied()).mean.abs() < 0.05);
    }

    #[test]
    fn short_or_mismatched_inputs() {
        let (z1, z2) = simulate_constant_correlation(100, 0.0, 6);
        assert!(matches!(
            fit_dcc(&z1, &z2, &ones(100), &ones(100)),
            Err(Error::TooShort { .. })
        ));
        assert!(matches!(
            fit_dcc(&z1, &z2[..99], &ones(100), &ones(100)),
            Err(Error::LengthMismatch(..))
        ));
    }

    proptest! {
        #[test]
        fn weights_are_complementary(hii in 0.1f64..5.0, hjj in 0.1f64..5.0, r in -0.95f64..0.95) {
            let hij = r * (hii * hjj).sqrt();
            let wi = portfolio_weight_at(hii, hjj, hij).unwrap();
            let wj = portfolio_weight_at(hjj, hii, hij).unwrap();
            prop_assert!((wi + wj - 1.0).abs() < 1e-12);
        }

        #[test]
        fn hedge_ratio_scale_law(c in 0.2f64..5.0, seed in 0u64..20) {
            let n = 300;
            let (z1, z2) = simulate_constant_correlation(n, 0.3, seed);
            let h1: Vec<f64> = (0..n).map(|t| 1.0 + (t % 7) as f64 * 0.1).collect();
            let h2: Vec<f64> = (0..n).map(|t| 0.5 + (t % 5) as f64 * 0.2).collect();
            let h2s: Vec<f64> = h2.iter().map(|h| h * c * c).collect();
            let base = fit_dcc_fixed(&z1, &z2, &h1, &h2, 0.03, 0.9).unwrap();
            let scaled = fit_dcc_fixed(&z1, &z2, &h1, &h2s, 0.03, 0.9).unwrap();
            let b0 = hedge_ratio(&base);
            let b1 = hedge_ratio(&scaled);
            for t in 0..n {
                prop_assert!((scaled.h_ij[t] - c * base.h_ij[t]).abs() < 1e-12 * (1.0 + base.h_ij[t].abs()));
                prop_assert!((b1.beta[t] - b0.beta[t] / c).abs() < 1e-12 * (1.0 + b0.beta[t].abs()));
            }
        }
    }
}
