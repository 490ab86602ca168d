//! ARMA(p,q)-GARCH(m,n) marginal filter with unit-variance Student-t
//! innovations, fitted by maximum likelihood.
//!
//! Mean:      r_t = mu + sum_i ar_i r_{t-i} + sum_j ma_j e_{t-j} + e_t
//! Variance:  s2_t = omega + sum_i alpha_i e_{t-i}^2 + sum_j beta_j s2_{t-j}
//!
//! Pre-sample values: returns equal the sample mean, mean-equation
//! innovations are zero, and both lagged variances and lagged squared
//! innovations equal the sample variance of the mean-equation residuals.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StudentT};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{inverse_spd, ols};
use crate::optim::{self, Options};
use crate::series::{mean, variance};
use crate::special::{chi2_sf, std_t_log_norm};
#[allow(unused_imports)] // std inherents shadow it when std is linked
use num_traits::Float;

/// Draws discarded at the start of every simulation.
pub const BURN_IN: usize = 500;
pub const MIN_FIT_LEN: usize = 250;
const MAX_ORDER: usize = 3;
const MAX_DOF: f64 = 500.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MarginalSpec {
    /// AR order
    pub p: usize,
    /// MA order
    pub q: usize,
    /// ARCH order
    pub m: usize,
    /// GARCH order
    pub n: usize,
}

impl Default for MarginalSpec {
    /// ARMA(1,0)-GARCH(2,1).
    fn default() -> Self {
        Self { p: 1, q: 0, m: 2, n: 1 }
    }
}

impl MarginalSpec {
    pub fn new(p: usize, q: usize, m: usize, n: usize) -> Result<Self> {
        let s = Self { p, q, m, n };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.p > MAX_ORDER || self.q > MAX_ORDER || self.m > MAX_ORDER || self.n > MAX_ORDER {
            return Err(Error::InvalidParameter(format!(
                "orders must be <= {MAX_ORDER}: {self:?}"
            )));
        }
        if self.m < 1 {
            return Err(Error::InvalidParameter("ARCH order must be >= 1".into()));
        }
        Ok(())
    }

    /// Free parameters: mu, AR, MA, omega, ARCH, GARCH, dof.
    pub fn n_params(&self) -> usize {
        3 + self.p + self.q + self.m + self.n
    }

    pub fn param_names(&self) -> Vec<String> {
        let mut names = vec![String::from("mu")];
        names.extend((1..=self.p).map(|i| format!("ar{i}")));
        names.extend((1..=self.q).map(|i| format!("ma{i}")));
        names.push("omega".into());
        names.extend((1..=self.m).map(|i| format!("alpha{i}")));
        names.extend((1..=self.n).map(|i| format!("beta{i}")));
        names.push("dof".into());
        names
    }

    /// AIC search grid: p, q in {0,1,2}, m in {1,2}, n = 1.
    pub fn search_grid() -> Vec<MarginalSpec> {
        let mut out = Vec::new();
        for p in 0..=2 {
            for q in 0..=2 {
                for m in 1..=2 {
                    out.push(MarginalSpec { p, q, m, n: 1 });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GarchParams {
    pub mu: f64,
    pub ar: Vec<f64>,
    pub ma: Vec<f64>,
    pub omega: f64,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub dof: f64,
}

impl GarchParams {
    pub fn spec(&self) -> MarginalSpec {
        MarginalSpec {
            p: self.ar.len(),
            q: self.ma.len(),
            m: self.alpha.len(),
            n: self.beta.len(),
        }
    }

    pub fn persistence(&self) -> f64 {
        self.alpha.iter().chain(&self.beta).sum()
    }

    /// Parameters in the order of [`MarginalSpec::param_names`].
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = vec![self.mu];
        v.extend(&self.ar);
        v.extend(&self.ma);
        v.push(self.omega);
        v.extend(&self.alpha);
        v.extend(&self.beta);
        v.push(self.dof);
        v
    }

    pub fn from_slice(spec: MarginalSpec, x: &[f64]) -> Self {
        let mut it = x.iter().copied();
        let mut take = |k: usize| -> Vec<f64> { (&mut it).take(k).collect() };
        let mu = take(1)[0];
        let ar = take(spec.p);
        let ma = take(spec.q);
        let omega = take(1)[0];
        let alpha = take(spec.m);
        let beta = take(spec.n);
        let dof = take(1)[0];
        Self {
            mu,
            ar,
            ma,
            omega,
            alpha,
            beta,
            dof,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.spec().validate()?;
        if self.to_vec().iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite parameter".into()));
        }
        if self.omega <= 0.0 {
            return Err(Error::InvalidParameter(format!("omega = {} must be > 0", self.omega)));
        }
        if self.dof <= 2.0 {
            return Err(Error::InvalidParameter(format!("dof = {} must be > 2", self.dof)));
        }
        if self.persistence() >= 1.0 {
            return Err(Error::InvalidParameter(format!(
                "sum(alpha) + sum(beta) = {} must be < 1",
                self.persistence()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MarginalWarning {
    /// Standard errors unavailable: the numerical Hessian is not positive definite.
    HessianNotPositiveDefinite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalFit {
    pub spec: MarginalSpec,
    pub params: GarchParams,
    /// Per-parameter standard errors, in [`MarginalSpec::param_names`] order.
    pub std_errors: Option<Vec<f64>>,
    pub loglik: f64,
    pub aic: f64,
    pub bic: f64,
    /// Standardized residuals `z_t = e_t / s_t`.
    pub residuals: Vec<f64>,
    /// Mean-equation innovations `e_t`.
    pub innovations: Vec<f64>,
    pub cond_var: Vec<f64>,
    /// Pre-sample returns level used by the AR terms.
    pub presample_mean: f64,
    /// Pre-sample variance used by the variance recursion.
    pub presample_var: f64,
    pub converged: bool,
    pub iterations: usize,
    pub warnings: Vec<MarginalWarning>,
}

impl MarginalFit {
    pub fn n_obs(&self) -> usize {
        self.residuals.len()
    }

    /// t-statistics `coefficient / std_error`.
    pub fn t_values(&self) -> Option<Vec<f64>> {
        self.std_errors
            .as_ref()
            .map(|se| self.params.to_vec().iter().zip(se).map(|(c, s)| c / s).collect())
    }
}

fn mean_innovations(params: &GarchParams, r: &[f64], presample_mean: f64, eps: &mut [f64]) {
    for t in 0..r.len() {
        let mut e = r[t] - params.mu;
        for (i, a) in params.ar.iter().enumerate() {
            let lag = if t > i { r[t - i - 1] } else { presample_mean };
            e -= a * lag;
        }
        for (j, b) in params.ma.iter().enumerate() {
            if t > j {
                e -= b * eps[t - j - 1];
            }
        }
        eps[t] = e;
    }
}

fn presample_variance(eps: &[f64]) -> f64 {
    let m = mean(eps);
    eps.iter().map(|e| (e - m).powi(2)).sum::<f64>() / eps.len() as f64
}

/// Runs the variance recursion; returns `false` when a variance is not positive.
fn variance_into(params: &GarchParams, eps: &[f64], presample_var: f64, var: &mut [f64]) -> bool {
    for t in 0..eps.len() {
        let mut s = params.omega;
        for (i, a) in params.alpha.iter().enumerate() {
            let e2 = if t > i {
                eps[t - i - 1] * eps[t - i - 1]
            } else {
                presample_var
            };
            s += a * e2;
        }
        for (j, b) in params.beta.iter().enumerate() {
            let lag = if t > j { var[t - j - 1] } else { presample_var };
            s += b * lag;
        }
        if !(s > 0.0 && s.is_finite()) {
            return false;
        }
        var[t] = s;
    }
    true
}

/// Conditional variance path implied by parameters and innovations.
pub fn variance_path(params: &GarchParams, innovations: &[f64], presample_var: f64) -> Option<Vec<f64>> {
    let mut var = vec![0.0; innovations.len()];
    variance_into(params, innovations, presample_var, &mut var).then_some(var)
}

fn student_loglik(eps: &[f64], var: &[f64], dof: f64) -> f64 {
    let c = std_t_log_norm(dof);
    let k = 0.5 * (dof + 1.0);
    let inv = 1.0 / (dof - 2.0);
    eps.iter()
        .zip(var)
        .map(|(e, s)| c - 0.5 * s.ln() - k * (e * e / s * inv).ln_1p())
        .sum()
}

struct Workspace {
    eps: Vec<f64>,
    var: Vec<f64>,
}

impl Workspace {
    fn loglik(&mut self, params: &GarchParams, r: &[f64], presample_mean: f64) -> Option<f64> {
        mean_innovations(params, r, presample_mean, &mut self.eps);
        let s2 = presample_variance(&self.eps);
        if !variance_into(params, &self.eps, s2, &mut self.var) {
            return None;
        }
        let ll = student_loglik(&self.eps, &self.var, params.dof);
        ll.is_finite().then_some(ll)
    }
}

/// Maps unconstrained coordinates to parameters:
/// `[mu, ar.., ma.., ln omega, alpha.., beta.., ln(dof - 2)]`.
fn decode(spec: MarginalSpec, x: &[f64]) -> GarchParams {
    let mut p = GarchParams::from_slice(spec, x);
    p.omega = p.omega.exp();
    p.dof = 2.0 + p.dof.exp();
    p
}

fn encode(p: &GarchParams) -> Vec<f64> {
    let mut x = p.to_vec();
    let spec = p.spec();
    let io = 1 + spec.p + spec.q;
    x[io] = p.omega.ln();
    let last = x.len() - 1;
    x[last] = (p.dof - 2.0).ln();
    x
}

/// Log-likelihood of `r` under `params`, or `None` when the variance path
/// is not positive.
pub fn loglik(params: &GarchParams, r: &[f64]) -> Option<f64> {
    let mut ws = Workspace {
        eps: vec![0.0; r.len()],
        var: vec![0.0; r.len()],
    };
    ws.loglik(params, r, mean(r))
}

pub fn fit_arma_garch(r: &[f64], spec: MarginalSpec) -> Result<MarginalFit> {
    fit_arma_garch_with(r, spec, &Options::default())
}

pub fn fit_arma_garch_with(r: &[f64], spec: MarginalSpec, opts: &Options) -> Result<MarginalFit> {
    spec.validate()?;
    if r.len() < MIN_FIT_LEN {
        return Err(Error::TooShort {
            needed: MIN_FIT_LEN,
            got: r.len(),
        });
    }
    if r.iter().any(|v| !v.is_finite()) {
        return Err(Error::Precondition("returns must be finite".into()));
    }
    let r_mean = mean(r);
    let r_var = variance(r);
    if !(r_var > 1e-12 * r_mean.abs().max(1.0).powi(2)) {
        return Err(Error::Degenerate("zero variance series"));
    }
    let sd = r_var.sqrt();

    let (a0, b0) = if spec.n > 0 { (0.05, 0.90) } else { (0.30, 0.0) };
    let start = GarchParams {
        mu: r_mean,
        ar: vec![0.0; spec.p],
        ma: vec![0.0; spec.q],
        omega: r_var * (1.0 - a0 - b0),
        alpha: vec![a0 / spec.m as f64; spec.m],
        beta: vec![b0 / spec.n.max(1) as f64; spec.n],
        dof: 8.0,
    };
    let x0 = encode(&start);
    let mut steps = Vec::with_capacity(x0.len());
    steps.push(0.1 * sd);
    steps.extend(core::iter::repeat_n(0.1, spec.p + spec.q));
    steps.push(0.5);
    steps.extend(core::iter::repeat_n(0.03, spec.m));
    steps.extend(core::iter::repeat_n(0.05, spec.n));
    steps.push(0.5);

    let mut ws = Workspace {
        eps: vec![0.0; r.len()],
        var: vec![0.0; r.len()],
    };
    let mut objective = |x: &[f64]| -> f64 {
        let p = decode(spec, x);
        if p.persistence() >= 1.0 || p.dof > MAX_DOF || !(p.omega > 0.0) {
            return f64::INFINITY;
        }
        match ws.loglik(&p, r, r_mean) {
            Some(ll) => -ll,
            None => f64::INFINITY,
        }
    };
    let best = optim::minimize(&mut objective, &x0, &steps, opts);
    if !best.f.is_finite() {
        return Err(Error::Infeasible(
            "no stationary parameter point with a positive variance path",
        ));
    }
    if !best.converged {
        return Err(Error::NonConvergence(best.iterations));
    }

    // Standard errors: Hessian in the optimizer coordinates, mapped back by
    // the delta method (the transforms act coordinate-wise).
    let k = spec.n_params();
    let mut h = vec![1e-3; k];
    h[0] = 1e-3 * sd;
    for v in h.iter_mut().skip(2 + spec.p + spec.q).take(spec.m + spec.n) {
        *v = 2e-4;
    }
    let hess = optim::hessian(&mut objective, &best.x, &h);
    let params = decode(spec, &best.x);
    let mut warnings = Vec::new();
    let std_errors = if hess.iter().all(|v| v.is_finite()) {
        inverse_spd(&hess, k).and_then(|cov| {
            let io = 1 + spec.p + spec.q;
            let se: Vec<f64> = (0..k)
                .map(|i| {
                    let jac = if i == io {
                        params.omega
                    } else if i == k - 1 {
                        params.dof - 2.0
                    } else {
                        1.0
                    };
                    jac * cov[i * k + i].sqrt()
                })
                .collect();
            se.iter().all(|s| s.is_finite() && *s > 0.0).then_some(se)
        })
    } else {
        None
    };
    if std_errors.is_none() {
        warnings.push(MarginalWarning::HessianNotPositiveDefinite);
    }

    let mut eps = vec![0.0; r.len()];
    mean_innovations(&params, r, r_mean, &mut eps);
    let presample_var = presample_variance(&eps);
    let cond_var =
        variance_path(&params, &eps, presample_var).ok_or(Error::Infeasible("fitted variance path not positive"))?;
    let residuals: Vec<f64> = eps.iter().zip(&cond_var).map(|(e, s)| e / s.sqrt()).collect();
    let loglik = -best.f;
    let n = r.len() as f64;
    Ok(MarginalFit {
        spec,
        params,
        std_errors,
        loglik,
        aic: 2.0 * k as f64 - 2.0 * loglik,
        bic: k as f64 * n.ln() - 2.0 * loglik,
        residuals,
        innovations: eps,
        cond_var,
        presample_mean: r_mean,
        presample_var,
        converged: best.converged,
        iterations: best.iterations,
        warnings,
    })
}

/// Fits every candidate specification and keeps the lowest AIC.
pub fn select_order(r: &[f64], candidates: &[MarginalSpec]) -> Result<MarginalFit> {
    let mut best: Option<MarginalFit> = None;
    let mut last_err = None;
    for &spec in candidates {
        match fit_arma_garch(r, spec) {
            Ok(fit) => {
                if best.as_ref().is_none_or(|b| fit.aic < b.aic) {
                    best = Some(fit);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    best.ok_or_else(|| last_err.unwrap_or(Error::Precondition("no candidate specifications".into())))
}

/// `z_t = e_t / s_t` recomputed from the stored innovations and variances.
pub fn standardized_residuals(fit: &MarginalFit) -> Vec<f64> {
    fit.innovations
        .iter()
        .zip(&fit.cond_var)
        .map(|(e, s)| e / s.sqrt())
        .collect()
}

/// Simulates `n` returns after discarding [`BURN_IN`] draws.
pub fn simulate_arma_garch(params: &GarchParams, n: usize, seed: u64) -> Result<Vec<f64>> {
    params.validate()?;
    let t = StudentT::new(params.dof).map_err(|_| Error::InvalidParameter("dof".into()))?;
    let scale = ((params.dof - 2.0) / params.dof).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z: Vec<f64> = (0..n + BURN_IN).map(|_| t.sample(&mut rng) * scale).collect();
    simulate_from_innovations(params, &z)
}

/// Runs the model forward on unit-variance innovations `z`, discarding the
/// first [`BURN_IN`] values.
pub fn simulate_from_innovations(params: &GarchParams, z: &[f64]) -> Result<Vec<f64>> {
    params.validate()?;
    if z.len() <= BURN_IN {
        return Err(Error::TooShort {
            needed: BURN_IN + 1,
            got: z.len(),
        });
    }
    let ar_sum: f64 = params.ar.iter().sum();
    let level = if ar_sum.abs() < 1.0 {
        params.mu / (1.0 - ar_sum)
    } else {
        params.mu
    };
    let uncond = params.omega / (1.0 - params.persistence());
    let total = z.len();
    let mut r = vec![level; total];
    let mut eps: Vec<f64> = vec![0.0; total];
    let mut var = vec![uncond; total];
    for t in 0..total {
        let mut s = params.omega;
        for (i, a) in params.alpha.iter().enumerate() {
            s += a * if t > i { eps[t - i - 1].powi(2) } else { uncond };
        }
        for (j, b) in params.beta.iter().enumerate() {
            s += b * if t > j { var[t - j - 1] } else { uncond };
        }
        if !(s > 0.0) {
            return Err(Error::InvalidParameter("simulated variance became non-positive".into()));
        }
        var[t] = s;
        eps[t] = s.sqrt() * z[t];
        let mut x = params.mu + eps[t];
        for (i, a) in params.ar.iter().enumerate() {
            x += a * if t > i { r[t - i - 1] } else { level };
        }
        for (j, b) in params.ma.iter().enumerate() {
            if t > j {
                x += b * eps[t - j - 1];
            }
        }
        r[t] = x;
    }
    Ok(r.split_off(BURN_IN))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticReport {
    pub lags: usize,
    pub ljung_box_stat: f64,
    pub ljung_box_pvalue: f64,
    pub ljung_box_sq_stat: f64,
    pub ljung_box_sq_pvalue: f64,
    pub arch_lm_stat: f64,
    pub arch_lm_pvalue: f64,
}

/// Ljung-Box `Q = n (n + 2) sum_k rho_k^2 / (n - k)` with a chi-square(L) p-value.
pub fn ljung_box(x: &[f64], lags: usize) -> Result<(f64, f64)> {
    let n = x.len();
    if lags < 1 || n <= lags {
        return Err(Error::TooShort {
            needed: lags.max(1) + 1,
            got: n,
        });
    }
    let m = mean(x);
    let denom: f64 = x.iter().map(|v| (v - m).powi(2)).sum();
    if !(denom > 0.0) {
        return Err(Error::Degenerate("zero variance input"));
    }
    let nf = n as f64;
    let mut q = 0.0;
    for k in 1..=lags {
        let num: f64 = (k..n).map(|t| (x[t] - m) * (x[t - k] - m)).sum();
        let rho = num / denom;
        q += rho * rho / (nf - k as f64);
    }
    q *= nf * (nf + 2.0);
    Ok((q, chi2_sf(q, lags as f64)))
}

/// Engle's ARCH-LM: `n R^2` from regressing `x_t^2` on a constant and its
/// own `lags` lags; chi-square(lags) p-value.
pub fn arch_lm(x: &[f64], lags: usize) -> Result<(f64, f64)> {
    let n = x.len();
    if lags < 1 || n <= 2 * lags {
        return Err(Error::TooShort {
            needed: 2 * lags.max(1) + 1,
            got: n,
        });
    }
    let sq: Vec<f64> = x.iter().map(|v| v * v).collect();
    let k = lags + 1;
    let rows = n - lags;
    let mut design = Vec::with_capacity(rows * k);
    for t in lags..n {
        design.push(1.0);
        design.extend((1..=lags).map(|j| sq[t - j]));
    }
    let (_, r2) = ols(&design, k, &sq[lags..]).ok_or(Error::Degenerate("zero variance input"))?;
    let stat = rows as f64 * r2.max(0.0);
    Ok((stat, chi2_sf(stat, lags as f64)))
}

pub fn diagnostics(fit: &MarginalFit, lags: usize) -> Result<DiagnosticReport> {
    let z = &fit.residuals;
    let z2: Vec<f64> = z.iter().map(|v| v * v).collect();
    let (q, qp) = ljung_box(z, lags)?;
    let (q2, q2p) = ljung_box(&z2, lags)?;
    let (lm, lmp) = arch_lm(z, lags)?;
    Ok(DiagnosticReport {
        lags,
        ljung_box_stat: q,
        ljung_box_pvalue: qp,
        ljung_box_sq_stat: q2,
        ljung_box_sq_pvalue: q2p,
        arch_lm_stat: lm,
        arch_lm_pvalue: lmp,
    })
}
