//! Maximum pseudo-likelihood estimation of copulas, information-criterion
//! model selection and rolling-window re-estimation.
//!
//! Parameters are optimized on unconstrained coordinates:
//! `alpha = 1 + e^s`, `theta = e^s`, `phi = logistic(s)`.
//! Standard errors come from the numerical Hessian in those coordinates,
//! mapped back through the transform Jacobian (delta method).

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::copula::{
    kendall_tau_empirical, pseudo_observations, CopulaModel, Family, ParamKind, Point, PseudoSample, DENSITY_EPS,
};
use crate::error::{Error, Result};
use crate::linalg::inverse_spd;
use crate::optim::{self, Options};
use crate::special::{logistic, logit};
#[allow(unused_imports)] // std inherents shadow it when std is linked
use num_traits::Float;

pub const MIN_FIT_LEN: usize = 100;
/// Log-density floor, `ln(1e-300)`.
pub const LOG_DENSITY_FLOOR: f64 = -690.775527898213705;
/// Mixture weights closer than this to 0 or 1 are reported as degenerate.
pub const BOUNDARY_TOL: f64 = 1e-3;
const BOUNDARY_WEIGHT: f64 = 1e-12;
const Z_95: f64 = 1.959963984540054;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FitWarning {
    /// Mixture weight within `BOUNDARY_TOL` of 0 or 1.
    DegenerateMixture,
    HessianNotPositiveDefinite,
    /// Some log-densities hit the floor.
    DensityClamped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: CopulaModel,
    pub std_errors: Option<Vec<f64>>,
    /// Maximized log pseudo-likelihood (the "LR" column of the usual tables).
    pub loglik: f64,
    pub aic: f64,
    pub bic: f64,
    pub n: usize,
    pub converged: bool,
    pub warnings: Vec<FitWarning>,
}

impl FitResult {
    pub fn k(&self) -> usize {
        self.model.n_free()
    }

    /// Band `estimate +/- 1.96 se`; NaN when standard errors are unavailable.
    pub fn confidence_band(&self) -> (Vec<f64>, Vec<f64>) {
        let p = &self.model.params;
        match &self.std_errors {
            Some(se) => (
                p.iter().zip(se).map(|(x, s)| x - Z_95 * s).collect(),
                p.iter().zip(se).map(|(x, s)| x + Z_95 * s).collect(),
            ),
            None => (vec![f64::NAN; p.len()], vec![f64::NAN; p.len()]),
        }
    }
}

pub fn aic(loglik: f64, k: usize) -> f64 {
    2.0 * k as f64 - 2.0 * loglik
}

pub fn bic(loglik: f64, k: usize, n: usize) -> f64 {
    k as f64 * (n as f64).ln() - 2.0 * loglik
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoglikEval {
    pub value: f64,
    /// Observations whose log-density was floored at `LOG_DENSITY_FLOOR`.
    pub clamped: usize,
}

/// Sample with cached logarithms, clamped into the density domain.
pub(crate) struct Prepared {
    points: Vec<Point>,
}

impl Prepared {
    pub fn new(s: &PseudoSample) -> Self {
        let c = |x: f64| x.clamp(DENSITY_EPS, 1.0 - DENSITY_EPS);
        Self {
            points: s.u.iter().zip(&s.v).map(|(&u, &v)| Point::new(c(u), c(v))).collect(),
        }
    }

    fn len(&self) -> usize {
        self.points.len()
    }

    fn loglik(&self, m: &CopulaModel) -> LoglikEval {
        let mut value = 0.0;
        let mut clamped = 0;
        for p in &self.points {
            let lp = m.log_pdf_at(p);
            if lp.is_nan() || lp < LOG_DENSITY_FLOOR {
                value += LOG_DENSITY_FLOOR;
                clamped += 1;
            } else {
                value += lp.min(f64::MAX.ln());
            }
        }
        LoglikEval { value, clamped }
    }
}

/// `sum_i ln c(u_i, v_i)`.
pub fn copula_loglik(model: &CopulaModel, s: &PseudoSample) -> Result<LoglikEval> {
    model.validate()?;
    if s.is_empty() {
        return Err(Error::TooShort { needed: 1, got: 0 });
    }
    Ok(Prepared::new(s).loglik(model))
}

fn to_free(kind: ParamKind, x: f64) -> f64 {
    match kind {
        ParamKind::GumbelAlpha => (x - 1.0).max(1e-8).ln(),
        ParamKind::ClaytonTheta => x.max(1e-8).ln(),
        ParamKind::Weight => logit(x.clamp(1e-12, 1.0 - 1e-12)),
    }
}

fn from_free(kind: ParamKind, s: f64) -> f64 {
    match kind {
        ParamKind::GumbelAlpha => 1.0 + s.exp(),
        ParamKind::ClaytonTheta => s.exp(),
        ParamKind::Weight => logistic(s),
    }
}

/// d(parameter) / d(free coordinate)
fn jacobian(kind: ParamKind, x: f64) -> f64 {
    match kind {
        ParamKind::GumbelAlpha => x - 1.0,
        ParamKind::ClaytonTheta => x,
        ParamKind::Weight => x * (1.0 - x),
    }
}

fn decode(family: Family, s: &[f64]) -> CopulaModel {
    CopulaModel {
        family,
        params: family
            .param_kinds()
            .iter()
            .zip(s)
            .map(|(&k, &v)| from_free(k, v))
            .collect(),
    }
}

fn encode(family: Family, params: &[f64]) -> Vec<f64> {
    family
        .param_kinds()
        .iter()
        .zip(params)
        .map(|(&k, &v)| to_free(k, v))
        .collect()
}

/// Inverts the closed-form tau of an individual family.
fn param_from_tau(kind: ParamKind, tau: f64) -> f64 {
    let t = tau.clamp(0.02, 0.9);
    match kind {
        ParamKind::GumbelAlpha => 1.0 / (1.0 - t),
        ParamKind::ClaytonTheta => 2.0 * t / (1.0 - t),
        ParamKind::Weight => 0.5,
    }
}

fn fit_options(warm: bool) -> Options {
    Options {
        max_iter: 1000,
        simplex_iter: if warm { 0 } else { 40 },
        f_tol: 1e-10,
        g_tol: 1e-5,
    }
}

struct Optimum {
    model: CopulaModel,
    loglik: f64,
    converged: bool,
}

fn optimize_from(family: Family, data: &Prepared, start: &[f64], warm: bool) -> Optimum {
    let x0 = encode(family, start);
    let steps = vec![0.3; x0.len()];
    let objective = |s: &[f64]| {
        if s.iter().any(|v| v.abs() > 40.0) {
            return f64::INFINITY;
        }
        -data.loglik(&decode(family, s)).value
    };
    let m = optim::minimize(objective, &x0, &steps, &fit_options(warm));
    Optimum {
        model: decode(family, &m.x),
        loglik: -m.f,
        converged: m.converged,
    }
}

fn finish(opt: Optimum, data: &Prepared) -> Result<FitResult> {
    if !opt.loglik.is_finite() {
        return Err(Error::Infeasible("log-likelihood is not finite at any start"));
    }
    let family = opt.model.family;
    let kinds = family.param_kinds();
    let k = kinds.len();
    let x = encode(family, &opt.model.params);
    let objective = |s: &[f64]| -data.loglik(&decode(family, s)).value;
    let h: Vec<f64> = x.iter().map(|v| 1e-4 * v.abs().max(1.0)).collect();
    let hess = optim::hessian(objective, &x, &h);
    let mut warnings = Vec::new();
    let std_errors = if hess.iter().all(|v| v.is_finite()) {
        inverse_spd(&hess, k).and_then(|cov| {
            let se: Vec<f64> = (0..k)
                .map(|i| jacobian(kinds[i], opt.model.params[i]).abs() * cov[i * k + i].sqrt())
                .collect();
            se.iter().all(|s| s.is_finite()).then_some(se)
        })
    } else {
        None
    };
    if std_errors.is_none() {
        warnings.push(FitWarning::HessianNotPositiveDefinite);
    }
    if family.is_mixture() {
        let phi = opt.model.params[0];
        if phi < BOUNDARY_TOL || phi > 1.0 - BOUNDARY_TOL {
            warnings.push(FitWarning::DegenerateMixture);
        }
    }
    let eval = data.loglik(&opt.model);
    if eval.clamped > 0 {
        warnings.push(FitWarning::DensityClamped);
    }
    let n = data.len();
    Ok(FitResult {
        aic: aic(eval.value, k),
        bic: bic(eval.value, k, n),
        loglik: eval.value,
        model: opt.model,
        std_errors,
        n,
        converged: opt.converged,
        warnings,
    })
}

fn check_sample(s: &PseudoSample) -> Result<()> {
    if s.len() < MIN_FIT_LEN {
        return Err(Error::TooShort {
            needed: MIN_FIT_LEN,
            got: s.len(),
        });
    }
    Ok(())
}

fn fit_individual(family: Family, data: &Prepared, tau: f64) -> Optimum {
    let kind = family.param_kinds()[0];
    optimize_from(family, data, &[param_from_tau(kind, tau)], false)
}

fn fit_mixture(family: Family, data: &Prepared, tau: f64) -> Optimum {
    let (f1, f2) = family.components().expect("mixture family");
    let c1 = fit_individual(f1, data, tau);
    let c2 = fit_individual(f2, data, tau);
    let (p1, p2) = (c1.model.params[0], c2.model.params[0]);
    let starts = [
        [0.25, p1, p2],
        [0.5, p1, p2],
        [0.75, p1, p2],
        [0.9, p1, p2],
        [0.1, p1, p2],
    ];
    let mut best: Option<Optimum> = None;
    for start in &starts {
        let o = optimize_from(family, data, start, false);
        if best.as_ref().is_none_or(|b| o.loglik > b.loglik) {
            best = Some(o);
        }
    }
    let mut best = best.expect("at least one start");
    // A mixture nests each component at the weight boundaries.
    let kinds = family.param_kinds();
    let other2 = param_from_tau(kinds[2], tau);
    let other1 = param_from_tau(kinds[1], tau);
    for (params, comp) in [
        ([1.0 - BOUNDARY_WEIGHT, p1, other2], &c1),
        ([BOUNDARY_WEIGHT, other1, p2], &c2),
    ] {
        if comp.loglik > best.loglik {
            let model = CopulaModel {
                family,
                params: params.to_vec(),
            };
            let ll = data.loglik(&model).value;
            if ll > best.loglik {
                best = Optimum {
                    model,
                    loglik: ll,
                    converged: comp.converged,
                };
            }
        }
    }
    best
}

/// Maximum pseudo-likelihood fit of one family.
pub fn fit_copula(family: Family, s: &PseudoSample) -> Result<FitResult> {
    check_sample(s)?;
    if family == Family::Product {
        return finish_product(s);
    }
    let data = Prepared::new(s);
    let tau = kendall_tau_empirical(s)?;
    let opt = if family.is_mixture() {
        fit_mixture(family, &data, tau)
    } else {
        fit_individual(family, &data, tau)
    };
    finish(opt, &data)
}

/// Single quasi-Newton run from `start` (used for warm-started windows).
pub fn fit_copula_from(family: Family, s: &PseudoSample, start: &[f64]) -> Result<FitResult> {
    check_sample(s)?;
    if family == Family::Product {
        return finish_product(s);
    }
    CopulaModel::new(family, start.to_vec())?;
    let data = Prepared::new(s);
    let opt = optimize_from(family, &data, start, true);
    finish(opt, &data)
}

fn finish_product(s: &PseudoSample) -> Result<FitResult> {
    Ok(FitResult {
        model: CopulaModel::product(),
        std_errors: Some(Vec::new()),
        loglik: 0.0,
        aic: 0.0,
        bic: 0.0,
        n: s.len(),
        converged: true,
        warnings: Vec::new(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionEntry {
    pub family: Family,
    pub fit: Option<FitResult>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionTable {
    pub entries: Vec<SelectionEntry>,
    pub best_individual: Option<Family>,
    pub best_mixture: Option<Family>,
    pub best_overall: Option<Family>,
}

impl SelectionTable {
    pub fn get(&self, family: Family) -> Option<&FitResult> {
        self.entries
            .iter()
            .find(|e| e.family == family)
            .and_then(|e| e.fit.as_ref())
    }

    pub fn best_fit(&self) -> Option<&FitResult> {
        self.best_overall.and_then(|f| self.get(f))
    }
}

fn best_of<'a>(entries: impl Iterator<Item = &'a SelectionEntry>) -> Option<Family> {
    entries
        .filter_map(|e| e.fit.as_ref().map(|f| (e.family, f)))
        .filter(|(_, f)| f.aic.is_finite())
        .min_by(|a, b| a.1.aic.total_cmp(&b.1.aic).then(a.1.bic.total_cmp(&b.1.bic)))
        .map(|(fam, _)| fam)
}

/// Fits the eight candidate families and marks the AIC-best ones (BIC breaks ties).
pub fn select_models(s: &PseudoSample) -> Result<SelectionTable> {
    select_models_among(s, &Family::CANDIDATES)
}

pub fn select_models_among(s: &PseudoSample, candidates: &[Family]) -> Result<SelectionTable> {
    check_sample(s)?;
    if candidates.is_empty() {
        return Err(Error::Precondition("empty candidate list".into()));
    }
    let entries: Vec<SelectionEntry> = candidates
        .iter()
        .map(|&family| match fit_copula(family, s) {
            Ok(fit) => SelectionEntry {
                family,
                fit: Some(fit),
                error: None,
            },
            Err(e) => SelectionEntry {
                family,
                fit: None,
                error: Some(e.to_string()),
            },
        })
        .collect();
    let best_individual = best_of(entries.iter().filter(|e| !e.family.is_mixture()));
    let best_mixture = best_of(entries.iter().filter(|e| e.family.is_mixture()));
    let best_overall = best_of(entries.iter());
    Ok(SelectionTable {
        entries,
        best_individual,
        best_mixture,
        best_overall,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RollingOptions {
    pub window: usize,
    pub step: usize,
    /// Start each window from the previous estimate (sequential path).
    pub warm_start: bool,
    /// Windows with fewer distinct pairs are skipped.
    pub min_distinct: usize,
}

impl Default for RollingOptions {
    fn default() -> Self {
        Self {
            window: 500,
            step: 1,
            warm_start: true,
            min_distinct: MIN_FIT_LEN,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RollingPath {
    pub family: Family,
    pub window: usize,
    pub step: usize,
    /// Window-end dates.
    pub dates: Vec<NaiveDate>,
    /// `None` marks a skipped (degenerate) or failed window.
    pub fits: Vec<Option<FitResult>>,
    /// Per window, per parameter: `estimate -/+ 1.96 se`.
    pub ci_lower: Vec<Vec<f64>>,
    pub ci_upper: Vec<Vec<f64>>,
}

/// Index ranges of the rolling windows: `floor((n - window) / step) + 1` of them.
pub fn rolling_windows(n: usize, window: usize, step: usize) -> Vec<Range<usize>> {
    if window == 0 || step == 0 || n < window {
        return Vec::new();
    }
    (0..=(n - window) / step).map(|i| i * step..i * step + window).collect()
}

fn distinct_pairs(s: &PseudoSample) -> usize {
    let mut pairs: Vec<(f64, f64)> = s.u.iter().copied().zip(s.v.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pairs.dedup();
    pairs.len()
}

/// Fits one window. The window is re-ranked so that its margins are uniform.
pub fn fit_window(
    family: Family,
    s: &PseudoSample,
    range: Range<usize>,
    min_distinct: usize,
    start: Option<&[f64]>,
) -> Option<FitResult> {
    let sub = s.slice(range);
    if distinct_pairs(&sub) < min_distinct.max(MIN_FIT_LEN) {
        return None;
    }
    let ranked = pseudo_observations(&sub.u, &sub.v).ok()?;
    match start {
        Some(p) => fit_copula_from(family, &ranked, p).ok(),
        None => fit_copula(family, &ranked).ok(),
    }
}

/// Assembles a path from per-window fits.
pub fn assemble_path(
    family: Family,
    dates: &[NaiveDate],
    opts: &RollingOptions,
    fits: Vec<Option<FitResult>>,
) -> RollingPath {
    let windows = rolling_windows(dates.len(), opts.window, opts.step);
    let k = family.n_params();
    let (ci_lower, ci_upper) = fits
        .iter()
        .map(|f| match f {
            Some(f) => f.confidence_band(),
            None => (vec![f64::NAN; k], vec![f64::NAN; k]),
        })
        .unzip();
    RollingPath {
        family,
        window: opts.window,
        step: opts.step,
        dates: windows.iter().map(|w| dates[w.end - 1]).collect(),
        fits,
        ci_lower,
        ci_upper,
    }
}

pub fn check_rolling_inputs(dates: &[NaiveDate], s: &PseudoSample, opts: &RollingOptions) -> Result<()> {
    if dates.len() != s.len() {
        return Err(Error::LengthMismatch(dates.len(), s.len()));
    }
    if opts.window < MIN_FIT_LEN || opts.step == 0 {
        return Err(Error::Precondition("window must be >= 100 and step >= 1".into()));
    }
    if s.len() < opts.window {
        return Err(Error::TooShort {
            needed: opts.window,
            got: s.len(),
        });
    }
    Ok(())
}

pub fn rolling_fit(
    dates: &[NaiveDate],
    s: &PseudoSample,
    family: Family,
    opts: &RollingOptions,
) -> Result<RollingPath> {
    check_rolling_inputs(dates, s, opts)?;
    let mut fits = Vec::new();
    let mut prev: Option<Vec<f64>> = None;
    for range in rolling_windows(s.len(), opts.window, opts.step) {
        let start = if opts.warm_start { prev.as_deref() } else { None };
        let fit = fit_window(family, s, range, opts.min_distinct, start);
        if let Some(f) = &fit {
            prev = Some(f.model.params.clone());
        }
        fits.push(fit);
    }
    Ok(assemble_path(family, dates, opts, fits))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TauPoint {
    /// Closed-form tau of the first (Gumbel) component.
    pub tau_first: f64,
    /// Closed-form tau of the second (rotated Gumbel) component.
    pub tau_second: f64,
    /// Numerical tau of the fitted mixture.
    pub tau_mix: f64,
}

pub fn tau_of_fit(model: &CopulaModel) -> Result<TauPoint> {
    if model.family != Family::Mix3 {
        return Err(Error::Precondition(alloc::format!(
            "tau transform expects a Gumbel/rotated-Gumbel mixture, got {}",
            model.family
        )));
    }
    Ok(TauPoint {
        tau_first: 1.0 - 1.0 / model.params[1],
        tau_second: 1.0 - 1.0 / model.params[2],
        tau_mix: model.kendall_tau()?,
    })
}

/// Per-window Kendall's tau of both components and of the mixture.
pub fn tau_transform(path: &RollingPath) -> Result<Vec<Option<TauPoint>>> {
    if path.family != Family::Mix3 {
        return Err(Error::Precondition("tau transform expects a Mix3 rolling path".into()));
    }
    path.fits
        .iter()
        .map(|f| f.as_ref().map(|f| tau_of_fit(&f.model)).transpose())
        .collect()
}
