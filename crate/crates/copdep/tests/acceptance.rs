//! End-to-end acceptance checks. Each test prints one `criterion N PASS|FAIL`
//! line with the measured quantities before asserting.

use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use copdep::{run_pipeline, PipelineConfig};
use copdep_core::copula::{kendall_tau, pseudo_observations, TAU_GRID};
use copdep_core::fitting::{aic, bic, select_models};
use copdep_core::localdep::{
    chi_plot, diagonal_profile, local_tau_theoretical, quantile_grid, tail_surface, LocalOptions, CHI_BAND_95,
};
use copdep_core::marginal::{arch_lm, fit_arma_garch, ljung_box, simulate_arma_garch};
use copdep_core::portfolio::{
    fit_dcc, hedge_ratio, hedge_ratio_at, portfolio_weight_at, portfolio_weights, simulate_constant_correlation,
    summarize,
};
use copdep_core::{CopulaModel, Family, GarchParams, MarginalSpec, PseudoSample, QuantileRegion, RegionKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 20240611;

fn report(n: u32, pass: bool, detail: &str) -> bool {
    println!("criterion {n} {} {detail}", if pass { "PASS" } else { "FAIL" });
    pass
}

fn within_budget(start: Instant, limit: Duration) -> bool {
    start.elapsed() < limit
}

fn pseudo_from(c: &CopulaModel, n: usize, seed: u64) -> PseudoSample {
    let s = c.sample(n, seed).unwrap();
    pseudo_observations(&s.u, &s.v).unwrap()
}

#[test]
fn criterion_01_tau_closed_form_vs_quadrature() {
    const TOL: f64 = 1e-3;
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst: f64 = 0.0;
    for i in 0..20 {
        let c = match i % 4 {
            0 => CopulaModel::gumbel(rng.random_range(1.05..5.0)),
            1 => CopulaModel::rot_gumbel(rng.random_range(1.05..5.0)),
            2 => CopulaModel::clayton(rng.random_range(0.1..6.0)),
            _ => CopulaModel::rot_clayton(rng.random_range(0.1..6.0)),
        }
        .unwrap();
        let d = (c.kendall_tau().unwrap() - c.kendall_tau_numeric(TAU_GRID).unwrap()).abs();
        worst = worst.max(d);
    }
    let ok = worst < TOL && within_budget(t0, Duration::from_secs(60));
    assert!(report(
        1,
        ok,
        &format!(
            "max |closed - numeric| = {worst:.2e} (tol {TOL:e}), {:.1?}",
            t0.elapsed()
        )
    ));
}

#[test]
fn criterion_02_sampler_matches_cdf_and_tau() {
    const N: usize = 50_000;
    const CDF_TOL: f64 = 0.01;
    const TAU_TOL: f64 = 0.02;
    let t0 = Instant::now();
    let models = [
        CopulaModel::gumbel(1.8).unwrap(),
        CopulaModel::rot_gumbel(1.5).unwrap(),
        CopulaModel::clayton(2.0).unwrap(),
        CopulaModel::rot_clayton(1.2).unwrap(),
        CopulaModel::mixture(Family::Mix1, 0.4, 1.6, 1.5).unwrap(),
        CopulaModel::mixture(Family::Mix2, 0.6, 1.4, 0.8).unwrap(),
        CopulaModel::mixture(Family::Mix3, 0.291, 1.726, 1.251).unwrap(),
        CopulaModel::mixture(Family::Mix4, 0.5, 2.0, 1.0).unwrap(),
    ];
    let pts = [0.25, 0.5, 0.75];
    let (mut worst_cdf, mut worst_tau): (f64, f64) = (0.0, 0.0);
    for (k, c) in models.iter().enumerate() {
        let s = c.sample(N, SEED + k as u64).unwrap();
        for &a in &pts {
            for &b in &pts {
                let emp = s.u.iter().zip(&s.v).filter(|(u, v)| **u <= a && **v <= b).count() as f64 / N as f64;
                worst_cdf = worst_cdf.max((emp - c.cdf(a, b).unwrap()).abs());
            }
        }
        let tau = kendall_tau(&s.u, &s.v).unwrap();
        worst_tau = worst_tau.max((tau - c.kendall_tau().unwrap()).abs());
    }
    let ok = worst_cdf < CDF_TOL && worst_tau < TAU_TOL && within_budget(t0, Duration::from_secs(60));
    assert!(report(
        2,
        ok,
        &format!(
            "max cdf err {worst_cdf:.4} (tol {CDF_TOL}), max tau err {worst_tau:.4} (tol {TAU_TOL}), {:.1?}",
            t0.elapsed()
        )
    ));
}

#[test]
fn criterion_03_information_criteria_arithmetic() {
    const TOL: f64 = 0.1;
    const LL: f64 = 198.6;
    let (a, b) = (aic(LL, 1), bic(LL, 1, 3413));
    let (da, db) = ((a - -395.3f64).abs(), (b - -389.2f64).abs());
    // the printed log-likelihood carries one decimal; report the value the printed AIC implies
    let implied_ll = (395.3 + 2.0) / 2.0;
    let ok = da <= TOL + 1e-9 && db <= TOL + 1e-9;
    let detail = format!(
        "aic {a:.3} (|d| {da:.3}), bic {b:.3} (|d| {db:.3}), tol {TOL}; bic at implied LL {implied_ll} = {:.3}",
        bic(implied_ll, 1, 3413)
    );
    assert!(report(3, ok, &detail));
}

#[test]
fn criterion_04_mixture_recovery_and_selection() {
    const REPS: u64 = 50;
    const N: usize = 3413;
    const PHI_TOL: f64 = 0.08;
    const ALPHA_TOL: f64 = 0.15;
    const RATE: f64 = 0.8;
    let t0 = Instant::now();
    let truth = [0.291, 1.726, 1.251];
    let c = CopulaModel::mixture(Family::Mix3, truth[0], truth[1], truth[2]).unwrap();
    let (mut recovered, mut selected) = (0, 0);
    for r in 0..REPS {
        let s = pseudo_from(&c, N, SEED + r);
        let table = select_models(&s).unwrap();
        let p = &table.get(Family::Mix3).unwrap().model.params;
        if (p[0] - truth[0]).abs() <= PHI_TOL
            && (p[1] - truth[1]).abs() <= ALPHA_TOL
            && (p[2] - truth[2]).abs() <= ALPHA_TOL
        {
            recovered += 1;
        }
        if table.best_overall == Some(Family::Mix3) {
            selected += 1;
        }
    }
    let (rr, sr) = (recovered as f64 / REPS as f64, selected as f64 / REPS as f64);
    let ok = rr >= RATE && sr >= RATE && within_budget(t0, Duration::from_secs(600));
    assert!(report(
        4,
        ok,
        &format!(
            "recovered {recovered}/{REPS}, Mix3 best {selected}/{REPS} (need {RATE}), {:.1?}",
            t0.elapsed()
        )
    ));
}

#[test]
fn criterion_05_garch_recovery() {
    const REPS: u64 = 50;
    const N: usize = 5000;
    const SE_MULT: f64 = 3.0;
    const RATE: f64 = 0.9;
    const LAGS: usize = 10;
    const LEVEL: f64 = 0.05;
    let t0 = Instant::now();
    let truth = GarchParams {
        mu: 0.05,
        ar: vec![0.1],
        ma: vec![],
        omega: 0.05,
        alpha: vec![0.08],
        beta: vec![0.9],
        dof: 6.0,
    };
    let spec = MarginalSpec::new(1, 0, 1, 1).unwrap();
    let tv = truth.to_vec();
    let mut hits = vec![0usize; tv.len()];
    let (mut lb_pass, mut lm_pass) = (0, 0);
    for r in 0..REPS {
        let x = simulate_arma_garch(&truth, N, SEED + r).unwrap();
        let fit = fit_arma_garch(&x, spec).unwrap();
        if let Some(se) = &fit.std_errors {
            for (k, (est, t)) in fit.params.to_vec().iter().zip(&tv).enumerate() {
                if (est - t).abs() <= SE_MULT * se[k] {
                    hits[k] += 1;
                }
            }
        }
        if ljung_box(&fit.residuals, LAGS).unwrap().1 > LEVEL {
            lb_pass += 1;
        }
        if arch_lm(&fit.residuals, LAGS).unwrap().1 > LEVEL {
            lm_pass += 1;
        }
    }
    let need = (RATE * REPS as f64).ceil() as usize;
    let ok = hits.iter().all(|&h| h >= need)
        && lb_pass >= need
        && lm_pass >= need
        && within_budget(t0, Duration::from_secs(300));
    assert!(report(
        5,
        ok,
        &format!(
            "within {SE_MULT} se per parameter {hits:?}/{REPS}, ljung-box {lb_pass}/{REPS}, arch-lm {lm_pass}/{REPS} (need {need}), {:.1?}",
            t0.elapsed()
        )
    ));
}

#[test]
fn criterion_06_product_copula_null_surfaces() {
    const MC_N: usize = 5000;
    const MIN_COUNT: usize = 300;
    const SURFACE_TOL: f64 = 0.1;
    const DIAGONAL_TOL: f64 = 0.08;
    let t0 = Instant::now();
    let c = CopulaModel::product();
    let s = pseudo_from(&c, MC_N, SEED);
    let opts = LocalOptions {
        mc_n: MC_N,
        seed: SEED + 1,
        min_count: MIN_COUNT,
        fresh_draws: false,
    };
    let worst = |cells: &[copdep_core::localdep::LocalTau]| {
        cells.iter().filter_map(|t| t.tau).map(f64::abs).fold(0.0, f64::max)
    };
    let mut surf_worst: f64 = 0.0;
    for kind in [RegionKind::LL, RegionKind::UU] {
        let t = tail_surface(&c, &s, kind, 0.05, &opts).unwrap();
        surf_worst = surf_worst.max(worst(&t.theoretical)).max(worst(&t.empirical));
    }
    let grid = quantile_grid(0.05).unwrap();
    let d = diagonal_profile(&c, &s, &grid, &opts).unwrap();
    let diag: Vec<_> = d.points.iter().flat_map(|p| [p.theoretical, p.empirical]).collect();
    let diag_worst = worst(&diag);
    let ok = surf_worst < SURFACE_TOL && diag_worst < DIAGONAL_TOL && within_budget(t0, Duration::from_secs(120));
    assert!(report(
        6,
        ok,
        &format!(
            "surface max |tau| {surf_worst:.4} (tol {SURFACE_TOL}), diagonal max |tau| {diag_worst:.4} (tol {DIAGONAL_TOL}), min_count {MIN_COUNT}, {:.1?}",
            t0.elapsed()
        )
    ));
}

/// Quadratic-time Kendall tau, deliberately independent of the library's merge-sort version.
fn naive_tau(pairs: &[(f64, f64)]) -> f64 {
    let (mut conc, mut disc) = (0i64, 0i64);
    for i in 0..pairs.len() {
        for j in i + 1..pairs.len() {
            let s = (pairs[i].0 - pairs[j].0) * (pairs[i].1 - pairs[j].1);
            if s > 0.0 {
                conc += 1;
            } else if s < 0.0 {
                disc += 1;
            }
        }
    }
    (conc - disc) as f64 / (conc + disc) as f64
}

#[test]
fn criterion_07_local_tau_vs_brute_force() {
    const BRUTE_N: usize = 200_000;
    const MC_N: usize = 5000;
    const TOL: f64 = 0.05;
    let regions = [
        QuantileRegion::new(RegionKind::UU, 0.8, 0.8).unwrap(),
        QuantileRegion::new(RegionKind::LL, 0.5, 0.5).unwrap(),
        QuantileRegion::new(RegionKind::UU, 0.5, 0.5).unwrap(),
        QuantileRegion::new(RegionKind::UU, 0.3, 0.3).unwrap(),
        QuantileRegion::new(RegionKind::LL, 0.7, 0.7).unwrap(),
    ];
    let mut worst: f64 = 0.0;
    let mut all_defined = true;
    for (k, c) in [CopulaModel::gumbel(2.0).unwrap(), CopulaModel::rot_gumbel(1.5).unwrap()]
        .iter()
        .enumerate()
    {
        // an independent stream, and independent rectangle membership
        let big = c.sample(BRUTE_N, SEED ^ (0xB207E + k as u64)).unwrap();
        for r in &regions {
            let inside: Vec<(f64, f64)> = big
                .u
                .iter()
                .zip(&big.v)
                .filter(|(u, v)| match r.kind {
                    RegionKind::LL => **u <= r.p && **v <= r.q,
                    RegionKind::UU => **u >= r.p && **v >= r.q,
                    RegionKind::UL => **u >= r.p && **v <= r.q,
                    RegionKind::LU => **u <= r.p && **v >= r.q,
                })
                .map(|(u, v)| (*u, *v))
                .collect();
            let brute = naive_tau(&inside);
            match local_tau_theoretical(c, r, MC_N, SEED + k as u64, 30).unwrap().tau {
                Some(t) => worst = worst.max((t - brute).abs()),
                None => all_defined = false,
            }
        }
    }
    let ok = all_defined && worst <= TOL;
    assert!(report(
        7,
        ok,
        &format!("max |mc - brute force| {worst:.4} over 10 regions (tol {TOL})")
    ));
}

#[test]
fn criterion_08_lower_tail_family_shape() {
    const RUNS: u64 = 50;
    const GAP: f64 = 0.05;
    const RATE: f64 = 0.95;
    let c = CopulaModel::rot_gumbel(1.5).unwrap();
    let low = QuantileRegion::new(RegionKind::LL, 0.1, 0.1).unwrap();
    let high = QuantileRegion::new(RegionKind::UU, 0.9, 0.9).unwrap();
    let mut hits = 0;
    for r in 0..RUNS {
        let seed = SEED + 1000 + r;
        let lo = local_tau_theoretical(&c, &low, 5000, seed, 30).unwrap().tau;
        let hi = local_tau_theoretical(&c, &high, 5000, seed, 30).unwrap().tau;
        if let (Some(lo), Some(hi)) = (lo, hi) {
            if lo - hi >= GAP {
                hits += 1;
            }
        }
    }
    let ok = hits as f64 / RUNS as f64 >= RATE;
    assert!(report(
        8,
        ok,
        &format!("tau(0.1) - tau(0.9) >= {GAP} in {hits}/{RUNS} (need {RATE})")
    ));
}

#[test]
fn criterion_09_dcc_and_portfolio_identities() {
    const RUNS: u64 = 20;
    const N: usize = 5000;
    const RHO: f64 = 0.4;
    const MEAN_TOL: f64 = 0.03;
    const PERSISTENCE: f64 = 0.15;
    const RATE: f64 = 0.9;
    let ones = vec![1.0; N];
    let (mut recovered, mut mean_ok, mut bounded) = (0, 0, true);
    for r in 0..RUNS {
        let (zi, zj) = simulate_constant_correlation(N, RHO, SEED + r);
        let fit = fit_dcc(&zi, &zj, &ones, &ones).unwrap();
        bounded &= fit.rho.iter().all(|p| p.abs() <= 1.0);
        let m = summarize(fit.rho.iter().copied()).mean;
        if (m - RHO).abs() <= MEAN_TOL {
            mean_ok += 1;
            if fit.a + fit.b < PERSISTENCE {
                recovered += 1;
            }
        }
        // hedge and weight paths stay consistent with the fitted covariances
        let h = hedge_ratio(&fit);
        let w = portfolio_weights(&fit);
        bounded &= h.beta.iter().all(|b| b.is_finite()) && w.w.iter().flatten().all(|x| (0.0..=1.0).contains(x));
    }
    let spot = hedge_ratio_at(0.42, 1.0) == 0.42 && portfolio_weight_at(1.0, 1.0, 0.3) == Some(0.5);
    let ok = spot && bounded && recovered as f64 / RUNS as f64 >= RATE;
    assert!(report(
        9,
        ok,
        &format!(
            "mean rho within {MEAN_TOL} in {mean_ok}/{RUNS}, and a+b < {PERSISTENCE} in {recovered}/{RUNS} (need {RATE}); spot values {spot}; |rho| <= 1 and paths valid {bounded}"
        )
    ));
}

#[test]
fn criterion_10_chi_plot_calibration() {
    const REPS: u64 = 200;
    const N: usize = 2000;
    const TARGET: f64 = 0.05;
    const TOL: f64 = 0.03;
    let mut total = 0.0;
    for r in 0..REPS {
        let mut rng = ChaCha8Rng::seed_from_u64(SEED + r);
        let x: Vec<f64> = (0..N).map(|_| rng.random()).collect();
        let y: Vec<f64> = (0..N).map(|_| rng.random()).collect();
        let cp = chi_plot(&x, &y).unwrap();
        total += cp.exceedance_rate(CHI_BAND_95 / (N as f64).sqrt());
    }
    let rate = total / REPS as f64;
    let ok = (rate - TARGET).abs() <= TOL;
    assert!(report(
        10,
        ok,
        &format!("mean exceedance {rate:.4} (target {TARGET} +/- {TOL})")
    ));
}

fn collect_csv(dir: &Path, base: &Path, out: &mut Vec<(String, Vec<u8>)>) {
    for entry in fs::read_dir(dir).unwrap() {
        let p = entry.unwrap().path();
        if p.is_dir() {
            collect_csv(&p, base, out);
        } else if p.extension().is_some_and(|e| e == "csv") {
            let rel = p.strip_prefix(base).unwrap().to_string_lossy().into_owned();
            out.push((rel, fs::read(&p).unwrap()));
        }
    }
}

#[test]
fn criterion_11_end_to_end_determinism() {
    let t0 = Instant::now();
    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/config.json");
    let mut runs = Vec::new();
    let mut all_ok = true;
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        let mut cfg = PipelineConfig::load(&config).unwrap();
        cfg.output_dir = d.path().to_path_buf();
        let outcome = run_pipeline(cfg).unwrap();
        all_ok &= outcome.manifest.all_ok();
        let mut files = Vec::new();
        collect_csv(d.path(), d.path(), &mut files);
        files.sort();
        runs.push(files);
    }
    let identical = runs[0] == runs[1];
    let ok = all_ok && identical && !runs[0].is_empty() && within_budget(t0, Duration::from_secs(900));
    assert!(report(
        11,
        ok,
        &format!(
            "{} csv files, identical {identical}, all stages ok {all_ok}, {:.1?}",
            runs[0].len(),
            t0.elapsed()
        )
    ));
}
