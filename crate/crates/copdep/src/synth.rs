//! Synthetic commodity-like price series: exchangeable Gumbel / rotated-Gumbel
//! dependence, Student-t innovations, ARMA(1,0)-GARCH(1,1) dynamics.

use std::path::{Path, PathBuf};

use chrono::{Datelike, Days, NaiveDate, Weekday};
use copdep_core::copula::{CopulaModel, Family};
use copdep_core::marginal::{simulate_from_innovations, GarchParams, MarginalSpec, BURN_IN};
use copdep_core::series::PriceSeries;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::config::{MarginalConfig, PipelineConfig, RollingConfig, SeriesInput};
use crate::error::{Error, Result};
use crate::format::{derive_seed, write_json};
use crate::ingest::write_price_csv;

pub const SERIES_NAMES: [&str; 3] = ["SYN_A", "SYN_B", "SYN_C"];

/// Dependence structure of the generated returns.
pub fn dependence() -> CopulaModel {
    CopulaModel::mixture(Family::Mix3, 0.35, 1.7, 1.3).expect("valid mixture")
}

pub fn marginal_params() -> [GarchParams; 3] {
    let p = |mu: f64, ar: f64, omega: f64, alpha: f64, beta: f64, dof: f64| GarchParams {
        mu,
        ar: vec![ar],
        ma: vec![],
        omega,
        alpha: vec![alpha],
        beta: vec![beta],
        dof,
    };
    [
        p(0.02, 0.05, 0.02, 0.06, 0.92, 7.0),
        p(0.01, -0.03, 0.05, 0.08, 0.89, 6.0),
        p(0.03, 0.08, 0.03, 0.05, 0.93, 8.0),
    ]
}

fn business_days(start: NaiveDate, n: usize) -> Vec<NaiveDate> {
    let mut d = start;
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
        d = d + Days::new(1);
    }
    out
}

/// `days` returns per series (so `days + 1` prices), deterministic in `seed`.
pub fn generate(days: usize, seed: u64) -> Result<Vec<PriceSeries>> {
    if days < 2 {
        return Err(Error::Validation("need at least 2 days".into()));
    }
    let n = days + BURN_IN;
    let u = dependence().sample_exchangeable(3, n, derive_seed(seed, "synth/copula"))?;
    let start = NaiveDate::from_ymd_opt(2010, 1, 4).expect("valid date");
    let dates = business_days(start, days + 1);
    marginal_params()
        .iter()
        .enumerate()
        .map(|(k, params)| {
            let t = StudentsT::new(0.0, 1.0, params.dof).expect("dof > 2");
            let scale = ((params.dof - 2.0) / params.dof).sqrt();
            let z: Vec<f64> = (0..n).map(|i| t.inverse_cdf(u[3 * i + k]) * scale).collect();
            let r = simulate_from_innovations(params, &z)?;
            let mut prices = Vec::with_capacity(days + 1);
            let mut level = 1000.0;
            prices.push(level);
            for x in &r {
                level *= (x / 100.0).exp();
                prices.push(level);
            }
            Ok(PriceSeries::new(SERIES_NAMES[k], dates.clone(), prices)?)
        })
        .collect()
}

/// Writes the three series as CSV plus a ready-to-run `config.json`.
pub fn write_dataset(dir: &Path, days: usize, seed: u64, step: usize) -> Result<Vec<PathBuf>> {
    let series = generate(days, seed)?;
    let mut written = Vec::new();
    let mut inputs = Vec::new();
    for s in &series {
        let file = format!("{}.csv", s.name);
        let path = dir.join(&file);
        write_price_csv(&path, s)?;
        written.push(path);
        inputs.push(SeriesInput {
            name: s.name.clone(),
            path: file.into(),
            date_column: "date".into(),
            value_column: "price".into(),
        });
    }
    let cfg = PipelineConfig {
        series: inputs,
        seed,
        marginal: MarginalConfig {
            spec: MarginalSpec::new(1, 0, 1, 1)?,
            ..MarginalConfig::default()
        },
        candidates: Family::CANDIDATES.to_vec(),
        rolling: RollingConfig {
            step,
            ..RollingConfig::default()
        },
        mc_n: copdep_core::localdep::DEFAULT_MC_N,
        grid_step: 0.05,
        diagonal_step: 0.05,
        min_count: copdep_core::localdep::DEFAULT_MIN_COUNT,
        output_dir: "out".into(),
    };
    let cfg_path = dir.join("config.json");
    write_json(&cfg_path, &cfg)?;
    written.push(cfg_path);
    Ok(written)
}
