//! Pipeline stages. Each stage reads its inputs (or upstream JSON artifacts)
//! from disk and writes CSV/JSON artifacts under the output directory, so a
//! stage run standalone reproduces its pipeline output.

use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use copdep_core::copula::{pseudo_observations, CopulaModel, Family, PseudoSample};
use copdep_core::fitting::{
    rolling_fit, select_models_among, tau_transform, RollingOptions, RollingPath, SelectionTable,
};
use copdep_core::localdep::{
    chi_plot, diagonal_profile, quantile_grid, tail_surface, LocalOptions, RegionKind, CHI_FIXED_BAND,
};
use copdep_core::marginal::{diagnostics, fit_arma_garch, select_order, DiagnosticReport, MarginalFit, MarginalSpec};
use copdep_core::portfolio::{fit_dcc, hedge_ratio, hedge_ratio_reverse, portfolio_weights, PathSummary};
use copdep_core::series::log_returns;
use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::format::{derive_seed, opt6, read_upstream, sig6, write_csv, write_json};
use crate::ingest::{load_price_csv, summarize, write_summaries, Loaded, SkippedRow, DATE_FORMAT};
use crate::parallel::rolling_fit_parallel;

pub const STAGE_SUMMARY: &str = "summary";
pub const STAGE_MARGINAL: &str = "fit-marginal";
pub const STAGE_COPULA: &str = "fit-copula";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalArtifact {
    pub name: String,
    pub dates: Vec<NaiveDate>,
    pub returns: Vec<f64>,
    pub fit: MarginalFit,
    pub diagnostics: Option<DiagnosticReport>,
    pub skipped_rows: Vec<SkippedRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoArtifact {
    pub pair: String,
    pub dates: Vec<NaiveDate>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl PseudoArtifact {
    pub fn sample(&self) -> Result<PseudoSample> {
        Ok(PseudoSample::new(self.u.clone(), self.v.clone())?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiPlotMeta {
    pub n: usize,
    pub retained: usize,
    pub control_band: f64,
    pub fixed_band: f64,
    pub exceed_control: f64,
    pub exceed_fixed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DccArtifact {
    pub pair: String,
    pub a: f64,
    pub b: f64,
    pub qbar_offdiag: f64,
    pub loglik: f64,
    pub correlation: PathSummary,
    pub hedge_ratio: PathSummary,
    pub hedge_ratio_reverse: PathSummary,
    pub weight: PathSummary,
    pub clamped_weights: usize,
    pub undefined_weights: usize,
}

fn date_str(d: &NaiveDate) -> String {
    d.format(DATE_FORMAT).to_string()
}

/// Dates present in both series, with the paired values.
fn join<'a>(
    da: &[NaiveDate],
    db: &[NaiveDate],
    cols_a: &[&'a [f64]],
    cols_b: &[&'a [f64]],
) -> (Vec<NaiveDate>, Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let (mut i, mut j) = (0, 0);
    let mut dates = Vec::new();
    let mut a = vec![Vec::new(); cols_a.len()];
    let mut b = vec![Vec::new(); cols_b.len()];
    while i < da.len() && j < db.len() {
        match da[i].cmp(&db[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                dates.push(da[i]);
                for (k, c) in cols_a.iter().enumerate() {
                    a[k].push(c[i]);
                }
                for (k, c) in cols_b.iter().enumerate() {
                    b[k].push(c[j]);
                }
                i += 1;
                j += 1;
            }
        }
    }
    (dates, a, b)
}

/// Stage runner bound to one configuration and output directory.
pub struct Workspace {
    pub cfg: PipelineConfig,
    pub out: PathBuf,
}

impl Workspace {
    pub fn new(cfg: PipelineConfig) -> Result<Self> {
        cfg.validate()?;
        let out = cfg.output_dir.clone();
        Ok(Self { cfg, out })
    }

    fn rel(&self, p: &str) -> PathBuf {
        self.out.join(p)
    }

    pub fn marginal_json(&self, i: usize) -> PathBuf {
        self.rel(&format!("marginal/{}.json", self.cfg.series[i].name))
    }

    pub fn pair_dir(&self, i: usize, j: usize) -> PathBuf {
        self.rel(&format!("pairs/{}", self.cfg.pair_name(i, j)))
    }

    pub fn load(&self, i: usize) -> Result<Loaded> {
        let s = &self.cfg.series[i];
        load_price_csv(&s.path, &s.name, &s.date_column, &s.value_column)
    }

    pub fn summary(&self) -> Result<Vec<PathBuf>> {
        let rows = (0..self.cfg.series.len())
            .map(|i| summarize(&self.load(i)?))
            .collect::<Result<Vec<_>>>()?;
        let (json, csv) = (self.rel("summary.json"), self.rel("summary.csv"));
        write_summaries(&json, &csv, &rows)?;
        Ok(vec![json, csv])
    }

    pub fn fit_marginal(&self, i: usize) -> Result<Vec<PathBuf>> {
        let loaded = self.load(i)?;
        let r = log_returns(&loaded.series)?;
        let fit = if self.cfg.marginal.select_order {
            select_order(&r.returns, &MarginalSpec::search_grid())?
        } else {
            fit_arma_garch(&r.returns, self.cfg.marginal.spec)?
        };
        let diag = diagnostics(&fit, self.cfg.marginal.diagnostic_lags).ok();
        let name = &self.cfg.series[i].name;
        let art = MarginalArtifact {
            name: name.clone(),
            dates: r.dates,
            returns: r.returns,
            fit,
            diagnostics: diag,
            skipped_rows: loaded.skipped,
        };
        let json = self.marginal_json(i);
        write_json(&json, &art)?;

        let table = self.rel(&format!("marginal/{name}.csv"));
        let fit = &art.fit;
        let values = fit.params.to_vec();
        let t = fit.t_values();
        write_csv(
            &table,
            &["parameter", "estimate", "std_error", "t_value"],
            fit.spec.param_names().into_iter().enumerate().map(|(k, p)| {
                vec![
                    p,
                    sig6(values[k]),
                    opt6(fit.std_errors.as_ref().map(|s| s[k])),
                    opt6(t.as_ref().map(|t| t[k])),
                ]
            }),
        )?;
        let resid = self.rel(&format!("marginal/{name}_residuals.csv"));
        write_csv(
            &resid,
            &["date", "return", "residual", "cond_var"],
            (0..art.dates.len()).map(|t| {
                vec![
                    date_str(&art.dates[t]),
                    sig6(art.returns[t]),
                    sig6(fit.residuals[t]),
                    sig6(fit.cond_var[t]),
                ]
            }),
        )?;
        Ok(vec![json, table, resid])
    }

    fn marginal(&self, i: usize) -> Result<MarginalArtifact> {
        read_upstream(&self.marginal_json(i), STAGE_MARGINAL)
    }

    pub fn pseudo(&self, i: usize, j: usize) -> Result<Vec<PathBuf>> {
        let (a, b) = (self.marginal(i)?, self.marginal(j)?);
        let (dates, x, y) = join(&a.dates, &b.dates, &[&a.fit.residuals], &[&b.fit.residuals]);
        let s = pseudo_observations(&x[0], &y[0])?;
        let art = PseudoArtifact {
            pair: self.cfg.pair_name(i, j),
            dates,
            u: s.u,
            v: s.v,
        };
        let dir = self.pair_dir(i, j);
        let (json, csv) = (dir.join("pseudo.json"), dir.join("pseudo.csv"));
        write_json(&json, &art)?;
        write_pseudo_csv(&csv, &art)?;
        Ok(vec![json, csv])
    }

    fn pseudo_artifact(&self, i: usize, j: usize) -> Result<PseudoArtifact> {
        read_upstream(&self.pair_dir(i, j).join("pseudo.json"), STAGE_MARGINAL)
    }

    pub fn selection(&self, i: usize, j: usize) -> Result<Vec<PathBuf>> {
        let s = self.pseudo_artifact(i, j)?.sample()?;
        let table = select_models_among(&s, &self.cfg.candidates)?;
        let dir = self.pair_dir(i, j);
        let (json, csv) = (dir.join("selection.json"), dir.join("selection.csv"));
        write_json(&json, &table)?;
        write_selection_csv(&csv, &table)?;
        Ok(vec![json, csv])
    }

    fn selected_model(&self, i: usize, j: usize) -> Result<CopulaModel> {
        let table: SelectionTable = read_upstream(&self.pair_dir(i, j).join("selection.json"), STAGE_COPULA)?;
        table
            .best_fit()
            .map(|f| f.model.clone())
            .ok_or_else(|| Error::Validation("selection table has no successful fit".into()))
    }

    pub fn rolling(&self, i: usize, j: usize) -> Result<Vec<PathBuf>> {
        let art = self.pseudo_artifact(i, j)?;
        let s = art.sample()?;
        let rc = &self.cfg.rolling;
        let opts = RollingOptions {
            window: rc.window,
            step: rc.step,
            warm_start: !rc.parallel,
            ..RollingOptions::default()
        };
        let path = if rc.parallel {
            rolling_fit_parallel(&art.dates, &s, rc.family, &opts)?
        } else {
            rolling_fit(&art.dates, &s, rc.family, &opts)?
        };
        let dir = self.pair_dir(i, j);
        let (json, csv) = (dir.join("rolling.json"), dir.join("rolling.csv"));
        write_json(&json, &path)?;
        write_rolling_csv(&csv, &path)?;
        let mut out = vec![json, csv];
        if path.family == Family::Mix3 {
            let tau_csv = dir.join("rolling_tau.csv");
            let taus = tau_transform(&path)?;
            write_csv(
                &tau_csv,
                &["date", "tau_gumbel", "tau_rot_gumbel", "tau_mix"],
                path.dates.iter().zip(&taus).map(|(d, t)| {
                    vec![
                        date_str(d),
                        opt6(t.map(|t| t.tau_first)),
                        opt6(t.map(|t| t.tau_second)),
                        opt6(t.map(|t| t.tau_mix)),
                    ]
                }),
            )?;
            out.push(tau_csv);
        }
        Ok(out)
    }

    pub fn chiplot(&self, i: usize, j: usize) -> Result<Vec<PathBuf>> {
        let (a, b) = (self.marginal(i)?, self.marginal(j)?);
        let (_, x, y) = join(&a.dates, &b.dates, &[&a.fit.residuals], &[&b.fit.residuals]);
        let cp = chi_plot(&x[0], &y[0])?;
        let meta = ChiPlotMeta {
            n: cp.n,
            retained: cp.len(),
            control_band: cp.control_band,
            fixed_band: CHI_FIXED_BAND,
            exceed_control: cp.exceedance_rate(cp.control_band),
            exceed_fixed: cp.exceedance_rate(CHI_FIXED_BAND),
        };
        let dir = self.pair_dir(i, j);
        let (json, csv) = (dir.join("chiplot.json"), dir.join("chiplot.csv"));
        write_json(&json, &meta)?;
        write_csv(
            &csv,
            &["lambda", "chi"],
            cp.lambda.iter().zip(&cp.chi).map(|(l, c)| vec![sig6(*l), sig6(*c)]),
        )?;
        Ok(vec![json, csv])
    }

    fn local_options(&self, label: &str) -> LocalOptions {
        LocalOptions {
            mc_n: self.cfg.mc_n,
            seed: derive_seed(self.cfg.seed, label),
            min_count: self.cfg.min_count,
            fresh_draws: false,
        }
    }

    pub fn diagonal(&self, i: usize, j: usize) -> Result<Vec<PathBuf>> {
        let s = self.pseudo_artifact(i, j)?.sample()?;
        let model = self.selected_model(i, j)?;
        let grid = quantile_grid(self.cfg.diagonal_step)?;
        let pair = self.cfg.pair_name(i, j);
        let prof = diagonal_profile(&model, &s, &grid, &self.local_options(&format!("diagonal/{pair}")))?;
        let dir = self.pair_dir(i, j);
        let (json, csv) = (dir.join("diagonal.json"), dir.join("diagonal.csv"));
        write_json(&json, &prof)?;
        write_csv(
            &csv,
            &[
                "p",
                "local_theo",
                "local_emp",
                "global_theo",
                "global_emp",
                "count_theo",
                "count_emp",
            ],
            prof.points.iter().map(|pt| {
                vec![
                    sig6(pt.p),
                    opt6(pt.theoretical.tau),
                    opt6(pt.empirical.tau),
                    sig6(prof.global_theoretical),
                    sig6(prof.global_empirical),
                    pt.theoretical.count.to_string(),
                    pt.empirical.count.to_string(),
                ]
            }),
        )?;
        Ok(vec![json, csv])
    }

    pub fn surface(&self, i: usize, j: usize, kind: RegionKind, grid_step: f64) -> Result<Vec<PathBuf>> {
        let s = self.pseudo_artifact(i, j)?.sample()?;
        let model = self.selected_model(i, j)?;
        let pair = self.cfg.pair_name(i, j);
        let opts = self.local_options(&format!("surface/{kind}/{pair}"));
        let surf = tail_surface(&model, &s, kind, grid_step, &opts)?;
        let csv = self.pair_dir(i, j).join(format!("surface_{kind}.csv"));
        let m = surf.side();
        write_csv(
            &csv,
            &[
                "p",
                "q",
                "theoretical",
                "empirical",
                "count",
                "count_theo",
                "defined_flag",
            ],
            (0..m * m).map(|k| {
                let (t, e) = (surf.theoretical[k], surf.empirical[k]);
                vec![
                    sig6(surf.grid[k / m]),
                    sig6(surf.grid[k % m]),
                    opt6(t.tau),
                    opt6(e.tau),
                    e.count.to_string(),
                    t.count.to_string(),
                    u8::from(t.tau.is_some() && e.tau.is_some()).to_string(),
                ]
            }),
        )?;
        Ok(vec![csv])
    }

    pub fn dcc(&self, i: usize, j: usize) -> Result<Vec<PathBuf>> {
        let (a, b) = (self.marginal(i)?, self.marginal(j)?);
        let (dates, x, y) = join(
            &a.dates,
            &b.dates,
            &[&a.fit.residuals, &a.fit.cond_var],
            &[&b.fit.residuals, &b.fit.cond_var],
        );
        let fit = fit_dcc(&x[0], &y[0], &x[1], &y[1])?;
        let beta = hedge_ratio(&fit);
        let beta_rev = hedge_ratio_reverse(&fit);
        let w = portfolio_weights(&fit);
        let art = DccArtifact {
            pair: self.cfg.pair_name(i, j),
            a: fit.a,
            b: fit.b,
            qbar_offdiag: fit.qbar[1],
            loglik: fit.loglik,
            correlation: copdep_core::portfolio::summarize(fit.rho.iter().copied()),
            hedge_ratio: beta.summary,
            hedge_ratio_reverse: beta_rev.summary,
            weight: w.summary,
            clamped_weights: w.clamped.iter().filter(|c| **c).count(),
            undefined_weights: w.raw.iter().filter(|r| r.is_none()).count(),
        };
        let dir = self.pair_dir(i, j);
        let (json, csv) = (dir.join("dcc.json"), dir.join("dcc.csv"));
        write_json(&json, &art)?;
        write_csv(
            &csv,
            &[
                "date",
                "rho",
                "h_ii",
                "h_jj",
                "h_ij",
                "beta",
                "beta_reverse",
                "w_raw",
                "w_clamped",
            ],
            (0..fit.len()).map(|t| {
                vec![
                    date_str(&dates[t]),
                    sig6(fit.rho[t]),
                    sig6(fit.h_ii[t]),
                    sig6(fit.h_jj[t]),
                    sig6(fit.h_ij[t]),
                    sig6(beta.beta[t]),
                    sig6(beta_rev.beta[t]),
                    opt6(w.raw[t]),
                    opt6(w.w[t]),
                ]
            }),
        )?;
        Ok(vec![json, csv])
    }
}

pub fn write_pseudo_csv(path: &Path, art: &PseudoArtifact) -> Result<()> {
    write_csv(
        path,
        &["date", "u", "v"],
        (0..art.u.len()).map(|t| vec![date_str(&art.dates[t]), sig6(art.u[t]), sig6(art.v[t])]),
    )
}

/// Reads a `u,v` (optionally `date,u,v`) CSV of pseudo-observations.
pub fn read_pseudo_csv(path: &Path) -> Result<PseudoSample> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut rdr = csv::Reader::from_path(path).map_err(csv_err)?;
    let headers = rdr.headers().map_err(csv_err)?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::Validation(format!("{}: column {name:?} not found", path.display())))
    };
    let (ui, vi) = (col("u")?, col("v")?);
    let (mut u, mut v) = (Vec::new(), Vec::new());
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let num = |idx: usize| {
            rec.get(idx)
                .unwrap_or("")
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse {
                    path: path.to_path_buf(),
                    line: k as u64 + 2,
                    msg: e.to_string(),
                })
        };
        u.push(num(ui)?);
        v.push(num(vi)?);
    }
    Ok(PseudoSample::new(u, v)?)
}

pub fn write_selection_csv(path: &Path, table: &SelectionTable) -> Result<()> {
    let header = [
        "family",
        "k",
        "param_names",
        "p1",
        "p2",
        "p3",
        "se1",
        "se2",
        "se3",
        "loglik",
        "aic",
        "bic",
        "converged",
        "best",
        "error",
    ];
    write_csv(
        path,
        &header,
        table.entries.iter().map(|e| {
            let mut best = Vec::new();
            if table.best_individual == Some(e.family) {
                best.push("individual");
            }
            if table.best_mixture == Some(e.family) {
                best.push("mixture");
            }
            if table.best_overall == Some(e.family) {
                best.push("overall");
            }
            let mut row = vec![
                e.family.name().to_string(),
                e.family.n_params().to_string(),
                e.family.param_names().join(";"),
            ];
            let p = |k: usize| e.fit.as_ref().and_then(|f| f.model.params.get(k).copied());
            let se = |k: usize| e.fit.as_ref().and_then(|f| f.std_errors.as_ref()?.get(k).copied());
            row.extend((0..3).map(|k| opt6(p(k))));
            row.extend((0..3).map(|k| opt6(se(k))));
            row.push(opt6(e.fit.as_ref().map(|f| f.loglik)));
            row.push(opt6(e.fit.as_ref().map(|f| f.aic)));
            row.push(opt6(e.fit.as_ref().map(|f| f.bic)));
            row.push(e.fit.as_ref().map(|f| f.converged.to_string()).unwrap_or_default());
            row.push(best.join(";"));
            row.push(e.error.clone().unwrap_or_default());
            row
        }),
    )
}

fn write_rolling_csv(path: &Path, r: &RollingPath) -> Result<()> {
    let names = r.family.param_names();
    let mut header: Vec<String> = vec!["date".into()];
    for n in names {
        header.push((*n).into());
        header.push(format!("{n}_lower"));
        header.push(format!("{n}_upper"));
    }
    header.extend(["loglik", "converged"].map(String::from));
    let header_ref: Vec<&str> = header.iter().map(String::as_str).collect();
    write_csv(
        path,
        &header_ref,
        r.dates.iter().enumerate().map(|(w, d)| {
            let mut row = vec![date_str(d)];
            let fit = r.fits[w].as_ref();
            for k in 0..names.len() {
                row.push(opt6(fit.map(|f| f.model.params[k])));
                row.push(opt6(fit.map(|_| r.ci_lower[w][k]).filter(|x| x.is_finite())));
                row.push(opt6(fit.map(|_| r.ci_upper[w][k]).filter(|x| x.is_finite())));
            }
            row.push(opt6(fit.map(|f| f.loglik)));
            row.push(fit.map(|f| f.converged.to_string()).unwrap_or_default());
            row
        }),
    )
}
