use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use copdep::config::PipelineConfig;
use copdep::error::{Error, Result};
use copdep::format::write_json;
use copdep::stages::{read_pseudo_csv, write_selection_csv, Workspace};
use copdep::{run_pipeline, synth};
use copdep_core::copula::Family;
use copdep_core::fitting::select_models;
use copdep_core::localdep::RegionKind;

#[derive(Parser)]
#[command(
    name = "copdep",
    version,
    about = "Copula tail dependence, rolling fits and DCC hedging"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Pipeline configuration (JSON).
    #[arg(long, short)]
    config: PathBuf,
    /// Overrides `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the root seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Clone)]
struct PairArgs {
    #[command(flatten)]
    common: Common,
    /// Restrict to one pair, e.g. `A-B` (default: all pairs).
    #[arg(long)]
    pair: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Summary statistics of the log returns.
    Summary(Common),
    /// ARMA-GARCH fits, standardized residuals and per-pair pseudo-observations.
    FitMarginal(Common),
    /// Copula model selection from stored (or given) pseudo-observations.
    FitCopula {
        #[arg(long, short, required_unless_present = "pseudo")]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        pair: Option<String>,
        /// Standalone mode: read `u,v` columns from this CSV.
        #[arg(long, conflicts_with = "config")]
        pseudo: Option<PathBuf>,
        /// Selection CSV for standalone mode (a `.json` sibling is written too).
        #[arg(long, requires = "pseudo")]
        output: Option<PathBuf>,
    },
    /// Rolling-window copula estimates.
    Rolling {
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long)]
        family: Option<Family>,
        #[arg(long)]
        window: Option<usize>,
        #[arg(long)]
        step: Option<usize>,
        /// Fit cold-started windows concurrently.
        #[arg(long)]
        parallel: bool,
    },
    /// Chi-plot coordinates of the standardized residuals.
    Chiplot(PairArgs),
    /// Local Kendall's tau along the main diagonal.
    Localtau {
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long)]
        grid_step: Option<f64>,
    },
    /// Theoretical and empirical local-tau surface.
    Surface {
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long, default_value = "UU")]
        kind: RegionKind,
        #[arg(long)]
        grid_step: Option<f64>,
    },
    /// DCC correlations, hedge ratios and portfolio weights.
    Dcc(PairArgs),
    /// Full pipeline with manifest.
    Run(Common),
    /// Write the synthetic three-series dataset and a config.
    Synth {
        #[arg(long, default_value = "data")]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 1500)]
        days: usize,
        #[arg(long, default_value_t = 20240611)]
        seed: u64,
        /// Rolling step written into the config.
        #[arg(long, default_value_t = 5)]
        step: usize,
    },
}

fn load(common: &Common) -> Result<PipelineConfig> {
    let mut cfg = PipelineConfig::load(&common.config)?;
    if let Some(out) = &common.out {
        cfg.output_dir = out.clone();
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn pairs(ws: &Workspace, label: &Option<String>) -> Result<Vec<(usize, usize)>> {
    match label {
        Some(l) => Ok(vec![ws.cfg.find_pair(l)?]),
        None => Ok(ws.cfg.pairs()),
    }
}

fn report(files: &[PathBuf]) {
    for f in files {
        println!("wrote {}", f.display());
    }
}

fn per_pair(
    args: &PairArgs,
    tweak: impl FnOnce(&mut PipelineConfig),
    stage: impl Fn(&Workspace, usize, usize) -> Result<Vec<PathBuf>>,
) -> Result<()> {
    let mut cfg = load(&args.common)?;
    tweak(&mut cfg);
    let ws = Workspace::new(cfg)?;
    for (i, j) in pairs(&ws, &args.pair)? {
        report(&stage(&ws, i, j)?);
    }
    Ok(())
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Summary(c) => report(&Workspace::new(load(&c)?)?.summary()?),
        Command::FitMarginal(c) => {
            let ws = Workspace::new(load(&c)?)?;
            for i in 0..ws.cfg.series.len() {
                report(&ws.fit_marginal(i)?);
            }
            for (i, j) in ws.cfg.pairs() {
                report(&ws.pseudo(i, j)?);
            }
        }
        Command::FitCopula {
            config,
            out,
            seed,
            pair,
            pseudo,
            output,
        } => match (pseudo, config) {
            (Some(path), _) => {
                let s = read_pseudo_csv(&path)?;
                let table = select_models(&s)?;
                let out = output.unwrap_or_else(|| path.with_file_name("selection.csv"));
                write_selection_csv(&out, &table)?;
                write_json(&out.with_extension("json"), &table)?;
                report(&[out.clone(), out.with_extension("json")]);
            }
            (None, Some(config)) => {
                let args = PairArgs {
                    common: Common { config, out, seed },
                    pair,
                };
                per_pair(&args, |_| {}, |ws, i, j| ws.selection(i, j))?
            }
            (None, None) => return Err(Error::Validation("fit-copula needs --config or --pseudo".into())),
        },
        Command::Rolling {
            pair,
            family,
            window,
            step,
            parallel,
        } => per_pair(
            &pair,
            |cfg| {
                let r = &mut cfg.rolling;
                r.family = family.unwrap_or(r.family);
                r.window = window.unwrap_or(r.window);
                r.step = step.unwrap_or(r.step);
                r.parallel |= parallel;
            },
            |ws, i, j| ws.rolling(i, j),
        )?,
        Command::Chiplot(p) => per_pair(&p, |_| {}, |ws, i, j| ws.chiplot(i, j))?,
        Command::Localtau { pair, grid_step } => per_pair(
            &pair,
            |cfg| cfg.diagonal_step = grid_step.unwrap_or(cfg.diagonal_step),
            |ws, i, j| ws.diagonal(i, j),
        )?,
        Command::Surface { pair, kind, grid_step } => per_pair(
            &pair,
            |_| {},
            |ws, i, j| ws.surface(i, j, kind, grid_step.unwrap_or(ws.cfg.grid_step)),
        )?,
        Command::Dcc(p) => per_pair(&p, |_| {}, |ws, i, j| ws.dcc(i, j))?,
        Command::Run(c) => {
            let outcome = run_pipeline(load(&c)?)?;
            for s in &outcome.manifest.stages {
                let target = if s.target.is_empty() {
                    String::new()
                } else {
                    format!(" [{}]", s.target)
                };
                let msg = s.message.as_deref().map(|m| format!(": {m}")).unwrap_or_default();
                println!("{:>10}{target} {:?}{msg}", s.stage, s.status);
            }
            println!("manifest {}", outcome.manifest_path.display());
            return Ok(outcome.exit_code);
        }
        Command::Synth {
            out_dir,
            days,
            seed,
            step,
        } => report(&synth::write_dataset(&out_dir, days, seed, step)?),
    }
    Ok(0)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
