//! End-to-end run with a manifest of inputs, stage statuses and output hashes.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use copdep_core::localdep::RegionKind;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::format::{sha256_file, write_json};
use crate::stages::Workspace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Failed,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: String,
    /// Series or pair name; empty for whole-run stages.
    pub target: String,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileHash {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub config_sha256: String,
    pub inputs: Vec<FileHash>,
    pub stages: Vec<StageRecord>,
    pub outputs: Vec<FileHash>,
}

impl Manifest {
    pub fn all_ok(&self) -> bool {
        self.stages.iter().all(|s| s.status == Status::Ok)
    }
}

pub struct RunOutcome {
    pub manifest: Manifest,
    pub manifest_path: PathBuf,
    /// Exit code of the most severe stage failure (0 when all stages passed).
    pub exit_code: u8,
}

struct Recorder<'a> {
    out: &'a Path,
    stages: Vec<StageRecord>,
    outputs: BTreeMap<String, PathBuf>,
    exit_code: u8,
}

impl Recorder<'_> {
    fn run(&mut self, stage: &str, target: &str, ready: bool, f: impl FnOnce() -> Result<Vec<PathBuf>>) -> bool {
        let (status, message) = if !ready {
            (Status::Skipped, Some("upstream stage failed".to_string()))
        } else {
            match f() {
                Ok(files) => {
                    for p in files {
                        let rel = p.strip_prefix(self.out).unwrap_or(&p);
                        let key = rel.to_string_lossy().replace('\\', "/");
                        self.outputs.insert(key, p);
                    }
                    (Status::Ok, None)
                }
                Err(e) => {
                    self.exit_code = self.exit_code.max(e.exit_code());
                    (Status::Failed, Some(e.to_string()))
                }
            }
        };
        self.stages.push(StageRecord {
            stage: stage.into(),
            target: target.into(),
            status,
            message,
        });
        status == Status::Ok
    }
}

/// Runs every stage in dependency order. Failed stages are recorded; stages
/// depending on them are skipped, independent ones still run.
pub fn run_pipeline(cfg: PipelineConfig) -> Result<RunOutcome> {
    let ws = Workspace::new(cfg)?;
    let cfg = &ws.cfg;
    let config_sha256 = hex::encode(Sha256::digest(serde_json::to_vec(cfg).map_err(|source| {
        Error::Json {
            path: PathBuf::from("<config>"),
            source,
        }
    })?));
    let inputs = cfg
        .series
        .iter()
        .map(|s| {
            Ok(FileHash {
                path: s.path.to_string_lossy().into_owned(),
                sha256: sha256_file(&s.path)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rec = Recorder {
        out: &ws.out,
        stages: Vec::new(),
        outputs: BTreeMap::new(),
        exit_code: 0,
    };
    rec.run("summary", "", true, || ws.summary());
    let marginal_ok: Vec<bool> = (0..cfg.series.len())
        .map(|i| rec.run("marginal", &cfg.series[i].name, true, || ws.fit_marginal(i)))
        .collect();
    for (i, j) in cfg.pairs() {
        let pair = cfg.pair_name(i, j);
        let margins = marginal_ok[i] && marginal_ok[j];
        let pseudo = rec.run("pseudo", &pair, margins, || ws.pseudo(i, j));
        let selection = rec.run("selection", &pair, pseudo, || ws.selection(i, j));
        rec.run("rolling", &pair, pseudo, || ws.rolling(i, j));
        rec.run("chiplot", &pair, margins, || ws.chiplot(i, j));
        rec.run("diagonal", &pair, selection, || ws.diagonal(i, j));
        for kind in [RegionKind::LL, RegionKind::UU] {
            rec.run(&format!("surface_{kind}"), &pair, selection, || {
                ws.surface(i, j, kind, cfg.grid_step)
            });
        }
        rec.run("dcc", &pair, margins, || ws.dcc(i, j));
    }

    let outputs = rec
        .outputs
        .iter()
        .map(|(path, full)| {
            Ok(FileHash {
                path: path.clone(),
                sha256: sha256_file(full)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        seed: cfg.seed,
        config_sha256,
        inputs,
        stages: rec.stages,
        outputs,
    };
    let manifest_path = ws.out.join("manifest.json");
    write_json(&manifest_path, &manifest)?;
    Ok(RunOutcome {
        manifest,
        manifest_path,
        exit_code: rec.exit_code,
    })
}
