use std::fs;

use copdep::pipeline::Status;
use copdep::{run_pipeline, synth, PipelineConfig};

#[test]
fn failed_stage_skips_dependents_only() {
    let d = tempfile::tempdir().unwrap();
    synth::write_dataset(d.path(), 700, 5, 100).unwrap();
    // truncate one series below the marginal minimum
    let path = d.path().join("SYN_C.csv");
    let text = fs::read_to_string(&path).unwrap();
    let short: Vec<&str> = text.lines().take(101).collect();
    fs::write(&path, short.join("\n") + "\n").unwrap();

    let mut cfg = PipelineConfig::load(&d.path().join("config.json")).unwrap();
    cfg.mc_n = 2000;
    let outcome = run_pipeline(cfg).unwrap();
    let m = &outcome.manifest;
    let status = |stage: &str, target: &str| {
        m.stages
            .iter()
            .find(|s| s.stage == stage && s.target == target)
            .map(|s| s.status)
            .unwrap()
    };
    assert_eq!(status("marginal", "SYN_C"), Status::Failed);
    assert_eq!(status("pseudo", "SYN_A-SYN_C"), Status::Skipped);
    assert_eq!(status("dcc", "SYN_B-SYN_C"), Status::Skipped);
    assert_eq!(status("diagonal", "SYN_A-SYN_C"), Status::Skipped);
    assert_eq!(status("selection", "SYN_A-SYN_B"), Status::Ok);
    assert_eq!(status("surface_UU", "SYN_A-SYN_B"), Status::Ok);
    assert!(!m.all_ok());
    assert_eq!(outcome.exit_code, 1);

    // every emitted file is hashed in the manifest
    for f in &m.outputs {
        let full = d.path().join("out").join(&f.path);
        assert_eq!(copdep::format::sha256_file(&full).unwrap(), f.sha256);
    }
    assert!(m.outputs.iter().any(|f| f.path == "pairs/SYN_A-SYN_B/surface_LL.csv"));
    assert_eq!(m.inputs.len(), 3);
}

#[test]
fn config_rejects_unknown_fields_and_bad_values() {
    let d = tempfile::tempdir().unwrap();
    synth::write_dataset(d.path(), 400, 5, 100).unwrap();
    let mut cfg = PipelineConfig::load(&d.path().join("config.json")).unwrap();
    assert!(cfg.validate().is_ok());
    cfg.rolling.window = 50;
    assert!(cfg.validate().is_err());

    let raw = r#"{"series": [], "seed": 1, "bogus": 3}"#;
    fs::write(d.path().join("bad.json"), raw).unwrap();
    assert!(PipelineConfig::load(&d.path().join("bad.json")).is_err());
    let raw = r#"{"series": []}"#;
    fs::write(d.path().join("noseed.json"), raw).unwrap();
    assert!(PipelineConfig::load(&d.path().join("noseed.json")).is_err());
}

#[test]
fn synthetic_pairs_are_dependent() {
    let series = synth::generate(1200, 9).unwrap();
    assert_eq!(series.len(), 3);
    let r: Vec<_> = series
        .iter()
        .map(|s| copdep_core::series::log_returns(s).unwrap())
        .collect();
    let tau = copdep_core::copula::kendall_tau(&r[0].returns, &r[1].returns).unwrap();
    let target = synth::dependence().kendall_tau().unwrap();
    assert!((tau - target).abs() < 0.06, "{tau} vs {target}");
}
