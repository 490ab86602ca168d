//! Command-line contracts: exit codes, upstream checks, output shapes.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_copdep");

fn copdep(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn synth(dir: &Path) -> String {
    let out = copdep(&[
        "synth",
        "--out-dir",
        dir.to_str().unwrap(),
        "--days",
        "700",
        "--step",
        "100",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    dir.join("config.json").to_string_lossy().into_owned()
}

#[test]
fn stage_outputs_and_upstream_errors() {
    let d = tempfile::tempdir().unwrap();
    let cfg = synth(d.path());

    let out = copdep(&["dcc", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("run stage `fit-marginal` first"), "{err}");

    let out = copdep(&["surface", "--config", &cfg, "--pair", "SYN_A-SYN_B", "--kind", "UU"]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("run stage `fit-marginal` first"));

    assert!(copdep(&["summary", "--config", &cfg]).status.success());
    assert!(copdep(&["fit-marginal", "--config", &cfg]).status.success());
    let out = copdep(&["surface", "--config", &cfg, "--pair", "SYN_A-SYN_B"]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("run stage `fit-copula` first"));

    let out = copdep(&["fit-copula", "--config", &cfg, "--pair", "SYN_A-SYN_B"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = copdep(&[
        "surface",
        "--config",
        &cfg,
        "--pair",
        "SYN_A-SYN_B",
        "--kind",
        "UU",
        "--grid-step",
        "0.05",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let pair = d.path().join("out/pairs/SYN_A-SYN_B");
    let surface = fs::read_to_string(pair.join("surface_UU.csv")).unwrap();
    let lines: Vec<&str> = surface.lines().collect();
    assert_eq!(lines.len(), 1 + 19 * 19);
    assert!(lines[1].starts_with("0.05,0.05,"));
    assert!(lines[361].starts_with("0.95,0.95,"));

    assert!(copdep(&["dcc", "--config", &cfg, "--pair", "SYN_A-SYN_B"])
        .status
        .success());
    let dcc = fs::read_to_string(pair.join("dcc.csv")).unwrap();
    assert!(dcc.starts_with("date,rho,h_ii,h_jj,h_ij,beta,beta_reverse,w_raw,w_clamped\n"));

    assert!(copdep(&["chiplot", "--config", &cfg, "--pair", "SYN_A-SYN_B"])
        .status
        .success());
    assert!(copdep(&["localtau", "--config", &cfg, "--pair", "SYN_A-SYN_B"])
        .status
        .success());
    let out = copdep(&[
        "rolling",
        "--config",
        &cfg,
        "--pair",
        "SYN_A-SYN_C",
        "--family",
        "gumbel",
        "--step",
        "50",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rolling = fs::read_to_string(d.path().join("out/pairs/SYN_A-SYN_C/rolling.csv")).unwrap();
    // 700 returns, window 500, step 50 -> 5 windows
    assert_eq!(rolling.lines().count(), 1 + 5);
}

#[test]
fn fit_copula_on_stored_pseudo_observations() {
    let d = tempfile::tempdir().unwrap();
    let s = copdep_core::CopulaModel::gumbel(1.8).unwrap().sample(400, 3).unwrap();
    let mut body = String::from("u,v\n");
    for (u, v) in s.u.iter().zip(&s.v) {
        body.push_str(&format!("{u},{v}\n"));
    }
    let input = d.path().join("pseudo.csv");
    fs::write(&input, body).unwrap();
    let output = d.path().join("table.csv");
    let out = copdep(&[
        "fit-copula",
        "--pseudo",
        input.to_str().unwrap(),
        "--output",
        output.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = fs::read_to_string(&output).unwrap();
    assert_eq!(table.lines().count(), 1 + 8);
    assert!(table.lines().next().unwrap().starts_with("family,k,param_names"));
    assert!(d.path().join("table.json").exists());
}

#[test]
fn validation_failures_exit_with_one() {
    let d = tempfile::tempdir().unwrap();
    let cfg = synth(d.path());
    fs::remove_file(d.path().join("SYN_B.csv")).unwrap();
    let out = copdep(&["run", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not found"));
    // validation happens before any stage writes output
    assert!(!d.path().join("out").exists());

    let out = copdep(&["summary", "--config", d.path().join("nope.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn numerical_failures_exit_with_two() {
    let d = tempfile::tempdir().unwrap();
    let mut body = String::from("date,price\n");
    let start = chrono::NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
    for i in 0..30u64 {
        body.push_str(&format!("{},100\n", start + chrono::Days::new(i)));
    }
    fs::write(d.path().join("flat.csv"), &body).unwrap();
    fs::write(d.path().join("flat2.csv"), &body).unwrap();
    let cfg = r#"{"series":[{"name":"F","path":"flat.csv"},{"name":"G","path":"flat2.csv"}],"seed":1}"#;
    fs::write(d.path().join("c.json"), cfg).unwrap();
    let out = copdep(&["summary", "--config", d.path().join("c.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}
