use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use sha1::{Digest, Sha1};

fn run(args: &[&str], config: &str, dir: &Path) -> Output {
    let cfg = dir.join("config.json");
    fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_stickybm"))
        .args(args)
        .arg("--config")
        .arg(&cfg)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn payloads(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != "manifest.json")
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect()
}

#[test]
fn mfpt_table_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &["mfpt", "--out", "o"],
        r#"{"h": 0.1, "kappas": [1.0], "ell": 1.0, "n_samples": 20000, "seed": 11}"#,
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = read_json(&dir.path().join("o/mfpt.json"));
    let row = &rows[0];
    assert_eq!(row["sticky_limit"].as_f64().unwrap(), 1.5);
    let z = (row["estimate"].as_f64().unwrap() - 1.5).abs() / row["std_error"].as_f64().unwrap();
    assert!(z < 3.0, "{row}");
    let csv = fs::read_to_string(dir.path().join("o/mfpt.csv")).unwrap();
    assert!(csv.starts_with("method,kappa,x0,ell,step,sticky_limit,"));
}

#[test]
fn manifest_records_config_hash_and_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let config = r#"{"h": 0.05, "x_max": 6.0, "t_final": 0.5, "bc": {"p1": 0, "p2": 0.5, "p3": 0.5},
                    "phi": {"kind": "gaussian", "center": 3, "scale": 1}}"#;
    let out = run(&["pde-ref", "--out", "o"], config, dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let m = read_json(&dir.path().join("o/manifest.json"));
    assert_eq!(m["command"], "pde-ref");
    assert_eq!(m["config"]["x_max"], 6.0);
    let mut hasher = Sha1::new();
    hasher.update(format!("blob {}\0{config}", config.len()).as_bytes());
    assert_eq!(m["input_sha1"].as_str().unwrap(), format!("{:x}", hasher.finalize()));
    let outputs = m["outputs"].as_object().unwrap();
    assert!(outputs.contains_key("solution.csv") && outputs.contains_key("summary.json"));
    let summary = read_json(&dir.path().join("o/summary.json"));
    assert!(summary["u_at_origin"].as_f64().unwrap() > 0.0);
}

#[test]
fn srw_sim_paths_differ_only_in_origin_holding_times() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &["srw-sim", "--out", "o", "--seed", "5"],
        r#"{"h": 0.1, "kappas": [0, 0.5, 1, 2], "t_final": 2.0}"#,
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let parse = |i: usize| -> Vec<(f64, u32)> {
        fs::read_to_string(dir.path().join(format!("o/trajectory_{i}.csv")))
            .unwrap()
            .lines()
            .skip(1)
            .map(|l| {
                let (t, k) = l.split_once(',').unwrap();
                (t.parse().unwrap(), k.parse().unwrap())
            })
            .collect()
    };
    let paths: Vec<_> = (0..4).map(parse).collect();
    // Interior holding times agree on the common prefix; states agree.
    let n = paths.iter().map(|p| p.len()).min().unwrap();
    assert!(n > 10);
    for p in &paths[1..] {
        for i in 0..n {
            assert_eq!(p[i].1, paths[0][i].1);
        }
        for i in 1..n {
            let (d0, d) = (paths[0][i].0 - paths[0][i - 1].0, p[i].0 - p[i - 1].0);
            if paths[0][i - 1].1 != 0 {
                assert!((d - d0).abs() < 1e-9, "interior holding time changed");
            } else {
                assert!(d >= d0);
            }
        }
    }
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let config = r#"{"h": 0.1, "bc": {"p1": 0.2, "p2": 0.4, "p3": 0.4}, "t": 0.5, "x0": 0.2,
                    "phi": {"kind": "constant", "value": 1}, "n_samples": 3000, "seed": 9}"#;
    for (out_dir, workers) in [("a", "1"), ("b", "3")] {
        let out = run(&["fk-heat", "--out", out_dir, "--workers", workers], config, dir.path());
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let (a, b) = (payloads(&dir.path().join("a")), payloads(&dir.path().join("b")));
    assert!(!a.is_empty());
    assert_eq!(a, b);
    let (ma, mb) = (read_json(&dir.path().join("a/manifest.json")), read_json(&dir.path().join("b/manifest.json")));
    assert_eq!(ma["outputs"], mb["outputs"]);
    assert_eq!(ma["input_sha1"], mb["input_sha1"]);
}

#[test]
fn convergence_reports_a_slope() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &["convergence", "--out", "o"],
        r#"{"bc": {"p1": 0, "p2": 0.5, "p3": 0.5}, "t": 1.0, "phi": {"kind": "gaussian", "center": 3, "scale": 1},
            "hs": [0.4, 0.2, 0.1], "n_samples": 2000, "oracle_h": 0.025, "seed": 1}"#,
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = read_json(&dir.path().join("o/convergence.json"));
    assert!(r["slope"].as_f64().unwrap().is_finite());
    assert_eq!(r["rows"].as_array().unwrap().len(), 3);
}

#[test]
fn tpt_and_compare_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &["tpt", "--out", "t"],
        r#"{"h": 0.1, "kappa_left": 0.5, "kappa_right": 0.5, "length": 1, "t_total": 2000}"#,
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = read_json(&dir.path().join("t/tpt.json"));
    assert!((r["analytic"]["k_ab"].as_f64().unwrap() - 1.0).abs() < 1e-12);

    let out = run(
        &["compare", "--out", "c"],
        r#"{"potential": {"family": "flat"}, "ell": 1.0, "dts": [1e-3, 1e-4], "n_samples": 200,
            "srw": {"h": 0.1, "n_samples": 200}}"#,
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("c/compare.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn sem_sim_writes_paths_and_density() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &["sem-sim", "--out", "o"],
        r#"{"potential": {"family": "morse", "kappa": 1, "depth": 5}, "dt": 1e-4, "t_final": 0.05,
            "x0": 0.2, "n_samples": 64, "refine": 4, "stride": 10}"#,
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["path.csv", "path_coarse.csv", "density.csv", "summary.json"] {
        assert!(dir.path().join("o").join(f).exists(), "{f}");
    }
    let s = read_json(&dir.path().join("o/summary.json"));
    assert!(s["near_zero_mass"].as_f64().is_some());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    // Unknown key.
    let out = run(&["tpt"], r#"{"h": 0.1, "kappa_left": 1, "kappa_right": 0, "length": 1, "t_total": 10, "x": 1}"#, dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown field"));
    // Malformed JSON.
    assert_eq!(run(&["tpt"], "{", dir.path()).status.code(), Some(2));
    // p2 = 0 is rejected before any simulation.
    let out = run(
        &["fk-heat", "--out", "w"],
        r#"{"h": 0.1, "bc": {"p1": 0, "p2": 0, "p3": 1}, "t": 1, "phi": {"kind": "constant", "value": 1}, "n_samples": 10}"#,
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    // Too short for ten transitions.
    let out = run(
        &["tpt", "--out", "short"],
        r#"{"h": 0.05, "kappa_left": 1, "kappa_right": 0, "length": 1, "t_total": 3}"#,
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(4));
    // Every sample censored at a tiny horizon.
    let out = run(
        &["fk-poisson", "--out", "cens"],
        r#"{"h": 0.1, "bc": {"p1": 0, "p2": 0.5, "p3": 0.5}, "ell": 1, "phi": {"kind": "constant", "value": 1},
            "n_samples": 10, "horizon": 1e-6}"#,
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(4));
    // A zero-width Gaussian is NaN at its center.
    let out = run(
        &["pde-ref", "--out", "nan"],
        r#"{"h": 0.1, "x_max": 2, "t_final": 1, "bc": {"p1": 0, "p2": 1, "p3": 0},
            "phi": {"kind": "gaussian", "center": 0, "scale": 0}}"#,
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(3));
}
