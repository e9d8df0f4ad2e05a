use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use heavyspec::cli::{main_with_args, RunConfig, EXIT_CONFIG, EXIT_OK, EXIT_RUNTIME, RUN_CONFIG_FILE};

fn recipe(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../recipes").join(name)
}

fn run(args: &[&str], out: &Path) -> u8 {
    let mut argv = vec!["heavyspec".to_string()];
    argv.extend(args.iter().map(|s| s.to_string()));
    argv.push("--out".into());
    argv.push(out.to_string_lossy().into_owned());
    main_with_args(argv)
}

fn read_rows(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect()
}

#[test]
fn identity_field_reproduces_noise() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("id.json");
    fs::write(
        &cfg,
        r#"{"command": "simulate", "seed": 5,
            "field": {"noise": {"kind": "pareto", "alpha": 1.2}, "p": 6, "n": 9, "s_max": 0}}"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    assert_eq!(run(&["simulate", cfg.to_str().unwrap()], &out), EXIT_OK);
    assert_eq!(fs::read(out.join("noise.csv")).unwrap(), fs::read(out.join("x_0.csv")).unwrap());
    assert!(out.join(RUN_CONFIG_FILE).exists());
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let cfg = recipe("ma_simulate.json");
    assert_eq!(run(&["simulate", cfg.to_str().unwrap()], &a), EXIT_OK);
    assert_eq!(run(&["simulate", cfg.to_str().unwrap()], &b), EXIT_OK);
    for f in ["noise.csv", "x_0.csv", "x_1.csv"] {
        let (x, y) = (fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap());
        assert!(!x.is_empty() && !x.contains(&b'\r'));
        assert_eq!(x, y, "{f} differs");
    }
    let c = dir.path().join("c");
    assert_eq!(run(&["simulate", cfg.to_str().unwrap(), "--seed", "8"], &c), EXIT_OK);
    assert_ne!(fs::read(a.join("x_0.csv")).unwrap(), fs::read(c.join("x_0.csv")).unwrap());
}

#[test]
fn moving_average_m_matrix() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["mmatrix", recipe("ma_mmatrix.json").to_str().unwrap()], dir.path()), EXIT_OK);
    let rows = read_rows(&dir.path().join("mmatrix.csv"));
    let value = |lag: &str, j: &str| -> f64 {
        rows.iter().find(|r| r[0] == lag && r[1] == j).unwrap()[2].parse().unwrap()
    };
    assert_eq!(value("0", "1"), 8.0);
    assert_eq!(value("0", "2"), 2.0);
    assert_eq!(value("1", "1"), 5.0);
    let sums = read_rows(&dir.path().join("sum_squares.csv"));
    let v: Vec<f64> = sums.iter().map(|r| r[1].parse().unwrap()).collect();
    // M(0)M(0)' + M(1)M(1)' has trace 64 + 4 + 25.
    assert!((v.iter().sum::<f64>() - 93.0).abs() < 1e-12);
}

#[test]
fn frechet_curve() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["limits", recipe("frechet_curve.json").to_str().unwrap()], dir.path()), EXIT_OK);
    let rows = read_rows(&dir.path().join("law.csv"));
    assert_eq!(rows.len(), 2001);
    let at = |x: f64| -> f64 {
        let r = rows.iter().find(|r| (r[0].parse::<f64>().unwrap() - x).abs() < 1e-12).unwrap();
        r[1].parse().unwrap()
    };
    assert_eq!(at(0.0), 0.0);
    assert!((at(1.0) - (-1f64).exp()).abs() < 1e-15);
}

#[test]
fn tracy_widom_curve() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["tw", recipe("tw_curve.json").to_str().unwrap()], dir.path()), EXIT_OK);
    let rows = read_rows(&dir.path().join("tw.csv"));
    let f: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(f.windows(2).all(|w| w[1] >= w[0]));
    let dens: Vec<f64> = rows.iter().map(|r| r[2].parse().unwrap()).collect();
    assert!(dens.iter().all(|d| *d > -1e-8));
}

#[test]
fn bundled_returns_are_heavy_tailed() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["analyze", recipe("tail_indices.json").to_str().unwrap()], dir.path()), EXIT_OK);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("analyze.json")).unwrap()).unwrap();
    assert!(summary["share_below_four"].as_f64().unwrap() > 0.5);
    assert_eq!(read_rows(&dir.path().join("tail_pairs.csv")).len(), 30);
}

#[test]
fn small_ensemble_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = recipe("gap_ma.json");
    assert_eq!(run(&["ensemble", cfg.to_str().unwrap(), "--replicates", "30"], dir.path()), EXIT_OK);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["replicates_ok"].as_u64(), Some(30));
    assert_eq!(read_rows(&dir.path().join("values.csv")).len(), 30);
    let saved = RunConfig::from_json(&fs::read_to_string(dir.path().join(RUN_CONFIG_FILE)).unwrap()).unwrap();
    assert_eq!(saved.ensemble.unwrap().replicates, 30);
}

#[test]
fn config_round_trip() {
    for entry in fs::read_dir(recipe("")).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "json") {
            let cfg = RunConfig::from_json(&fs::read_to_string(&path).unwrap()).unwrap();
            assert!(cfg.description.is_some(), "{} lacks a description", path.display());
            assert_eq!(RunConfig::from_json(&cfg.to_json().unwrap()).unwrap(), cfg);
        }
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    assert_eq!(run(&["simulate", "/nonexistent/config.json"], &out), EXIT_CONFIG);
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"command": "simulate", "bogus": 1}"#).unwrap();
    assert_eq!(run(&["simulate", bad.to_str().unwrap()], &out), EXIT_CONFIG);
    let mismatch = dir.path().join("mismatch.json");
    fs::write(&mismatch, r#"{"command": "tw", "limits": {"law": {"law": "frechet", "alpha_half": 1.0}}}"#).unwrap();
    assert_eq!(run(&["limits", mismatch.to_str().unwrap()], &out), EXIT_CONFIG);
    let missing = dir.path().join("missing.json");
    fs::write(&missing, r#"{"command": "analyze", "analyze": {"returns": "nowhere.csv", "layout": "columns"}}"#).unwrap();
    assert_eq!(run(&["analyze", missing.to_str().unwrap()], &out), EXIT_RUNTIME);
}

#[test]
fn binary_reports_exit_status() {
    let bin = env!("CARGO_BIN_EXE_heavyspec");
    let ok = Command::new(bin).arg("--help").output().unwrap();
    assert!(ok.status.success());
    let bad = Command::new(bin).args(["simulate", "/nonexistent.json"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(EXIT_CONFIG as i32));
    assert!(!bad.stderr.is_empty());
}
