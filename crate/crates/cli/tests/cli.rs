use std::process::{Command, Output};

use mdl_core::report::{AnalyzeReport, ConicEntry, DetScanReport, DualStatus, VerifyReport};
use mdl_core::TypeVector;

fn mdl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mdl"))
        .args(args)
        .env_remove("MDL_LOG")
        .output()
        .expect("run mdl")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn analyze_dual_found() {
    let o = mdl(&[
        "analyze", "--p1", "1/3", "--p2", "2/3", "--beta", "1", "--type", "+-+",
    ]);
    assert_eq!(code(&o), 0);
    let r: AnalyzeReport = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(r.dual_status, DualStatus::Found);
    assert_eq!(r.density.as_ref().unwrap().display, "1/((4+3x)(5+3x))");
    assert_eq!(r.density_invariant, Some(true));
    // re-serialization reproduces the same document
    let again = serde_json::to_value(&r).unwrap();
    let orig: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(again, orig);
}

#[test]
fn analyze_no_dual() {
    let o = mdl(&["analyze", "--beta", "1", "--type", "++-"]);
    assert_eq!(code(&o), 3);
    let o = mdl(&[
        "analyze", "--p1", "1/2", "--p2", "3/4", "--beta", "1", "--type", "+++",
    ]);
    assert_eq!(code(&o), 3);
    let r: AnalyzeReport = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(r.conic_residual.to_string(), "-1/16");
    assert!(stdout(&o).contains("\"conic_residual\": \"-1/16\""));
}

#[test]
fn analyze_text_output() {
    let o = mdl(&["analyze", "--beta", "2", "--type", "+++", "--out", "text"]);
    assert_eq!(code(&o), 0);
    let s = stdout(&o);
    assert!(s.contains("x/(1+2x)"));
    assert!(s.contains("h = 1/(x(1+3x)) (not normalizable)"));
    assert!(s.contains("dual: found"));
}

#[test]
fn analyze_linear_case() {
    let o = mdl(&["analyze", "--beta", "0", "--type", "+++"]);
    assert_eq!(code(&o), 0);
    let r: AnalyzeReport = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(r.dual_status, DualStatus::Degenerate);
    let pieces: Vec<_> = r
        .lifted
        .unwrap()
        .iter()
        .map(|p| p.density.display.clone())
        .collect();
    assert_eq!(pieces, ["1", "3", "1"]);
}

#[test]
fn invalid_input_exits_2() {
    for args in [
        &["analyze", "--beta", "1", "--type", "+x+"][..],
        &["analyze", "--beta", "0.5", "--type", "+++"],
        &["analyze", "--beta", "1/0", "--type", "+++"],
        &[
            "analyze", "--p1", "2/3", "--p2", "1/3", "--beta", "1", "--type", "+++",
        ],
        &["analyze", "--beta", "3", "--type", "+++"],
        &["verify", "--beta", "-1", "--type", "+++"],
        &["detscan", "--p1", "1/2", "--p2", "1/2", "--type", "+++"],
        &["conic"],
        &["bogus"],
    ] {
        let o = mdl(args);
        assert_eq!(code(&o), 2, "{args:?}: {}", stderr(&o));
        assert!(!stderr(&o).is_empty());
    }
}

#[test]
fn override_allows_out_of_range_beta() {
    let o = mdl(&["analyze", "--beta", "3", "--type", "+-+", "--override"]);
    assert_ne!(code(&o), 2, "{}", stderr(&o));
}

#[test]
fn detscan_examples() {
    let o = mdl(&["detscan", "--type", "+++", "--p1", "1/3", "--p2", "2/3"]);
    assert_eq!(code(&o), 0);
    let r: DetScanReport = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(r.identically_zero);

    let o = mdl(&["detscan", "--type", "---"]);
    let r: DetScanReport = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(r.admissible_roots.is_empty());
    assert!(!r.identically_zero);

    let o = mdl(&["detscan", "--type", "+++", "--p1", "1/2", "--p2", "3/4"]);
    let r: DetScanReport = serde_json::from_str(&stdout(&o)).unwrap();
    let roots: Vec<String> = r.roots.iter().map(|e| e.root.to_string()).collect();
    assert_eq!(roots, ["-1", "0"]);
}

#[test]
fn conic_listing() {
    let o = mdl(&["conic", "--t-list", "3,2,3/2,1/2"]);
    assert_eq!(code(&o), 0);
    let v: Vec<ConicEntry> = serde_json::from_str(&stdout(&o)).unwrap();
    let pts: Vec<(String, String)> = v
        .iter()
        .map(|e| (e.p1.to_string(), e.p2.to_string()))
        .collect();
    assert_eq!(
        pts,
        [("4/7", "6/7"), ("1/3", "2/3"), ("1/7", "3/7")].map(|(a, b)| (a.into(), b.into()))
    );
    assert!(v.iter().all(|e| e.residual.to_string() == "0"));

    let o = mdl(&["conic", "--t-max", "3", "--t-den", "2"]);
    let v: Vec<ConicEntry> = serde_json::from_str(&stdout(&o)).unwrap();
    let ts: Vec<String> = v.iter().map(|e| e.t.to_string()).collect();
    assert_eq!(ts, ["3/2", "2", "5/2", "3"]);
}

#[test]
fn conic_warns_on_skipped_t() {
    let o = Command::new(env!("CARGO_BIN_EXE_mdl"))
        .args(["conic", "--t-list", "1,2"])
        .env("MDL_LOG", "info")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(stderr(&o).contains("skipping t = 1"));
}

#[test]
fn verify_examples() {
    let o = mdl(&["verify", "--beta", "2", "--type", "+++"]);
    assert_eq!(code(&o), 0);
    let r: VerifyReport = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(r.notes.iter().any(|n| n.contains("non-normalizable")));
    assert_eq!(r.invariance_residual.as_deref(), Some("0"));

    assert_eq!(code(&mdl(&["verify", "--beta", "1", "--type", "+-+"])), 0);

    let o = mdl(&["verify", "--beta", "1", "--type", "+--"]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("no candidate density"));
}

#[test]
fn analyze_and_verify_agree() {
    for ty in TypeVector::all() {
        for beta in ["-1/2", "1/2", "1", "2"] {
            let t = ty.to_string();
            let a = mdl(&["analyze", "--beta", beta, "--type", &t]);
            let v = mdl(&["verify", "--beta", beta, "--type", &t]);
            let found = code(&a) == 0;
            assert_eq!(found, code(&v) == 0, "{t} beta={beta}");
            if found {
                let r: AnalyzeReport = serde_json::from_str(&stdout(&a)).unwrap();
                assert_eq!(r.density_invariant, Some(true));
            } else {
                assert_eq!(code(&a), 3);
                assert_eq!(code(&v), 1);
            }
        }
    }
}

#[test]
fn simulate_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("hist.csv");
    let o = mdl(&[
        "simulate",
        "--map",
        "S",
        "--beta",
        "1",
        "--type",
        "+-+",
        "--iters",
        "200000",
        "--bins",
        "20",
        "--seed",
        "9",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let summary: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(summary["ks"].as_f64().unwrap() < 0.02);
    assert_eq!(summary["escapes"], 0);
    let mut rdr = csv::Reader::from_path(&path).unwrap();
    assert_eq!(
        rdr.headers().unwrap(),
        vec!["bin_lo", "bin_hi", "empirical", "analytic"]
    );
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 20);
    assert_eq!(&rows[0][1], "0.0500000000000");
    let emp: f64 = rows.iter().map(|r| r[2].parse::<f64>().unwrap()).sum();
    let ana: f64 = rows.iter().map(|r| r[3].parse::<f64>().unwrap()).sum();
    assert!((emp - 1.0).abs() < 1e-9);
    assert!((ana - 1.0).abs() < 1e-9);
    // only the target file is left behind
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn simulate_linear_t_map() {
    let o = mdl(&[
        "simulate", "--map", "T", "--beta", "0", "--type", "+++", "--iters", "300000",
    ]);
    assert_eq!(code(&o), 0);
    let summary: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(summary["density"], "1 | 3 | 1");
    assert!((summary["norm"].as_f64().unwrap() - 5.0 / 3.0).abs() < 1e-12);
}

#[test]
fn simulate_deterministic() {
    let args = [
        "simulate", "--map", "T", "--beta", "1/2", "--type", "+++", "--iters", "50000", "--seed",
        "3",
    ];
    assert_eq!(stdout(&mdl(&args)), stdout(&mdl(&args)));
}

#[test]
fn simulate_pooled_seeds() {
    let o = mdl(&[
        "simulate", "--map", "S", "--beta", "1", "--type", "+++", "--iters", "50000", "--seeds",
        "3",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let summary: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(summary["seeds"].as_array().unwrap().len(), 3);
    assert_eq!(summary["samples"], 3 * 49000);
}

#[test]
fn simulate_refuses_infinite_measure() {
    let o = mdl(&[
        "simulate", "--map", "S", "--beta", "2", "--type", "+++", "--iters", "10000",
    ]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("--restrict-domain"));

    let o = mdl(&[
        "simulate",
        "--map",
        "S",
        "--beta",
        "2",
        "--type",
        "+++",
        "--iters",
        "200000",
        "--restrict-domain",
        "1/100",
    ]);
    assert_ne!(code(&o), 2, "{}", stderr(&o));
    let summary: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(summary["slow_mixing"], true);
    assert_eq!(summary["domain"][0], 0.01);
}

#[test]
fn simulate_ks_failure_exit_4() {
    // a deliberately impossible threshold
    let o = mdl(&[
        "simulate",
        "--map",
        "S",
        "--beta",
        "1",
        "--type",
        "+-+",
        "--iters",
        "20000",
        "--ks-threshold",
        "1e-9",
    ]);
    assert_eq!(code(&o), 4);
}

#[test]
fn simulate_bad_config_exit_2() {
    for args in [
        &[
            "simulate",
            "--map",
            "S",
            "--beta",
            "1",
            "--type",
            "+-+",
            "--iters",
            "10",
            "--burn-in",
            "10",
        ][..],
        &[
            "simulate", "--map", "S", "--beta", "1", "--type", "+-+", "--bins", "5",
        ],
        &["simulate", "--map", "Q", "--beta", "1", "--type", "+-+"],
        &[
            "simulate", "--map", "S", "--beta", "1", "--type", "+-+", "--x0", "1.5",
        ],
    ] {
        assert_eq!(code(&mdl(args)), 2, "{args:?}");
    }
}

#[test]
fn debug_logging_goes_to_stderr() {
    let o = Command::new(env!("CARGO_BIN_EXE_mdl"))
        .args(["analyze", "--beta", "1", "--type", "+++"])
        .env("MDL_LOG", "debug")
        .output()
        .unwrap();
    assert!(stderr(&o).contains("det polynomial"));
    let _: AnalyzeReport = serde_json::from_str(&stdout(&o)).unwrap();
}
