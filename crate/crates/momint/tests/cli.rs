//! End-to-end tests of the `momint` binary: exit codes, determinism of the
//! emitted artifacts, and JSON round-trips.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_momint")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn tempdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("momint_cli_{tag}_{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

const TWO_INTERVAL_CONFIG: &str = r#"{
  "omega": [[0,1],[1,2],[1,1],[3,2]],
  "matrix": "build-from-lambda",
  "lambda": {"offsets": [[0,1],[1,2]], "period": [2,1]},
  "gamma": {"offsets": [[0,1],[1,2]], "period": [2,1]},
  "window": [-6.0, 6.0],
  "out_dir": "out"
}"#;

#[test]
fn spectrum_row_count_on_unit_interval() {
    let dir = tempdir("spectrum");
    write_config(
        &dir,
        "config.json",
        r#"{
          "omega": [[0,1],[1,1]],
          "matrix": {"mode": "unitary", "entries": [[[1.0, 0.0]]]},
          "window": [-2.5, 2.5],
          "out_dir": "out"
        }"#,
    );
    let out = run_in(&dir, &["spectrum", "--config", "config.json"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = std::fs::read_to_string(dir.join("out/spectrum.csv")).unwrap();
    // header + 5 eigenvalues
    assert_eq!(csv.lines().count(), 6);
}

#[test]
fn harness_reports_agreement() {
    let dir = tempdir("harness");
    write_config(&dir, "config.json", TWO_INTERVAL_CONFIG);
    let out = run_in(&dir, &["harness", "--config", "config.json"]);
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("agreement: true"), "stdout: {stdout}");
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("out/harness.json")).unwrap())
            .unwrap();
    assert_eq!(report["agreement"], true);
    assert_eq!(report["tiles"], true);
}

#[test]
fn tile_measure_mismatch() {
    let dir = tempdir("tile");
    write_config(
        &dir,
        "config.json",
        r#"{
          "omega": [[0,1],[101,100]],
          "gamma": {"offsets": [[0,1]], "period": [1,1]},
          "out_dir": "out"
        }"#,
    );
    let out = run_in(&dir, &["tile", "--config", "config.json"]);
    assert!(out.status.success());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("out/tiling.json")).unwrap())
            .unwrap();
    assert_eq!(report["tiles"], false);
    assert_eq!(report["defects"][0]["kind"], "measure_mismatch");
}

#[test]
fn validation_errors_exit_2_with_json() {
    let dir = tempdir("badconfig");
    // unknown key
    write_config(
        &dir,
        "config.json",
        r#"{"omega": [[0,1],[1,1]], "nope": 1}"#,
    );
    let out = run_in(&dir, &["spectrum", "--config", "config.json"]);
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value =
        serde_json::from_str(String::from_utf8_lossy(&out.stderr).trim()).unwrap();
    assert_eq!(err["kind"], "validation");

    // missing required entries
    write_config(&dir, "empty.json", r#"{}"#);
    let out = run_in(&dir, &["spectrum", "--config", "empty.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn numerical_errors_exit_3_with_json() {
    let dir = tempdir("singular");
    // resolvent at a spectral point of the unit-interval extension
    write_config(
        &dir,
        "config.json",
        r#"{
          "omega": [[0,1],[1,1]],
          "matrix": {"mode": "unitary", "entries": [[[1.0, 0.0]]]},
          "resolvent_lambda": [1.0, 0.0],
          "function": {"kind": "exp", "lambda": 0.25},
          "out_dir": "out"
        }"#,
    );
    let out = run_in(&dir, &["resolvent", "--config", "config.json"]);
    assert_eq!(out.status.code(), Some(3));
    let err: serde_json::Value =
        serde_json::from_str(String::from_utf8_lossy(&out.stderr).trim()).unwrap();
    assert_eq!(err["kind"], "numerical");
    assert_eq!(err["module"], "spectral");
}

#[test]
fn identical_configs_give_identical_bytes() {
    let dir_a = tempdir("det_a");
    let dir_b = tempdir("det_b");
    for dir in [&dir_a, &dir_b] {
        write_config(dir, "config.json", TWO_INTERVAL_CONFIG);
        let out = run_in(dir, &["spectrum", "--config", "config.json"]);
        assert!(out.status.success());
        let out = run_in(dir, &["harness", "--config", "config.json"]);
        assert!(out.status.success());
    }
    for name in ["out/spectrum.csv", "out/spectrum.json", "out/harness.json"] {
        let a = std::fs::read(dir_a.join(name)).unwrap();
        let b = std::fs::read(dir_b.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
    }
}

#[test]
fn flags_override_config() {
    let dir = tempdir("flags");
    write_config(&dir, "config.json", TWO_INTERVAL_CONFIG);
    let out = run_in(
        &dir,
        &[
            "spectrum",
            "--config",
            "config.json",
            "--window",
            "-2.5",
            "2.5",
            "--out",
            "elsewhere",
            "--threads",
            "2",
        ],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(dir.join("elsewhere/spectrum.csv").exists());
    // 2Z ∪ (2Z+1/2) in [-2.5, 2.5]: {-2.5? no (not in 2Z+1/2): members
    // -2, -1.5, 0, 0.5, 2, 2.5} -> wait: 2Z+1/2 = {..., -1.5, 0.5, 2.5}
    let csv = std::fs::read_to_string(dir.join("elsewhere/spectrum.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 6);
}

#[test]
fn build_b_output_reloads() {
    let dir = tempdir("buildb");
    write_config(&dir, "config.json", TWO_INTERVAL_CONFIG);
    let out = run_in(&dir, &["build-b", "--config", "config.json"]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(dir.join("out/matrix.json")).unwrap();
    let json: momint::boundary::MatrixJson = serde_json::from_str(&text).unwrap();
    let loaded = json.load().unwrap();
    assert!(loaded.unitarity_defect <= 1e-12);
    assert_eq!(loaded.matrix.n(), 2);
}

#[test]
fn evolve_emits_frames_and_manifest() {
    let dir = tempdir("evolve");
    write_config(
        &dir,
        "config.json",
        r#"{
          "omega": [[0,1],[1,2],[1,1],[3,2]],
          "matrix": "build-from-lambda",
          "lambda": {"offsets": [[0,1],[1,2]], "period": [2,1]},
          "window": [-20.0, 20.0],
          "times": [0.0, 0.5],
          "function": {"kind": "bump", "interval": 0},
          "quad_order": 64,
          "out_dir": "out"
        }"#,
    );
    for (propagator, outdir) in [("ray", "out_ray"), ("spectral", "out_spec")] {
        let out = run_in(
            &dir,
            &[
                "evolve",
                "--config",
                "config.json",
                "--propagator",
                propagator,
                "--out",
                outdir,
            ],
        );
        assert!(
            out.status.success(),
            "{propagator}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        assert!(dir.join(outdir).join("frame_0.csv").exists());
        assert!(dir.join(outdir).join("frame_1.csv").exists());
        let manifest: serde_json::Value = serde_json::from_str(
            &std::fs::read_to_string(dir.join(outdir).join("frames_manifest.json")).unwrap(),
        )
        .unwrap();
        assert_eq!(manifest["times"].as_array().unwrap().len(), 2);
        let norms = manifest["norms"].as_array().unwrap();
        // unitarity: both frames carry the initial mass
        let n0 = norms[0].as_f64().unwrap();
        let n1 = norms[1].as_f64().unwrap();
        assert!((n0 - n1).abs() < 1e-6, "{propagator}: norms {n0} vs {n1}");
    }
}

#[test]
fn check_b_and_gram_and_parseval() {
    let dir = tempdir("misc");
    write_config(&dir, "config.json", TWO_INTERVAL_CONFIG);
    let out = run_in(&dir, &["check-b", "--config", "config.json"]);
    assert!(out.status.success());
    let verdict: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("out/verdict.json")).unwrap())
            .unwrap();
    assert_eq!(verdict["classification"]["kind"], "spectral_evidence");

    let out = run_in(&dir, &["gram", "--config", "config.json"]);
    assert!(out.status.success());
    let gram: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("out/gram.json")).unwrap()).unwrap();
    assert!(gram["max_offdiag"].as_f64().unwrap() <= 1e-12);

    let dir2 = tempdir("parseval");
    write_config(
        &dir2,
        "config.json",
        r#"{
          "omega": [[0,1],[1,2],[1,1],[3,2]],
          "lambda": {"offsets": [[0,1],[1,2]], "period": [2,1]},
          "window": [-20.0, 20.0],
          "function": {"kind": "bump", "interval": 0},
          "quad_order": 64,
          "out_dir": "out"
        }"#,
    );
    let out = run_in(&dir2, &["parseval", "--config", "config.json"]);
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir2.join("out/parseval.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 8);
}

#[test]
fn eigfun_tables() {
    let dir = tempdir("eigfun");
    write_config(
        &dir,
        "config.json",
        r#"{
          "omega": [[0,1],[1,1]],
          "matrix": {"mode": "unitary", "entries": [[[1.0, 0.0]]]},
          "window": [-1.5, 1.5],
          "out_dir": "out"
        }"#,
    );
    let out = run_in(&dir, &["eigfun", "--config", "config.json"]);
    assert!(out.status.success());
    let manifest: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.join("out/eigfun_manifest.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(manifest["eigenfunctions"].as_array().unwrap().len(), 3);
    assert!(dir.join("out/eigfun_0_0.csv").exists());
}
