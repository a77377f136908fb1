use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sphere-euler"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn run_config(name: &str, extra: &[&str], out: &Path) -> Output {
    let path = config(name);
    let mut args = vec!["--config", path.to_str().unwrap()];
    args.extend(extra);
    run(&args, out)
}

/// Data rows of a CSV with one comment line and a header.
fn rows(path: &Path) -> (String, Vec<String>, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let comment = lines.next().unwrap().to_string();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let data = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    (comment, header, data)
}

fn write_config(dir: &Path, json: &str) -> PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, json).unwrap();
    path
}

#[test]
fn sinusoidal_momentum_grid_matches_the_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_config("sinusoidal_momentum.json", &["--quiet"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    let (comment, header, data) = rows(&dir.path().join("sinusoidal_momentum.csv"));
    assert!(comment.starts_with("# config-hash "));
    assert_eq!(header, ["theta", "phi", "u", "v", "detM", "valid"]);
    assert_eq!(data.len(), 128 * 128);
    for r in &data {
        let (theta, phi) = (r[0], r[1]);
        assert!(theta > 0.0 && theta < PI && (0.0..2.0 * PI).contains(&phi));
        let v = 2.0 * phi.cos() / (2.0 * theta).sin() - 1.0;
        assert!((r[2] - phi.sin()).abs() <= 1e-12);
        assert!((r[3] - v).abs() <= 1e-12 * v.abs().max(1.0), "{r:?}");
        assert_eq!(r[5], 1.0);
    }
}

#[test]
fn rest_in_the_inertial_frame_keeps_its_colatitude() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_config("fixed_point.json", &[], dir.path());
    assert!(out.status.success());
    let (_, header, data) = rows(&dir.path().join("fixed_point.csv"));
    assert_eq!(header, ["t", "theta", "phi_unwrapped", "u", "v"]);
    let last = data.last().unwrap();
    assert_eq!(last[0], 10.0);
    for r in &data {
        assert_eq!((r[1], r[3], r[4]), (0.9, 0.0, -1.5));
        // The fluid is at rest, so the rotating-frame longitude falls at rate ω.
        assert!((r[2] - (0.3 - 1.5 * r[0])).abs() < 1e-12);
    }
}

#[test]
fn outputs_are_byte_identical_for_the_same_config_and_seed() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for name in ["cosine_coriolis.json", "residual_cosine_coriolis.json", "hopf_blowup.json"] {
        assert!(run_config(name, &["--threads", "1"], a.path()).status.success());
        assert!(run_config(name, &["--threads", "3"], b.path()).status.success());
    }
    for file in ["cosine_coriolis.csv", "residual.csv", "locus.csv"] {
        let x = std::fs::read(a.path().join(file)).unwrap();
        let y = std::fs::read(b.path().join(file)).unwrap();
        assert!(x == y, "{file} differs");
    }
}

#[test]
fn seed_is_recorded_and_changes_random_output() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run_config("residual_cosine_coriolis.json", &["--seed", "1"], dir.path()).status.success());
    let (c1, _, d1) = rows(&dir.path().join("residual.csv"));
    assert!(run_config("residual_cosine_coriolis.json", &["--seed", "2"], dir.path()).status.success());
    let (c2, _, d2) = rows(&dir.path().join("residual.csv"));
    assert!(c1.ends_with("seed 1") && c2.ends_with("seed 2"));
    assert_ne!(c1, c2);
    assert_ne!(d1[0], d2[0]);
}

#[test]
fn config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(dir.path(), r#"{"command":"verify-all","verbose":true}"#);
    let out = run(&["--config", bad.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown field"));

    let out = run(&["solve"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let out = run(&["--config", dir.path().join("missing.json").to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn numerical_failures_exit_with_two_and_name_the_subcase() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"command":"integrate","integrate":{"regime":"FULL","omega":1,
            "start":{"theta":0.05,"phi":0,"u":-1,"v":-1},"t_end":5,"invariants":false}}"#,
    );
    let out = run(&["--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("integrate/pole"));
    // The part computed before the pole is still written.
    assert!(dir.path().join("trajectory.csv").exists());

    let cfg = write_config(
        dir.path(),
        r#"{"command":"residual","residual":{"field":{"family":{"kind":"constant","u":0.3,"v":0},
            "omega":1,"regime":"FULL"},"points":10,"t":[0,1],"theta":[0.5,2.5],"phi":[0,6]}}"#,
    );
    let out = run(&["--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("residual/point"));
}

#[test]
fn transform_without_counterpart_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"command":"transform","transform":{"field":{"family":{"kind":"constant","u":0,"v":0},
            "omega":1,"regime":"CORIOLIS"},"map":{"kind":"frame","direction":"to_nonrotating"}}}"#,
    );
    let out = run(&["--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn verify_all_writes_a_report_for_every_criterion() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["verify-all"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["pass"], true);
    let criteria = report["criteria"].as_array().unwrap();
    assert_eq!(criteria.len(), 10);
    for (i, c) in criteria.iter().enumerate() {
        assert_eq!(c["id"], i as u64 + 1);
        for key in ["measured", "threshold", "wall_time_s"] {
            assert!(c[key].is_number(), "{key} in {c}");
        }
        assert_eq!(c["pass"], true);
    }
}

#[test]
fn verify_all_subset_from_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"command":"verify-all","output":"quick.json","verify-all":{"criteria":[1,9]}}"#);
    let out = run(&["--config", cfg.to_str().unwrap()], dir.path());
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("quick.json")).unwrap()).unwrap();
    let ids: Vec<u64> = report["criteria"].as_array().unwrap().iter().map(|c| c["id"].as_u64().unwrap()).collect();
    assert_eq!(ids, [1, 9]);

    let cfg = write_config(dir.path(), r#"{"command":"verify-all","verify-all":{"criteria":[42]}}"#);
    assert_eq!(run(&["--config", cfg.to_str().unwrap()], dir.path()).status.code(), Some(1));
}
