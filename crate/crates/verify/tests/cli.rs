use std::path::Path;
use std::process::{Command, Output};

use grushin_core::io::{read_field, read_kernel, write_field};
use grushin_core::quadrature::TensorGrid;
use grushin_core::restriction::{PeriodicGrid, SampledField};
use num_complex::Complex64;

fn verify(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_verify")).args(args).current_dir(cwd).output().expect("verify runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cases: &[&[&str]] = &[
        &["restriction-scaling", "--pqr", "1,2"],
        &["restriction-scaling", "--pqr", "1.9,2,2", "--d2", "3"],
        &["restriction-scaling", "--mu-grid", "2:1:4"],
        &["knapp", "--d1", "5"],
        &["no-such-scenario"],
        &["weyl-identity", "--kmax", "many"],
    ];
    for args in cases {
        let o = verify(args, dir.path());
        assert_eq!(code(&o), 2, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn config_errors_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"d1": 1, "kmaks": 3}"#).unwrap();
    let o = verify(&["weyl-identity", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("kmaks"));

    std::fs::write(&cfg, r#"{"d1": 7}"#).unwrap();
    let o = verify(&["weyl-identity", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("d1"));
}

#[test]
fn passing_scenario_writes_report_and_data() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = verify(&["synthesis", "--out", out.to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("synthesis.report.json")).unwrap()).unwrap();
    assert_eq!(json["schema_version"], 1);
    assert_eq!(json["scenario"], "synthesis");
    assert_eq!(json["verdict"], "pass");
    let csv = std::fs::read_to_string(out.join("synthesis.data.csv")).unwrap();
    assert!(csv.lines().count() > 1);
}

#[test]
fn failing_scenario_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    // the envelope at decay rate 1/4 is not uniform in k
    let o = verify(&["lemma-envelope", "--k-values", "10,40,160", "--gamma", "0.25"], dir.path());
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stdout).contains("[FAIL]"));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("lemma-envelope.report.json")).unwrap()).unwrap();
    assert_eq!(json["verdict"], "fail");
}

#[test]
fn config_file_overrides_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"kmax": 4, "a_values": [2.0]}"#).unwrap();
    let o = verify(&["weyl-identity", "--kmax", "9", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("weyl-identity.report.json")).unwrap()).unwrap();
    assert_eq!(json["parameters"]["kmax"], 4);
}

#[test]
fn export_kernel_and_apply_restriction_round_trip_files() {
    let dir = tempfile::tempdir().unwrap();
    let kernel = dir.path().join("k.bin");
    let o = verify(&["export-kernel", "--k", "3", "--a", "2", "--route", "laguerre", "--out", kernel.to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let k = read_kernel(&kernel).unwrap();
    assert_eq!((k.k, k.a), (3, 2.0));
    assert!(k.hermitian_deviation() < 1e-12);

    let x = TensorGrid::uniform(1, 161, 16.0).unwrap();
    let t = PeriodicGrid::uniform(1, 64, 40.0).unwrap();
    let f = SampledField::from_fn(x, t, |x, t| Complex64::new((-0.5 * (x[0] * x[0] + t[0] * t[0])).exp(), 0.0)).unwrap();
    let input = dir.path().join("f.bin");
    let output = dir.path().join("p.bin");
    write_field(&input, &f).unwrap();
    let o = verify(
        &["apply-restriction", "--input", input.to_str().unwrap(), "--mu", "1", "--kmax", "3", "--out", output.to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let p = read_field(&output).unwrap();
    assert!(p.same_grids(&f) && p.max_abs() > 0.0);

    let o = verify(
        &["apply-restriction", "--input", dir.path().join("missing.bin").to_str().unwrap(), "--mu", "1", "--kmax", "3", "--out", output.to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(code(&o), 1);
}
