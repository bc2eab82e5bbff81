//! End-to-end tests of the `cvbench` binary: output formats, exit codes,
//! environment fallbacks, and float round-tripping in emitted tables.

use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cvbench"))
        .args(args)
        .env_remove("CVBENCH_TRUNC")
        .env_remove("CVBENCH_SEEDS")
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).unwrap()
}

#[test]
fn fidelity_text_reports_reference_value() {
    let out = run(&["teleport", "fidelity", "--xi", "0.25", "--energy", "0.6"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let value_line = text
        .lines()
        .find(|l| l.starts_with("value_truncated = "))
        .expect("value line present");
    let value: f64 = value_line.rsplit(' ').next().unwrap().parse().unwrap();
    assert!((value - 0.6310).abs() < 5e-5, "{text}");
    assert!(text.contains("status = certified"));
    assert!(text.contains("support = 0:"));
}

#[test]
fn fidelity_json_has_contract_fields() {
    let out = run(&[
        "teleport", "fidelity", "--xi", "0.25", "--energy", "0.6", "--format", "json",
    ]);
    assert!(out.status.success());
    let value: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    for field in [
        "value_truncated",
        "lower_bound",
        "upper_bound",
        "trunc",
        "energy",
        "xi",
        "spectrum",
        "certificate",
    ] {
        assert!(value.get(field).is_some(), "missing field {field}");
    }
    assert!((value["value_truncated"].as_f64().unwrap() - 0.6310).abs() < 5e-5);
    assert_eq!(value["certificate"]["status"], "Verified");
    let betas = value["certificate"]["betas"].as_array().unwrap();
    assert_eq!(betas.len(), 51);
}

#[test]
fn fidelity_certificate_flag_emits_json_block() {
    let out = run(&[
        "teleport", "fidelity", "--xi", "0.6667", "--energy", "1.2", "--certificate",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    // three-level support reported
    assert!(text.contains("support = 0:"), "{text}");
    assert!(text.contains("1:") && text.contains("2:"));
    let json_start = text.find('{').expect("certificate json present");
    let cert: serde_json::Value = serde_json::from_str(&text[json_start..]).unwrap();
    for field in ["mu", "gamma", "betas", "residuals", "gap", "status"] {
        assert!(cert.get(field).is_some(), "missing certificate field {field}");
    }
}

#[test]
fn zero_noise_gives_unit_fidelity() {
    let out = run(&[
        "teleport", "fidelity", "--xi", "0", "--energy", "1", "--format", "csv",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "value_truncated,lower_bound,upper_bound,trunc,energy,xi"
    );
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[0].parse::<f64>().unwrap(), 1.0);
}

#[test]
fn verify_passes_on_small_instance() {
    let out = run(&[
        "teleport", "fidelity", "--xi", "0.5", "--energy", "1", "--trunc", "6", "--verify",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn malformed_flags_exit_64() {
    let out = run(&["teleport", "fidelity", "--xi", "abc", "--energy", "1"]);
    assert_eq!(out.status.code(), Some(64));
    let out = run(&["teleport", "fidelity"]);
    assert_eq!(out.status.code(), Some(64));
    let out = run(&["nonsense"]);
    assert_eq!(out.status.code(), Some(64));
    // domain errors from validated parameters also map to usage
    let out = run(&["teleport", "fidelity", "--xi", "-1", "--energy", "1"]);
    assert_eq!(out.status.code(), Some(64));
}

#[test]
fn help_and_version_exit_zero() {
    assert!(run(&["--help"]).status.success());
    assert!(run(&["--version"]).status.success());
    assert!(run(&["teleport", "sweep", "--help"]).status.success());
}

#[test]
fn out_file_matches_stdout() {
    let dir = std::env::temp_dir().join("cvbench-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("sweep.csv");
    let to_stdout = run(&[
        "teleport", "sweep", "--xi-min", "0.1", "--xi-max", "0.3", "--xi-steps", "3",
        "--energies", "0.6", "--trunc", "10",
    ]);
    assert!(to_stdout.status.success());
    let to_file = run(&[
        "teleport", "sweep", "--xi-min", "0.1", "--xi-max", "0.3", "--xi-steps", "3",
        "--energies", "0.6", "--trunc", "10", "--out", path.to_str().unwrap(),
    ]);
    assert!(to_file.status.success());
    assert_eq!(std::fs::read(&path).unwrap(), to_stdout.stdout);
}

#[test]
fn table_floats_round_trip_bit_exactly() {
    let out = run(&[
        "teleport", "compare", "--xi-min", "0.1", "--xi-max", "0.7", "--xi-steps", "4",
        "--trunc", "20",
    ]);
    assert!(out.status.success());
    for line in stdout(&out).lines().filter(|l| !l.starts_with('#')).skip(1) {
        for cell in line.split(',') {
            let parsed: f64 = cell.parse().unwrap();
            assert_eq!(format!("{parsed}"), cell, "float does not round-trip");
        }
    }
}

#[test]
fn env_trunc_fallback_and_flag_precedence() {
    let with_env = Command::new(env!("CARGO_BIN_EXE_cvbench"))
        .args(["teleport", "fidelity", "--xi", "0.25", "--energy", "0.6", "--format", "json"])
        .env("CVBENCH_TRUNC", "8")
        .output()
        .unwrap();
    let value: serde_json::Value = serde_json::from_str(&stdout(&with_env)).unwrap();
    assert_eq!(value["trunc"], 8);

    let with_flag = Command::new(env!("CARGO_BIN_EXE_cvbench"))
        .args([
            "teleport", "fidelity", "--xi", "0.25", "--energy", "0.6", "--format", "json",
            "--trunc", "12",
        ])
        .env("CVBENCH_TRUNC", "8")
        .output()
        .unwrap();
    let value: serde_json::Value = serde_json::from_str(&stdout(&with_flag)).unwrap();
    assert_eq!(value["trunc"], 12);
}

#[test]
fn detector_commands() {
    let diamond = run(&["detector", "diamond", "--eta", "0.9", "--energy", "1.5"]);
    assert!(diamond.status.success());
    let v: f64 = stdout(&diamond).trim().parse().unwrap();
    assert!((v - 0.145).abs() < 1e-12);

    // 10 dB of loss is a transmissivity of 0.1
    let db = run(&["detector", "diamond", "--eta-db", "10", "--energy", "1", "--verify"]);
    assert!(db.status.success());
    let v: f64 = stdout(&db).trim().parse().unwrap();
    assert!((v - 0.9).abs() < 1e-12);

    let lossless = run(&["detector", "diamond", "--eta", "1", "--energy", "5"]);
    let v: f64 = stdout(&lossless).trim().parse().unwrap();
    assert_eq!(v, 0.0);

    let sine_same = run(&["detector", "sine", "--eta1", "0.7", "--eta2", "0.7", "--energy", "2"]);
    let v: f64 = stdout(&sine_same).trim().parse().unwrap();
    assert_eq!(v, 0.0);

    let sine = run(&[
        "detector", "sine", "--eta1", "0.9", "--eta2", "0.8", "--energy", "1.5", "--verify",
    ]);
    assert!(sine.status.success());

    let conflict = run(&[
        "detector", "diamond", "--eta", "0.9", "--eta-db", "3", "--energy", "1",
    ]);
    assert_eq!(conflict.status.code(), Some(64));

    let neither = run(&["detector", "diamond", "--energy", "1"]);
    assert_eq!(neither.status.code(), Some(64));
}

#[test]
fn detector_sweep_csv_shape_with_verify() {
    let out = run(&[
        "detector", "sweep", "--eta-min", "0", "--eta-max", "1", "--eta-steps", "5",
        "--energies", "1,2", "--verify",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    let data_lines: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(data_lines[0], "eta,dd[E=1],dd[E=2]");
    assert_eq!(data_lines.len(), 6);
}

#[test]
fn auto_trunc_reports_converged_choice() {
    let out = run(&[
        "teleport", "fidelity", "--xi", "0.25", "--energy", "0.6", "--auto-trunc",
        "--gap-target", "0.5", "--trunc-cap", "64", "--format", "json",
    ]);
    assert!(out.status.success());
    let value: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let trunc = value["trunc"].as_u64().unwrap();
    assert!(trunc <= 50, "chose {trunc}");
    let gap = value["value_truncated"].as_f64().unwrap() - value["lower_bound"].as_f64().unwrap();
    assert!(gap <= 0.5);
}
