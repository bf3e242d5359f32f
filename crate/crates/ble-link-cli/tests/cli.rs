//! End-to-end tests of the `ble-link` binary: spawn it, check exit codes,
//! stdout/stderr wording and output files.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ble_link_cli::output::parse_csv;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ble-link"));
    // Tests must not inherit a seed from the caller's environment.
    cmd.env_remove("BLE_LINK_SEED");
    cmd
}

fn workspace_config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, body).unwrap();
    path
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

#[test]
fn model_prints_the_reference_scenario_numbers() {
    let out = bin()
        .args(["model", "--config"])
        .arg(workspace_config("base_scenario.json"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let text = stdout_of(&out);
    assert!(text.contains("tsr: 0.284573"), "{text}");
    assert!(text.contains("p_tf: 0.641029"), "{text}");
    assert!(text.contains("reliability: 0.358971"), "{text}");
    assert!(text.contains("throughput_ideal_bps: 106666.7"), "{text}");
}

#[test]
fn model_writes_a_single_result_row() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("row.csv");
    let out = bin()
        .args(["model", "--config"])
        .arg(workspace_config("low_noise.json"))
        .arg("--out")
        .arg(&out_path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let rows = parse_csv(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].swept_param, "ber");
    assert_eq!(rows[0].value, 1e-5);
    assert_eq!(rows[0].reliability, Some(0.989812));
}

#[test]
fn model_without_disturber_leaves_reliability_columns_empty() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{ "ber": 1e-5, "payload_v_bytes": 50, "x": 2 }"#);
    let out_path = dir.path().join("row.csv");
    let out =
        bin().args(["model", "--config"]).arg(&cfg).arg("--out").arg(&out_path).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    assert!(stdout_of(&out).contains("p_tf: n/a"), "{}", stdout_of(&out));
    let text = std::fs::read_to_string(&out_path).unwrap();
    assert!(text.lines().nth(1).unwrap().ends_with(",,"), "{text}");
    let rows = parse_csv(&text).unwrap();
    assert_eq!(rows[0].p_tf, None);
    assert_eq!(rows[0].reliability, None);
}

#[test]
fn unknown_config_key_is_rejected_by_name() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{ "ber": 1e-3, "tx_power_dbm": 0 }"#);
    let out = bin().args(["model", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("tx_power_dbm"), "{}", stderr_of(&out));
}

#[test]
fn nonstandard_ifs_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg =
        write_config(dir.path(), r#"{ "ber": 1e-3, "payload_v_bytes": 50, "ifs_us": 100 }"#);
    let out = bin().args(["model", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("ifs_us"), "{}", stderr_of(&out));
}

#[test]
fn reliability_requires_a_disturber() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{ "ber": 1e-3, "payload_v_bytes": 50 }"#);
    let out = bin().args(["reliability", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("disturber"), "{}", stderr_of(&out));
}

#[test]
fn reliability_prints_failure_probability() {
    let out = bin()
        .args(["reliability", "--config"])
        .arg(workspace_config("base_scenario.json"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = stdout_of(&out);
    assert!(text.contains("p_tf: 0.641029"), "{text}");
    assert!(!text.contains("tsr"), "reliability output stays focused: {text}");
}

#[test]
fn sweep_emits_parseable_rows_to_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{ "ber": 5e-4, "payload_d_bytes": 50, "n": 10, "ci_d_us": 7500,
             "sweep": { "param": "payload_v", "min": 100, "max": 130, "step": 10 } }"#,
    );
    let out = bin().args(["sweep", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let rows = parse_csv(&stdout_of(&out)).unwrap();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r.swept_param == "payload_v"));
    assert_eq!(rows[0].value, 100.0);
    assert_eq!(rows[3].value, 130.0);
    for r in &rows {
        let rel = r.reliability.unwrap();
        assert!((0.0..=1.0).contains(&rel));
        assert!(r.throughput_real_bps <= r.throughput_ideal_bps);
    }
}

#[test]
fn interval_sweep_keeps_reliability_constant_within_each_curve() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("curves.csv");
    let out = bin()
        .args(["sweep", "--config"])
        .arg(workspace_config("interval_sweep.json"))
        .arg("--out")
        .arg(&out_path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let text = std::fs::read_to_string(&out_path).unwrap();
    // Three family curves, six intervals each.
    let rows = parse_csv(&text).unwrap();
    assert_eq!(rows.len(), 18);
    for curve in rows.chunks(6) {
        let first = curve[0].p_tf;
        assert!(curve.iter().all(|r| r.p_tf == first), "p_tf drifted within a curve: {text}");
    }
    // The three curves see different error rates, so they must differ.
    assert_ne!(rows[0].p_tf, rows[6].p_tf);
    assert_ne!(rows[6].p_tf, rows[12].p_tf);
}

#[test]
fn sweep_supports_json_output() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("curves.json");
    let out = bin()
        .args(["sweep", "--config"])
        .arg(workspace_config("ber_sweep.json"))
        .arg("--out")
        .arg(&out_path)
        .args(["--format", "json"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let rows: Vec<ble_link_cli::output::ResultRow> =
        serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(rows.len(), 50);
    assert_eq!(rows[0].value, 1e-5);
    assert_eq!(rows[49].value, 1e-3);
    assert!(rows.windows(2).all(|w| w[0].tsr >= w[1].tsr), "tsr rises with ber?");
}

#[test]
fn sweep_command_needs_a_sweep_block() {
    let out = bin()
        .args(["sweep", "--config"])
        .arg(workspace_config("base_scenario.json"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("sweep"), "{}", stderr_of(&out));
}

#[test]
fn unwritable_output_path_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("no_such_dir").join("row.csv");
    let out = bin()
        .args(["model", "--config"])
        .arg(workspace_config("base_scenario.json"))
        .arg("--out")
        .arg(&out_path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("row.csv"), "{}", stderr_of(&out));
    assert!(!out_path.exists());
}

#[test]
fn simulate_reports_both_simulators_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("sim.txt");
    let run = || {
        bin()
            .args(["simulate", "--config"])
            .arg(workspace_config("base_scenario.json"))
            .args(["--runs", "20", "--intervals", "50", "--seed", "9"])
            .arg("--out")
            .arg(&out_path)
            .output()
            .unwrap()
    };
    let first = run();
    assert_eq!(first.status.code(), Some(0), "stderr: {}", stderr_of(&first));
    let text = stdout_of(&first);
    // Event-closing failures skip the rest of an event, so the connection
    // simulator attempts at most runs x intervals x 2 transactions.
    let attempts: u64 = text
        .split("connection: attempts=")
        .nth(1)
        .and_then(|rest| rest.split(' ').next())
        .unwrap()
        .parse()
        .unwrap();
    assert!(attempts > 0 && attempts <= 2000, "{text}");
    // The coexistence timeline never truncates events.
    assert!(text.contains("coexistence: attempts=2000 "), "{text}");
    assert_eq!(std::fs::read_to_string(&out_path).unwrap(), text);

    let second = run();
    assert_eq!(first.stdout, second.stdout, "same seed must reproduce the report");
}

#[test]
fn simulate_rejects_json_format() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["simulate", "--config"])
        .arg(workspace_config("base_scenario.json"))
        .args(["--runs", "2", "--intervals", "5"])
        .arg("--out")
        .arg(dir.path().join("sim.json"))
        .args(["--format", "json"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn validate_passes_on_the_reference_scenario() {
    let out = bin()
        .args(["validate", "--config"])
        .arg(workspace_config("base_scenario.json"))
        .args(["--runs", "60", "--intervals", "400", "--seed", "42"])
        .output()
        .unwrap();
    let text = stdout_of(&out);
    assert_eq!(out.status.code(), Some(0), "report: {text}");
    assert!(text.starts_with("validation: runs=60 intervals=400 seed=42\n"), "{text}");
    assert!(text.contains("transaction success ratio:"), "{text}");
    assert!(text.contains("failure probability:"), "{text}");
    assert!(text.ends_with("overall: pass\n"), "{text}");
}

#[test]
fn validate_exits_4_when_the_sample_is_too_coarse_to_agree() {
    // With one interval the empirical ratios can only take a handful of
    // values, none of which sit inside the tolerance bands.
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("report.txt");
    let out = bin()
        .args(["validate", "--config"])
        .arg(workspace_config("base_scenario.json"))
        .args(["--runs", "1", "--intervals", "1", "--seed", "42"])
        .arg("--out")
        .arg(&out_path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(4), "stderr: {}", stderr_of(&out));
    let text = stdout_of(&out);
    assert!(text.ends_with("overall: fail\n"), "{text}");
    // The report is still written in full before the failing exit.
    assert_eq!(std::fs::read_to_string(&out_path).unwrap(), text);
}

#[test]
fn seed_comes_from_the_environment_unless_overridden() {
    let run = |env_seed: Option<&str>, flag_seed: Option<&str>| {
        let mut cmd = bin();
        cmd.args(["validate", "--config"])
            .arg(workspace_config("base_scenario.json"))
            .args(["--runs", "1", "--intervals", "1"]);
        if let Some(s) = env_seed {
            cmd.env("BLE_LINK_SEED", s);
        }
        if let Some(s) = flag_seed {
            cmd.args(["--seed", s]);
        }
        stdout_of(&cmd.output().unwrap())
    };
    assert!(run(None, None).starts_with("validation: runs=1 intervals=1 seed=42\n"));
    assert!(run(Some("7"), None).starts_with("validation: runs=1 intervals=1 seed=7\n"));
    assert!(run(Some("7"), Some("13")).starts_with("validation: runs=1 intervals=1 seed=13\n"));
}

#[test]
fn verbose_echoes_the_derived_scenario() {
    let out = bin()
        .args(["model", "--verbose", "--config"])
        .arg(workspace_config("base_scenario.json"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let err = stderr_of(&out);
    assert!(err.contains("l_cp=512"), "{err}");
    assert!(err.contains("n=10"), "{err}");
}
