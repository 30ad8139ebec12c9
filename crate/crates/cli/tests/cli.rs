//! End-to-end tests of the `omcrep` binary: exit codes, output formats,
//! reproducibility, and the golden figure fixtures.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use omcrep::trace::TraceFile;

fn omcrep(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_omcrep"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn assert_code(output: &Output, expected: i32) {
    assert_eq!(
        output.status.code(),
        Some(expected),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
}

#[test]
fn missing_parameters_exit_validation() {
    let out = omcrep(&["stage1"]);
    assert_code(&out, 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("omega_m"));
}

#[test]
fn zero_omega_m_exits_validation_naming_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "omega_m = 0.0\ng = 2.0\n").unwrap();
    let out = omcrep(&["stage1", "--config", cfg.to_str().unwrap()]);
    assert_code(&out, 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("omega_m"));
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "omega_m = 0.5\ng = 2.0\nGprime_typo = 1.0\n").unwrap();
    let out = omcrep(&["protocol", "--config", cfg.to_str().unwrap()]);
    assert_code(&out, 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("Gprime_typo"));
}

#[test]
fn unknown_figure_id_is_rejected() {
    let out = omcrep(&["figure", "fig9"]);
    assert_code(&out, 2);
}

#[test]
fn stage1_with_g_zero_has_constant_quarter_probability() {
    let out = omcrep(&[
        "stage1",
        "--omega-m",
        "0.5",
        "--g",
        "0",
        "--grid-points",
        "101",
    ]);
    assert_code(&out, 0);
    let parsed = TraceFile::read_csv(&mut out.stdout.as_slice()).unwrap();
    let probabilities: Vec<f64> = parsed
        .rows
        .iter()
        .filter(|r| r.quantity == "P")
        .map(|r| r.value.unwrap())
        .collect();
    assert_eq!(probabilities.len(), 101);
    for p in probabilities {
        assert!((p - 0.25).abs() <= 1e-10);
    }
}

#[test]
fn protocol_runs_twice_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "omega_m = 0.5\ng = 1.0\nt = 0.8\ngrid_points = 51\n").unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for path in [&a, &b] {
        let out = omcrep(&[
            "protocol",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            path.to_str().unwrap(),
        ]);
        assert_code(&out, 0);
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn csv_and_json_round_trip_through_the_binary() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("t.csv");
    let json_path = dir.path().join("t.json");
    for (path, format) in [(&csv_path, "csv"), (&json_path, "json")] {
        let out = omcrep(&[
            "stage1",
            "--omega-m",
            "0.5",
            "--g",
            "2",
            "--grid-points",
            "11",
            "--format",
            format,
            "--out",
            path.to_str().unwrap(),
        ]);
        assert_code(&out, 0);
    }
    let from_csv = TraceFile::read_csv(&mut fs::File::open(&csv_path).unwrap()).unwrap();
    let from_json = TraceFile::read_json(&mut fs::File::open(&json_path).unwrap()).unwrap();
    assert_eq!(from_csv.rows, from_json.rows);
    assert_eq!(from_csv.params, from_json.params);
}

#[test]
fn sweep_emits_one_file_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(
        &cfg,
        "omega_m = 0.5\ng = 2.0\ngrid_points = 21\nsweep_parameter = \"omega_m\"\nsweep_values = [0.5, 1.0, 1.5]\n",
    )
    .unwrap();
    let out_dir = dir.path().join("sweep");
    let out = omcrep(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_code(&out, 0);
    for name in [
        "sweep_omegaM_0.5.csv",
        "sweep_omegaM_1.csv",
        "sweep_omegaM_1.5.csv",
    ] {
        let parsed = TraceFile::read_csv(&mut fs::File::open(out_dir.join(name)).unwrap()).unwrap();
        assert!(!parsed.rows.is_empty(), "{name} has rows");
    }
}

#[test]
fn sweep_without_sweep_keys_is_validation_error() {
    let out = omcrep(&["sweep", "--omega-m", "0.5", "--g", "2"]);
    assert_code(&out, 2);
}

#[test]
fn unwritable_output_path_is_a_runtime_error() {
    let out = omcrep(&[
        "stage1",
        "--omega-m",
        "0.5",
        "--g",
        "2",
        "--grid-points",
        "11",
        "--out",
        "/nonexistent-dir/trace.csv",
    ]);
    assert_code(&out, 1);
}

#[test]
fn verify_passes_on_protocol_defaults() {
    let out = omcrep(&["verify", "--omega-m", "0.5", "--g", "2"]);
    assert_code(&out, 0);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("\"passed\": true"), "{text}");
}

#[test]
fn verify_fails_with_injected_corruption() {
    let out = omcrep(&["verify", "--omega-m", "0.5", "--g", "2", "--corrupt-s"]);
    assert_code(&out, 3);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("\"passed\": false"), "{text}");
}

#[test]
fn verify_reports_detuned_bare_frequencies() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    // optical[0] detuned by 0.2: resonance broken
    fs::write(
        &cfg,
        "omega_m = 0.5\ng = 2.0\n[bare]\natomic = [5.5, 6.5, 0.0]\noptical = [5.2, 6.0]\nmechanical = [0.5, 0.5]\n",
    )
    .unwrap();
    let out = omcrep(&["verify", "--config", cfg.to_str().unwrap()]);
    assert_code(&out, 3);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let checks = report["checks"].as_array().unwrap();
    let ip = checks
        .iter()
        .find(|c| c["name"] == "interaction_picture")
        .unwrap();
    assert_eq!(ip["pass"], false);
    assert!(ip["residual"].as_f64().unwrap() > 1e-3);
}

fn compare_with_golden(fig: &str, names: &[&str]) {
    let dir = tempfile::tempdir().unwrap();
    let out = omcrep(&[
        "figure",
        fig,
        "--grid-points",
        "11",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_code(&out, 0);
    let golden_dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    for name in names {
        let produced = fs::read(dir.path().join(name)).unwrap();
        let golden = fs::read(golden_dir.join(name)).unwrap();
        assert_eq!(
            produced, golden,
            "{name} deviates from the pinned golden file"
        );
    }
}

#[test]
fn figure_fig3_matches_golden_files() {
    compare_with_golden("fig3", &["fig3_G_2.csv", "fig3_G_2.5.csv", "fig3_G_3.csv"]);
}

#[test]
fn figure_fig5_matches_golden_files() {
    compare_with_golden("fig5", &["fig5_omegaM_0.5.csv", "fig5_omegaM_1.csv"]);
}
