use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_boomsim"))
}

fn bundled_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/paper_replica.json")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn run_bundled_config_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = bundled_config();
    let o = run(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("rms="));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert!(summary["rms_force_error_after_contact"].as_f64().unwrap() <= 0.2);
    assert_eq!(summary["seed"], 42);
    let csv = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert!(csv.starts_with("t,phase,theta1,d2,x,y,f_n,f_t,v_n_cmd,v_t_cmd,k_eq,k_f,b\n"));
}

#[test]
fn seed_flag_is_echoed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = bundled_config();
    let o = run(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--seed",
        "7",
        "--set",
        "duration=1",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let summary = std::fs::read_to_string(dir.path().join("summary.json")).unwrap();
    assert!(summary.contains("\"seed\": 7"), "{summary}");
}

#[test]
fn missing_config_names_the_path() {
    let o = run(&["run", "--config", "/no/such/config.json"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("/no/such/config.json"));
}

#[test]
fn bad_config_reports_key_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{\n  \"spec\": {\n    \"omega_n\": \"fast\"\n  }\n}\n").unwrap();
    let o = run(&[
        "run",
        "--config",
        path.to_str().unwrap(),
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("spec.omega_n") && err.contains("line 3"), "{err}");
}

#[test]
fn unknown_override_is_a_usage_error() {
    let cfg = bundled_config();
    let o = run(&["run", "--config", cfg.to_str().unwrap(), "--set", "spec.nope=1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("spec.nope"));
}

#[test]
fn force_period_beyond_bound_diverges() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = bundled_config();
    let o = run(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--set",
        "timing.dt_force=0.12",
        "--set",
        "timing.dt_traj=0.12",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let summary = std::fs::read_to_string(dir.path().join("summary.json")).unwrap();
    assert!(summary.contains("\"diverged\": true"));
}

#[test]
fn gains_table_and_json() {
    let o = run(&[
        "gains",
        "--k-theta",
        "100",
        "--k-ee",
        "inf",
        "--theta1",
        "1.5707963267948966",
        "--d2",
        "1",
        "--json",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["k_eq"].as_f64().unwrap() - 100.0).abs() < 1e-9);
    assert!((v["k_f"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!((v["b"].as_f64().unwrap() - 20.0).abs() < 1e-12);
    let dt = v["max_dt_force"].as_f64().unwrap();
    let exact = 2.0 * (2f64.sqrt() - 1.0) / 10.0;
    assert!((dt - exact).abs() <= v["dt_resolution"].as_f64().unwrap());

    // k_theta / d2^2 = 50 at theta1 = pi/2.
    let o = run(&[
        "gains",
        "--k-theta",
        "12.5",
        "--k-ee",
        "inf",
        "--theta1",
        "1.5707963267948966",
        "--d2",
        "0.5",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("K_f           2.000000"), "{}", stdout(&o));

    let o = run(&["gains", "--eta", "0"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn sweep_setpoints() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = bundled_config();
    let o = run(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--key",
        "setpoint.f_des",
        "--values",
        "-1,-2,-3,-4,-5,-6,-7,-8,-9,-10",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 10);
    assert!(csv.starts_with("value,rms,settle_time,diverged"));
    assert!(rows.iter().all(|r| r.split(',').nth(3) == Some("false")));
    assert!(dir.path().join("run_009/trace.csv").exists());
}

#[test]
fn sweep_start_radius_keeps_fitted_frequency() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/contact_step.json");
    let o = run(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--key",
        "q0.d2",
        "--values",
        "0.3,0.5,0.7,1.0",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    for row in csv.lines().skip(1) {
        let omega: f64 = row.split(',').nth(4).unwrap().parse().unwrap();
        assert!((omega / 10.0 - 1.0).abs() < 0.1, "{row}");
    }
}

#[test]
fn sweep_rejects_empty_values() {
    let cfg = bundled_config();
    let o = run(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--key",
        "setpoint.f_des",
        "--values",
        "",
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn verify_lists_passes_and_catches_sign_flip() {
    let o = run(&["verify", "--list"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().count(), 6);
    assert!(stdout(&o).contains("equilibrium_invariance"));

    let o = run(&["verify"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));

    let o = run(&["verify", "--inject-sign-flip"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stdout(&o).contains("FAIL equilibrium_invariance"));
}
