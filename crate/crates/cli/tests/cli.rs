use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

struct Run {
    code: i32,
    report: Value,
}

fn domcert(task: &str, config: &Path, sets: &[&str], out: &Path) -> Run {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_domcert"));
    cmd.arg(task).arg("--config").arg(config).arg("--out").arg(out);
    for s in sets {
        cmd.arg("--set").arg(s);
    }
    let status = cmd.output().expect("binary runs");
    let report: Value = serde_json::from_str(&std::fs::read_to_string(out).expect("report written")).unwrap();
    let code = status.status.code().unwrap();
    let expected = match report["status"].as_str().unwrap() {
        "ok" => 0,
        "infeasible" => 2,
        "error" => 1,
        other => panic!("unknown status {other}"),
    };
    assert_eq!(code, expected, "exit code must follow status: {report}");
    Run { code, report }
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn double_well_analysis_gives_one_dominant_certificate_and_plot_data() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("dw.json");
    let r = domcert("analyze", &configs().join("duffing_double_well.toml"), &[], &out);
    assert_eq!(r.code, 0);
    let cert = &r.report["certificates"][0]["certificate"];
    assert_eq!(cert["p"], 1);
    assert_eq!(cert["lambda"], 2.0);
    let locus = std::fs::read_to_string(dir.path().join("dw.locus.csv")).unwrap();
    assert_eq!(locus.lines().next(), Some("sample,re,im"));
    assert_eq!(locus.lines().count(), 1 + 2 * 61);
    let cone = std::fs::read_to_string(dir.path().join("dw.cone.csv")).unwrap();
    assert!(cone.lines().count() > 2);
    assert_eq!(r.report["defaults"]["norm_bound"], 10.0);
}

#[test]
fn zero_rate_on_double_well_is_infeasible_with_explanation() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let r = domcert(
        "analyze",
        &configs().join("duffing_double_well.toml"),
        &["task.lambda=0"],
        &out,
    );
    assert_eq!(r.code, 2);
    assert!(r.report["message"].as_str().unwrap().contains("spectral prefilter"));
    assert_eq!(r.report["details"]["prefilter"]["split"]["consistent"], false);
    assert!(r.report["certificates"].as_array().unwrap().is_empty());
}

#[test]
fn gain_task_reproduces_the_saturated_loop_gain() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("g.json");
    let r = domcert("gain", &configs().join("tanh_pi_gain_xp.toml"), &[], &out);
    assert_eq!(r.code, 0);
    let g = r.report["details"]["gamma"].as_f64().unwrap();
    assert!((g - 0.5636).abs() / 0.5636 <= 0.1, "gamma {g}");
    assert!(r.report["details"]["probes"].as_array().unwrap().len() >= 10);
}

#[test]
fn reports_reverify_through_the_verify_task() {
    let dir = tempfile::tempdir().unwrap();
    for (task, cfg) in [
        ("analyze", "dc_motor_pi.toml"),
        ("dissipate", "duffing_passivity.toml"),
        ("compose", "duffing_pi_compose.toml"),
    ] {
        let out = dir.path().join(format!("{task}.json"));
        let r = domcert(task, &configs().join(cfg), &[], &out);
        assert_eq!(r.code, 0, "{}", r.report);
        let vcfg = write(
            dir.path(),
            &format!("verify_{task}.toml"),
            &format!("[task]\nreport = \"{task}.json\"\n"),
        );
        let v = domcert("verify", &vcfg, &[], &dir.path().join(format!("verify_{task}.json")));
        assert_eq!(v.code, 0, "{}", v.report);
        let checks = v.report["details"]["checks"].as_array().unwrap();
        assert_eq!(checks.len(), r.report["certificates"].as_array().unwrap().len());
        assert!(checks.iter().all(|c| c["pass"] == true));
    }
}

#[test]
fn composition_reports_both_subsystems_and_the_closed_loop() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c.json");
    let r = domcert("compose", &configs().join("duffing_pi_compose.toml"), &[], &out);
    let certs = r.report["certificates"].as_array().unwrap();
    let roles: Vec<_> = certs.iter().map(|c| c["role"].as_str().unwrap()).collect();
    assert_eq!(roles, ["subsystem1", "subsystem2", "closed_loop"]);
    assert_eq!(certs[2]["certificate"]["p"], 2);
    assert_eq!(certs[2]["family"]["a"].as_array().unwrap().len(), 4);
    assert_eq!(r.report["details"]["composed_supply"]["q_negative_semidefinite"], true);
}

#[test]
fn tampered_certificate_fails_verification() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("a.json");
    domcert("analyze", &configs().join("duffing_double_well.toml"), &[], &out);
    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    v["certificates"][0]["certificate"]["P"] = serde_json::json!([[1.0, 0.0], [0.0, 1.0]]);
    std::fs::write(&out, serde_json::to_string(&v).unwrap()).unwrap();
    let vcfg = write(dir.path(), "v.toml", "[task]\nreport = \"a.json\"\n");
    let r = domcert("verify", &vcfg, &[], &dir.path().join("v.json"));
    assert_eq!(r.code, 2);
    assert_eq!(r.report["details"]["checks"][0]["pass"], false);
}

#[test]
fn certificate_file_verifies_against_the_config_model() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("a.json");
    domcert("analyze", &configs().join("dc_motor.toml"), &[], &out);
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    std::fs::write(
        dir.path().join("cert.json"),
        v["certificates"][0]["certificate"].to_string(),
    )
    .unwrap();
    let vcfg = write(
        dir.path(),
        "v.toml",
        "[model]\nname = \"duffing_dc\"\n[task]\ncertificate = \"cert.json\"\n",
    );
    assert_eq!(domcert("verify", &vcfg, &[], &dir.path().join("v.json")).code, 0);
}

#[test]
fn config_echo_is_the_effective_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let r = domcert(
        "analyze",
        &configs().join("dc_motor.toml"),
        &["task.epsilon=0.02", "model.params.L=0.1"],
        &out,
    );
    let echo = r.report["config"].as_str().unwrap();
    let parsed: toml::Table = toml::from_str(echo).unwrap();
    assert_eq!(parsed["task"]["epsilon"].as_float(), Some(0.02));
    assert_eq!(parsed["model"]["params"]["L"].as_float(), Some(0.1));
    assert_eq!(r.report["overrides"][0], "task.epsilon=0.02");
    assert_eq!(r.report["certificates"][0]["certificate"]["epsilon"], 0.02);
    // Rerunning from the echoed text reproduces it byte for byte.
    let again = write(dir.path(), "echo.toml", echo);
    let r2 = domcert("analyze", &again, &[], &dir.path().join("r2.json"));
    assert_eq!(r2.report["config"].as_str().unwrap(), echo);
}

#[test]
fn schema_violations_are_errors_with_field_paths() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "bad.toml",
        "[model]\nname = \"duffing\"\n[task]\nlambda = \"two\"\n",
    );
    let r = domcert("analyze", &cfg, &[], &dir.path().join("r.json"));
    assert_eq!(r.code, 1);
    assert!(r.report["message"].as_str().unwrap().contains("task.lambda"));
    assert!(r.report["config"].is_null());

    let r = domcert(
        "analyze",
        &configs().join("dc_motor.toml"),
        &["model.params.bogus=1"],
        &dir.path().join("r.json"),
    );
    assert_eq!(r.code, 1);
    assert!(r.report["message"].as_str().unwrap().contains("bogus"));

    let r = domcert(
        "gain",
        &configs().join("dc_motor_pi.toml"),
        &[],
        &dir.path().join("r.json"),
    );
    assert_eq!(r.code, 1, "a model without ports cannot run the gain task");
}

#[test]
fn simulation_writes_trajectory_and_classifies() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.json");
    let r = domcert("simulate", &configs().join("tanh_p_simulate.toml"), &[], &out);
    assert_eq!(r.report["attractor"]["kind"], "fixed_point");
    let x = r.report["attractor"]["state"][0].as_f64().unwrap();
    assert!((x.abs() - 0.9575).abs() <= 1e-3);
    let csv = std::fs::read_to_string(dir.path().join("s.trajectory.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("t,x1,x2"));
    assert_eq!(csv.lines().count(), 1 + 100_001);
}

#[test]
fn simulation_of_the_pi_loop_oscillates() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.json");
    let r = domcert("simulate", &configs().join("dc_motor_pi_simulate.toml"), &[], &out);
    assert_eq!(r.report["attractor"]["kind"], "periodic_orbit");
}

#[test]
fn scan_reports_the_splitting_interval() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.json");
    let r = domcert("scan", &configs().join("double_well_scan.toml"), &[], &out);
    let iv = &r.report["intervals"][0];
    assert_eq!(iv["p"], 1);
    assert!((iv["lo"].as_f64().unwrap() - 1.382).abs() <= 0.02);
    assert!((iv["hi"].as_f64().unwrap() - 3.618).abs() <= 0.02);
    let r = domcert(
        "scan",
        &configs().join("double_well_scan.toml"),
        &["task.lambda_grid.hi=1.0"],
        &out,
    );
    assert_eq!(r.code, 2);
}

#[test]
fn explicit_convex_vertices_are_contracting_without_plot_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c.json");
    let r = domcert(
        "analyze",
        &configs().join("duffing_convex.toml"),
        &["output.plotdata=false"],
        &out,
    );
    assert_eq!(r.code, 0);
    assert_eq!(r.report["certificates"][0]["certificate"]["p"], 0);
    assert!(r.report["artifacts"].as_array().unwrap().is_empty());
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn report_goes_to_stdout_without_out() {
    let out = Command::new(env!("CARGO_BIN_EXE_domcert"))
        .args(["analyze", "--config"])
        .arg(configs().join("duffing_convex.toml"))
        .args(["--set", "output.plotdata=false"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["status"], "ok");
}

#[test]
fn usage_errors_exit_with_one() {
    let out = Command::new(env!("CARGO_BIN_EXE_domcert"))
        .args(["frobnicate", "--config", "x"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}
