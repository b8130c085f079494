use std::path::PathBuf;
use std::process::Command;

use shockfront::config::RunConfig;
use shockfront::pipeline::run_pipeline;
use shockfront::report::{explain, PipelineReport, StageStatus};

const MINIMAL: &str = r#"
[model]
name = "jin_xin_1d"
a = 1.0
tau = 1.0
f1 = [0.0, 0.0, 0.5]

[endpoints]
u_minus = 0.5
u_plus = -0.1

[stages]
hypotheses = true
profile = true
"#;

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("shockfront-test-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

#[test]
fn minimal_config_reports_speed_and_clean_profile() {
    let cfg = RunConfig::from_toml(MINIMAL).unwrap();
    let dir = scratch("minimal");
    let out = run_pipeline(&cfg, &dir).unwrap();
    assert!(out.success());
    let profile = out.report.stage("profile").unwrap();
    let s = profile.details["s"].as_f64().unwrap();
    assert!((s - 0.2).abs() < 1e-14, "{s}");
    assert!(profile.details["residual"]["residual"].as_f64().unwrap() <= 1e-9);
    let hyp = out.report.stage("hypotheses").unwrap();
    assert_eq!(hyp.status, StageStatus::Pass);
    assert_eq!(hyp.details["along_profile"], serde_json::json!(true));
    for f in ["report.json", "timings.json", "profile.csv"] {
        assert!(dir.join(f).exists(), "{f}");
    }
    let back = PipelineReport::from_json(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(back, out.report);
}

#[test]
fn repeated_runs_give_identical_reports() {
    let cfg = RunConfig::from_toml(MINIMAL).unwrap();
    let (a, b) = (scratch("det-a"), scratch("det-b"));
    run_pipeline(&cfg, &a).unwrap();
    run_pipeline(&cfg, &b).unwrap();
    for f in ["report.json", "profile.csv"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn equal_endpoints_are_rejected_before_any_stage_runs() {
    let text = MINIMAL.replace("u_plus = -0.1", "u_plus = 0.5");
    let err = RunConfig::from_toml(&text).unwrap_err().to_string();
    assert!(err.contains("endpoints"), "{err}");
}

#[test]
fn failed_profile_skips_evans_and_sets_failure() {
    // A 1-D Lax-violating pair (rarefaction): the profile stage fails.
    let text = MINIMAL.replace("u_minus = 0.5", "u_minus = -0.5").replace("hypotheses = true", "evans = true");
    let cfg = RunConfig::from_toml(&text).unwrap();
    let out = run_pipeline(&cfg, &scratch("skip")).unwrap();
    assert_eq!(out.report.stage("profile").unwrap().status, StageStatus::Fail);
    let evans = out.report.stage("evans").unwrap();
    assert_eq!(evans.status, StageStatus::Skipped);
    assert!(!out.success());
    assert!(explain(&out.report).contains(&"D1–D3: SKIPPED (profile failed)".to_string()));
}

#[test]
fn optional_failures_do_not_fail_the_run() {
    let text = MINIMAL
        .replace("u_minus = 0.5", "u_minus = -0.5")
        .replace("profile = true", "profile = true\noptional = [\"profile\", \"hypotheses\"]");
    let cfg = RunConfig::from_toml(&text).unwrap();
    let out = run_pipeline(&cfg, &scratch("optional")).unwrap();
    assert_eq!(out.report.stage("profile").unwrap().status, StageStatus::Fail);
    assert!(out.success());
}

fn cli() -> Command {
    Command::new(env!("CARGO_BIN_EXE_shockfront"))
}

#[test]
fn cli_profile_and_explain_round_trip() {
    let dir = scratch("cli");
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("run.toml");
    std::fs::write(&cfg, MINIMAL).unwrap();
    let out = dir.join("out");
    let run = cli().args(["profile", "--config"]).arg(&cfg).arg("--out").arg(&out).output().unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let report = PipelineReport::from_json(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert!(report.stage("hypotheses").is_none());
    let text = cli().arg("explain").arg(out.join("report.json")).output().unwrap();
    let stdout = String::from_utf8(text.stdout).unwrap();
    assert!(stdout.contains("Profile: s = 0.2000") && stdout.contains("— PASS"), "{stdout}");
}

#[test]
fn cli_exit_codes() {
    let dir = scratch("exit");
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.toml");
    std::fs::write(&bad, MINIMAL.replace("u_plus = -0.1", "u_plus = 0.5")).unwrap();
    let run = cli().args(["pipeline", "--config"]).arg(&bad).output().unwrap();
    assert_eq!(run.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&run.stderr).contains("endpoints"));

    let failing = dir.join("fail.toml");
    std::fs::write(&failing, MINIMAL.replace("u_minus = 0.5", "u_minus = -0.5")).unwrap();
    let run = cli().args(["pipeline", "--config"]).arg(&failing).arg("--out").arg(dir.join("o")).output().unwrap();
    assert_eq!(run.status.code(), Some(1));
}
