use std::path::PathBuf;
use std::process::{Command, Output};

use num_complex::Complex64;
use probtele::gates::build_u0;
use probtele_cli::commands::{cmd_sweep, cmd_verify_u0_with};
use probtele_cli::{
    cmd_run, cmd_verify_barenco, cmd_verify_eq36, cmd_verify_outcomes, cmd_verify_u0, RunConfig,
    Status,
};

fn probtele(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_probtele"))
        .args(args)
        .output()
        .unwrap()
}

fn write_config(name: &str, text: &str) -> PathBuf {
    let path = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn verify_u0_passes_on_defaults_and_maximal_channel() {
    let r = cmd_verify_u0(&RunConfig::default()).unwrap();
    assert_eq!(r.exit_code(), 0);
    let c = RunConfig {
        channel: probtele::Channel::maximal(),
        ..Default::default()
    };
    let r = cmd_verify_u0(&c).unwrap();
    assert!(r.checks[0].metric < 1e-14);
}

#[test]
fn tampered_u0_fails() {
    let r = cmd_verify_u0_with(&RunConfig::default(), |p| {
        let mut m = build_u0(p)?;
        m.set(2, 2, m.get(2, 2) + Complex64::new(1e-6, 0.0));
        Ok(m)
    })
    .unwrap();
    assert_eq!(r.exit_code(), 1);
    assert!(r.checks.iter().all(|c| c.status == Status::Fail));
}

#[test]
fn library_commands_pass_on_defaults() {
    let c = RunConfig {
        trials: 2_000,
        ..Default::default()
    };
    assert_eq!(cmd_verify_eq36(&c, false).unwrap().exit_code(), 0);
    assert_eq!(cmd_verify_barenco(&c, None).unwrap().exit_code(), 0);
    assert_eq!(cmd_verify_outcomes(&c).unwrap().exit_code(), 0);
    assert_eq!(cmd_run(&c).unwrap().exit_code(), 0);
}

#[test]
fn maximal_channel_always_succeeds() {
    let c = RunConfig {
        channel: probtele::Channel::maximal(),
        trials: 10_000,
        ..Default::default()
    };
    let r = cmd_run(&c).unwrap();
    let s = r.success.unwrap();
    assert_eq!(s.successes, 10_000);
    assert_eq!(s.empirical, 1.0);
}

#[test]
fn sweep_rows() {
    let mut c = RunConfig {
        trials: 500,
        ..Default::default()
    };
    c.sweep.alpha_min = 0.1;
    c.sweep.alpha_max = 0.5;
    c.sweep.steps = 5;
    let r = cmd_sweep(&c).unwrap();
    let first = &r.sweep[0];
    let last = &r.sweep[4];
    assert!((first.analytic - 0.04).abs() < 1e-12);
    assert!((last.analytic - 1.0).abs() < 1e-12);
    assert_eq!(last.empirical, 1.0);
    assert!(r.sweep.windows(2).all(|w| w[0].analytic < w[1].analytic));
    assert!(r
        .to_csv()
        .starts_with("alpha,analytic,empirical,trials,seed\n"));
}

#[test]
fn binary_exit_codes() {
    assert_eq!(probtele(&["verify-u0"]).status.code(), Some(0));
    assert_eq!(
        probtele(&["verify-eq36", "--strict-eq36"]).status.code(),
        Some(0)
    );
    assert_eq!(probtele(&["verify-outcomes"]).status.code(), Some(0));
    assert_eq!(
        probtele(&["run", "--trials", "1000"]).status.code(),
        Some(0)
    );
    assert_eq!(
        probtele(&["run", "--config", "/nonexistent/config.json"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(probtele(&["run", "--trials", "0"]).status.code(), Some(2));
    assert_eq!(
        probtele(&["sweep", "--alpha-max", "0.6", "--trials", "10"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn unnormalized_input_requires_flag() {
    let path = write_config(
        "unnormalized.json",
        r#"{"input": [[1,0],[0,1],[0,0],[0,0]],
            "channel": {"alpha": 0.3, "beta": 0.4, "gamma": 0.5, "kappa": 0.7071067811865476},
            "trials": 100, "seed": 7}"#,
    );
    let p = path.to_str().unwrap();
    assert_eq!(probtele(&["run", "--config", p]).status.code(), Some(2));
    assert_eq!(
        probtele(&["run", "--config", p, "--renormalize"])
            .status
            .code(),
        Some(0)
    );
}

#[test]
fn invalid_channel_is_config_error() {
    let path = write_config(
        "bad_channel.json",
        r#"{"input": [[1,0],[0,0],[0,0],[0,0]],
            "channel": {"alpha": 0.5, "beta": 0.5, "gamma": 0.5, "kappa": 0.6}}"#,
    );
    let out = probtele(&["verify-u0", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_csv_and_out_file() {
    let out = probtele(&["sweep", "--trials", "200", "--steps", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "alpha,analytic,empirical,trials,seed");
    assert_eq!(lines.len(), 4);

    let dest = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("u0.json");
    let out = probtele(&["verify-u0", "--out", dest.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&dest).unwrap()).unwrap();
    assert_eq!(report["command"], "verify-u0");
    assert!(report["timing_ms"].is_number());
    assert_eq!(report["checks"].as_array().unwrap().len(), 2);
}

#[test]
fn barenco_circuit_file_parses() {
    let dest = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("flat.txt");
    let out = probtele(&["verify-barenco", "--circuit-out", dest.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let (width, gates) =
        probtele::barenco::from_text::<f64>(&std::fs::read_to_string(&dest).unwrap()).unwrap();
    assert_eq!(width, 3);
    assert!(probtele::barenco::only_primitives(&gates));
}

#[test]
fn csv_check_table() {
    let out = probtele(&["verify-u0", "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("name,status,metric,relation,threshold\n"));
    assert!(text.contains("u0_unitarity_config_channel,pass,"));
}
