use std::path::Path;
use std::process::{Command, Output};

use wnpg::config::{Algo, ExperimentConfig};
use wnpg::train::{read_theta, RECORD_HEADER, SWEEP_HEADER};

fn wnpg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wnpg"))
        .args(args)
        .env_remove("WNPG_WORKERS")
        .output()
        .unwrap()
}

fn write_config(dir: &Path, name: &str, cfg: &ExperimentConfig) -> String {
    let path = dir.join(name);
    std::fs::write(&path, cfg.to_json_pretty()).unwrap();
    path.to_str().unwrap().to_string()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn smoke_train_writes_all_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", &ExperimentConfig::bandit_smoke());
    let out = tmp.path().join("r1");
    let o = wnpg(&["train", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(out.join("record.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(RECORD_HEADER));
    assert_eq!(lines.count(), 10);
    assert_eq!(read_theta(&out.join("theta_final.f64")).unwrap().len(), 1);
    let svg = std::fs::read_to_string(out.join("curves.svg")).unwrap();
    assert!(svg.starts_with("<svg") && !svg.contains("href"));
    let saved = ExperimentConfig::load(&out.join("config.json"), &[]).unwrap();
    assert_eq!(saved.iterations, 10);

    // refuses to overwrite without --force
    let again = wnpg(&["train", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(again.status.code(), Some(1));
    let forced = wnpg(&[
        "train",
        "--config",
        &cfg,
        "--out",
        out.to_str().unwrap(),
        "--force",
    ]);
    assert_eq!(forced.status.code(), Some(0), "{}", stderr(&forced));
    assert_eq!(
        std::fs::read_to_string(out.join("record.csv")).unwrap(),
        csv
    );
}

#[test]
fn seed_and_set_flags_override_the_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", &ExperimentConfig::bandit_smoke());
    let run = |name: &str, extra: &[&str]| {
        let out = tmp.path().join(name);
        let mut args = vec!["train", "--config", &cfg, "--out", out.to_str().unwrap()];
        args.extend_from_slice(extra);
        let o = wnpg(&args);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        std::fs::read(out.join("theta_final.f64")).unwrap()
    };
    let base = run("a", &[]);
    assert_eq!(run("b", &["--set", "seed=0"]), base);
    assert_ne!(run("c", &["--seed", "5"]), base);
    assert_ne!(run("d", &["--set", "sigma=0.2"]), base);
}

#[test]
fn unknown_config_key_is_named() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("c.json");
    let mut json: serde_json::Value =
        serde_json::from_str(&ExperimentConfig::bandit_smoke().to_json_pretty()).unwrap();
    json["learning_rat"] = serde_json::json!(0.1);
    std::fs::write(&path, json.to_string()).unwrap();
    let o = wnpg(&[
        "train",
        "--config",
        path.to_str().unwrap(),
        "--out",
        tmp.path().join("r").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("learning_rat"), "{}", stderr(&o));
}

#[test]
fn invalid_override_fails_with_field_path() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", &ExperimentConfig::bandit_smoke());
    let o = wnpg(&[
        "train",
        "--config",
        &cfg,
        "--out",
        tmp.path().join("r").to_str().unwrap(),
        "--set",
        "batch=0",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("batch"), "{}", stderr(&o));
}

#[test]
fn divergence_exits_with_status_two() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        iterations: 20,
        batch: 10,
        eval_episodes: Some(5),
        optimizer: wnpg::optimize::OptimizerKind::Constant,
        step_size: 10.0,
        ..ExperimentConfig::lqr_default(Algo::Gpomdp, 0.1)
    };
    let path = write_config(tmp.path(), "c.json", &cfg);
    let out = tmp.path().join("r");
    let o = wnpg(&["train", "--config", &path, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("diverged"));
    // flagged record is still written, with K rows
    let csv = std::fs::read_to_string(out.join("record.csv")).unwrap();
    assert_eq!(csv.lines().count(), 21);
}

#[test]
fn sweep_writes_one_row_per_run() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        iterations: 5,
        batch: 4,
        eval_every: 5,
        eval_episodes: Some(3),
        sigma_sq_values: Some(vec![1e-5, 1e-4, 1e-3, 1e-2, 1e-1]),
        repeat_seeds: 2,
        ..ExperimentConfig::lqr_default(Algo::Pgpe, 0.1)
    };
    let path = write_config(tmp.path(), "c.json", &cfg);
    let out = tmp.path().join("s");
    let o = wnpg(&[
        "sweep",
        "--config",
        &path,
        "--out",
        out.to_str().unwrap(),
        "--workers",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(SWEEP_HEADER));
    assert_eq!(lines.count(), 10);
    assert!(out.join("sweep.svg").exists());
}

#[test]
fn deploy_reports_the_deterministic_return() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", &ExperimentConfig::bandit_smoke());
    let out = tmp.path().join("r");
    assert_eq!(
        wnpg(&["train", "--config", &cfg, "--out", out.to_str().unwrap()])
            .status
            .code(),
        Some(0)
    );
    let theta = out.join("theta_final.f64");
    let o = wnpg(&[
        "deploy",
        "--theta",
        theta.to_str().unwrap(),
        "--config",
        &cfg,
        "--episodes",
        "10",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    let t = read_theta(&theta).unwrap()[0];
    let jd = wnpg::env::BanditSpec::new(1, 1.0, 1, 1.0)
        .unwrap()
        .jd_analytic(&[t])
        .unwrap();
    assert!(text.contains(&format!("{jd:.6}")), "{text}");

    let bad = wnpg(&[
        "deploy",
        "--theta",
        tmp.path().join("missing").to_str().unwrap(),
        "--config",
        &cfg,
    ]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn theory_prints_constants_and_rate_table() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("rc.json");
    std::fs::write(
        &path,
        serde_json::to_string(&wnpg::theory::RegularityConstants::unit()).unwrap(),
    )
    .unwrap();
    let o = wnpg(&["theory", "--constants", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(!o.stdout.is_empty());
    let t = wnpg(&["theory", "--constants", path.to_str().unwrap(), "--table2"]);
    assert_eq!(t.status.code(), Some(0));
    let csv = String::from_utf8(t.stdout).unwrap();
    assert!(csv.starts_with("algo,sigma_regime,smoothness"));
    assert_eq!(csv.lines().count(), 9);
}

#[test]
fn check_filter_and_canary() {
    let o = wnpg(&["check", "--filter", "noise"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.lines().filter(|l| l.contains("noise/")).count() >= 2);
    assert!(!text.contains("theory/"));

    let canary = wnpg(&[
        "check",
        "--filter",
        "unbiasedness/gpomdp",
        "--corrupt-gpomdp-sign",
    ]);
    assert_eq!(canary.status.code(), Some(1));
}

#[test]
fn worker_env_var_is_accepted() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", &ExperimentConfig::bandit_smoke());
    let out = tmp.path().join("r");
    let o = Command::new(env!("CARGO_BIN_EXE_wnpg"))
        .args([
            "train",
            "--config",
            &cfg,
            "--out",
            out.to_str().unwrap(),
            "--workers",
            "1",
        ])
        .env("WNPG_WORKERS", "4")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}
