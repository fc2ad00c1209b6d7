mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn oraclefuzz(config: &Path, workdir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oraclefuzz"))
        .arg("--config")
        .arg(config)
        .arg("--workdir")
        .arg(workdir)
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

/// The fixture configuration with extra YAML appended, written into `dir`.
fn config_with(dir: &Path, extra: &str) -> PathBuf {
    let src = common::fixtures().join("toylib");
    let text = std::fs::read_to_string(src.join("oraclefuzz.yaml"))
        .unwrap()
        .replace("[src]", &format!("[{}]", src.join("src").display()))
        .replace("./build.sh", &src.join("build.sh").display().to_string());
    let path = dir.join("oraclefuzz.yaml");
    std::fs::write(&path, format!("{text}{extra}")).unwrap();
    path
}

#[test]
fn completed_run_exits_zero_and_report_renders() {
    let dir = tempfile::tempdir().unwrap();
    let config = config_with(dir.path(), "");
    let work = dir.path().join("work");
    let out = oraclefuzz(&config, &work, &["run"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("2 confirmed with a matching CWE"));

    let out = oraclefuzz(&config, &work, &["report", "--format", "json"]);
    assert_eq!(code(&out), 0);
    let report = oraclefuzz::report::parse_report(&String::from_utf8_lossy(&out.stdout)).unwrap();
    assert_eq!(report.metrics.confirmed_matching, 2);
    let out = oraclefuzz(&config, &work, &["report"]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("| 1 | decode_record |"));
}

#[test]
fn crash_free_run_still_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let config = config_with(dir.path(), "");
    let work = dir.path().join("work");
    assert_eq!(code(&oraclefuzz(&config, &work, &["inventory"])), 0);
    // Rank by hand so only crash-free functions are targeted.
    let out = oraclefuzz(&config, &work, &["rank"]);
    assert_eq!(code(&out), 0);
    let targets = work.join("targets.json");
    let mut ranked: Vec<serde_json::Value> = serde_json::from_str(&std::fs::read_to_string(&targets).unwrap()).unwrap();
    let all: Vec<serde_json::Value> =
        serde_json::from_str(&std::fs::read_to_string(work.join("inventory.json")).unwrap()).unwrap();
    let clamp = all.into_iter().find(|r| r["name"] == "clamp_level").unwrap();
    ranked.truncate(1);
    ranked[0]["record"] = clamp;
    ranked[0]["verdict"]["function_name"] = "clamp_level".into();
    std::fs::write(&targets, serde_json::to_string(&ranked).unwrap()).unwrap();
    let text = std::fs::read_to_string(&config)
        .unwrap()
        .replace("time_budget_seconds: 60", "time_budget_seconds: 2");
    std::fs::write(&config, text).unwrap();
    let out = oraclefuzz(&config, &work, &["run"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("0 confirmed with a matching CWE"));
}

#[test]
fn configuration_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let work = dir.path().join("work");
    assert_eq!(
        code(&oraclefuzz(&dir.path().join("missing.yaml"), &work, &["inventory"])),
        2
    );
    let unknown = config_with(dir.path(), "colour: blue\n");
    assert_eq!(code(&oraclefuzz(&unknown, &work, &["inventory"])), 2);
    let weights = config_with(dir.path(), "");
    let text = std::fs::read_to_string(&weights)
        .unwrap()
        .replace("top_k: 2", "top_k: 2\n  weights: [0.5, 0.5, 0.5]");
    std::fs::write(&weights, text).unwrap();
    assert_eq!(code(&oraclefuzz(&weights, &work, &["run"])), 2);

    let config = config_with(dir.path(), "");
    assert_eq!(code(&oraclefuzz(&config, &work, &["rank"])), 2, "rank before inventory");
    assert_eq!(code(&oraclefuzz(&config, &work, &["inventory"])), 0);
    assert_eq!(
        code(&oraclefuzz(&config, &work, &["inventory"])),
        2,
        "existing output without --force"
    );
    assert_eq!(code(&oraclefuzz(&config, &work, &["--force", "inventory"])), 0);

    let empty = dir.path().join("empty");
    std::fs::create_dir(&empty).unwrap();
    let text = std::fs::read_to_string(&config).unwrap().replace(
        &common::fixtures().join("toylib/src").display().to_string(),
        &empty.display().to_string(),
    );
    std::fs::write(&config, text).unwrap();
    let out = oraclefuzz(&config, &dir.path().join("other"), &["inventory"]);
    assert_eq!(code(&out), 2);
    assert!(
        String::from_utf8_lossy(&out.stderr).contains("no C or C++ sources"),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn missing_compiler_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let config = config_with(
        dir.path(),
        "gate:\n  build:\n    c_compiler: no-such-cc-14\n    cxx_compiler: no-such-cxx-14\n",
    );
    let out = oraclefuzz(&config, &dir.path().join("work"), &["run"]);
    assert_eq!(code(&out), 1, "{}", String::from_utf8_lossy(&out.stderr));
}
