use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cdm-lab"))
        .args(args)
        .env_remove("CDM_LAB_JOBS")
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const TINY: [&str; 10] = [
    "--arms",
    "3",
    "--experts",
    "2",
    "--runs",
    "2",
    "--delta-grid",
    "0,1",
    "--set",
    "horizon=80",
];

fn tiny_sweep(out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["sweep", "--out", out.to_str().unwrap()];
    args.extend(TINY);
    args.extend(["--set", "steps_per_arm=20"]);
    args.extend(extra);
    lab(&args)
}

#[test]
fn sweep_writes_csvs_and_sidecar() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("results");
    let o = tiny_sweep(&out, &["--seed", "42"]);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["sweep.csv", "sweep_summary.csv", "sweep.config.json"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    let header = csv.lines().next().unwrap();
    assert!(header.starts_with("arms,experts,kind,variant,confidence,delta,run,algorithm,scaled_reward"));
    // 2 deltas x 2 runs x 5 algorithms
    assert_eq!(csv.lines().count(), 1 + 20);
    let side: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("sweep.config.json")).unwrap()).unwrap();
    assert_eq!(side["config"]["seed"], 42);
    assert_eq!(side["config"]["horizon"], 80);
}

#[test]
fn refuses_to_overwrite_without_force() {
    let dir = TempDir::new().unwrap();
    assert!(tiny_sweep(dir.path(), &[]).status.success());
    let before = fs::read(dir.path().join("sweep.csv")).unwrap();
    let o = tiny_sweep(dir.path(), &["--seed", "9"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("--force"));
    assert_eq!(fs::read(dir.path().join("sweep.csv")).unwrap(), before);
    let o = tiny_sweep(dir.path(), &["--seed", "9", "--force"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_ne!(fs::read(dir.path().join("sweep.csv")).unwrap(), before);
}

#[test]
fn flags_override_the_config_file() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("c.cfg");
    fs::write(&cfg, "runs = 5\nseed = 3\nalgorithms = wmv, random\n").unwrap();
    // TINY passes --runs 2.
    let o = tiny_sweep(dir.path(), &["--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let side: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("sweep.config.json")).unwrap()).unwrap();
    assert_eq!(side["config"]["runs"], 2);
    assert_eq!(side["config"]["seed"], 3);
    assert_eq!(side["config"]["algorithms"], serde_json::json!(["wmv", "random"]));
}

#[test]
fn worker_count_does_not_change_output() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    assert!(tiny_sweep(a.path(), &["--jobs", "1"]).status.success());
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_cdm-lab"));
    cmd.args(["sweep", "--out", b.path().to_str().unwrap()])
        .args(TINY)
        .args(["--set", "steps_per_arm=20"])
        .env("CDM_LAB_JOBS", "2");
    assert!(cmd.output().unwrap().status.success());
    for f in ["sweep.csv", "sweep_summary.csv"] {
        assert_eq!(
            fs::read(a.path().join(f)).unwrap(),
            fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn bad_arguments_fail_with_usage() {
    let o = lab(&["sweep", "--no-such-flag"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("Usage"));
    let o = lab(&[
        "sweep",
        "--confidence",
        "sometimes",
        "--out",
        "/nonexistent-never-created",
    ]);
    assert!(!o.status.success());
    assert!(stderr(&o).starts_with("error:"));
}

#[test]
fn plot_is_deterministic_and_refuses_empty_input() {
    let dir = TempDir::new().unwrap();
    assert!(tiny_sweep(dir.path(), &[]).status.success());
    let csv = dir.path().join("sweep.csv");
    let svg = dir.path().join("sweep.svg");
    let o = lab(&["plot", csv.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let first = fs::read_to_string(&svg).unwrap();
    assert!(first.starts_with("<svg"));
    assert!(first.contains("meta-CMAB") && first.contains("Best expert") && first.contains("stroke=\"red\""));
    assert!(!lab(&["plot", csv.to_str().unwrap()]).status.success());
    assert!(lab(&["plot", csv.to_str().unwrap(), "--force"]).status.success());
    assert_eq!(fs::read_to_string(&svg).unwrap(), first);

    let empty = dir.path().join("empty.csv");
    fs::write(&empty, "").unwrap();
    let o = lab(&["plot", empty.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(!dir.path().join("empty.svg").exists());
    let header_only = dir.path().join("header.csv");
    fs::write(&header_only, "pair,relation,rotation_mean,concentration,distance,pcc\n").unwrap();
    assert!(!lab(&["plot", header_only.to_str().unwrap()]).status.success());
    assert!(!dir.path().join("header.svg").exists());
}

#[test]
fn pcc_plot_has_a_fitted_line() {
    let dir = TempDir::new().unwrap();
    let o = lab(&["pcc", "--out", dir.path().to_str().unwrap(), "--set", "pairs=40"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(lab(&["plot", dir.path().join("pcc.csv").to_str().unwrap()])
        .status
        .success());
    let svg = fs::read_to_string(dir.path().join("pcc.svg")).unwrap();
    assert!(svg.contains("<circle") && svg.contains("y = "));
}

#[test]
fn selftest_passes() {
    let o = lab(&["selftest"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    assert!(!String::from_utf8_lossy(&o.stdout).contains("FAIL"));
}
