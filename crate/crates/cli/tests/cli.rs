use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use factfind_cli::config::{load_config, parse_config};
use serde_json::{json, Value};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn shipped(name: &str) -> Value {
    serde_json::from_str(&fs::read_to_string(configs().join(name)).unwrap()).unwrap()
}

/// Runs the binary on `config`, writing into `dir/out`.
fn run(config: &Value, dir: &Path, extra: &[&str]) -> i32 {
    let path = dir.join("config.json");
    fs::write(&path, serde_json::to_string_pretty(config).unwrap()).unwrap();
    run_file(&path, &dir.join("out"), extra)
}

fn run_file(config: &Path, out: &Path, extra: &[&str]) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_factfind"))
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .arg("--quiet")
        .args(extra)
        .status()
        .unwrap()
        .code()
        .unwrap()
}

#[test]
fn shipped_configs_round_trip() {
    let mut n = 0;
    for entry in fs::read_dir(configs()).unwrap() {
        let path = entry.unwrap().path();
        let c = load_config(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let again = parse_config(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(c, again, "{}", path.display());
        n += 1;
    }
    assert!(n >= 10);
}

#[test]
fn solve_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&shipped("exp-linear-interior.json"), dir.path(), &[]), 0);
    let csv = fs::read_to_string(dir.path().join("out/solution.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("v,x,psi,pi"));
    let report: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/solution.json")).unwrap()).unwrap();
    assert_eq!(report["converged"], json!(true));
    assert!(report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .all(|c| c["holds"] == json!(true)));
}

#[test]
fn non_dominating_sweep_is_an_input_error() {
    let mut c = shipped("connectivity-h-decreasing.json");
    let steps = c["command"]["sweep-connectivity"]["steps"].as_array_mut().unwrap();
    steps.reverse();
    c["command"]["sweep-connectivity"]["params"] = json!([1.0, 2.0, 3.0, 4.0, 5.0]);
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&c, dir.path(), &[]), 1);
}

#[test]
fn probability_above_one_is_an_input_error() {
    let mut c = shipped("exp-linear-interior.json");
    c["scenario"]["connections"]["q"] = json!(1.5);
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&c, dir.path(), &[]), 1);
}

#[test]
fn tiny_effort_cap_is_nonconvergence() {
    let mut c = shipped("exp-linear-interior.json");
    c["settings"] = json!({"x_max": 1e-6});
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&c, dir.path(), &[]), 3);
}

#[test]
fn failed_claims_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&shipped("volunteer-linear.json"), dir.path(), &[]), 2);
    assert!(dir.path().join("out/volunteer.csv").exists());
}

#[test]
fn grid_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        run(&shipped("exp-linear-interior.json"), dir.path(), &["--grid", "16"]),
        0
    );
    let report: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/solution.json")).unwrap()).unwrap();
    let coarse = report["nodes"].as_u64().unwrap();
    assert_eq!(run(&shipped("exp-linear-interior.json"), dir.path(), &[]), 0);
    let report: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/solution.json")).unwrap()).unwrap();
    assert!(report["nodes"].as_u64().unwrap() > coarse);
}

#[test]
fn simulation_is_deterministic_per_seed() {
    let mut c = shipped("simulate-planted-interior.json");
    c["command"]["simulate"]["voters"] = json!(5000);
    c["command"]["simulate"]["replications"] = json!(8);
    c["command"]["simulate"]["dump_graph"] = json!(true);
    let read = |dir: &Path| {
        ["replications.csv", "connections.csv", "simulation.json", "graph.edges"]
            .map(|f| fs::read(dir.join("out").join(f)).unwrap())
    };
    let (a, b, d) = (
        tempfile::tempdir().unwrap(),
        tempfile::tempdir().unwrap(),
        tempfile::tempdir().unwrap(),
    );
    assert_eq!(run(&c, a.path(), &["--seed", "11"]), 0);
    assert_eq!(run(&c, b.path(), &["--seed", "11"]), 0);
    assert_eq!(run(&c, d.path(), &["--seed", "12"]), 0);
    assert_eq!(read(a.path()), read(b.path()));
    assert_ne!(read(a.path())[0], read(d.path())[0]);
}

#[test]
fn missing_config_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run_file(&dir.path().join("nope.json"), &dir.path().join("out"), &[]), 1);
}
