//! End-to-end tests of the `semi-isac` binary.

mod common;

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use semi_isac::channel::SystemParams;
use semi_isac::cli::RunConfig;
use semi_isac::dinkelbach::ee_value;
use semi_isac::experiments::CSV_HEADER;
use semi_isac::objective::Allocation;

fn exe() -> Command {
    Command::new(env!("CARGO_BIN_EXE_semi-isac"))
}

fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn run(args: &[&str]) -> Output {
    exe().args(args).output().unwrap()
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, body).unwrap();
    path
}

/// `key=value` report lines.
fn report(out: &Output) -> HashMap<String, String> {
    String::from_utf8_lossy(&out.stdout)
        .lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

fn num(r: &HashMap<String, String>, key: &str) -> f64 {
    r[key].parse().unwrap()
}

fn allocation(r: &HashMap<String, String>) -> Allocation {
    Allocation {
        tau: [num(r, "tau1"), num(r, "tau2"), num(r, "tau3")],
        power: [num(r, "p1_w"), num(r, "p2_w"), num(r, "p3_w")],
    }
}

#[test]
fn shipped_config_equals_defaults() {
    let cfg = RunConfig::from_path(&workspace_root().join("configs/default.json")).unwrap();
    assert_eq!(cfg, RunConfig::default());
}

#[test]
fn null_required_key_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"p_max_dbm": null}"#);
    let out = exe().arg("solve").arg("--config").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("p_max_dbm"));
}

#[test]
fn unknown_key_and_missing_file_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"p_max": 40}"#);
    let out = exe().arg("solve").arg("--config").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("p_max"));
    let out = exe().args(["solve", "--config"]).arg(dir.path().join("absent.json")).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn solve_is_deterministic() {
    let a = run(&["solve", "--seed", "3"]);
    let b = run(&["solve", "--seed", "3"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let r = report(&a);
    assert_eq!(r["status"], "optimal");
    let total: f64 = ["p1_w", "p2_w", "p3_w"].iter().map(|k| num(&r, k)).sum();
    assert!((total - SystemParams::default().p_max_w).abs() < 1e-6 * total);
}

#[test]
fn threshold_above_capacity_exits_two() {
    let p = SystemParams::default();
    let inst = common::instance(&p, 3);
    let k = inst.coeffs.comm;
    let bound_mbps = p.bandwidth_hz * (1.0 + k.d * p.p_max_w / k.e).log2() / 1e6;
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!(r#"{{"qos_comm_mbps": {}}}"#, 1.5 * bound_mbps));
    let out = exe().args(["solve", "--seed", "3", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(report(&out)["status"], "infeasible");
    let out = exe().args(["ee", "--seed", "3", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn ee_report_is_self_consistent() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.csv");
    let out = exe().args(["ee", "--seed", "3", "--out"]).arg(&trace).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    let p = SystemParams::default();
    let inst = common::instance(&p, 3);
    let ee = ee_value(&allocation(&r), &inst.coeffs, &p).unwrap();
    let eta = num(&r, "eta_star_bps_per_w");
    assert!(((ee - eta) / eta).abs() <= 1e-6, "{ee} {eta}");

    let text = std::fs::read_to_string(&trace).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("iteration,eta_bps_per_w,f_value_bps"));
    let etas: Vec<f64> = lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(etas.len(), num(&r, "iterations") as usize + 1);
    assert!(etas.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn huge_circuit_power_matches_solve() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"circuit_power_dbm": 90}"#);
    let ee = exe().args(["ee", "--seed", "3", "--config"]).arg(&cfg).output().unwrap();
    let solve = run(&["solve", "--seed", "3"]);
    let (a, b) = (allocation(&report(&ee)), allocation(&report(&solve)));
    let p_max = SystemParams::default().p_max_w;
    for i in 0..3 {
        assert!((a.tau[i] - b.tau[i]).abs() < 1e-4);
        assert!((a.power[i] - b.power[i]).abs() < 1e-4 * p_max);
    }
}

#[test]
fn qos_sweep_rows_and_reruns() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for k in 0..2 {
        let path = dir.path().join(format!("qos{k}.csv"));
        let out = exe().args(["sweep", "qos", "--trials", "6", "--quiet", "--out"]).arg(&path).output().unwrap();
        assert_eq!(out.status.code(), Some(0));
        assert!(out.stderr.is_empty());
        outputs.push(std::fs::read_to_string(&path).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    let lines: Vec<&str> = outputs[0].lines().collect();
    assert_eq!(lines[0], CSV_HEADER);
    let cfg = RunConfig::default();
    assert_eq!(lines.len() - 1, cfg.sweep.qos_sweep_mbps.len() * cfg.sweep.qos_schemes.len());
    assert!(lines[1..].iter().all(|l| l.ends_with(",6")));
}

#[test]
fn priority_rows_follow_the_gamma_rule() {
    let out = run(&["sweep", "priority", "--trials", "3", "--quiet"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut rows = 0;
    for line in text.lines().skip(1) {
        let mut f = line.split(',');
        let g2: f64 = f.next().unwrap().parse().unwrap();
        let label = f.next().unwrap();
        let field = |key: &str| -> f64 {
            label.split([';', '@']).find_map(|kv| kv.strip_prefix(key)).unwrap().parse().unwrap()
        };
        let (g1, g3) = (field("gamma1="), field("gamma3="));
        assert_eq!(g1, g3);
        assert!((g1 - (1.0 - g2) / 2.0).abs() < 1e-8);
        rows += 1;
    }
    assert_eq!(rows, 20);
}

#[test]
fn unknown_sweep_lists_valid_names() {
    let out = run(&["sweep", "fig8"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    for name in ["qos", "priority", "rcs_power", "ee", "trace"] {
        assert!(err.contains(name), "{err}");
    }
    assert_eq!(run(&["solve", "--bogus"]).status.code(), Some(1));
}

#[test]
fn readme_recipes_run() {
    let root = workspace_root();
    let readme = std::fs::read_to_string(root.join("README.md")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let recipes: Vec<&str> = readme.lines().filter(|l| l.starts_with("semi-isac sweep")).collect();
    assert!(recipes.len() >= 6, "{recipes:?}");
    for (i, recipe) in recipes.iter().enumerate() {
        let mut args: Vec<String> = recipe.split_whitespace().skip(1).map(String::from).collect();
        if let Some(pos) = args.iter().position(|a| a == "--out") {
            args[pos + 1] = dir.path().join(format!("recipe{i}.csv")).display().to_string();
        }
        args.extend(["--trials", "3", "--quiet"].map(String::from));
        let out = exe().current_dir(&root).args(&args).output().unwrap();
        assert_eq!(out.status.code(), Some(0), "{recipe}: {}", String::from_utf8_lossy(&out.stderr));
    }
}
