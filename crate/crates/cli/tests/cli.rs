use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const BASE: &str = "[exponents]\nn = 6\np = 1.2\n";

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_lane-emden"));
    for v in ["LANE_EMDEN_SCENARIO", "LANE_EMDEN_OUT", "LANE_EMDEN_THREADS", "LANE_EMDEN_CACHE", "LANE_EMDEN_STRICT"] {
        c.env_remove(v);
    }
    c
}

/// Shared between tests so the bubble is shot once per build.
fn cache() -> PathBuf {
    Path::new(env!("CARGO_TARGET_TMPDIR")).join("cli-cache")
}

fn run(dir: &Path, scenario: &str, args: &[&str]) -> Output {
    let sc = dir.join("s.toml");
    std::fs::write(&sc, scenario).unwrap();
    bin().args(args).arg("--scenario").arg(&sc).arg("--cache").arg(cache()).current_dir(dir).output().unwrap()
}

fn json(path: PathBuf) -> Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn empty_window_exits_as_inadmissible() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), "[exponents]\nn = 3\np = 1.2\n", &["exponents"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("window is empty"), "{}", stderr(&o));
}

#[test]
fn missing_p_is_a_config_error_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), "[exponents]\nn = 6\n", &["exponents"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("exponents.p"), "{}", stderr(&o));
    let o = run(dir.path(), &format!("{BASE}[reduce]\nk = 1\nkk = 2\n"), &["exponents"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("reduce"), "{}", stderr(&o));
}

#[test]
fn outputs_carry_hash_and_version() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), BASE, &["exponents", "--out", "a"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v = json(dir.path().join("a/exponents.json"));
    assert_eq!(v["library_version"], lane_emden::VERSION);
    assert_eq!(v["scenario_hash"].as_str().unwrap().len(), 64);
    assert_eq!(v["result"]["exponents"]["n"], 6);
    // Reordered keys and explicit defaults describe the same scenario.
    let o = run(dir.path(), "[green]\nnx = 128\n[exponents]\np = 1.2\nn = 6\n", &["exponents", "--out", "b"]);
    assert!(o.status.success());
    assert_eq!(json(dir.path().join("b/exponents.json"))["scenario_hash"], v["scenario_hash"]);
}

#[test]
fn environment_mirrors_flags() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("s.toml"), BASE).unwrap();
    let o = bin()
        .arg("exponents")
        .env("LANE_EMDEN_SCENARIO", "s.toml")
        .env("LANE_EMDEN_OUT", "from-env")
        .env("LANE_EMDEN_THREADS", "1")
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(dir.path().join("from-env/exponents.json").exists());
}

#[test]
fn verify_reports_every_identity_and_fails_on_a1_sign() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), BASE, &["verify", "--out", "a"]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    let v = json(dir.path().join("a/verify.json"));
    let checks = v["result"].as_array().unwrap();
    let by_name = |n: &str| checks.iter().find(|c| c["name"] == n).unwrap_or_else(|| panic!("{n}"));
    for name in ["lss", "orthogonality", "green symmetry", "regular part symmetry", "scaling round trip"] {
        assert_eq!(by_name(name)["pass"], true, "{name}");
    }
    assert_eq!(by_name("A1 positivity")["pass"], false);
    let o = run(dir.path(), BASE, &["verify", "--out", "b"]);
    assert_eq!(o.status.code(), Some(1));
    let a = std::fs::read(dir.path().join("a/verify.json")).unwrap();
    assert_eq!(a, std::fs::read(dir.path().join("b/verify.json")).unwrap());
}

#[test]
fn solve_writes_branch_table_reproducibly() {
    let dir = tempfile::tempdir().unwrap();
    let sc = format!("{BASE}[solve]\neps_count = 8\ncells = 2048\n");
    let o = run(dir.path(), &sc, &["solve", "--out", "a"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("a/solve.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert!(lines[0].starts_with("# scenario_hash="));
    assert_eq!(lines[1], "epsilon,mu_num,u0,iterations");
    assert_eq!(lines.len(), 10);
    let mu: Vec<f64> = lines[2..].iter().map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(mu.windows(2).all(|w| w[1] < w[0]));
    let v = json(dir.path().join("a/solve.json"));
    assert!(v["result"]["scaling_error"].is_string(), "eight points cannot span a decade");
    let o = run(dir.path(), &sc, &["solve", "--out", "b"]);
    assert!(o.status.success());
    for f in ["solve.csv", "solve.json"] {
        let a = std::fs::read(dir.path().join("a").join(f)).unwrap();
        assert_eq!(a, std::fs::read(dir.path().join("b").join(f)).unwrap(), "{f}");
    }
}

#[test]
fn solve_needs_a_ball() {
    let dir = tempfile::tempdir().unwrap();
    let sc = format!(
        "{BASE}[domain]\nkind = \"disjoint_union\"\nballs = [{{ center = 0.0, radius = 1.0 }}, {{ center = 3.0, radius = 1.0 }}]\n"
    );
    let o = run(dir.path(), &sc, &["solve"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("domain.kind"), "{}", stderr(&o));
}

#[test]
fn reduce_flags_large_remainders_in_strict_mode() {
    let dir = tempfile::tempdir().unwrap();
    let sc = format!("{BASE}[reduce]\nepsilons = [1e-3]\ndelta1 = 0.01\ndelta2 = 0.2\n");
    let o = run(dir.path(), &sc, &["reduce", "--out", "a"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("warning"));
    let v = json(dir.path().join("a/reduce.json"));
    let d = v["result"]["minima"][0]["config"]["d"][0].as_f64().unwrap();
    assert!((d / 0.066118 - 1.0).abs() < 0.01, "d = {d}");
    let o = run(dir.path(), &sc, &["reduce", "--out", "b", "--strict"]);
    assert_eq!(o.status.code(), Some(10));
}

#[test]
fn green_validate_agrees_with_the_ball() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), BASE, &["green-validate", "--out", "a"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v = json(dir.path().join("a/green-validate.json"));
    assert_eq!(v["result"].as_array().unwrap().len(), 5);
}
