use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_lqrpg"));
    c.env("LQRPG_THREADS", "1");
    c
}

fn config(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
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

/// `key = value` lines in printed order.
fn pairs(o: &Output) -> Vec<(String, String)> {
    stdout(o)
        .lines()
        .filter_map(|l| l.split_once(" = "))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

fn value(o: &Output, key: &str) -> String {
    pairs(o).into_iter().find(|(k, _)| k == key).unwrap_or_else(|| panic!("no {key} in {}", stdout(o))).1
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn read(p: PathBuf) -> Vec<u8> {
    std::fs::read(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

#[test]
fn solve_reproduces_the_scalar_riccati_root() {
    let o = run(&["solve", "--system", config("scalar.toml").to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    // p² − p/4 − 1 = 0
    let p = (0.25 + 4.0625f64.sqrt()) / 2.0;
    let j: f64 = value(&o, "J_star").parse().unwrap();
    assert!((j - p).abs() < 1e-6 && (j - 1.132782).abs() < 1e-6);
    let k: f64 = value(&o, "K_star").trim_matches(['[', ']']).parse().unwrap();
    assert!((k - -0.5 * p / (1.0 + p)).abs() < 1e-9 && (k - -0.265564).abs() < 1e-5);
    let keys: Vec<String> = pairs(&o).into_iter().map(|(k, _)| k).collect();
    assert_eq!(&keys[..4], ["state_dim", "input_dim", "K_star", "J_star"]);
    assert!(keys.contains(&"theory_m0".to_string()) && keys.contains(&"m0".to_string()));
}

#[test]
fn solve_mirrors_stdout_in_csv() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    let o = run(&["solve", "--system", config("two_by_one.toml").to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let csv = String::from_utf8(read(out.join("solve.csv"))).unwrap();
    let rows: Vec<(String, String)> = csv
        .lines()
        .skip(1)
        .map(|l| {
            let (k, v) = l.split_once(',').unwrap();
            (k.to_string(), v.trim_matches('"').to_string())
        })
        .collect();
    assert_eq!(rows, pairs(&o));
}

#[test]
fn zero_dynamics_need_no_feedback() {
    let dir = TempDir::new().unwrap();
    let sys = write(
        dir.path(),
        "a0.toml",
        "[system]\nA = [[0.0, 0.0], [0.0, 0.0]]\nB = [[1.0], [0.5]]\nQ = [[1.0, 0.0], [0.0, 1.0]]\nR = [[1.0]]\n\n[noise]\nkind = \"bounded_iid\"\ncovariance = [[1.0, 0.0], [0.0, 1.0]]\n",
    );
    let o = run(&["solve", "--system", sys.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(value(&o, "K_star"), "[[0.0, 0.0]]");
    assert_eq!(value(&o, "J_star"), "2.0");
}

#[test]
fn malformed_toml_exits_2_with_position() {
    let dir = TempDir::new().unwrap();
    let sys = write(dir.path(), "bad.toml", "[system]\nA = [[0.5]]\nB = [1.0\n");
    let o = run(&["solve", "--system", sys.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3, column"), "{}", stderr(&o));
}

#[test]
fn bad_arguments_exit_2() {
    let scalar = config("scalar.toml");
    assert_eq!(run(&["solve", "--system", "/no/such/file.toml"]).status.code(), Some(2));
    assert_eq!(run(&["learn", "--system", scalar.to_str().unwrap(), "--T", "0"]).status.code(), Some(2));
    assert_eq!(run(&["learn", "--system", scalar.to_str().unwrap(), "--eta-mult", "-1"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn slow_riccati_exits_3() {
    let dir = TempDir::new().unwrap();
    // uncontrollable mode at 1 − 1e-7: the iteration needs ~10⁸ steps
    let sys = write(
        dir.path(),
        "slow.toml",
        "[system]\nA = [[0.9999999]]\nB = [[0.0]]\nQ = [[1.0]]\nR = [[1.0]]\n\n[noise]\nkind = \"bounded_iid\"\ncovariance = [[1.0]]\n",
    );
    let o = run(&["solve", "--system", sys.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn learn_writes_one_row_per_round_and_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let scalar = config("scalar.toml");
    let go = |out: &str, seed: &str| {
        let out = dir.path().join(out);
        let o = run(&["learn", "--system", scalar.to_str().unwrap(), "--T", "12000", "--seed", seed, "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", stderr(&o));
        (o, out)
    };
    let (o, a) = go("a", "7");
    let (_, b) = go("b", "7");
    let (_, c) = go("c", "8");
    let trace = String::from_utf8(read(a.join("trace.csv"))).unwrap();
    assert_eq!(trace.lines().count(), 12_000 + 1);
    assert_eq!(trace.lines().nth(1).unwrap().split(',').next(), Some("1"));
    for f in ["trace.csv", "epochs.csv", "learn_summary.csv"] {
        assert_eq!(read(a.join(f)), read(b.join(f)), "{f}");
    }
    assert_ne!(read(a.join("trace.csv")), read(c.join("trace.csv")));
    assert_eq!(value(&o, "status"), "completed");
    assert_eq!(value(&o, "rounds"), "12000");
    // the preset's step size is far above the corrupted-descent bound
    assert!(stderr(&o).contains("warning: step size"));
    let gap: f64 = value(&o, "gap_last").parse().unwrap();
    assert!(gap >= 0.0 && gap < 0.2);
}

#[test]
fn faithful_schedule_is_refused_at_desk_scale() {
    let o = run(&["learn", "--system", config("scalar.toml").to_str().unwrap(), "--T", "5000", "--theory"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--m0-mult"));
}

#[test]
fn divergence_exits_4_and_keeps_the_partial_trace() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("d");
    let o = run(&[
        "learn",
        "--system",
        config("scalar.toml").to_str().unwrap(),
        "--T",
        "20000",
        "--eta-mult",
        "200",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    assert_eq!(value(&o, "status"), "diverged");
    let rows = String::from_utf8(read(out.join("trace.csv"))).unwrap().lines().count() - 1;
    assert!(rows > 0 && rows < 20_000);
}

#[test]
fn rollout_writes_the_trajectory() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("r");
    let o = run(&[
        "rollout",
        "--system",
        config("two_by_one.toml").to_str().unwrap(),
        "--T",
        "300",
        "--controller",
        "optimal",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = String::from_utf8(read(out.join("rollout.csv"))).unwrap();
    assert_eq!(csv.lines().next(), Some("t,x0,x1,u0,cost"));
    assert_eq!(csv.lines().count(), 1 + 301);
    let j_k: f64 = value(&o, "J_K").parse().unwrap();
    let j_star: f64 = value(&o, "J_star").parse().unwrap();
    assert!((j_k - j_star).abs() < 1e-9 * j_star);
}

#[test]
fn quick_validate_passes_and_is_byte_stable() {
    let dir = TempDir::new().unwrap();
    let go = |name: &str| {
        let out = dir.path().join(name);
        let o = run(&["validate", "--quick", "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}{}", stdout(&o), stderr(&o));
        read(out.join("validate.csv"))
    };
    let a = go("a");
    assert_eq!(a, go("b"));
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("suite,checks,failures,passed,detail\n"));
    for suite in ["lyapunov_residuals", "gradient_fidelity", "corrupted_gd_zoo", "exploration_exponent"] {
        assert!(text.contains(&format!("\n{suite},")), "{suite} missing");
    }
}

#[test]
fn quick_regret_sweep_is_byte_stable() {
    let dir = TempDir::new().unwrap();
    let go = |name: &str| {
        let out = dir.path().join(name);
        let o = run(&["sweep", "--quick", "--seed", "5", "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", stderr(&o));
        (read(out.join("regret_scaling.csv")), read(out.join("sweep_summary.csv")))
    };
    assert_eq!(go("a"), go("b"));
}
