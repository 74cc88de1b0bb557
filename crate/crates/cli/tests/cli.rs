use std::path::Path;
use std::process::{Command, Output};

const INTERVAL_PI: &str = r#"{"edges":[{"id":"e","from":"a","to":"b","length":3.141592653589793}],
"vertices":[{"id":"a","condition":{"type":"dirichlet"}},{"id":"b","condition":{"type":"dirichlet"}}]}"#;

fn qgraph(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qgraph"))
        .current_dir(dir)
        .env_remove("QGRAPH_OUT_DIR")
        .args(args)
        .output()
        .unwrap()
}

fn csv_rows(path: &Path) -> Vec<String> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .filter(|l| !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

fn summary(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn setup() -> tempfile::TempDir {
    let d = tempfile::tempdir().unwrap();
    std::fs::write(d.path().join("interval_pi.json"), INTERVAL_PI).unwrap();
    d
}

#[test]
fn spectrum_of_dirichlet_interval() {
    let d = setup();
    let o = qgraph(d.path(), &["spectrum", "--graph", "interval_pi.json", "--kmax", "5.5"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&d.path().join("spectrum.csv"));
    assert_eq!(rows.len(), 5);
    for (n, r) in rows.iter().enumerate() {
        let lambda: f64 = r.split(',').nth(2).unwrap().parse().unwrap();
        let k = (n + 1) as f64;
        assert!((lambda - k * k).abs() < 1e-9 * k * k);
    }
    let text = std::fs::read_to_string(d.path().join("spectrum.csv")).unwrap();
    assert!(text.starts_with("index,k,lambda,multiplicity,residual,source\n"));
    let meta = text.lines().last().unwrap();
    assert!(meta.starts_with("# qgraph ") && meta.contains("kmax=5.5"));
    let s = summary(&d.path().join("spectrum.json"));
    assert_eq!(s["rows"], 5);
    assert_eq!(s["command"], "spectrum");
}

#[test]
fn gaudin_free_lattice() {
    let d = setup();
    let run = |length: &str| {
        let o = qgraph(d.path(), &["bethe", "gaudin", "--length", length, "--alpha", "0", "--lmax", "10"]);
        assert!(o.status.success());
        csv_rows(&d.path().join("bethe_gaudin.csv"))
    };
    // λ = n₁² + n₂² ≤ 10 with 1 ≤ n₁ ≤ n₂: (1,1), (1,2), (2,2), (1,3)
    let full = run("3.141592653589793");
    assert_eq!(full.len(), 4);
    let lambdas: Vec<f64> = full.iter().map(|r| r.split(',').nth(4).unwrap().parse().unwrap()).collect();
    for (got, want) in lambdas.iter().zip([2.0, 5.0, 8.0, 10.0]) {
        assert!((got - want).abs() < 1e-8 * want, "{got} vs {want}");
    }
    // a truncated π pushes (1,3) to 10·(π/3.14159265)² > 10
    assert_eq!(run("3.14159265").len(), 3);
}

#[test]
fn dirichlet_interval_does_not_condense() {
    let d = setup();
    let o = qgraph(d.path(), &["bec", "sweep", "--graph", "interval_pi.json", "--beta", "1", "--rho", "1"]);
    assert!(o.status.success());
    let s = summary(&d.path().join("bec_sweep.json"));
    assert_eq!(s["summary"]["verdict"], "no condensation");
}

#[test]
fn out_flag_overrides_environment() {
    let d = setup();
    let env_dir = d.path().join("env");
    let flag_dir = d.path().join("flag");
    let o = Command::new(env!("CARGO_BIN_EXE_qgraph"))
        .current_dir(d.path())
        .env("QGRAPH_OUT_DIR", &env_dir)
        .args(["weyl", "--graph", "interval_pi.json", "--count", "40", "--out"])
        .arg(&flag_dir)
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(flag_dir.join("weyl.csv").exists());
    assert!(!env_dir.exists());
}

#[test]
fn schema_errors_exit_2_with_pointer() {
    let d = setup();
    std::fs::write(
        d.path().join("bad.json"),
        INTERVAL_PI.replace("3.141592653589793", "-1"),
    )
    .unwrap();
    let o = qgraph(d.path(), &["spectrum", "--graph", "bad.json", "--kmax", "3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("/edges/0/length"));
    assert!(!d.path().join("spectrum.csv").exists());
}

#[test]
fn argument_errors_exit_2() {
    let d = setup();
    assert_eq!(qgraph(d.path(), &["spectrum", "--bogus"]).status.code(), Some(2));
    assert_eq!(qgraph(d.path(), &["spectrum", "--graph", "missing.json", "--kmax", "3"]).status.code(), Some(2));
    let o = qgraph(d.path(), &["bec", "sweep", "--graph", "interval_pi.json", "--beta", "-1", "--rho", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn solver_failure_exits_3() {
    // grids this coarse do not converge monotonically on the pencil
    let d = setup();
    let o = qgraph(d.path(), &["oracle", "pencil", "--d", "1", "--L", "6", "--h-levels", "8,16,32", "--count", "1"]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn reruns_are_byte_identical() {
    let d = setup();
    let args = ["negative", "--graph", "interval_pi.json", "--kappa-max", "2"];
    let robin = r#"{"edges":[{"id":"e","from":"a","to":"b","length":5}],
"vertices":[{"id":"a","condition":{"type":"robin","values":[1.0]}},{"id":"b","condition":{"type":"dirichlet"}}]}"#;
    std::fs::write(d.path().join("interval_pi.json"), robin).unwrap();
    assert!(qgraph(d.path(), &args).status.success());
    let first = std::fs::read(d.path().join("negative.csv")).unwrap();
    assert!(qgraph(d.path(), &args).status.success());
    assert_eq!(first, std::fs::read(d.path().join("negative.csv")).unwrap());
    assert_eq!(csv_rows(&d.path().join("negative.csv")).len(), 1);
}
