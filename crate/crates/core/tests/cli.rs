use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const HERMITE: &str = r#"{"d":1,"n1":1,"N":4,"scalar":"rational","chi":{"name":"exp"},
    "gamma":{"kind":"gaussian"},"measure":{"kind":"gaussian"},"seed":7}"#;

fn tol_cfg(tol: &str) -> String {
    format!(
        r#"{{"d":2,"n1":2,"N":3,"scalar":"rational","chi":{{"name":"kingman","s":"1/2"}},
            "gamma":{{"kind":"gaussian"}},"measure":{{"kind":"gaussian"}},"seed":5,
            "tolerances":{{"float_rel":{tol}}}}}"#
    )
}

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_dualappell"));
    cmd.env_remove("DUALAPPELL_OUT_DIR");
    cmd
}

fn write(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn run(args: &[&str], cfg: Option<&Path>) -> Output {
    let mut cmd = bin();
    if let Some(c) = cfg {
        cmd.arg("--config").arg(c);
    }
    cmd.args(args).output().unwrap()
}

#[test]
fn default_verify_passes() {
    let out = run(&["verify"], None);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["schema"], 1);
    assert_eq!(v["scalar"], "rational");
    assert!(v["config_hash"].as_str().unwrap().len() == 64);
    assert_eq!(v["all_pass"], true);
}

#[test]
fn zero_chi_coefficient_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "bad.json",
        r#"{"d":1,"n1":1,"N":3,"scalar":"rational","chi":{"coeffs":[1,1,0,1]},
            "gamma":{"kind":"unit"},"measure":{"kind":"gaussian"}}"#,
    );
    let out = run(&["verify"], Some(&cfg));
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
    assert!(out.stdout.is_empty());
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(&["no-such-command"], None).status.code(), Some(2));
    let out = run(&["verify", "--scalar", "quaternion"], None);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn tolerance_does_not_change_exact_suites() {
    let dir = tempfile::tempdir().unwrap();
    let tight = write(dir.path(), "tight.json", &tol_cfg("1e-10"));
    let loose = write(dir.path(), "loose.json", &tol_cfg("0.5"));
    let status = |p: &Path| {
        let out = run(&["verify"], Some(p));
        let v: Value = serde_json::from_slice(&out.stdout).unwrap();
        v["suites"]
            .as_array()
            .unwrap()
            .iter()
            .map(|s| (s["name"].as_str().unwrap().to_owned(), s["status"].as_str().unwrap().to_owned()))
            .collect::<Vec<_>>()
    };
    assert_eq!(status(&tight), status(&loose));
}

#[test]
fn hermite_kernel_csv_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "hermite.json", HERMITE);
    let out = run(&["kernels"], Some(&cfg));
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n,component,monomial,coefficient"));
    let rows: Vec<&str> = lines.collect();
    for row in ["3,3,3,1", "3,3,1,-3", "4,4,4,1", "4,4,2,-6", "4,4,0,3"] {
        assert!(rows.contains(&row), "missing {row}");
    }
}

#[test]
fn sphere_gram_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "sphere.json",
        r#"{"d":3,"n1":2,"N":2,"scalar":"rational","chi":{"name":"cos"},
            "gamma":{"kind":"unit"},"measure":{"kind":"sphere","r":1}}"#,
    );
    let out_path = dir.path().join("gram.json");
    let out = run(&["--out", out_path.to_str().unwrap(), "gram"], Some(&cfg));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(v["command"], "gram");
    let v = &v["gram"];
    let m = v["matrix"].as_array().unwrap();
    assert_eq!(m.len(), 1 + 6 + 15);
    for (i, row) in m.iter().enumerate() {
        for (j, x) in row.as_array().unwrap().iter().enumerate() {
            assert_eq!(x, &m[j][i]);
        }
    }
    assert_eq!(v["verdict"]["exact"], true);
    assert!(v["verdict"]["positive_definite"].is_boolean());
}

#[test]
fn outputs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "hermite.json", HERMITE);
    for cmd in ["verify", "kernels", "qsystem", "gram", "stransform", "dchi"] {
        let a = run(&[cmd], Some(&cfg));
        let b = run(&[cmd], Some(&cfg));
        assert_eq!(a.status.code(), b.status.code(), "{cmd}");
        assert_eq!(a.stdout, b.stdout, "{cmd}");
    }
    let k = |seed: &str| run(&["--seed", seed, "kingman", "--samples", "20000", "--grid", "6"], None).stdout;
    assert_eq!(k("3"), k("3"));
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin().env("DUALAPPELL_OUT_DIR", dir.path()).arg("kernels").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("kernels.csv")).unwrap();
    assert!(csv.starts_with("n,component,monomial,coefficient"));
}
