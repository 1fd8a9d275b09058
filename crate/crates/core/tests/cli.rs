use std::path::Path;
use std::process::Command;

use revsym::cli::run;
use serde_json::Value;

fn revsym(dir: &Path, args: &[&str]) -> i32 {
    let mut full = vec!["revsym".to_string()];
    full.extend(args.iter().map(|s| s.to_string()));
    full.push("--out".into());
    full.push(dir.display().to_string());
    run(full)
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn result(dir: &Path, name: &str) -> Value {
    read_json(&dir.join(name))["result"].clone()
}

fn table(path: &Path) -> Vec<Vec<f64>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect()
}

const SMALL: &[&str] = &["--nr", "16", "--ntheta", "8"];

fn with_small<'a>(args: &[&'a str]) -> Vec<&'a str> {
    args.iter().chain(SMALL).copied().collect()
}

#[test]
fn exponents_for_double_and_triple_splits() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(revsym(dir.path(), &["exponents", "--split", "2,2", "--alpha", "0"]), 0);
    let r = result(dir.path(), "exponents.json");
    assert_eq!(r["theoremA_mono"].as_f64().unwrap(), 6.0);
    assert_eq!(r["two_star"].as_f64().unwrap(), 4.0);
    assert_eq!(revsym(dir.path(), &["exponents", "--split", "2,2,2"]), 0);
    let r = result(dir.path(), "exponents.json");
    assert!((r["p1"].as_f64().unwrap() - 10.0 / 3.0).abs() < 1e-12);
}

#[test]
fn malformed_input_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(revsym(dir.path(), &["exponents", "--split", "2,0"]), 2);
    assert_eq!(revsym(dir.path(), &["solve", "--domain", "annulus(2,1)"]), 2);
    assert_eq!(revsym(dir.path(), &["solve", "--domain", "donut"]), 2);
    assert_eq!(revsym(dir.path(), &["solve", "--p", "1.5"]), 2);
    assert_eq!(revsym(dir.path(), &["frobnicate"]), 2);
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "p = 3\nbogus = 1\n").unwrap();
    assert_eq!(revsym(dir.path(), &["--config", cfg.to_str().unwrap(), "exponents"]), 2);
    let missing = dir.path().join("missing.toml");
    assert_eq!(revsym(dir.path(), &["--config", missing.to_str().unwrap(), "exponents"]), 2);
}

#[test]
fn hardy_constants() {
    let dir = tempfile::tempdir().unwrap();
    let hardy = |domain: &str| {
        assert_eq!(revsym(dir.path(), &["hardy", "--domain", domain, "--nr", "64", "--ntheta", "8"]), 0);
        result(dir.path(), "hardy.json")["value"].as_f64().unwrap()
    };
    assert!((hardy("ball") - 1.0).abs() < 0.1);
    assert!(hardy("annulus(8,9)") > hardy("annulus(2,3)"));
    assert!(dir.path().join("hardy_field.csv").exists());
    assert_eq!(revsym(dir.path(), &["hardy", "--domain", "annulus(2,3)", "--nr", "16", "--ntheta", "8", "--grid-doubling"]), 0);
    let r = result(dir.path(), "hardy.json");
    assert!(r["doubled"].is_number() && r["richardson"].is_number());
}

#[test]
fn eigen_writes_modes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(revsym(dir.path(), &["eigen", "--weight", "omega(2)", "--cells", "128", "--modes", "2"]), 0);
    let r = result(dir.path(), "eigen.json");
    let values: Vec<f64> = r["values"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    assert_eq!(values.len(), 2);
    assert!(values[0].abs() < 1e-8);
    assert!((values[1] - 24.0).abs() < 0.01);
    for k in 0..2 {
        assert!(dir.path().join(format!("eigen_mode_{k}.csv")).exists());
    }
    assert_eq!(revsym(dir.path(), &["eigen", "--weight", "omega(0)"]), 2);
}

#[test]
fn solve_outputs_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(revsym(dir.path(), &with_small(&["solve", "--trace", "--grid-doubling"])), 0);
    let r = result(dir.path(), "solve.json");
    assert!(r["converged"].as_bool().unwrap());
    assert!(r["energy"].as_f64().unwrap() > 0.0);
    assert!(r["nonradiality_index"].as_f64().unwrap() < 0.05);
    for f in ["field.csv", "trace.csv", "field_doubled.csv"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let trace = table(&dir.path().join("trace.csv"));
    assert!(!trace.is_empty());
    assert_eq!(revsym(dir.path(), &with_small(&["solve", "--max-outer", "2"])), 1);
    assert!(!result(dir.path(), "solve.json")["converged"].as_bool().unwrap());
}

#[test]
fn headers_embed_config_and_version() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(revsym(dir.path(), &with_small(&["solve", "--p", "3.5"])), 0);
    let doc = read_json(&dir.path().join("solve.json"));
    assert_eq!(doc["header"]["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(doc["header"]["command"], "solve");
    assert_eq!(doc["header"]["config"]["p"].as_f64().unwrap(), 3.5);
    assert_eq!(doc["header"]["config"]["solver"]["nr"].as_u64().unwrap(), 16);
    let text = std::fs::read_to_string(dir.path().join("field.csv")).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().contains(env!("CARGO_PKG_VERSION")));
    assert!(lines.next().unwrap().starts_with("# config: {"));
}

#[test]
fn toml_config_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "p = 5.0\nalpha = 1.0\n[solver]\nnr = 12\nntheta = 8\n").unwrap();
    assert_eq!(revsym(dir.path(), &["--config", cfg.to_str().unwrap(), "solve", "--p", "3"]), 0);
    let h = &read_json(&dir.path().join("solve.json"))["header"]["config"];
    assert_eq!(h["p"].as_f64().unwrap(), 3.0);
    assert_eq!(h["alpha"].as_f64().unwrap(), 1.0);
    assert_eq!(h["solver"]["nr"].as_u64().unwrap(), 12);
}

#[test]
fn symmetry_verdict() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(revsym(dir.path(), &with_small(&["symmetry", "--domain", "annulus(8,9)", "--p", "4"])), 0);
    let r = result(dir.path(), "symmetry.json");
    assert!(r["criterion_met"].as_bool().unwrap());
    assert!(r["M_value"].as_f64().unwrap() < 0.0);
    assert!(r["M_value"].as_f64().unwrap() <= r["bound"].as_f64().unwrap());
    assert!(r["index"].is_number());
}

fn sweep(dir: &Path, jobs: &str) -> i32 {
    revsym(
        dir,
        &with_small(&["sweep", "--axis", "r", "--values", "2,4,8", "--p", "4", "--jobs", jobs]),
    )
}

#[test]
fn sweep_rows_are_resumable_and_job_independent() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_eq!(sweep(a.path(), "1"), 0);
    assert_eq!(sweep(b.path(), "2"), 0);
    let ta = table(&a.path().join("sweep.csv"));
    let tb = table(&b.path().join("sweep.csv"));
    assert_eq!(ta.len(), 3);
    assert_eq!(ta, tb);
    assert_eq!(ta.iter().map(|r| r[0]).collect::<Vec<_>>(), vec![2.0, 4.0, 8.0]);
    // β grows with R, so the threshold falls
    assert!(ta[0][2] > ta[1][2] && ta[1][2] > ta[2][2]);

    // a row file with the same key is reused as is
    let row = a.path().join("rows/row_0001.json");
    let mut saved = read_json(&row);
    saved["row"][1] = Value::from(-1.0);
    std::fs::write(&row, saved.to_string()).unwrap();
    assert_eq!(sweep(a.path(), "2"), 0);
    assert_eq!(table(&a.path().join("sweep.csv"))[1][1], -1.0);

    // a stale key triggers a recompute
    saved["key"]["version"] = Value::from("0.0.0");
    std::fs::write(&row, saved.to_string()).unwrap();
    assert_eq!(sweep(a.path(), "1"), 0);
    assert_eq!(table(&a.path().join("sweep.csv"))[1], tb[1]);
}

#[test]
fn empty_sweep_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.toml");
    std::fs::write(&cfg, "[sweep]\naxis = \"p\"\nvalues = []\n").unwrap();
    assert_eq!(revsym(dir.path(), &["--config", cfg.to_str().unwrap(), "sweep"]), 2);
}

#[test]
fn moser_and_decay() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(revsym(dir.path(), &["moser", "--p", "4", "--q", "6", "--kmax", "4"]), 0);
    let t = table(&dir.path().join("moser.csv"));
    assert_eq!(t.len(), 5);
    assert!(t.windows(2).all(|w| w[1][1] > w[0][1]));
    assert_eq!(
        revsym(
            dir.path(),
            &["decay", "--domain", "ball", "--potential-alpha", "3", "--p", "4", "--nr", "64", "--ntheta", "8"]
        ),
        0
    );
    let r = result(dir.path(), "decay.json");
    assert!(r["slope"].is_number(), "{r}");
    assert!(!table(&dir.path().join("decay_profile.csv")).is_empty());
}

#[test]
fn identical_runs_give_identical_bytes() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = with_small(&["solve", "--seed", "7"]);
    assert_eq!(revsym(a.path(), &args), 0);
    assert_eq!(revsym(b.path(), &args), 0);
    let read = |d: &Path, f: &str| std::fs::read_to_string(d.join(f)).unwrap().replace(&d.display().to_string(), "");
    assert_eq!(read(a.path(), "field.csv"), read(b.path(), "field.csv"));
    assert_eq!(read(a.path(), "solve.json"), read(b.path(), "solve.json"));
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_revsym");
    let ok = Command::new(bin)
        .args(["exponents", "--split", "3,3", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(ok.status.code(), Some(0));
    let stdout: Value = serde_json::from_slice(&ok.stdout).unwrap();
    assert_eq!(stdout["dim"].as_u64().unwrap(), 6);
    let bad = Command::new(bin).args(["exponents", "--split", "x"]).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
}
