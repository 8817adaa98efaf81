use std::fs;
use std::path::Path;
use std::process::Command;

fn rbgr(args: &[&str], dir: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_rbgr")).args(args).current_dir(dir).output().expect("spawn rbgr")
}

#[test]
fn pipeline_through_binary() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let sim = rbgr(&["simulate", "--out", "data", "--n", "30", "--p", "3", "--q", "2", "--sparsity", "0.34"], d);
    assert!(sim.status.success(), "{}", String::from_utf8_lossy(&sim.stderr));
    for threads in ["1", "3"] {
        let out = format!("fit{threads}");
        let fit = Command::new(env!("CARGO_BIN_EXE_rbgr"))
            .args(["fit", "--y", "data/y.csv", "--x", "data/x.csv", "--out", &out, "--iters", "120", "--burnin", "60"])
            .env("RBGR_THREADS", threads)
            .current_dir(d)
            .output()
            .unwrap();
        assert!(fit.status.success(), "{}", String::from_utf8_lossy(&fit.stderr));
    }
    for j in 0..3 {
        let f = format!("draws/node_{j}.bin");
        assert_eq!(fs::read(d.join("fit1").join(&f)).unwrap(), fs::read(d.join("fit3").join(&f)).unwrap());
    }
    let sum = rbgr(&["summarize", "--fit", "fit1", "--out", "sum", "--fdr", "0.1"], d);
    assert!(sum.status.success(), "{}", String::from_utf8_lossy(&sum.stderr));
    let report: serde_json::Value = serde_json::from_slice(&sum.stdout).unwrap();
    assert!(report["population_edges"].is_u64() && report["c1"].as_f64().is_none_or(|c| c > 0.0));
    let diag = rbgr(&["diagnose", "--fit", "fit1", "--out", "diag", "--h-method", "asymptotic"], d);
    assert!(diag.status.success(), "{}", String::from_utf8_lossy(&diag.stderr));
    assert!(d.join("diag/hscore.csv").exists());
}

#[test]
fn bad_input_reports_error() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("y.csv"), "y1,y2\n1,oops\n").unwrap();
    fs::write(tmp.path().join("x.csv"), "x1\n1\n").unwrap();
    let out = rbgr(&["fit", "--y", "y.csv", "--x", "x.csv", "--out", "o"], tmp.path());
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2"), "{err}");
}

#[test]
fn unknown_config_key_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("c.json"), r#"{"chain": {"iterations": 5}}"#).unwrap();
    let out = rbgr(&["fit", "--y", "y.csv", "--x", "x.csv", "--out", "o", "--config", "c.json"], tmp.path());
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("iterations"));
}
