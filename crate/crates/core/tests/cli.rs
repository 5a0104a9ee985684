use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn subcorr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_subcorr"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn gen(dir: &Path, hyp: &str) {
    let out = dir.to_str().unwrap();
    let o = subcorr(&["gen", "--n", "20", "--s", "10", "--rho", "0.99", "--hypothesis", hyp, "--seed", "5", "--out", out]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn gen_then_detect_and_exact() {
    let dir = tempfile::tempdir().unwrap();
    gen(dir.path(), "alt");
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("meta.json")).unwrap()).unwrap();
    assert_eq!(meta["hypothesis"], "alt");
    assert_eq!(meta["idx1"].as_array().unwrap().len(), 10);
    assert_eq!(meta["latent_perm"]["image"].as_array().unwrap().len(), 20);

    let g1 = dir.path().join("g1.csv");
    let g2 = dir.path().join("g2.csv");
    let (g1, g2) = (g1.to_str().unwrap(), g2.to_str().unwrap());
    let o = subcorr(&[
        "detect", "--g1", g1, "--g2", g2, "--kernel", "mse", "--rho", "0.99", "--m", "4", "--k1", "3",
        "--k2", "1", "--n1", "50", "--n2", "10", "--seed", "1",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let d: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(d["mapping"]["domain"].as_array().unwrap().len(), 4);
    let detected = d["statistic"].as_f64().unwrap();

    let o = subcorr(&["exact", "--g1", g1, "--g2", g2, "--kernel", "mse", "--rho", "0.99", "--m", "4"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let e: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(detected <= e["statistic"].as_f64().unwrap());
    assert_eq!(e["tau"], -0.1200000000000001);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    gen(dir.path(), "null");
    let g1 = dir.path().join("g1.csv");
    let g1 = g1.to_str().unwrap();

    // invalid parameters
    let o = subcorr(&["gen", "--n", "1", "--s", "1", "--rho", "0.5", "--hypothesis", "null", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    let o = subcorr(&["exact", "--g1", g1, "--g2", g1, "--kernel", "mle", "--m", "3"]);
    assert_eq!(code(&o), 2);
    let o = subcorr(&["detect", "--g1", g1, "--g2", g1, "--kernel", "bogus", "--m", "3"]);
    assert_eq!(code(&o), 2);

    // infeasible budget
    let o = subcorr(&["exact", "--g1", g1, "--g2", g1, "--kernel", "overlap", "--m", "5", "--budget", "1000"]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("infeasible"));

    // I/O
    let missing = dir.path().join("nope.csv");
    let o = subcorr(&["exact", "--g1", missing.to_str().unwrap(), "--g2", g1, "--kernel", "overlap", "--m", "2"]);
    assert_eq!(code(&o), 4);
    let o = subcorr(&["experiment", "--config", missing.to_str().unwrap()]);
    assert_eq!(code(&o), 4);
}

#[test]
fn experiment_then_roc() {
    let dir = tempfile::tempdir().unwrap();
    let trials = dir.path().join("trials.csv");
    let cfg = dir.path().join("cfg.json");
    fs::write(
        &cfg,
        serde_json::json!({
            "n": 16, "s": 10, "rho": 0.99, "epsilon": 0.01,
            "trials_per_hypothesis": 4,
            "detector": {"clique": {"k1": 3, "k2": 2, "n1": 60, "n2": 12}},
            "kernel": "overlap", "root_seed": 9,
            "output_path": trials,
        })
        .to_string(),
    )
    .unwrap();
    let o = subcorr(&["experiment", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&trials).unwrap();
    assert_eq!(text.lines().next().unwrap(), "trial,hypothesis,statistic,decision,wall_time_s");
    assert_eq!(text.lines().count(), 9);

    let roc = dir.path().join("roc.csv");
    let hist = dir.path().join("hist_alt.csv");
    let o = subcorr(&[
        "roc", "--in", trials.to_str().unwrap(), "--out", roc.to_str().unwrap(),
        "--hist-alt", hist.to_str().unwrap(), "--bins", "4",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let roc_text = fs::read_to_string(&roc).unwrap();
    assert!(roc_text.starts_with("threshold,fpr,tpr\n"));
    assert!(roc_text.lines().last().unwrap().starts_with("# auc="));
    assert_eq!(fs::read_to_string(&hist).unwrap().lines().count(), 5);

    // bad config keys are parameter errors
    fs::write(&cfg, r#"{"n": 16}"#).unwrap();
    assert_eq!(code(&subcorr(&["experiment", "--config", cfg.to_str().unwrap()])), 2);
}

#[test]
fn theory_check_prints_table() {
    let o = subcorr(&["theory-check", "--trials", "20000", "--seed", "3"]);
    let out = String::from_utf8_lossy(&o.stdout);
    assert_eq!(out.lines().count(), 10, "{out}");
    assert!(out.lines().skip(1).all(|l| l.ends_with("pass") || l.ends_with("FAIL")));
    assert_eq!(code(&subcorr(&["theory-check", "--trials", "10"])), 2);
}
