use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use prdkit::formats::{read_curve, CurveMetaJson};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_prdkit"))
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = run(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn code(dir: &Path, args: &[&str]) -> i32 {
    run(dir, args).status.code().expect("exit code")
}

fn surrogate(dir: &Path, name: &str, psi: &str, seed: &str) -> PathBuf {
    ok(dir, &["gen-surrogate", "--n", "400", "--d", "6", "--psi", psi, "--seed", seed, "--out", name]);
    dir.join(name)
}

#[test]
fn identical_files_give_a_near_unit_curve() {
    let t = tempfile::tempdir().unwrap();
    surrogate(t.path(), "a.csv", "1", "1");
    ok(t.path(), &["pr", "--real", "a.csv", "--fake", "a.csv", "--method", "knn", "--split", "0.5", "--out", "c.csv"]);
    let report: serde_json::Value = serde_json::from_str(&ok(t.path(), &["summarize", "--curve", "c.csv"])).unwrap();
    let auc = report["auc"].as_f64().unwrap();
    println!("self-comparison auc = {auc:.4}");
    assert!(auc >= 0.9, "{auc}");
}

#[test]
fn kde_metadata_records_resolved_sigma() {
    let t = tempfile::tempdir().unwrap();
    surrogate(t.path(), "a.npy", "1", "1");
    surrogate(t.path(), "b.npy", "0.6", "2");
    ok(t.path(), &["pr", "--real", "a.npy", "--fake", "b.npy", "--method", "kde", "--sigma", "auto", "--out", "k.csv"]);
    let meta: CurveMetaJson = serde_json::from_str(&fs::read_to_string(t.path().join("k.json")).unwrap()).unwrap();
    assert_eq!(meta.method, "kde");
    assert!(meta.sigma.unwrap() > 0.0);
}

#[test]
fn exit_codes_follow_the_failure_class() {
    let t = tempfile::tempdir().unwrap();
    surrogate(t.path(), "a.csv", "1", "1");
    fs::write(t.path().join("bad.csv"), "1,2,3,4,5,6\n1,2,x,4,5,6\n").unwrap();
    fs::write(t.path().join("tiny.csv"), "1,2\n3,4\n").unwrap();
    assert_eq!(code(t.path(), &["pr", "--real", "a.csv", "--fake", "a.csv", "--k", "0", "--out", "x.csv"]), 2);
    assert_eq!(code(t.path(), &["pr", "--real", "a.csv", "--fake", "a.csv", "--split", "1.5", "--out", "x.csv"]), 2);
    assert_eq!(code(t.path(), &["pr", "--real", "a.csv", "--fake", "a.csv", "--method", "nope", "--out", "x.csv"]), 2);
    assert_eq!(code(t.path(), &["pr", "--real", "a.csv", "--out", "x.csv"]), 2);
    let bad = run(t.path(), &["pr", "--real", "bad.csv", "--fake", "a.csv", "--out", "x.csv"]);
    assert_eq!(bad.status.code(), Some(3));
    let msg = String::from_utf8_lossy(&bad.stderr);
    assert!(msg.contains("bad.csv") && msg.contains("row 2"), "{msg}");
    assert_eq!(code(t.path(), &["pr", "--real", "missing.csv", "--fake", "a.csv", "--out", "x.csv"]), 3);
    assert_eq!(
        code(
            t.path(),
            &["pr", "--real", "tiny.csv", "--fake", "tiny.csv", "--k", "50", "--split", "none", "--out", "x.csv"]
        ),
        4
    );
    assert!(!t.path().join("x.csv").exists());
}

#[test]
fn iou_of_a_curve_with_itself_prints_one() {
    let t = tempfile::tempdir().unwrap();
    surrogate(t.path(), "a.csv", "1", "1");
    surrogate(t.path(), "b.csv", "0.5", "2");
    ok(t.path(), &["pr", "--real", "a.csv", "--fake", "b.csv", "--out", "c.csv"]);
    assert_eq!(ok(t.path(), &["iou", "--a", "c.csv", "--b", "c.csv"]), "1.000000\n");
}

#[test]
fn gt_of_equal_models_is_the_diagonal() {
    let t = tempfile::tempdir().unwrap();
    let model = r#"{"type":"gaussian","mean":[0.0,1.0],"cov":"identity"}"#;
    fs::write(t.path().join("p.json"), model).unwrap();
    ok(t.path(), &["gt", "--p", "p.json", "--q", "p.json", "--n-gt", "100000", "--out", "gt.csv"]);
    let c = read_curve(&t.path().join("gt.csv")).unwrap();
    for p in &c.points {
        assert!((p.alpha - p.lambda.min(1.0)).abs() <= 0.01, "{p:?}");
    }
}

#[test]
fn summarize_unit_square() {
    let t = tempfile::tempdir().unwrap();
    fs::write(t.path().join("sq.csv"), "lambda,alpha,beta\n0,0,1\n1,1,1\ninf,1,0\n").unwrap();
    ok(t.path(), &["summarize", "--curve", "sq.csv", "--out", "s.json"]);
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(t.path().join("s.json")).unwrap()).unwrap();
    assert_eq!(v["auc"].as_f64(), Some(1.0));
    assert_eq!(v["f8"].as_f64(), Some(1.0));
    assert_eq!(v["alpha_at_eps"].as_f64(), Some(1.0));
}

#[test]
fn outputs_are_byte_identical_across_runs_and_thread_counts() {
    let t = tempfile::tempdir().unwrap();
    surrogate(t.path(), "a.raw", "1", "1");
    surrogate(t.path(), "b.raw", "0.7", "2");
    let mut seen = Vec::new();
    for threads in ["1", "3", "1"] {
        let out = bin()
            .current_dir(t.path())
            .env("PRDKIT_THREADS", threads)
            .args(["pr", "--real", "a.raw", "--fake", "b.raw", "--method", "kde", "--seed", "7", "--out", "c.csv"])
            .output()
            .unwrap();
        assert!(out.status.success());
        seen.push((fs::read(t.path().join("c.csv")).unwrap(), fs::read(t.path().join("c.json")).unwrap()));
    }
    assert!(seen.windows(2).all(|w| w[0] == w[1]));
    let e1 = ok(t.path(), &["extremes", "--real", "a.raw", "--fake", "b.raw", "--method", "ipr"]);
    let e2 = ok(t.path(), &["extremes", "--real", "a.raw", "--fake", "b.raw", "--method", "ipr"]);
    assert_eq!(e1, e2);
    assert_eq!(code(t.path(), &["extremes", "--real", "a.raw", "--fake", "b.raw", "--method", "zzz"]), 2);
}

#[test]
fn help_documents_defaults() {
    let help = |sub: &str| ok(Path::new("."), &[sub, "--help"]);
    let pr = help("pr");
    for d in ["[default: sqrt]", "[default: 0.5]", "[default: 101]"] {
        assert!(pr.contains(d), "pr help lacks {d}");
    }
    let s = help("summarize");
    assert!(s.contains("[default: 0.05]") && s.contains("[default: 8]"));
    assert!(help("gt").contains("[default: 100000]"));
    assert!(help("extremes").contains("[default: sqrt]"));
    let exp = help("exp");
    assert!(exp.contains("k=sqrt") && exp.contains("split=0.5") && exp.contains("lambdas=101"));
    for sub in ["iou", "plot", "gen-surrogate"] {
        help(sub);
    }
}

#[test]
fn plot_and_small_experiment_run() {
    let t = tempfile::tempdir().unwrap();
    let cfg = r#"{"n": 80, "d": 2, "n_gt": 2000, "lambdas": 11, "repetitions": 2, "shifts": [0.5]}"#;
    fs::write(t.path().join("cfg.json"), cfg).unwrap();
    let table = ok(t.path(), &["exp", "--suite", "shift", "--config", "cfg.json", "--out", "run"]);
    assert!(table.starts_with("setting,method"));
    assert_eq!(table.lines().count(), 5);
    let run_dir = t.path().join("run");
    for f in ["iou_table.csv", "summary.json", "config_echo.json"] {
        assert!(run_dir.join(f).exists());
    }
    ok(t.path(), &["plot", "--curves", "run/curves/mu_0.5_knn_mean.csv", "run/curves/mu_0.5_gt.csv", "--out", "f.svg"]);
    let svg = fs::read_to_string(t.path().join("f.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 2);
    fs::write(t.path().join("bad.json"), r#"{"k": 0}"#).unwrap();
    assert_eq!(code(t.path(), &["exp", "--suite", "shift", "--config", "bad.json"]), 2);
    assert_eq!(code(t.path(), &["exp", "--suite", "nope"]), 2);
}
