use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn styleforge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_styleforge"))
        .args(args)
        .env_remove("STYLEFORGE_BACKENDS")
        .output()
        .unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn transfer_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for (out, par) in [(&a, "1"), (&b, "8")] {
        let o = styleforge(&[
            "--backends", "toyvolt", "--parallelism", par, "transfer", "--dataset", "toyvolt",
            "--direction", "negative:positive", "--method", "prompt-then-am", "--out", path(out),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let first = fs::read(a.join("outputs.txt")).unwrap();
    assert_eq!(first, fs::read(b.join("outputs.txt")).unwrap());
    assert_eq!(String::from_utf8(first).unwrap().lines().count(), 250);
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["method"], "prompt-then-am");
}

#[test]
fn unknown_method_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = styleforge(&[
        "--backends", "toyvolt", "transfer", "--dataset", "toyvolt", "--direction", "negative:positive",
        "--method", "telepathy", "--out", path(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn empty_grid_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = styleforge(&[
        "--backends", "toyvolt", "sweep-alpha", "--dataset", "toyvolt", "--direction", "negative:positive",
        "--grid", "", "--out", path(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn missing_backends_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = styleforge(&[
        "transfer", "--dataset", "toyvolt", "--direction", "negative:positive", "--out", path(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn backends_fall_back_to_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_styleforge"))
        .args(["transfer", "--dataset", "toyvolt", "--direction", "positive:negative", "--method", "am"])
        .args(["--out", path(dir.path())])
        .env("STYLEFORGE_BACKENDS", "toyvolt")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("outputs.txt").is_file());
}

#[test]
fn copy_baseline_evaluation() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("src.txt");
    fs::write(&src, "the food was awful .\nthe staff were rude .\nit is bland and stale .\n").unwrap();
    let out = dir.path().join("eval");
    let o = styleforge(&[
        "--backends", "toyvolt", "evaluate", "--hyp", path(&src), "--src", path(&src),
        "--direction", "negative:positive", "--label", "copy", "--out", path(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_slice(&fs::read(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["acc"], 0.0);
    assert_eq!(report["s_sbleu"], 100.0);
    assert!(report["r_sbleu"].is_null());
    let table = fs::read_to_string(out.join("table.md")).unwrap();
    assert!(table.lines().nth(2).unwrap().starts_with("| copy | 0 | − | 100.0 |"), "{table}");
}

#[test]
fn sweep_writes_one_row_per_alpha() {
    let dir = tempfile::tempdir().unwrap();
    let o = styleforge(&[
        "--backends", "toyvolt", "sweep-alpha", "--dataset", "toyvolt", "--direction", "negative:positive",
        "--grid", "0,0.5,1", "--emit-mask-counts", "--out", path(dir.path()),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 4);
    assert_eq!(lines[0], "alpha,acc,r_sbleu,s_sbleu,ppl,mean,masked_tokens");
    assert!(lines[1].starts_with("0,") && lines[1].ends_with(",0"));
}

#[test]
fn distill_and_demo_select() {
    let dir = tempfile::tempdir().unwrap();
    let o = styleforge(&[
        "--backends", "toyvolt", "--seed", "7", "distill", "--dataset", "toyvolt", "--direction",
        "negative:positive", "--n", "20", "--out", path(dir.path()),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read_to_string(dir.path().join("d1.jsonl")).unwrap().lines().count(), 20);
    assert_eq!(fs::read_to_string(dir.path().join("d2.jsonl")).unwrap().lines().count(), 20);

    let o = styleforge(&[
        "--backends", "toyvolt", "demo-select", "--dataset", "toyvolt", "--direction", "negative:positive",
        "--query", "the soup was bland .", "--k", "2", "--out", path(dir.path()),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let demos: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("demos.json")).unwrap()).unwrap();
    assert!(demos.to_string().contains("the soup was bland"));
}
