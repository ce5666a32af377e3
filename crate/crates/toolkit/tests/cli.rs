use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn srcbias(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_srcbias"))
        .args(args)
        .env("RUST_LOG", "off")
        .output()
        .expect("running srcbias")
}

fn ok(args: &[&str]) {
    let out = srcbias(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

/// Small synthetic fixture written by `synth gen`; returns its config path.
fn fixture(root: &Path) -> PathBuf {
    let data = root.join("data");
    ok(&["synth", "gen", "--out", s(&data), "--n-items", "60", "--dim", "8", "--frames", "6"]);
    data.join("run.conf")
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect()
}

#[test]
fn synth_then_metrics_writes_consistent_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let conf = fixture(tmp.path());
    let out = tmp.path().join("m");
    ok(&["metrics", "--config", s(&conf), "--out", s(&out)]);
    for f in [
        "bundles.csv",
        "deltas.csv",
        "deltas.json",
        "deltas.svg",
        "ranks_real.csv",
        "ranks_mixed_ai.csv",
        "manifest.json",
    ] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    let d = json(&out.join("deltas.json"));
    for (metric, n) in d["normalized"].as_object().unwrap() {
        let r = d["relative"][metric].as_f64().unwrap();
        let l = d["location"][metric].as_f64().unwrap();
        assert_eq!(r - l, n.as_f64().unwrap(), "{metric}");
    }
    let bundles = fs::read_to_string(out.join("bundles.csv")).unwrap();
    let rows: Vec<&str> = bundles.lines().map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(rows, ["table", "REAL", "AI", "mixed-REAL", "mixed-AI"]);

    let manifest = json(&out.join("manifest.json"));
    assert_eq!(manifest["command"], "metrics");
    assert_eq!(manifest["seed"], 42);
    assert_eq!(manifest["version"], env!("CARGO_PKG_VERSION"));
    let listed: Vec<&str> = manifest["outputs"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert!(listed.contains(&"deltas.json"));
}

#[test]
fn every_subcommand_is_byte_identical_on_rerun() {
    let tmp = tempfile::tempdir().unwrap();
    let conf = fixture(tmp.path());
    let c = s(&conf);
    let dir = |name: &str| tmp.path().join(name);
    let flows = dir("flows");
    let runs: Vec<(PathBuf, Vec<String>)> = vec![
        (dir("metrics"), vec!["metrics".into(), "--config".into(), c.into(), "--seeds".into(), "3".into()]),
        (dir("ablate"), vec!["ablate".into(), "--config".into(), c.into(), "--mode".into(), "shuffle-ai".into()]),
        (
            dir("train"),
            vec!["train-debias".into(), "--config".into(), c.into(), "--epochs".into(), "3".into()],
        ),
        (dir("ttest"), vec!["ttest".into(), "--config".into(), c.into()]),
        (dir("synth"), vec!["synth".into(), "gen".into(), "--n-items".into(), "20".into(), "--dim".into(), "4".into()]),
        (flows.clone(), vec!["synth".into(), "flows".into(), "--pairs".into(), "10".into()]),
    ];
    let mut all = runs.clone();
    for (out, args) in &runs {
        let mut a: Vec<&str> = args.iter().map(String::as_str).collect();
        a.extend(["--out", s(out)]);
        ok(&a);
    }
    let params = dir("train").join("params.json");
    let pv = dir("pvec").join("pvectors.jsonl");
    let ranks = dir("metrics");
    let follow: Vec<(PathBuf, Vec<String>)> = vec![
        (
            dir("pvec"),
            vec!["pvector".into(), "extract".into(), "--config".into(), c.into(), "--debiased".into(), s(&params).into()],
        ),
        (
            dir("interleave"),
            vec![
                "interleave".into(),
                "--real-ranks".into(),
                s(&ranks.join("ranks_real.csv")).into(),
                "--ai-ranks".into(),
                s(&ranks.join("ranks_ai.csv")).into(),
            ],
        ),
        (dir("flow"), vec!["flow".into(), "--config".into(), s(&flows.join("flow.conf")).into()]),
        (dir("report"), vec!["report".into(), s(&dir("metrics")).into(), s(&dir("ablate")).into()]),
    ];
    for (out, args) in &follow {
        let mut a: Vec<&str> = args.iter().map(String::as_str).collect();
        a.extend(["--out", s(out)]);
        ok(&a);
    }
    let late: Vec<(PathBuf, Vec<String>)> = vec![
        (
            dir("apply"),
            vec!["pvector".into(), "apply".into(), "--config".into(), c.into(), "--pvectors".into(), s(&pv).into()],
        ),
        (
            dir("stats"),
            vec!["pvector".into(), "stats".into(), "--config".into(), c.into(), "--pvectors".into(), s(&pv).into()],
        ),
    ];
    for (out, args) in &late {
        let mut a: Vec<&str> = args.iter().map(String::as_str).collect();
        a.extend(["--out", s(out)]);
        ok(&a);
    }
    all.extend(follow);
    all.extend(late);

    for (out, args) in &all {
        let before = snapshot(out);
        assert!(before.contains_key("manifest.json"), "{args:?}");
        let mut a: Vec<&str> = args.iter().map(String::as_str).collect();
        a.extend(["--out", s(out)]);
        ok(&a);
        assert_eq!(snapshot(out), before, "{args:?} changed on rerun");
    }
}

#[test]
fn empty_query_file_exits_with_validation_status() {
    let tmp = tempfile::tempdir().unwrap();
    let conf = fixture(tmp.path());
    let empty = tmp.path().join("none.jsonl");
    fs::write(&empty, "").unwrap();
    let out = srcbias(&[
        "metrics",
        "--config",
        s(&conf),
        "--queries",
        s(&empty),
        "--out",
        s(&tmp.path().join("m")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("none.jsonl"));
}

#[test]
fn invalid_inputs_exit_with_status_two() {
    let tmp = tempfile::tempdir().unwrap();
    let conf = fixture(tmp.path());
    let out = s(&tmp.path().join("x")).to_string();
    let bad_conf = tmp.path().join("bad.conf");
    fs::write(&bad_conf, "colour = blue\n").unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec!["metrics", "--config", s(&bad_conf), "--out", &out],
        vec!["metrics", "--config", s(&conf), "--real", "/nonexistent.jsonl", "--out", &out],
        vec!["metrics", "--config", s(&conf), "--pool", "max", "--out", &out],
        vec!["metrics", "--config", s(&conf)],
        vec!["ablate", "--config", s(&conf), "--mode", "sideways", "--out", &out],
        vec!["train-debias", "--config", s(&conf), "--rho", "1.5", "--out", &out],
        vec!["metrics", "--config", s(&conf), "--bogus-flag"],
    ];
    for args in cases {
        assert_eq!(srcbias(&args).status.code(), Some(2), "{args:?}");
    }
    // a real corpus passed as the AI side carries the wrong source tags
    let real = tmp.path().join("data/real.jsonl");
    assert_eq!(
        srcbias(&["metrics", "--config", s(&conf), "--ai", s(&real), "--out", &out]).status.code(),
        Some(2)
    );
}

#[test]
fn zero_epoch_training_writes_the_identity() {
    let tmp = tempfile::tempdir().unwrap();
    let conf = fixture(tmp.path());
    let out = tmp.path().join("t");
    ok(&["train-debias", "--config", s(&conf), "--epochs", "0", "--out", s(&out)]);
    let p = json(&out.join("params.json"));
    let w = p["w"].as_array().unwrap();
    assert_eq!(w.len(), 8);
    for (i, row) in w.iter().enumerate() {
        for (j, x) in row.as_array().unwrap().iter().enumerate() {
            assert_eq!(x.as_f64().unwrap(), if i == j { 1.0 } else { 0.0 });
        }
    }
    assert_eq!(fs::read_to_string(out.join("history.csv")).unwrap().lines().count(), 1);
}

#[test]
fn identical_scorers_give_zero_shifts() {
    let tmp = tempfile::tempdir().unwrap();
    let conf = fixture(tmp.path());
    let t = tmp.path().join("t");
    ok(&["train-debias", "--config", s(&conf), "--epochs", "2", "--out", s(&t)]);
    let params = t.join("params.json");
    let out = tmp.path().join("p");
    ok(&[
        "pvector",
        "extract",
        "--config",
        s(&conf),
        "--original",
        s(&params),
        "--debiased",
        s(&params),
        "--out",
        s(&out),
    ]);
    let text = fs::read_to_string(out.join("pvectors.jsonl")).unwrap();
    let last: Value = serde_json::from_str(text.lines().last().unwrap()).unwrap();
    let p_avg = last["p_avg"].as_array().unwrap();
    assert_eq!(p_avg.len(), 8);
    assert!(p_avg.iter().all(|x| x.as_f64().unwrap() == 0.0));
}

#[test]
fn uniform_mean_shuffle_matches_baseline_with_warning() {
    let tmp = tempfile::tempdir().unwrap();
    let conf = fixture(tmp.path());
    let out = tmp.path().join("a");
    ok(&[
        "ablate",
        "--config",
        s(&conf),
        "--mode",
        "shuffle-all",
        "--pool",
        "uniform-mean",
        "--out",
        s(&out),
    ]);
    let a = json(&out.join("ablation.json"));
    assert_eq!(a["no_op"], true);
    assert_eq!(a["baseline"], a["ablated"]);
    let manifest = json(&out.join("manifest.json"));
    assert_eq!(manifest["warnings"].as_array().unwrap().len(), 1);
}

#[test]
fn flags_override_config_values() {
    let tmp = tempfile::tempdir().unwrap();
    let conf_dir = tmp.path().join("data");
    fixture(tmp.path());
    let conf = conf_dir.join("run.conf");
    let mut text = fs::read_to_string(&conf).unwrap();
    text.push_str("seed = 5\npool = positional-ramp\n");
    fs::write(&conf, text).unwrap();
    let out = tmp.path().join("m");
    ok(&["metrics", "--config", s(&conf), "--seed", "6", "--out", s(&out)]);
    let manifest = json(&out.join("manifest.json"));
    assert_eq!(manifest["seed"], 6);
    assert_eq!(manifest["config"]["pool"], "positional-ramp");
    assert_eq!(
        manifest["config"]["real"].as_str().unwrap(),
        s(&conf_dir.join("real.jsonl"))
    );
}
