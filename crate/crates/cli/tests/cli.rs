use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn srl(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_srl"))
        .args(args)
        .current_dir(dir)
        .env_remove("SRL_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn last_line(o: &Output) -> String {
    stdout(o).lines().last().unwrap_or_default().to_string()
}

const SMALL: &[&str] = &["--trials", "2", "--d", "16", "--n-train", "128", "--population", "1024", "--repeats", "0"];

fn tree(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in fs::read_dir(&dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(root).unwrap().display().to_string(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn help_lists_every_flag_with_a_default() {
    let dir = tempfile::tempdir().unwrap();
    for sub in ["gen-graph", "spectrum", "train", "compare", "oversmooth", "bounds", "plot"] {
        let o = srl(&[sub, "--help"], dir.path());
        assert!(o.status.success(), "{sub}");
        let text = stdout(&o);
        for line in text.lines().filter(|l| l.trim_start().starts_with("--")) {
            let is_required = line.contains("--input");
            assert!(is_required || line.contains("[default:"), "{sub}: {line}");
        }
    }
}

#[test]
fn compare_happy_path_prints_manifest_last() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("cfg.json"), r#"{"d": 16, "trials": 2, "n_train": 128, "population": 1024}"#).unwrap();
    let o = srl(&["compare", "--config", "cfg.json", "--seed", "42", "--out", "results/"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let manifest = dir.path().join(last_line(&o));
    assert!(manifest.ends_with("manifest.json"));
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(&manifest).unwrap()).unwrap();
    assert_eq!(m["seed"], 42);
    assert_eq!(m["config"]["d"], 16);
    assert!(dir.path().join("results/results.csv").exists());
}

#[test]
fn user_errors_exit_one_and_name_the_flag() {
    let dir = tempfile::tempdir().unwrap();
    let o = srl(&["compare", "--gamma", "-1"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--gamma"), "{}", stderr(&o));

    let o = srl(&["compare", "--validation-fraction", "0.9"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--validation-fraction"));

    let o = srl(&["compare", "--no-such-flag", "1"], dir.path());
    assert_eq!(o.status.code(), Some(1));

    fs::write(dir.path().join("bad.json"), "{ not json").unwrap();
    let o = srl(&["compare", "--config", "bad.json"], dir.path());
    assert_eq!(o.status.code(), Some(1));

    fs::write(dir.path().join("extra.json"), r#"{"unknown_key": 1}"#).unwrap();
    let o = srl(&["bounds", "--config", "extra.json"], dir.path());
    assert_eq!(o.status.code(), Some(1));

    let o = srl(&["oversmooth", "--layers", "0..2"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--layers"));
}

#[test]
fn oversmoothing_runs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &'static str| -> Vec<&'static str> {
        vec!["oversmooth", "--layers", "1..4", "--align", "tail", "--n", "80", "--d", "8", "--trials", "2", "--seed", "9", "--out", out]
    };
    let a = srl(&args("a"), dir.path());
    let b = srl(&args("b"), dir.path());
    assert!(a.status.success() && b.status.success(), "{}", stderr(&a));
    assert_eq!(tree(&dir.path().join("a")), tree(&dir.path().join("b")));
    let results = fs::read_to_string(dir.path().join("a/results.csv")).unwrap();
    // Two trials, four depths, two learners.
    assert_eq!(results.lines().count(), 1 + 2 * 4 * 2);
}

#[test]
fn manifest_replay_reproduces_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["bounds", "--out", "first", "--seed", "4", "--n-grid", "64,128"];
    args.extend_from_slice(SMALL);
    let o = srl(&args, dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let o = srl(&["bounds", "--config", "first/manifest.json", "--out", "second", "--jobs", "1"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    for name in ["results.csv", "summary.csv", "bounds.csv"] {
        assert_eq!(
            fs::read(dir.path().join("first").join(name)).unwrap(),
            fs::read(dir.path().join("second").join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn seed_comes_from_the_environment_unless_flagged() {
    let dir = tempfile::tempdir().unwrap();
    let run = |extra: &[&str], out: &str| {
        let mut args = vec!["compare", "--out", out];
        args.extend_from_slice(SMALL);
        args.extend_from_slice(extra);
        let o = Command::new(env!("CARGO_BIN_EXE_srl"))
            .args(&args)
            .current_dir(dir.path())
            .env("SRL_SEED", "77")
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", stderr(&o));
        let m: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join(out).join("manifest.json")).unwrap()).unwrap();
        m["seed"].as_u64().unwrap()
    };
    assert_eq!(run(&[], "env"), 77);
    assert_eq!(run(&["--seed", "5"], "flag"), 5);
}

#[test]
fn train_gen_graph_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let o = srl(&["train", "--algorithm", "sgd", "--d", "16", "--n-train", "256", "--population", "1024", "--out", "t"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let est: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("t/estimator.json")).unwrap()).unwrap();
    assert_eq!(est["algorithm"], "sgd");
    assert_eq!(est["theta"].as_array().unwrap().len(), 16);
    let data = fs::read_to_string(dir.path().join("t/dataset.csv")).unwrap();
    assert_eq!(data.lines().count(), 257);
    assert!(data.starts_with("x0,"));

    let o = srl(&["gen-graph", "--graph", "ba", "--n", "30", "--ba-m", "2", "--out", "g"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let edges = fs::read_to_string(dir.path().join("g/graph.edges")).unwrap();
    assert_eq!(edges.lines().filter(|l| !l.starts_with('#')).count(), 2 * 28);

    let mut args = vec!["bounds", "--out", "b", "--n-grid", "64,128,256"];
    args.extend_from_slice(SMALL);
    assert!(srl(&args, dir.path()).status.success());
    let o = srl(&["plot", "--input", "b/results.csv", "--log-x", "--log-y", "--out", "p"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let svg = fs::read_to_string(dir.path().join("p/plot.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 2);
    let o = srl(&["plot", "--input", "b/results.csv", "--y", "nope"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--y"));
}
