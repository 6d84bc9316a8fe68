use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn partlex(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_partlex"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) {
    let out = partlex(dir, args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn error_line(out: &Output) -> serde_json::Value {
    let text = String::from_utf8(out.stderr.clone()).unwrap();
    assert_eq!(text.trim_end().lines().count(), 1, "{text}");
    serde_json::from_str(text.trim_end()).unwrap()
}

fn read(p: PathBuf) -> String {
    fs::read_to_string(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

/// A two-subdomain corpus with synthetic descriptions.
fn fixture() -> TempDir {
    let t = TempDir::new().unwrap();
    let d = t.path();
    ok(
        d,
        &[
            "generate",
            "--subdomain",
            "vehicles",
            "--subdomain",
            "gadgets",
            "--n",
            "30",
            "--seed",
            "2",
            "--out",
            "corpus.jsonl",
        ],
    );
    ok(
        d,
        &[
            "synth",
            "--corpus",
            "corpus.jsonl",
            "--level",
            "2",
            "--noise",
            "0.2",
            "--synonyms",
            "2",
            "--seed",
            "2",
            "--out",
            "desc.jsonl",
        ],
    );
    t
}

#[test]
fn generate_writes_one_line_per_stimulus_and_a_manifest() {
    let t = TempDir::new().unwrap();
    ok(
        t.path(),
        &[
            "generate",
            "--subdomain",
            "houses",
            "--n",
            "250",
            "--seed",
            "7",
            "--out",
            "corpus.jsonl",
        ],
    );
    assert_eq!(read(t.path().join("corpus.jsonl")).lines().count(), 250);
    let m: serde_json::Value =
        serde_json::from_str(&read(t.path().join("corpus.jsonl.manifest.json"))).unwrap();
    assert_eq!(m["command"], "generate");
    assert_eq!(m["config"]["seed"], 7);
    assert_eq!(m["outputs"]["corpus.jsonl"].as_str().unwrap().len(), 64);
}

#[test]
fn usage_errors_exit_2_with_one_json_line() {
    let t = TempDir::new().unwrap();
    let out = partlex(
        t.path(),
        &[
            "generate",
            "--subdomain",
            "spaceships",
            "--seed",
            "1",
            "--out",
            "x.jsonl",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_line(&out)["error"], "usage");
    let out = partlex(
        t.path(),
        &["generate", "--subdomain", "houses", "--out", "x.jsonl"],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(error_line(&out)["message"]
        .as_str()
        .unwrap()
        .contains("--seed"));
    let out = partlex(t.path(), &["pipeline", "--out", "run"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!t.path().join("run").exists());
}

#[test]
fn data_errors_exit_3_and_leave_nothing_behind() {
    let t = TempDir::new().unwrap();
    let out = partlex(
        t.path(),
        &[
            "generate",
            "--subdomain",
            "castles",
            "--n",
            "100000",
            "--seed",
            "1",
            "--svg-dir",
            "svg",
            "--out",
            "deep/corpus.jsonl",
        ],
    );
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(error_line(&out)["code"], 3);
    assert_eq!(fs::read_dir(t.path()).unwrap().count(), 0);
    let out = partlex(
        t.path(),
        &["cost", "--corpus", "missing.jsonl", "--out", "cost.csv"],
    );
    assert_eq!(out.status.code(), Some(3));
    fs::write(t.path().join("bad.jsonl"), "{\"id\": 1}\n").unwrap();
    let out = partlex(
        t.path(),
        &["cost", "--corpus", "bad.jsonl", "--out", "cost.csv"],
    );
    assert_eq!(out.status.code(), Some(3));
    assert!(!t.path().join("cost.csv").exists());
}

#[test]
fn outputs_never_replace_inputs() {
    let t = fixture();
    let before = read(t.path().join("corpus.jsonl"));
    let out = partlex(
        t.path(),
        &["cost", "--corpus", "corpus.jsonl", "--out", "corpus.jsonl"],
    );
    assert_eq!(out.status.code(), Some(2));
    ok(
        t.path(),
        &["cost", "--corpus", "corpus.jsonl", "--out", "cost.csv"],
    );
    assert_eq!(read(t.path().join("corpus.jsonl")), before);
}

#[test]
fn render_and_rewrite_cover_every_stimulus() {
    let t = fixture();
    let d = t.path();
    ok(d, &["render", "--corpus", "corpus.jsonl", "--out", "svg"]);
    let n_svg: usize = ["vehicles", "gadgets"]
        .iter()
        .map(|s| fs::read_dir(d.join("svg").join(s)).unwrap().count())
        .sum();
    assert_eq!(n_svg, 60);
    let m: serde_json::Value = serde_json::from_str(&read(d.join("svg/manifest.json"))).unwrap();
    assert_eq!(m["outputs"].as_object().unwrap().len(), 60);

    ok(
        d,
        &[
            "rewrite",
            "--corpus",
            "corpus.jsonl",
            "--level",
            "3",
            "--out",
            "l3.jsonl",
        ],
    );
    let rows: Vec<serde_json::Value> = read(d.join("l3.jsonl"))
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(rows.len(), 60);
    assert!(rows
        .iter()
        .all(|r| r["level"] == 3 && r["tokens"].as_array().unwrap().len() == 1));
}

#[test]
fn cost_align_and_stats_reports() {
    let t = fixture();
    let d = t.path();
    ok(
        d,
        &["cost", "--corpus", "corpus.jsonl", "--out", "cost.csv"],
    );
    let cost = read(d.join("cost.csv"));
    assert_eq!(cost.lines().count(), 1 + 2 * 4);

    ok(
        d,
        &[
            "align",
            "--corpus",
            "corpus.jsonl",
            "--descriptions",
            "desc.jsonl",
            "--level",
            "2",
            "--batch",
            "5",
            "--seed",
            "1",
            "--out",
            "cv.csv",
        ],
    );
    let cv = read(d.join("cv.csv"));
    assert_eq!(
        cv.lines()
            .filter(|l| l.starts_with("vehicles,2,") && !l.contains(",all,"))
            .count(),
        6
    );
    assert_eq!(cv.lines().filter(|l| l.contains(",all,")).count(), 2);

    ok(
        d,
        &[
            "stats",
            "pmi",
            "--corpus",
            "corpus.jsonl",
            "--descriptions",
            "desc.jsonl",
            "--out",
            "pmi.csv",
            "--top-out",
            "top.csv",
        ],
    );
    assert!(read(d.join("pmi.csv")).starts_with("word,subdomain,count,pmi\n"));
    assert!(read(d.join("top.csv")).lines().count() > 1);
    ok(
        d,
        &[
            "stats",
            "jsd",
            "--corpus",
            "corpus.jsonl",
            "--descriptions",
            "desc.jsonl",
            "--n-perm",
            "200",
            "--seed",
            "1",
            "--out",
            "jsd.csv",
        ],
    );
    let jsd = read(d.join("jsd.csv"));
    assert!(jsd.lines().nth(1).unwrap().starts_with("drawings,"));
    ok(
        d,
        &[
            "stats",
            "anova",
            "--corpus",
            "corpus.jsonl",
            "--n-perm",
            "200",
            "--seed",
            "1",
            "--out",
            "anova.csv",
        ],
    );
    assert_eq!(read(d.join("anova.csv")).lines().count(), 3);
    ok(
        d,
        &[
            "stats",
            "regress",
            "--corpus",
            "corpus.jsonl",
            "--descriptions",
            "desc.jsonl",
            "--out",
            "reg.csv",
        ],
    );
    assert!(read(d.join("reg.csv")).contains("drawings,nested,f_quadratic,"));
    for f in [
        "cost.csv",
        "cv.csv",
        "pmi.csv",
        "jsd.csv",
        "anova.csv",
        "reg.csv",
    ] {
        assert!(d.join(format!("{f}.manifest.json")).exists(), "{f}");
    }
}

fn tree(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in fs::read_dir(&dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((
                    p.strip_prefix(root).unwrap().display().to_string(),
                    fs::read(&p).unwrap(),
                ));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn pipeline_is_reproducible_across_thread_counts_and_config_files() {
    let t = TempDir::new().unwrap();
    let d = t.path();
    let common = [
        "--subdomain",
        "nuts",
        "--subdomain",
        "furniture",
        "--n",
        "20",
        "--n-perm",
        "200",
        "--svg",
    ];
    let mut a = vec!["--threads", "1", "pipeline", "--seed", "5", "--out", "a"];
    a.extend(common);
    ok(d, &a);
    let mut b = vec!["--threads", "3", "pipeline", "--seed", "5", "--out", "b"];
    b.extend(common);
    ok(d, &b);
    let ta = tree(&d.join("a"));
    assert_eq!(ta, tree(&d.join("b")));
    assert!(ta.iter().any(|(p, _)| p.ends_with(".svg")));
    for f in [
        "corpus.jsonl",
        "cost.csv",
        "descriptions.jsonl",
        "crossval.csv",
        "pmi.csv",
        "jsd.csv",
        "anova.csv",
        "regress.csv",
        "manifest.json",
    ] {
        assert!(ta.iter().any(|(p, _)| p == f), "{f}");
    }

    // the recorded config reproduces the run
    let manifest: serde_json::Value =
        serde_json::from_slice(&fs::read(d.join("a/manifest.json")).unwrap()).unwrap();
    fs::write(d.join("cfg.json"), manifest["config"].to_string()).unwrap();
    ok(d, &["pipeline", "--config", "cfg.json", "--out", "c"]);
    let tc = tree(&d.join("c"));
    let strip = |t: &[(String, Vec<u8>)]| {
        t.iter()
            .filter(|(p, _)| p != "manifest.json")
            .cloned()
            .collect::<Vec<_>>()
    };
    assert_eq!(strip(&ta), strip(&tc));
}
