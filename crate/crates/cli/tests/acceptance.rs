//! End-to-end acceptance run: one PASS/FAIL/SKIP line per criterion.
//!
//! Runs without the libtest harness so the lines always reach stdout.
//! The human-data check reads `PARTLEX_HUMAN_DATA`, a directory holding
//! `stimuli.jsonl` (corpus format) and `descriptions.jsonl`; it is skipped
//! when the variable is unset.

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use partlex::alignment::{
    cross_validate_tokens, fit_ibm1, rewritten_tokens, synth_descriptions, CrossValConfig,
    Ibm1Config, SynthConfig,
};
use partlex::domain::{Domain, Subdomain, LEVELS};
use partlex::library::{build_library, combined_cost};
use partlex::program::{program_length, tokenize};
use partlex::semantics::{evaluate, Rendering};
use partlex::stimgen::{generate_stimuli, StimulusCorpus, SubdomainSpec};
use partlex::textstats::{
    anova_permutation, jsd, permutation_test_jsd, pmi_table, WordDistribution,
};
use partlex::tower::GRID;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 7;
const N: usize = 250;

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

use Outcome::*;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Pass(detail)
    } else {
        Fail(detail)
    }
}

struct Corpora(BTreeMap<Subdomain, StimulusCorpus>);

impl Corpora {
    fn get(&self, sub: Subdomain) -> &StimulusCorpus {
        &self.0[&sub]
    }
}

fn corpus_scale(c: &mut Option<Corpora>) -> Outcome {
    let start = Instant::now();
    let mut all = BTreeMap::new();
    for sub in Subdomain::ALL {
        match generate_stimuli(&SubdomainSpec::builtin(sub), N, SEED) {
            Ok(corpus) => {
                all.insert(sub, corpus);
            }
            Err(e) => return Fail(format!("{sub}: {e}")),
        }
    }
    let elapsed = start.elapsed();
    let mut problems = Vec::new();
    let mut total = 0;
    for (sub, corpus) in &all {
        let ids: HashSet<_> = corpus.stimuli.iter().map(|s| &s.id).collect();
        let pictures: HashSet<_> = corpus.stimuli.iter().map(|s| &s.digest).collect();
        total += ids.len();
        if ids.len() != N || pictures.len() != N {
            problems.push(format!(
                "{sub}: {} ids, {} pictures",
                ids.len(),
                pictures.len()
            ));
        }
        if sub.domain() == Domain::Towers {
            for s in &corpus.stimuli {
                match evaluate(Domain::Towers, s.base()) {
                    Ok(Rendering::Tower(p))
                        if p.iter()
                            .all(|b| b.cells().all(|(x, y)| x < GRID && y < GRID)) => {}
                    _ => problems.push(format!("{sub} {} leaves the grid", s.id)),
                }
            }
        }
    }
    *c = Some(Corpora(all));
    check(
        problems.is_empty() && total == 8 * N && elapsed < Duration::from_secs(60),
        format!(
            "{total} unique stimuli in {:.1}s {}",
            elapsed.as_secs_f64(),
            problems.join("; ")
        ),
    )
}

fn semantic_equivalence(c: &Corpora) -> Outcome {
    let mut failures = 0;
    let mut checked = 0;
    for sub in Subdomain::ALL {
        for &k in &LEVELS {
            let lib = build_library(sub, k).expect("library builds");
            for s in &c.get(sub).stimuli {
                checked += 1;
                let same = lib
                    .rewrite(s.base())
                    .and_then(|r| lib.expand(&r))
                    .ok()
                    .and_then(|e| {
                        let a = evaluate(sub.domain(), s.base()).ok()?;
                        let b = evaluate(sub.domain(), &e).ok()?;
                        Some(a.equivalent(&b))
                    });
                if same != Some(true) {
                    failures += 1;
                }
            }
        }
    }
    check(
        failures == 0,
        format!("{checked} rewrites, {failures} semantic mismatches"),
    )
}

fn ground_truth(c: &Corpora) -> Outcome {
    let mut failures = 0;
    let mut checked = 0;
    for sub in Subdomain::ALL {
        for &k in &LEVELS {
            let lib = build_library(sub, k).expect("library builds");
            for s in &c.get(sub).stimuli {
                checked += 1;
                match lib.rewrite(s.base()) {
                    Ok(r) if tokenize(&r) == tokenize(&s.programs[k]) => {}
                    _ => failures += 1,
                }
            }
        }
    }
    check(
        failures == 0,
        format!("{}/{checked} token sequences match", checked - failures),
    )
}

fn monotonicity(c: &Corpora) -> Outcome {
    let mut problems = Vec::new();
    for sub in Subdomain::ALL {
        let sizes: Vec<usize> = LEVELS
            .iter()
            .map(|&k| build_library(sub, k).unwrap().size())
            .collect();
        let corpus = c.get(sub);
        let means: Vec<f64> = LEVELS
            .iter()
            .map(|&k| {
                corpus
                    .stimuli
                    .iter()
                    .map(|s| program_length(&s.programs[k]))
                    .sum::<usize>() as f64
                    / N as f64
            })
            .collect();
        if !sizes.windows(2).all(|w| w[0] < w[1]) || !means.windows(2).all(|w| w[1] <= w[0]) {
            problems.push(format!("{sub}: sizes {sizes:?} means {means:?}"));
        }
    }
    check(
        problems.is_empty(),
        format!("8/8 subdomains monotone {}", problems.join("; ")),
    )
}

fn cost_shape(c: &Corpora) -> Outcome {
    let mut interior = 0;
    let mut worst_p: f64 = 0.0;
    let mut minima = Vec::new();
    for sub in Subdomain::ALL {
        let corpus = c.get(sub);
        let costs: Vec<f64> = LEVELS
            .iter()
            .map(|&k| {
                combined_cost(
                    &build_library(sub, k).unwrap(),
                    corpus.stimuli.iter().map(|s| s.base()),
                )
                .unwrap()
                .cost
            })
            .collect();
        let best = (0..4)
            .min_by(|&a, &b| costs[a].total_cmp(&costs[b]))
            .unwrap();
        minima.push(format!("{sub}=L{best}"));
        if best == 1 || best == 2 {
            interior += 1;
        }
        let groups: Vec<Vec<f64>> = LEVELS
            .iter()
            .map(|&k| {
                corpus
                    .stimuli
                    .iter()
                    .map(|s| program_length(&s.programs[k]) as f64)
                    .collect()
            })
            .collect();
        worst_p = worst_p.max(anova_permutation(&groups, 1000, SEED).unwrap().p_value);
    }
    check(
        interior >= 6 && worst_p < 0.005,
        format!(
            "minimum at L1/L2 in {interior}/8 ({}); largest ANOVA p = {worst_p:.4}",
            minima.join(" ")
        ),
    )
}

fn em_correctness(c: &Corpora) -> Outcome {
    let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
    let toy = vec![
        (s(&["A"]), s(&["x"])),
        (s(&["B"]), s(&["y"])),
        (s(&["A", "B"]), s(&["x", "y"])),
    ];
    let t = match fit_ibm1(&toy, Ibm1Config::default()) {
        Ok(t) => t,
        Err(e) => return Fail(format!("toy fit: {e}")),
    };
    let toy_ok = t.prob("x", "A") > 0.99 && t.prob("y", "B") > 0.99 && t.meta.iterations <= 50;

    // full-corpus fits on every subdomain and level; the fitter itself
    // rejects likelihood drops and unnormalized rows, checked again here
    let mut fits = 0;
    let mut problems = Vec::new();
    for sub in Subdomain::ALL {
        let corpus = c.get(sub);
        let descs = synth_descriptions(
            corpus,
            SynthConfig {
                level: 2,
                noise: 0.2,
                synonyms: 2,
                seed: SEED,
            },
        )
        .unwrap();
        let by = descs.by_stimulus();
        for &k in &LEVELS {
            let tokens = rewritten_tokens(corpus, &build_library(sub, k).unwrap()).unwrap();
            let pairs: Vec<_> = corpus
                .stimuli
                .iter()
                .zip(tokens)
                .map(|(st, t)| {
                    (
                        t,
                        by[st.id.as_str()]
                            .iter()
                            .flat_map(|d| d.what_words())
                            .collect(),
                    )
                })
                .collect();
            for null_token in [false, true] {
                match fit_ibm1(
                    &pairs,
                    Ibm1Config {
                        null_token,
                        ..Default::default()
                    },
                ) {
                    Ok(t) => {
                        fits += 1;
                        let monotone = t
                            .meta
                            .history
                            .windows(2)
                            .all(|w| w[1] >= w[0] - 1e-9 * w[0].abs());
                        let normalized = t
                            .prob
                            .iter()
                            .all(|row| (row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                        if !monotone || !normalized {
                            problems.push(format!("{sub} L{k}"));
                        }
                    }
                    Err(e) => problems.push(format!("{sub} L{k}: {e}")),
                }
            }
        }
    }
    check(
        toy_ok && problems.is_empty(),
        format!(
            "toy P(x|A)={:.4} P(y|B)={:.4} in {} iterations; {fits} corpus fits monotone and normalized {}",
            t.prob("x", "A"),
            t.prob("y", "B"),
            t.meta.iterations,
            problems.join("; ")
        ),
    )
}

fn synthetic_recovery(c: &Corpora) -> Outcome {
    let start = Instant::now();
    let mut wins = 0;
    let mut runs = 0;
    let mut misses = Vec::new();
    for &sub in Domain::Drawings.subdomains() {
        let corpus = c.get(sub);
        let tokens: Vec<Vec<Vec<String>>> = LEVELS
            .iter()
            .map(|&k| rewritten_tokens(corpus, &build_library(sub, k).unwrap()).unwrap())
            .collect();
        for k in [1, 2] {
            for seed in 0..10 {
                let descs = synth_descriptions(
                    corpus,
                    SynthConfig {
                        level: k,
                        noise: 0.2,
                        synonyms: 2,
                        seed,
                    },
                )
                .unwrap();
                let cfg = CrossValConfig {
                    seed,
                    ..Default::default()
                };
                let scores: Vec<f64> = LEVELS
                    .iter()
                    .map(|&l| {
                        cross_validate_tokens(corpus, &tokens[l], &descs, sub, l, cfg)
                            .unwrap()
                            .overall
                    })
                    .collect();
                let best = (0..4)
                    .max_by(|&a, &b| scores[a].total_cmp(&scores[b]))
                    .unwrap();
                runs += 1;
                if best == k {
                    wins += 1;
                } else {
                    misses.push(format!("{sub} k={k} seed={seed} -> L{best}"));
                }
            }
        }
    }
    let elapsed = start.elapsed();
    check(
        wins == runs && elapsed < Duration::from_secs(600),
        format!(
            "{wins}/{runs} runs peak at the emitting level in {:.0}s {}",
            elapsed.as_secs_f64(),
            misses.join("; ")
        ),
    )
}

fn calibration() -> Outcome {
    let vocab: Vec<String> = (0..8).map(|i| format!("w{i}")).collect();
    let weights = [8, 6, 5, 4, 3, 2, 1, 1];
    let total: u32 = weights.iter().sum();
    let draw = |rng: &mut ChaCha8Rng| {
        let mut r = rng.gen_range(0..total);
        for (w, &p) in vocab.iter().zip(&weights) {
            if r < p {
                return w.clone();
            }
            r -= p;
        }
        unreachable!()
    };
    let runs = 200;
    let mut jsd_above = 0;
    let mut anova_above = 0;
    for seed in 0..runs {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let trials: Vec<(String, Vec<String>)> = (0..60)
            .map(|_| {
                let label = ["a", "b", "c"][rng.gen_range(0..3)].to_string();
                (label, (0..5).map(|_| draw(&mut rng)).collect())
            })
            .collect();
        if permutation_test_jsd(&trials, 500, seed).unwrap().p_value > 0.05 {
            jsd_above += 1;
        }
        let groups: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..15).map(|_| rng.gen_range(0.0..1.0)).collect())
            .collect();
        if anova_permutation(&groups, 500, seed).unwrap().p_value > 0.05 {
            anova_above += 1;
        }
    }
    let frac = |n: u32| n as f64 / runs as f64;
    let in_band = |n: u32| (0.93..=0.97).contains(&frac(n));

    let p = WordDistribution::from_words("p", &["a".to_string(), "b".to_string(), "b".to_string()]);
    let self_distance = jsd(&p, &p).unwrap();
    let mut groups = BTreeMap::new();
    for d in ["a", "b", "c", "d"] {
        let mut words = vec!["shared".to_string(); 4];
        if d == "c" {
            words[0] = "only".to_string();
        }
        groups.insert(d.to_string(), words);
    }
    let pmi = pmi_table(&groups).unwrap().pmi["only"][2];
    check(
        in_band(jsd_above) && in_band(anova_above) && self_distance.abs() < 1e-12 && (pmi - 4f64.ln()).abs() < 1e-9,
        format!(
            "null p > 0.05 in {:.1}% (JSD) and {:.1}% (ANOVA) of {runs} runs; self JSD {self_distance:e}; exclusive PMI {pmi:.9}",
            100.0 * frac(jsd_above),
            100.0 * frac(anova_above)
        ),
    )
}

fn partlex_bin() -> &'static str {
    env!("CARGO_BIN_EXE_partlex")
}

fn run_cli(args: &[&str]) -> Result<(), String> {
    let out = Command::new(partlex_bin())
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(String::from_utf8_lossy(&out.stderr).trim().to_string())
    }
}

fn human_data() -> Outcome {
    let Some(dir) = std::env::var_os("PARTLEX_HUMAN_DATA").map(PathBuf::from) else {
        return Skip("PARTLEX_HUMAN_DATA not set".into());
    };
    let (stimuli, descs) = (dir.join("stimuli.jsonl"), dir.join("descriptions.jsonl"));
    if !stimuli.exists() || !descs.exists() {
        return Skip(format!(
            "{} lacks stimuli.jsonl or descriptions.jsonl",
            dir.display()
        ));
    }
    let tmp = tempfile::TempDir::new().unwrap();
    let (jsd_csv, cv_csv) = (tmp.path().join("jsd.csv"), tmp.path().join("cv.csv"));
    let s = |p: &Path| p.to_str().unwrap().to_string();
    let jsd_args = [
        "stats",
        "jsd",
        "--corpus",
        &s(&stimuli),
        "--descriptions",
        &s(&descs),
        "--seed",
        "7",
        "--out",
        &s(&jsd_csv),
    ];
    let cv_args = [
        "align",
        "--corpus",
        &s(&stimuli),
        "--descriptions",
        &s(&descs),
        "--seed",
        "7",
        "--out",
        &s(&cv_csv),
    ];
    if let Err(e) = run_cli(&jsd_args).and_then(|_| run_cli(&cv_args)) {
        return Fail(e);
    }
    let mut detail = Vec::new();
    let mut ok = true;
    for line in std::fs::read_to_string(&jsd_csv).unwrap().lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let d: f64 = f[1].parse().unwrap();
        let want = if f[0] == "drawings" { 0.439 } else { 0.328 };
        ok &= (d - want).abs() <= 0.02;
        detail.push(format!("{} d={d:.3}", f[0]));
    }
    let mut overall: BTreeMap<String, Vec<(usize, f64)>> = BTreeMap::new();
    for line in std::fs::read_to_string(&cv_csv).unwrap().lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        if f[2] == "all" {
            overall
                .entry(f[0].into())
                .or_default()
                .push((f[1].parse().unwrap(), f[3].parse().unwrap()));
        }
    }
    for (sub, scores) in &overall {
        let best = scores.iter().max_by(|a, b| a.1.total_cmp(&b.1)).unwrap().0;
        ok &= best == 1 || best == 2;
        detail.push(format!("{sub} peak L{best}"));
    }
    check(ok, detail.join(", "))
}

fn tree(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in std::fs::read_dir(&dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((
                    p.strip_prefix(root).unwrap().display().to_string(),
                    std::fs::read(&p).unwrap(),
                ));
            }
        }
    }
    out.sort();
    out
}

fn determinism() -> Outcome {
    let tmp = tempfile::TempDir::new().unwrap();
    let dirs: Vec<PathBuf> = ["one", "four"].iter().map(|d| tmp.path().join(d)).collect();
    for (threads, dir) in ["1", "4"].iter().zip(&dirs) {
        let args = [
            "--threads",
            threads,
            "pipeline",
            "--all-subdomains",
            "--seed",
            "7",
            "--out",
            dir.to_str().unwrap(),
        ];
        if let Err(e) = run_cli(&args) {
            return Fail(e);
        }
    }
    let (a, b) = (tree(&dirs[0]), tree(&dirs[1]));
    check(
        !a.is_empty() && a == b,
        format!(
            "pipeline on 1 and 4 threads: {} files, identical = {}",
            a.len(),
            a == b
        ),
    )
}

fn report(n: u8, name: &str, outcome: Outcome) -> bool {
    let (tag, detail) = match &outcome {
        Pass(d) => ("PASS", d),
        Fail(d) => ("FAIL", d),
        Skip(d) => ("SKIP", d),
    };
    println!("criterion {n:>2} {tag} {name}: {}", detail.trim_end());
    !matches!(outcome, Fail(_))
}

type CorpusCheck = (u8, &'static str, fn(&Corpora) -> Outcome);

fn main() {
    let mut corpora = None;
    let mut ok = report(1, "corpus scale", corpus_scale(&mut corpora));
    let on_corpus: [CorpusCheck; 6] = [
        (2, "semantic equivalence", semantic_equivalence),
        (3, "ground-truth recovery", ground_truth),
        (4, "library monotonicity", monotonicity),
        (5, "cost shape", cost_shape),
        (6, "EM correctness", em_correctness),
        (7, "synthetic recovery", synthetic_recovery),
    ];
    for (n, name, f) in on_corpus {
        let outcome = match &corpora {
            Some(c) => f(c),
            None => Fail("no corpus".into()),
        };
        ok &= report(n, name, outcome);
    }
    ok &= report(8, "statistics calibration", calibration());
    ok &= report(9, "human data", human_data());
    ok &= report(10, "determinism", determinism());
    if !ok {
        println!("acceptance failed");
        std::process::exit(1);
    }
}
