use approx::assert_abs_diff_eq;
use partlex::alignment::{
    cross_validate, cross_validate_tokens, fit_ibm1, map_align, synth_descriptions, token_word,
    AlignError, CrossValConfig, Ibm1Config, SynthConfig, DEFAULT_FLOOR, NULL_TOKEN,
};
use partlex::domain::Subdomain;
use partlex::library::build_library;
use partlex::program::tokenize;
use partlex::stimgen::{generate_stimuli, StimulusCorpus, SubdomainSpec};
use partlex::textstats::{Description, DescriptionCorpus, Step};

fn s(v: &[&str]) -> Vec<String> {
    v.iter().map(|x| x.to_string()).collect()
}

fn toy() -> Vec<(Vec<String>, Vec<String>)> {
    vec![
        (s(&["A"]), s(&["x"])),
        (s(&["B"]), s(&["y"])),
        (s(&["A", "B"]), s(&["x", "y"])),
    ]
}

#[test]
fn toy_corpus_converges_to_the_diagonal() {
    let t = fit_ibm1(&toy(), Ibm1Config::default()).unwrap();
    assert!(t.prob("x", "A") > 0.99);
    assert!(t.prob("y", "B") > 0.99);
    assert!(t.meta.iterations <= 50);
}

/// Three EM iterations by hand. Uniform start gives P = 1/2 everywhere;
/// in the mixed pair each word splits its count evenly, so after one step
/// P(x|A) = (1 + 1/2) / 2 = 3/4. Next step the mixed pair gives x to A with
/// weight 3/4 / (3/4 + 1/4) = 3/4, so P(x|A) = 1.75 / 2 = 7/8, then 15/16.
#[test]
fn toy_corpus_matches_hand_iterations() {
    for (iters, want) in [(1, 0.75), (2, 0.875), (3, 0.9375)] {
        let cfg = Ibm1Config {
            max_iter: iters,
            tol: 0.0,
            null_token: false,
        };
        let t = fit_ibm1(&toy(), cfg).unwrap();
        assert_abs_diff_eq!(t.prob("x", "A"), want, epsilon = 1e-12);
        assert_abs_diff_eq!(t.prob("y", "B"), want, epsilon = 1e-12);
    }
}

#[test]
fn symmetric_pair_gives_each_token_all_its_mass() {
    let t = fit_ibm1(&[(s(&["A", "B"]), s(&["x"]))], Ibm1Config::default()).unwrap();
    assert_abs_diff_eq!(t.prob("x", "A"), 1.0, epsilon = 1e-12);
    assert_abs_diff_eq!(t.prob("x", "B"), 1.0, epsilon = 1e-12);
}

#[test]
fn history_is_monotone_and_rows_normalize() {
    let pairs = vec![
        (s(&["A", "B", "C"]), s(&["x", "y", "z", "x"])),
        (s(&["A", "C"]), s(&["x", "z"])),
        (s(&["B", "B", "C"]), s(&["y", "q", "z"])),
        (s(&["A"]), s(&["x", "x"])),
    ];
    for null_token in [false, true] {
        let t = fit_ibm1(
            &pairs,
            Ibm1Config {
                null_token,
                ..Default::default()
            },
        )
        .unwrap();
        for w in t.meta.history.windows(2) {
            assert!(w[1] >= w[0] - 1e-9 * w[0].abs());
        }
        for row in &t.prob {
            assert_abs_diff_eq!(row.iter().sum::<f64>(), 1.0, epsilon = 1e-9);
        }
        assert_eq!(t.tokens.contains(&NULL_TOKEN.to_string()), null_token);
    }
}

#[test]
fn map_alignment_picks_the_argmax() {
    let pairs = vec![
        (s(&["A"]), s(&["x"])),
        (s(&["B"]), s(&["y"])),
        (s(&["A", "B"]), s(&["x", "y"])),
    ];
    let t = fit_ibm1(&pairs, Ibm1Config::default()).unwrap();
    let rec = map_align(&t, &s(&["A", "B"]), &s(&["x"]));
    assert_eq!(rec.aligned, s(&["A"]));
    assert_abs_diff_eq!(rec.log_probs[0], t.prob("x", "A").ln(), epsilon = 1e-12);

    let rec = map_align(&t, &s(&["A"]), &s(&["x", "y", "x"]));
    assert_eq!(rec.aligned, s(&["A", "A", "A"]));
    let mean = rec.log_probs.iter().sum::<f64>() / 3.0;
    assert_abs_diff_eq!(rec.mean_log_prob, mean, epsilon = 1e-15);
}

#[test]
fn unseen_word_scores_the_floor() {
    let t = fit_ibm1(&toy(), Ibm1Config::default()).unwrap();
    let rec = map_align(&t, &s(&["A", "B"]), &s(&["zebra"]));
    assert_eq!(rec.aligned, s(&["A"]));
    assert_abs_diff_eq!(rec.log_probs[0], DEFAULT_FLOOR.ln(), epsilon = 1e-12);
}

#[test]
fn translation_table_json_lists_words_sorted() {
    let t = fit_ibm1(&toy(), Ibm1Config::default()).unwrap();
    let v = t.to_json();
    let a = v["table"]["A"].as_array().unwrap();
    let words: Vec<&str> = a.iter().map(|e| e[0].as_str().unwrap()).collect();
    let mut sorted = words.clone();
    sorted.sort();
    assert_eq!(words, sorted);
    assert_eq!(v["meta"]["null_token"], false);
}

fn small_corpus(n: usize) -> StimulusCorpus {
    generate_stimuli(&SubdomainSpec::builtin(Subdomain::Vehicles), n, 3).unwrap()
}

#[test]
fn folds_partition_the_corpus() {
    let corpus = small_corpus(10);
    let descs = synth_descriptions(
        &corpus,
        SynthConfig {
            level: 1,
            noise: 0.0,
            synonyms: 1,
            seed: 0,
        },
    )
    .unwrap();
    let lib = build_library(Subdomain::Vehicles, 1).unwrap();
    let report = cross_validate(&corpus, &descs, &lib, CrossValConfig::default()).unwrap();
    assert_eq!(report.folds.len(), 2);
    let mut all: Vec<&String> = report.folds.iter().flatten().collect();
    all.sort();
    all.dedup();
    assert_eq!(all.len(), 10);
    assert!(report.overall <= 0.0);

    let again = cross_validate(&corpus, &descs, &lib, CrossValConfig::default()).unwrap();
    assert_eq!(report, again);

    let odd = cross_validate(
        &corpus,
        &descs,
        &lib,
        CrossValConfig {
            batch: 3,
            ..Default::default()
        },
    )
    .unwrap();
    assert_eq!(
        odd.folds.iter().map(Vec::len).collect::<Vec<_>>(),
        vec![3, 3, 3, 1]
    );
}

#[test]
fn csv_rows_include_pooled_line() {
    let corpus = small_corpus(10);
    let descs = synth_descriptions(
        &corpus,
        SynthConfig {
            level: 2,
            noise: 0.0,
            synonyms: 1,
            seed: 0,
        },
    )
    .unwrap();
    let lib = build_library(Subdomain::Vehicles, 2).unwrap();
    let report = cross_validate(&corpus, &descs, &lib, CrossValConfig::default()).unwrap();
    let mut out = String::new();
    report.to_csv_rows(&mut out);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("vehicles,2,0,"));
    assert!(lines[2].starts_with("vehicles,2,all,"));
}

#[test]
fn cross_validation_errors() {
    let corpus = small_corpus(10);
    let lib = build_library(Subdomain::Vehicles, 0).unwrap();
    let descs = synth_descriptions(
        &corpus,
        SynthConfig {
            level: 0,
            noise: 0.0,
            synonyms: 1,
            seed: 0,
        },
    )
    .unwrap();
    let bad = cross_validate(
        &corpus,
        &descs,
        &lib,
        CrossValConfig {
            batch: 0,
            ..Default::default()
        },
    );
    assert_eq!(bad.unwrap_err(), AlignError::BadBatch);

    let mut partial = descs.clone();
    partial.descriptions.pop();
    let missing = cross_validate(&corpus, &partial, &lib, CrossValConfig::default());
    assert!(matches!(missing, Err(AlignError::Undescribed(_))));

    let mut stray = descs.clone();
    stray.descriptions.push(Description {
        stimulus_id: "nope".into(),
        participant_id: "p".into(),
        steps: vec![Step {
            what: "box".into(),
            where_: String::new(),
        }],
    });
    let unknown = cross_validate(&corpus, &stray, &lib, CrossValConfig::default());
    assert_eq!(
        unknown.unwrap_err(),
        AlignError::UnknownStimulus("nope".into())
    );
}

#[test]
fn identity_channel_renames_tokens() {
    let corpus = small_corpus(6);
    let descs = synth_descriptions(
        &corpus,
        SynthConfig {
            level: 2,
            noise: 0.0,
            synonyms: 1,
            seed: 9,
        },
    )
    .unwrap();
    for (stim, d) in corpus.stimuli.iter().zip(&descs.descriptions) {
        let words: Vec<String> = tokenize(&stim.programs[2])
            .0
            .iter()
            .map(|t| token_word(t))
            .collect();
        let what: Vec<String> = d.steps.iter().map(|s| s.what.clone()).collect();
        assert_eq!(what, words);
        assert_eq!(d.stimulus_id, stim.id);
    }
}

#[test]
fn synonyms_and_noise_are_seeded() {
    let corpus = small_corpus(6);
    let cfg = SynthConfig {
        level: 1,
        noise: 0.3,
        synonyms: 3,
        seed: 4,
    };
    let a = synth_descriptions(&corpus, cfg).unwrap();
    let b = synth_descriptions(&corpus, cfg).unwrap();
    assert_eq!(a, b);
    let c = synth_descriptions(&corpus, SynthConfig { seed: 5, ..cfg }).unwrap();
    assert_ne!(a, c);
    assert!(a
        .descriptions
        .iter()
        .flat_map(|d| &d.steps)
        .any(|s| s.what.ends_with("v2")));
}

#[test]
fn synth_rejects_bad_settings() {
    let corpus = small_corpus(2);
    let base = SynthConfig {
        level: 1,
        noise: 0.0,
        synonyms: 1,
        seed: 0,
    };
    assert_eq!(
        synth_descriptions(&corpus, SynthConfig { noise: 1.0, ..base }).unwrap_err(),
        AlignError::BadNoise(1.0)
    );
    assert_eq!(
        synth_descriptions(
            &corpus,
            SynthConfig {
                synonyms: 0,
                ..base
            }
        )
        .unwrap_err(),
        AlignError::BadSynonyms
    );
    assert_eq!(
        synth_descriptions(&corpus, SynthConfig { level: 4, ..base }).unwrap_err(),
        AlignError::BadLevel(4)
    );
}

/// When token counts are not collinear across programs every word is
/// recovered exactly, so the held-out metric approaches zero.
#[test]
fn noiseless_separable_corpus_scores_near_zero() {
    let kinds = ["A", "B", "C", "D"];
    let names = ["alpha", "beta", "gamma", "delta"];
    let mut tokens = Vec::new();
    let mut descriptions = Vec::new();
    let corpus = small_corpus(40);
    for (i, stim) in corpus.stimuli.iter().enumerate() {
        let picks: Vec<usize> = (0..1 + i % 3).map(|j| (i * 7 + j * 3) % 4).collect();
        let seq: Vec<String> = picks.iter().map(|&k| kinds[k].to_string()).collect();
        descriptions.push(Description {
            stimulus_id: stim.id.clone(),
            participant_id: "p".into(),
            steps: picks
                .iter()
                .map(|&k| Step {
                    what: names[k].into(),
                    where_: String::new(),
                })
                .collect(),
        });
        tokens.push(seq);
    }
    let descs = DescriptionCorpus { descriptions };
    let cfg = CrossValConfig {
        em: Ibm1Config {
            max_iter: 200,
            ..Default::default()
        },
        ..Default::default()
    };
    let report =
        cross_validate_tokens(&corpus, &tokens, &descs, Subdomain::Vehicles, 1, cfg).unwrap();
    assert!(report.overall > -0.01, "{}", report.overall);
}
