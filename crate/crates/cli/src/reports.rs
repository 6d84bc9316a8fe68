//! Report builders shared by the single commands and `pipeline`.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;

use partlex::alignment::{
    cross_validate, synth_descriptions, CrossValConfig, SynthConfig, CROSSVAL_HEADER,
};
use partlex::domain::{Domain, Subdomain, LEVELS};
use partlex::library::{build_library, combined_cost, cost_csv};
use partlex::program::program_length;
use partlex::stimgen::{generate_stimuli, StimulusCorpus, SubdomainSpec};
use partlex::textstats::{
    anova_permutation, length_regression, permutation_test_jsd, pmi_table, DescriptionCorpus,
};
use rayon::prelude::*;

use crate::error::CliError;

pub fn generate(subdomains: &[Subdomain], n: usize, seed: u64) -> Result<StimulusCorpus, CliError> {
    let parts = subdomains
        .par_iter()
        .map(|&sub| generate_stimuli(&SubdomainSpec::builtin(sub), n, seed))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(StimulusCorpus {
        stimuli: parts.into_iter().flat_map(|c| c.stimuli).collect(),
    })
}

/// Splits a corpus by subdomain, keeping file order inside each part.
pub fn split(corpus: &StimulusCorpus) -> BTreeMap<Subdomain, StimulusCorpus> {
    let mut out: BTreeMap<Subdomain, StimulusCorpus> = BTreeMap::new();
    for s in &corpus.stimuli {
        out.entry(s.subdomain).or_default().stimuli.push(s.clone());
    }
    out
}

/// Subdomain of every description's stimulus; unknown ids are an error.
pub fn label_descriptions(
    corpus: &StimulusCorpus,
    descriptions: &DescriptionCorpus,
) -> Result<Vec<Subdomain>, CliError> {
    let index: HashMap<&str, Subdomain> = corpus
        .stimuli
        .iter()
        .map(|s| (s.id.as_str(), s.subdomain))
        .collect();
    descriptions
        .descriptions
        .iter()
        .map(|d| {
            index.get(d.stimulus_id.as_str()).copied().ok_or_else(|| {
                CliError::Data(format!(
                    "description refers to unknown stimulus {}",
                    d.stimulus_id
                ))
            })
        })
        .collect()
}

fn descriptions_of(corpus: &StimulusCorpus, descriptions: &DescriptionCorpus) -> DescriptionCorpus {
    let ids: HashSet<&str> = corpus.stimuli.iter().map(|s| s.id.as_str()).collect();
    DescriptionCorpus {
        descriptions: descriptions
            .descriptions
            .iter()
            .filter(|d| ids.contains(d.stimulus_id.as_str()))
            .cloned()
            .collect(),
    }
}

pub fn cost_report(corpus: &StimulusCorpus) -> Result<String, CliError> {
    let parts = split(corpus);
    let jobs: Vec<(Subdomain, usize)> =
        parts.keys().flat_map(|&s| LEVELS.map(|k| (s, k))).collect();
    let rows = jobs
        .par_iter()
        .map(|&(sub, k)| {
            let lib = build_library(sub, k)?;
            combined_cost(&lib, parts[&sub].stimuli.iter().map(|s| s.base()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(cost_csv(&rows))
}

/// Synthetic descriptions, generated per subdomain so that noise words are
/// drawn from that subdomain's own vocabulary.
pub fn synth(corpus: &StimulusCorpus, config: SynthConfig) -> Result<DescriptionCorpus, CliError> {
    let mut out = DescriptionCorpus::default();
    for part in split(corpus).values() {
        out.descriptions
            .extend(synth_descriptions(part, config)?.descriptions);
    }
    Ok(out)
}

pub fn align_report(
    corpus: &StimulusCorpus,
    descriptions: &DescriptionCorpus,
    levels: &[usize],
    config: CrossValConfig,
) -> Result<String, CliError> {
    label_descriptions(corpus, descriptions)?;
    let parts = split(corpus);
    let jobs: Vec<(Subdomain, usize)> = parts
        .keys()
        .flat_map(|&s| levels.iter().map(move |&k| (s, k)))
        .collect();
    let reports = jobs
        .par_iter()
        .map(|&(sub, k)| {
            let part = &parts[&sub];
            let lib = build_library(sub, k)?;
            Ok(cross_validate(
                part,
                &descriptions_of(part, descriptions),
                &lib,
                config,
            )?)
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let mut out = String::from(CROSSVAL_HEADER);
    for r in &reports {
        r.to_csv_rows(&mut out);
    }
    Ok(out)
}

/// Description words per subdomain, grouped by domain.
type ByDomain = BTreeMap<Domain, Vec<(Subdomain, Vec<String>)>>;

fn words_by_domain(
    corpus: &StimulusCorpus,
    descriptions: &DescriptionCorpus,
) -> Result<ByDomain, CliError> {
    let labels = label_descriptions(corpus, descriptions)?;
    let mut out: ByDomain = BTreeMap::new();
    for (d, sub) in descriptions.descriptions.iter().zip(labels) {
        out.entry(sub.domain())
            .or_default()
            .push((sub, d.what_words()));
    }
    Ok(out)
}

/// Full PMI tables per domain, plus the top-k listing per subdomain.
pub fn pmi_reports(
    corpus: &StimulusCorpus,
    descriptions: &DescriptionCorpus,
    top_k: usize,
    min_count: usize,
) -> Result<(String, String), CliError> {
    let mut table = String::from("word,subdomain,count,pmi\n");
    let mut top = String::from("subdomain,rank,word,count,pmi\n");
    for trials in words_by_domain(corpus, descriptions)?.values() {
        let mut groups: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for (sub, words) in trials {
            groups
                .entry(sub.to_string())
                .or_default()
                .extend(words.iter().cloned());
        }
        if groups.len() < 2 {
            continue;
        }
        let t = pmi_table(&groups)?;
        table.push_str(t.to_csv().split_once('\n').map_or("", |(_, rows)| rows));
        for label in &t.labels {
            let j = t
                .labels
                .iter()
                .position(|l| l == label)
                .expect("label present");
            for (rank, (w, v)) in t.top_k(label, top_k, min_count).into_iter().enumerate() {
                let _ = writeln!(top, "{label},{},{w},{},{v:.6}", rank + 1, t.counts[&w][j]);
            }
        }
    }
    Ok((table, top))
}

pub fn jsd_report(
    corpus: &StimulusCorpus,
    descriptions: &DescriptionCorpus,
    n_perm: usize,
    seed: u64,
) -> Result<String, CliError> {
    let mut out = String::from("domain,jsd,p_value,n_perm,null_mean,null_sd,null_max\n");
    let mut any = false;
    for (domain, trials) in words_by_domain(corpus, descriptions)? {
        let labelled: Vec<(String, Vec<String>)> = trials
            .into_iter()
            .map(|(s, w)| (s.to_string(), w))
            .collect();
        if labelled
            .iter()
            .map(|(l, _)| l)
            .collect::<HashSet<_>>()
            .len()
            < 2
        {
            continue;
        }
        let r = permutation_test_jsd(&labelled, n_perm, seed)?;
        any = true;
        let _ = writeln!(
            out,
            "{domain},{:.9},{:.9},{},{:.9},{:.9},{:.9}",
            r.observed, r.p_value, r.n_perm, r.null_mean, r.null_sd, r.null_max
        );
    }
    if !any {
        return Err(CliError::Data(
            "no domain has descriptions from two or more subdomains".into(),
        ));
    }
    Ok(out)
}

/// Per-subdomain permutation ANOVA of ground-truth program length across levels.
pub fn anova_report(corpus: &StimulusCorpus, n_perm: usize, seed: u64) -> Result<String, CliError> {
    let mut out = String::from("subdomain,f,df_between,df_within,p_value,n_perm\n");
    for (sub, part) in split(corpus) {
        let groups: Vec<Vec<f64>> = LEVELS
            .iter()
            .map(|&k| {
                part.stimuli
                    .iter()
                    .map(|s| program_length(&s.programs[k]) as f64)
                    .collect()
            })
            .collect();
        let r = anova_permutation(&groups, n_perm, seed)?;
        let _ = writeln!(
            out,
            "{sub},{:.9},{},{},{:.9},{}",
            r.f, r.df_between, r.df_within, r.p_value, r.n_perm
        );
    }
    Ok(out)
}

/// Word count against base program length, pooled and per domain.
pub fn regress_report(
    corpus: &StimulusCorpus,
    descriptions: &DescriptionCorpus,
) -> Result<String, CliError> {
    let labels = label_descriptions(corpus, descriptions)?;
    let lengths: HashMap<&str, usize> = corpus
        .stimuli
        .iter()
        .map(|s| (s.id.as_str(), program_length(s.base())))
        .collect();
    let mut scopes: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for (d, sub) in descriptions.descriptions.iter().zip(labels) {
        let p = (
            lengths[d.stimulus_id.as_str()] as f64,
            d.what_words().len() as f64,
        );
        scopes.entry("all".into()).or_default().push(p);
        scopes.entry(sub.domain().to_string()).or_default().push(p);
    }
    let mut out = String::from("scope,model,term,value\n");
    for (scope, points) in &scopes {
        let r = length_regression(points)?;
        for row in r.to_csv().lines().skip(1) {
            let _ = writeln!(out, "{scope},{row}");
        }
    }
    Ok(out)
}
