//! IBM Model 1 between program tokens and description words.
//!
//! The model is fitted by EM from a uniform start. Each iteration's corpus
//! log-likelihood `sum over pairs and words of ln((1/|tokens|) * sum_t P(w|t))`
//! is checked to be non-decreasing and every token's distribution to sum to
//! one. Scoring uses per-word MAP alignments, flooring probabilities at
//! [`DEFAULT_FLOOR`] so unseen words stay finite.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::Subdomain;
use crate::library::{ConceptLibrary, LibraryError};
use crate::program::tokenize;
use crate::stimgen::StimulusCorpus;
use crate::textstats::{Description, DescriptionCorpus, Step};

pub const DEFAULT_MAX_ITER: usize = 50;
pub const DEFAULT_TOL: f64 = 1e-6;
pub const DEFAULT_FLOOR: f64 = 1e-7;
pub const DEFAULT_BATCH: usize = 5;
pub const NULL_TOKEN: &str = "<null>";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AlignError {
    #[error("empty training corpus")]
    EmptyCorpus,
    #[error("pair {0} has an empty token or word list")]
    EmptySequence(usize),
    #[error("log-likelihood decreased from {before} to {after} at iteration {iteration}")]
    NotMonotone {
        iteration: usize,
        before: f64,
        after: f64,
    },
    #[error("distribution of token `{token}` sums to {sum}")]
    NotNormalized { token: String, sum: f64 },
    #[error("stimulus {0} has no description")]
    Undescribed(String),
    #[error("description refers to unknown stimulus {0}")]
    UnknownStimulus(String),
    #[error("batch size must be at least 1")]
    BadBatch,
    #[error("noise must lie in [0, 1), got {0}")]
    BadNoise(f64),
    #[error("synonym count must be at least 1")]
    BadSynonyms,
    #[error("level {0} is outside 0..=3")]
    BadLevel(usize),
    #[error(transparent)]
    Library(#[from] LibraryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ibm1Config {
    pub max_iter: usize,
    pub tol: f64,
    /// Adds a NULL source token to every pair.
    pub null_token: bool,
}

impl Default for Ibm1Config {
    fn default() -> Self {
        Ibm1Config {
            max_iter: DEFAULT_MAX_ITER,
            tol: DEFAULT_TOL,
            null_token: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitMeta {
    pub iterations: usize,
    pub log_likelihood: f64,
    /// Log-likelihood before the first update and after every update.
    pub history: Vec<f64>,
    pub converged: bool,
    pub null_token: bool,
}

/// P(word | token) for every seen token, over the seen word vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct TranslationTable {
    pub tokens: Vec<String>,
    pub words: Vec<String>,
    /// `prob[t][w]`
    pub prob: Vec<Vec<f64>>,
    pub meta: FitMeta,
    token_index: HashMap<String, usize>,
    word_index: HashMap<String, usize>,
}

fn index_of(vocab: &mut Vec<String>, map: &mut HashMap<String, usize>, s: &str) -> usize {
    if let Some(&i) = map.get(s) {
        return i;
    }
    map.insert(s.to_string(), vocab.len());
    vocab.push(s.to_string());
    vocab.len() - 1
}

struct Encoded {
    tokens: Vec<Vec<usize>>,
    words: Vec<Vec<usize>>,
}

/// One EM pass: returns the log-likelihood under `prob` and fills `counts`.
fn e_step(data: &Encoded, prob: &[Vec<f64>], counts: &mut [Vec<f64>]) -> f64 {
    for row in counts.iter_mut() {
        row.iter_mut().for_each(|c| *c = 0.0);
    }
    let mut ll = 0.0;
    for (ts, ws) in data.tokens.iter().zip(&data.words) {
        let inv = 1.0 / ts.len() as f64;
        for &w in ws {
            let denom: f64 = ts.iter().map(|&t| prob[t][w]).sum();
            ll += (denom * inv).ln();
            for &t in ts {
                counts[t][w] += prob[t][w] / denom;
            }
        }
    }
    ll
}

/// Fits IBM Model 1 to `(tokens, words)` pairs.
pub fn fit_ibm1(
    pairs: &[(Vec<String>, Vec<String>)],
    config: Ibm1Config,
) -> Result<TranslationTable, AlignError> {
    if pairs.is_empty() {
        return Err(AlignError::EmptyCorpus);
    }
    let (mut tokens, mut words) = (Vec::new(), Vec::new());
    let (mut token_index, mut word_index) = (HashMap::new(), HashMap::new());
    if config.null_token {
        index_of(&mut tokens, &mut token_index, NULL_TOKEN);
    }
    let mut data = Encoded {
        tokens: Vec::with_capacity(pairs.len()),
        words: Vec::with_capacity(pairs.len()),
    };
    for (i, (ts, ws)) in pairs.iter().enumerate() {
        if ts.is_empty() || ws.is_empty() {
            return Err(AlignError::EmptySequence(i));
        }
        let mut enc: Vec<usize> = ts
            .iter()
            .map(|t| index_of(&mut tokens, &mut token_index, t))
            .collect();
        if config.null_token {
            enc.push(0);
        }
        data.tokens.push(enc);
        data.words.push(
            ws.iter()
                .map(|w| index_of(&mut words, &mut word_index, w))
                .collect(),
        );
    }
    let (nt, nw) = (tokens.len(), words.len());
    let mut prob = vec![vec![1.0 / nw as f64; nw]; nt];
    let mut counts = vec![vec![0.0; nw]; nt];
    let mut ll = e_step(&data, &prob, &mut counts);
    let mut history = vec![ll];
    let mut converged = false;
    let mut iterations = 0;
    for it in 1..=config.max_iter {
        for (p_row, c_row) in prob.iter_mut().zip(&counts) {
            let total: f64 = c_row.iter().sum();
            if total > 0.0 {
                p_row
                    .iter_mut()
                    .zip(c_row)
                    .for_each(|(p, c)| *p = c / total);
            }
        }
        for (t, row) in prob.iter().enumerate() {
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(AlignError::NotNormalized {
                    token: tokens[t].clone(),
                    sum,
                });
            }
        }
        let next = e_step(&data, &prob, &mut counts);
        iterations = it;
        history.push(next);
        if next < ll - 1e-9 * ll.abs().max(1.0) {
            return Err(AlignError::NotMonotone {
                iteration: it,
                before: ll,
                after: next,
            });
        }
        let gain = next - ll;
        ll = next;
        if gain < config.tol {
            converged = true;
            break;
        }
    }
    Ok(TranslationTable {
        tokens,
        words,
        prob,
        meta: FitMeta {
            iterations,
            log_likelihood: ll,
            history,
            converged,
            null_token: config.null_token,
        },
        token_index,
        word_index,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentRecord {
    pub stimulus_id: String,
    pub words: Vec<String>,
    /// MAP token per word.
    pub aligned: Vec<String>,
    pub log_probs: Vec<f64>,
    pub mean_log_prob: f64,
}

impl TranslationTable {
    /// Raw P(word | token); zero when either is unseen.
    pub fn prob(&self, word: &str, token: &str) -> f64 {
        match (self.word_index.get(word), self.token_index.get(token)) {
            (Some(&w), Some(&t)) => self.prob[t][w],
            _ => 0.0,
        }
    }

    /// Per-word argmax token (first in sequence order on ties) with floored
    /// probabilities.
    pub fn map_align(&self, tokens: &[String], words: &[String], floor: f64) -> AlignmentRecord {
        let mut candidates: Vec<(&str, Option<usize>)> = tokens
            .iter()
            .map(|t| (t.as_str(), self.token_index.get(t).copied()))
            .collect();
        if self.meta.null_token {
            candidates.push((NULL_TOKEN, Some(0)));
        }
        let mut aligned = Vec::with_capacity(words.len());
        let mut log_probs = Vec::with_capacity(words.len());
        for w in words {
            let wi = self.word_index.get(w).copied();
            let mut best = (candidates[0].0, f64::NEG_INFINITY);
            for &(name, ti) in &candidates {
                let p = match (ti, wi) {
                    (Some(t), Some(w)) => self.prob[t][w],
                    _ => 0.0,
                }
                .max(floor);
                if p > best.1 {
                    best = (name, p);
                }
            }
            aligned.push(best.0.to_string());
            log_probs.push(best.1.ln());
        }
        let mean = log_probs.iter().sum::<f64>() / log_probs.len().max(1) as f64;
        AlignmentRecord {
            stimulus_id: String::new(),
            words: words.to_vec(),
            aligned,
            log_probs,
            mean_log_prob: mean,
        }
    }

    /// JSON object: token -> list of `[word, probability]` sorted by word.
    pub fn to_json(&self) -> serde_json::Value {
        let mut table = BTreeMap::new();
        for (t, row) in self.tokens.iter().zip(&self.prob) {
            let mut entries: Vec<(&String, f64)> = self
                .words
                .iter()
                .zip(row.iter().copied())
                .filter(|(_, p)| *p > 0.0)
                .collect();
            entries.sort_by(|a, b| a.0.cmp(b.0));
            table.insert(t.clone(), entries);
        }
        serde_json::json!({
            "table": table,
            "meta": self.meta,
        })
    }
}

/// Map-align using the default floor.
pub fn map_align(table: &TranslationTable, tokens: &[String], words: &[String]) -> AlignmentRecord {
    table.map_align(tokens, words, DEFAULT_FLOOR)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossValConfig {
    pub batch: usize,
    pub seed: u64,
    pub floor: f64,
    pub em: Ibm1Config,
}

impl Default for CrossValConfig {
    fn default() -> Self {
        CrossValConfig {
            batch: DEFAULT_BATCH,
            seed: 0,
            floor: DEFAULT_FLOOR,
            em: Ibm1Config::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossValReport {
    pub subdomain: Subdomain,
    pub level: usize,
    /// Stimulus ids held out by each fold.
    pub folds: Vec<Vec<String>>,
    pub fold_means: Vec<f64>,
    pub fold_words: Vec<usize>,
    /// Mean over all held-out words, pooled across folds.
    pub overall: f64,
}

impl CrossValReport {
    /// CSV rows `subdomain,level,fold,mean_loglik`; fold `all` is pooled.
    pub fn to_csv_rows(&self, out: &mut String) {
        for (i, m) in self.fold_means.iter().enumerate() {
            let _ = writeln!(out, "{},{},{},{:.9}", self.subdomain, self.level, i, m);
        }
        let _ = writeln!(
            out,
            "{},{},all,{:.9}",
            self.subdomain, self.level, self.overall
        );
    }
}

pub const CROSSVAL_HEADER: &str = "subdomain,level,fold,mean_loglik\n";

/// Token sequences of every stimulus after rewriting into `library`.
pub fn rewritten_tokens(
    corpus: &StimulusCorpus,
    library: &ConceptLibrary,
) -> Result<Vec<Vec<String>>, AlignError> {
    corpus
        .stimuli
        .iter()
        .map(|s| Ok(tokenize(&library.rewrite(s.base())?).0))
        .collect()
}

/// Cross-validated mean per-word MAP log-likelihood of `descriptions` given
/// the corpus programs rewritten into `library`.
pub fn cross_validate(
    corpus: &StimulusCorpus,
    descriptions: &DescriptionCorpus,
    library: &ConceptLibrary,
    config: CrossValConfig,
) -> Result<CrossValReport, AlignError> {
    let tokens = rewritten_tokens(corpus, library)?;
    cross_validate_tokens(
        corpus,
        &tokens,
        descriptions,
        library.subdomain,
        library.level,
        config,
    )
}

/// As [`cross_validate`] with token sequences supplied by the caller, in
/// corpus order.
pub fn cross_validate_tokens(
    corpus: &StimulusCorpus,
    tokens: &[Vec<String>],
    descriptions: &DescriptionCorpus,
    subdomain: Subdomain,
    level: usize,
    config: CrossValConfig,
) -> Result<CrossValReport, AlignError> {
    if config.batch == 0 {
        return Err(AlignError::BadBatch);
    }
    let index: HashMap<&str, usize> = corpus
        .stimuli
        .iter()
        .enumerate()
        .map(|(i, s)| (s.id.as_str(), i))
        .collect();
    let mut words_of: Vec<Vec<Vec<String>>> = vec![Vec::new(); corpus.len()];
    for d in &descriptions.descriptions {
        let &i = index
            .get(d.stimulus_id.as_str())
            .ok_or_else(|| AlignError::UnknownStimulus(d.stimulus_id.clone()))?;
        let w = d.what_words();
        if !w.is_empty() {
            words_of[i].push(w);
        }
    }
    if let Some(i) = words_of.iter().position(Vec::is_empty) {
        return Err(AlignError::Undescribed(corpus.stimuli[i].id.clone()));
    }
    let mut order: Vec<usize> = (0..corpus.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(config.seed));
    let folds: Vec<&[usize]> = order.chunks(config.batch).collect();

    // folds share nothing, so they are scored in parallel and summed in order
    let scored: Vec<(f64, usize)> = folds
        .par_iter()
        .map(|fold| {
            let mut held = vec![false; corpus.len()];
            fold.iter().for_each(|&i| held[i] = true);
            let train: Vec<(Vec<String>, Vec<String>)> = (0..corpus.len())
                .filter(|&i| !held[i])
                .flat_map(|i| {
                    words_of[i]
                        .iter()
                        .map(move |w| (tokens[i].clone(), w.clone()))
                })
                .collect();
            let table = fit_ibm1(&train, config.em)?;
            let (mut sum, mut n) = (0.0, 0usize);
            for &i in *fold {
                for w in &words_of[i] {
                    let rec = table.map_align(&tokens[i], w, config.floor);
                    sum += rec.log_probs.iter().sum::<f64>();
                    n += rec.log_probs.len();
                }
            }
            Ok((sum, n))
        })
        .collect::<Result<_, AlignError>>()?;
    let fold_means = scored.iter().map(|&(s, n)| s / n as f64).collect();
    let fold_words = scored.iter().map(|&(_, n)| n).collect();
    let total: f64 = scored.iter().map(|&(s, _)| s).sum();
    let count: usize = scored.iter().map(|&(_, n)| n).sum();
    Ok(CrossValReport {
        subdomain,
        level,
        folds: folds
            .iter()
            .map(|f| f.iter().map(|&i| corpus.stimuli[i].id.clone()).collect())
            .collect(),
        fold_means,
        fold_words,
        overall: total / count as f64,
    })
}

/// The word a token is spoken as: its name with non-alphanumerics removed.
pub fn token_word(token: &str) -> String {
    token
        .chars()
        .filter(|c| c.is_ascii_alphanumeric())
        .collect::<String>()
        .to_lowercase()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub level: usize,
    pub noise: f64,
    pub synonyms: usize,
    pub seed: u64,
}

/// One description per stimulus with one what-word per token of its
/// ground-truth program at `level`. Variant `j > 0` of a word is spelled
/// `{word}v{j}`; with probability `noise` a word is replaced by a draw from
/// the clean corpus's unigram distribution.
pub fn synth_descriptions(
    corpus: &StimulusCorpus,
    config: SynthConfig,
) -> Result<DescriptionCorpus, AlignError> {
    if config.level > 3 {
        return Err(AlignError::BadLevel(config.level));
    }
    if !(0.0..1.0).contains(&config.noise) {
        return Err(AlignError::BadNoise(config.noise));
    }
    if config.synonyms == 0 {
        return Err(AlignError::BadSynonyms);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let clean: Vec<Vec<String>> = corpus
        .stimuli
        .iter()
        .map(|s| {
            tokenize(&s.programs[config.level])
                .0
                .iter()
                .map(|t| {
                    let base = token_word(t);
                    match rng.gen_range(0..config.synonyms) {
                        0 => base,
                        j => format!("{base}v{j}"),
                    }
                })
                .collect()
        })
        .collect();
    let mut unigram: BTreeMap<&str, usize> = BTreeMap::new();
    for w in clean.iter().flatten() {
        *unigram.entry(w.as_str()).or_default() += 1;
    }
    let vocab: Vec<&str> = unigram.keys().copied().collect();
    let dist = WeightedIndex::new(unigram.values().copied()).ok();
    let descriptions = corpus
        .stimuli
        .iter()
        .zip(&clean)
        .map(|(s, words)| {
            let steps = words
                .iter()
                .map(|w| {
                    let what = match &dist {
                        Some(d) if config.noise > 0.0 && rng.gen_bool(config.noise) => {
                            vocab[d.sample(&mut rng)].to_string()
                        }
                        _ => w.clone(),
                    };
                    Step {
                        what,
                        where_: String::new(),
                    }
                })
                .collect();
            Description {
                stimulus_id: s.id.clone(),
                participant_id: format!("synthetic-{}", config.seed),
                steps,
            }
        })
        .collect();
    Ok(DescriptionCorpus { descriptions })
}
