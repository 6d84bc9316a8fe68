//! Description normalization and corpus statistics: PMI, Jensen-Shannon
//! distance with a label-permutation null, permutation ANOVA and the
//! description-length regression.
//!
//! PMI uses natural logarithms. Jensen-Shannon divergence uses base 2 and is
//! reported as its square root, so identical distributions are at distance
//! 0 and disjoint ones at distance 1. Permutation p-values are
//! `(1 + #{null >= observed}) / (1 + n_perm)`.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_N_PERM: usize = 1000;
/// Minimum occurrences for a word to appear in top-k PMI listings.
pub const PMI_MIN_COUNT: usize = 5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("need at least {needed} {what}, got {got}")]
    TooFew {
        what: &'static str,
        needed: usize,
        got: usize,
    },
    #[error("distribution `{0}` is empty")]
    EmptyDistribution(String),
    #[error("all trials carry the same label")]
    SingleLabel,
    #[error("design matrix is singular (all x equal)")]
    Singular,
}

// ---------------------------------------------------------------------------
// Descriptions

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Step {
    pub what: String,
    #[serde(rename = "where", default)]
    pub where_: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Description {
    pub stimulus_id: String,
    pub participant_id: String,
    pub steps: Vec<Step>,
}

impl Description {
    /// Normalized words of all what-phrases, in step order.
    pub fn what_words(&self) -> Vec<String> {
        self.steps
            .iter()
            .flat_map(|s| normalize_description(&s.what))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DescriptionCorpus {
    pub descriptions: Vec<Description>,
}

#[derive(Debug, Error)]
pub enum DescriptionIoError {
    #[error("line {line}: {source}")]
    Json {
        line: usize,
        source: serde_json::Error,
    },
    #[error("line {line}: description has no steps")]
    NoSteps { line: usize },
}

impl DescriptionCorpus {
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for d in &self.descriptions {
            out.push_str(&serde_json::to_string(d).expect("descriptions serialize"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self, DescriptionIoError> {
        let mut descriptions = Vec::new();
        for (i, line) in text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
        {
            let d: Description =
                serde_json::from_str(line).map_err(|source| DescriptionIoError::Json {
                    line: i + 1,
                    source,
                })?;
            if d.steps.is_empty() {
                return Err(DescriptionIoError::NoSteps { line: i + 1 });
            }
            descriptions.push(d);
        }
        Ok(DescriptionCorpus { descriptions })
    }

    /// Descriptions grouped by stimulus id.
    pub fn by_stimulus(&self) -> BTreeMap<&str, Vec<&Description>> {
        let mut out: BTreeMap<&str, Vec<&Description>> = BTreeMap::new();
        for d in &self.descriptions {
            out.entry(d.stimulus_id.as_str()).or_default().push(d);
        }
        out
    }
}

struct Lexicon {
    stopwords: HashSet<String>,
    typos: HashMap<String, String>,
    keep_s: HashSet<String>,
}

fn data_lines(text: &str) -> impl Iterator<Item = &str> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
}

fn lexicon() -> &'static Lexicon {
    static LEXICON: OnceLock<Lexicon> = OnceLock::new();
    LEXICON.get_or_init(|| Lexicon {
        stopwords: data_lines(include_str!("../data/stopwords.txt"))
            .map(String::from)
            .collect(),
        typos: data_lines(include_str!("../data/typos.tsv"))
            .filter_map(|l| l.split_once('\t'))
            .map(|(a, b)| (a.trim().to_string(), b.trim().to_string()))
            .collect(),
        keep_s: data_lines(include_str!("../data/singular_exceptions.txt"))
            .map(String::from)
            .collect(),
    })
}

fn singularize(word: &str, keep: &HashSet<String>) -> String {
    if word.len() <= 3 || keep.contains(word) {
        return word.to_string();
    }
    if let Some(stem) = word.strip_suffix("ies") {
        return format!("{stem}y");
    }
    for suffix in ["sses", "ches", "shes", "xes", "zes"] {
        if word.ends_with(suffix) {
            return word[..word.len() - 2].to_string();
        }
    }
    if word.ends_with("ss") || word.ends_with("us") || word.ends_with("is") {
        return word.to_string();
    }
    word.strip_suffix('s').unwrap_or(word).to_string()
}

/// Lowercases, strips punctuation, fixes known typos, drops stop words and
/// singularizes plurals.
pub fn normalize_description(raw: &str) -> Vec<String> {
    let lex = lexicon();
    raw.to_lowercase()
        .split(|c: char| !c.is_alphanumeric() && c != '\'')
        .map(|w| w.trim_matches('\''))
        .filter(|w| !w.is_empty())
        .map(|w| lex.typos.get(w).cloned().unwrap_or_else(|| w.to_string()))
        .filter(|w| !lex.stopwords.contains(w))
        .map(|w| singularize(&w, &lex.keep_s))
        .map(|w| lex.typos.get(&w).cloned().unwrap_or(w))
        .collect()
}

// ---------------------------------------------------------------------------
// Word distributions, PMI and JSD

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordDistribution {
    pub label: String,
    pub freqs: BTreeMap<String, f64>,
    pub total: usize,
}

impl WordDistribution {
    pub fn from_words<'a>(label: &str, words: impl IntoIterator<Item = &'a String>) -> Self {
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        for w in words {
            *counts.entry(w.clone()).or_default() += 1;
        }
        let total: usize = counts.values().sum();
        WordDistribution {
            label: label.to_string(),
            freqs: counts
                .into_iter()
                .map(|(w, c)| (w, c as f64 / total.max(1) as f64))
                .collect(),
            total,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PmiTable {
    pub labels: Vec<String>,
    /// word -> PMI per label (in `labels` order); `-inf` where the word never
    /// occurs under that label.
    pub pmi: BTreeMap<String, Vec<f64>>,
    /// word -> joint counts per label.
    pub counts: BTreeMap<String, Vec<usize>>,
    pub total: usize,
}

/// PMI(w, d) = ln(p(w, d) / (p(w) p(d))) from pooled token counts.
pub fn pmi_table(groups: &BTreeMap<String, Vec<String>>) -> Result<PmiTable, StatsError> {
    if groups.len() < 2 {
        return Err(StatsError::TooFew {
            what: "subdomains",
            needed: 2,
            got: groups.len(),
        });
    }
    if let Some((label, _)) = groups.iter().find(|(_, w)| w.is_empty()) {
        return Err(StatsError::EmptyDistribution(label.clone()));
    }
    let labels: Vec<String> = groups.keys().cloned().collect();
    let mut counts: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (j, words) in groups.values().enumerate() {
        for w in words {
            counts
                .entry(w.clone())
                .or_insert_with(|| vec![0; labels.len()])[j] += 1;
        }
    }
    let total: usize = groups.values().map(Vec::len).sum();
    let n = total as f64;
    let p_d: Vec<f64> = groups.values().map(|w| w.len() as f64 / n).collect();
    let pmi = counts
        .iter()
        .map(|(w, c)| {
            let p_w = c.iter().sum::<usize>() as f64 / n;
            let row = c
                .iter()
                .zip(&p_d)
                .map(|(&cwd, &pd)| ((cwd as f64 / n) / (p_w * pd)).ln())
                .collect();
            (w.clone(), row)
        })
        .collect();
    Ok(PmiTable {
        labels,
        pmi,
        counts,
        total,
    })
}

impl PmiTable {
    /// Highest-PMI words of `label` with at least `min_count` occurrences overall.
    pub fn top_k(&self, label: &str, k: usize, min_count: usize) -> Vec<(String, f64)> {
        let Some(j) = self.labels.iter().position(|l| l == label) else {
            return Vec::new();
        };
        let mut rows: Vec<(String, f64)> = self
            .pmi
            .iter()
            .filter(|(w, _)| self.counts[*w].iter().sum::<usize>() >= min_count)
            .filter(|(_, v)| v[j].is_finite())
            .map(|(w, v)| (w.clone(), v[j]))
            .collect();
        rows.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        rows.truncate(k);
        rows
    }

    /// CSV with header `word,subdomain,count,pmi`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("word,subdomain,count,pmi\n");
        for (w, row) in &self.pmi {
            for (j, v) in row.iter().enumerate() {
                let _ = writeln!(out, "{w},{},{},{v:.6}", self.labels[j], self.counts[w][j]);
            }
        }
        out
    }
}

fn kl2(p: &[f64], m: &[f64]) -> f64 {
    p.iter()
        .zip(m)
        .filter(|(&pi, _)| pi > 0.0)
        .map(|(&pi, &mi)| pi * (pi / mi).log2())
        .sum()
}

/// Square root of the base-2 Jensen-Shannon divergence.
pub fn jsd(p: &WordDistribution, q: &WordDistribution) -> Result<f64, StatsError> {
    for d in [p, q] {
        if d.freqs.is_empty() || d.total == 0 {
            return Err(StatsError::EmptyDistribution(d.label.clone()));
        }
    }
    let vocab: Vec<&String> = p
        .freqs
        .keys()
        .chain(q.freqs.keys())
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    let pv: Vec<f64> = vocab
        .iter()
        .map(|w| p.freqs.get(*w).copied().unwrap_or(0.0))
        .collect();
    let qv: Vec<f64> = vocab
        .iter()
        .map(|w| q.freqs.get(*w).copied().unwrap_or(0.0))
        .collect();
    let m: Vec<f64> = pv.iter().zip(&qv).map(|(a, b)| 0.5 * (a + b)).collect();
    let div = 0.5 * kl2(&pv, &m) + 0.5 * kl2(&qv, &m);
    Ok(div.clamp(0.0, 1.0).sqrt())
}

/// Mean Jensen-Shannon distance over all unordered pairs.
pub fn jsd_pairwise(dists: &[WordDistribution]) -> Result<f64, StatsError> {
    if dists.len() < 2 {
        return Err(StatsError::TooFew {
            what: "distributions",
            needed: 2,
            got: dists.len(),
        });
    }
    let mut sum = 0.0;
    let mut pairs = 0usize;
    for i in 0..dists.len() {
        for j in i + 1..dists.len() {
            sum += jsd(&dists[i], &dists[j])?;
            pairs += 1;
        }
    }
    Ok(sum / pairs as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PermutationResult {
    pub observed: f64,
    pub p_value: f64,
    pub n_perm: usize,
    pub null_mean: f64,
    pub null_sd: f64,
    pub null_max: f64,
}

fn permutation_p(observed: f64, null: &[f64]) -> PermutationResult {
    // tolerate summation-order noise so exact ties count as ties
    let eps = 1e-12 * observed.abs().max(1.0);
    let ge = null.iter().filter(|&&v| v >= observed - eps).count();
    let n = null.len() as f64;
    let mean = null.iter().sum::<f64>() / n;
    let var = null.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    PermutationResult {
        observed,
        p_value: (1 + ge) as f64 / (1.0 + n),
        n_perm: null.len(),
        null_mean: mean,
        null_sd: var.sqrt(),
        null_max: null.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    }
}

fn grouped_jsd(
    labels: &[usize],
    trials: &[(String, Vec<String>)],
    n_labels: usize,
) -> Result<f64, StatsError> {
    let mut groups: Vec<Vec<&String>> = vec![Vec::new(); n_labels];
    for (l, (_, words)) in labels.iter().zip(trials) {
        groups[*l].extend(words);
    }
    let dists: Vec<WordDistribution> = groups
        .iter()
        .enumerate()
        .map(|(i, g)| WordDistribution::from_words(&i.to_string(), g.iter().copied()))
        .collect();
    jsd_pairwise(&dists)
}

/// Label-permutation test of the mean pairwise Jensen-Shannon distance
/// between the word distributions of each label.
pub fn permutation_test_jsd(
    trials: &[(String, Vec<String>)],
    n_perm: usize,
    seed: u64,
) -> Result<PermutationResult, StatsError> {
    if n_perm < 100 {
        return Err(StatsError::TooFew {
            what: "permutations",
            needed: 100,
            got: n_perm,
        });
    }
    let names: Vec<&String> = trials
        .iter()
        .map(|t| &t.0)
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    if names.len() < 2 {
        return Err(StatsError::SingleLabel);
    }
    let mut labels: Vec<usize> = trials
        .iter()
        .map(|t| names.iter().position(|n| **n == t.0).unwrap())
        .collect();
    let observed = grouped_jsd(&labels, trials, names.len())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut null = Vec::with_capacity(n_perm);
    for _ in 0..n_perm {
        labels.shuffle(&mut rng);
        // a permutation can leave a label without words; it then contributes no finite distance
        null.push(grouped_jsd(&labels, trials, names.len()).unwrap_or(0.0));
    }
    Ok(permutation_p(observed, &null))
}

// ---------------------------------------------------------------------------
// ANOVA

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnovaResult {
    pub f: f64,
    pub df_between: usize,
    pub df_within: usize,
    pub p_value: f64,
    pub n_perm: usize,
}

fn f_statistic(values: &[f64], sizes: &[usize]) -> f64 {
    let n = values.len() as f64;
    let k = sizes.len() as f64;
    let grand = values.iter().sum::<f64>() / n;
    let (mut ssb, mut ssw) = (0.0, 0.0);
    let mut start = 0;
    for &s in sizes {
        let g = &values[start..start + s];
        let mean = g.iter().sum::<f64>() / s as f64;
        ssb += s as f64 * (mean - grand).powi(2);
        ssw += g.iter().map(|v| (v - mean).powi(2)).sum::<f64>();
        start += s;
    }
    let scale = values.iter().map(|v| (v - grand).powi(2)).sum::<f64>();
    if ssb <= 1e-12 * scale.max(f64::MIN_POSITIVE) || scale == 0.0 {
        return 0.0;
    }
    if ssw == 0.0 {
        return f64::INFINITY;
    }
    (ssb / (k - 1.0)) / (ssw / (n - k))
}

/// One-way ANOVA F with a label-permutation p-value.
pub fn anova_permutation(
    groups: &[Vec<f64>],
    n_perm: usize,
    seed: u64,
) -> Result<AnovaResult, StatsError> {
    if groups.len() < 2 {
        return Err(StatsError::TooFew {
            what: "groups",
            needed: 2,
            got: groups.len(),
        });
    }
    if let Some(g) = groups.iter().find(|g| g.len() < 2) {
        return Err(StatsError::TooFew {
            what: "values per group",
            needed: 2,
            got: g.len(),
        });
    }
    if n_perm == 0 {
        return Err(StatsError::TooFew {
            what: "permutations",
            needed: 1,
            got: 0,
        });
    }
    let sizes: Vec<usize> = groups.iter().map(Vec::len).collect();
    let mut values: Vec<f64> = groups.iter().flatten().copied().collect();
    let f = f_statistic(&values, &sizes);
    let (df_between, df_within) = (groups.len() - 1, values.len() - groups.len());
    if f == 0.0 {
        return Ok(AnovaResult {
            f,
            df_between,
            df_within,
            p_value: 1.0,
            n_perm,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut null = Vec::with_capacity(n_perm);
    for _ in 0..n_perm {
        values.shuffle(&mut rng);
        null.push(f_statistic(&values, &sizes));
    }
    Ok(AnovaResult {
        f,
        df_between,
        df_within,
        p_value: permutation_p(f, &null).p_value,
        n_perm,
    })
}

// ---------------------------------------------------------------------------
// Regression

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OlsFit {
    /// Intercept first, then increasing powers of x.
    pub coefficients: Vec<f64>,
    pub r_squared: f64,
    pub rss: f64,
    pub residuals: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionReport {
    pub n: usize,
    pub linear: OlsFit,
    pub quadratic: OlsFit,
    /// Nested-model F for adding the quadratic term, on (1, n - 3) df.
    pub f_quadratic: f64,
}

fn ols(x: &[f64], y: &[f64], degree: usize) -> Result<OlsFit, StatsError> {
    let n = x.len();
    let design = DMatrix::from_fn(n, degree + 1, |i, j| x[i].powi(j as i32));
    let yv = DVector::from_column_slice(y);
    let svd = design.clone().svd(true, true);
    let max_sv = svd.singular_values.max();
    if svd.singular_values.min() <= 1e-10 * max_sv {
        return Err(StatsError::Singular);
    }
    let beta = svd
        .solve(&yv, 1e-14 * max_sv)
        .map_err(|_| StatsError::Singular)?;
    let residuals = &yv - &design * &beta;
    let rss = residuals.norm_squared();
    let mean = y.iter().sum::<f64>() / n as f64;
    let tss: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    Ok(OlsFit {
        coefficients: beta.iter().copied().collect(),
        r_squared: if tss > 0.0 { 1.0 - rss / tss } else { 1.0 },
        rss,
        residuals: residuals.iter().copied().collect(),
    })
}

/// Linear and quadratic least-squares fits of y on x and the F statistic
/// comparing them.
pub fn length_regression(points: &[(f64, f64)]) -> Result<RegressionReport, StatsError> {
    if points.len() < 10 {
        return Err(StatsError::TooFew {
            what: "points",
            needed: 10,
            got: points.len(),
        });
    }
    let x: Vec<f64> = points.iter().map(|p| p.0).collect();
    let y: Vec<f64> = points.iter().map(|p| p.1).collect();
    if x.iter().all(|&v| v == x[0]) {
        return Err(StatsError::Singular);
    }
    let linear = ols(&x, &y, 1)?;
    let quadratic = ols(&x, &y, 2)?;
    let n = points.len();
    // residual sums below rounding noise count as exact fits
    let noise = 1e-18 * y.iter().map(|v| v * v).sum::<f64>().max(1.0);
    let (r1, r2) = (linear.rss.max(0.0), quadratic.rss.max(0.0));
    let f_quadratic = if r1 <= noise {
        0.0
    } else if r2 <= noise {
        f64::INFINITY
    } else {
        ((r1 - r2).max(0.0)) / (r2 / (n - 3) as f64)
    };
    Ok(RegressionReport {
        n,
        linear,
        quadratic,
        f_quadratic,
    })
}

impl RegressionReport {
    /// CSV with header `model,term,value`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("model,term,value\n");
        for (name, fit) in [("linear", &self.linear), ("quadratic", &self.quadratic)] {
            for (i, c) in fit.coefficients.iter().enumerate() {
                let _ = writeln!(out, "{name},b{i},{c:.9}");
            }
            let _ = writeln!(out, "{name},r_squared,{:.9}", fit.r_squared);
            let _ = writeln!(out, "{name},rss,{:.9}", fit.rss);
        }
        let _ = writeln!(out, "nested,f_quadratic,{:.9}", self.f_quadratic);
        let _ = writeln!(out, "nested,n,{}", self.n);
        out
    }
}
