//! Stimulus generation for the eight subdomains.
//!
//! Drawings are rejection-sampled from their templates until `n` distinct
//! pictures exist. Towers are enumerated exhaustively, filtered to those
//! that fit the grid, de-duplicated by picture and then sampled without
//! replacement. Every stimulus carries its program at all four levels.

use std::collections::{BTreeMap, HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::domain::{Domain, Subdomain, LEVELS};
use crate::library::{build_library, ConceptLibrary, LibraryError};
use crate::program::{parse_sexpr, program_length, Expr, ParseError};
use crate::semantics::{evaluate, Rendering, SemanticsError};
use crate::templates::{drawings, towers, Instance};
use crate::tower::{BlockPlacement, GRID};

/// Version tag of the built-in parameter ranges.
pub const SPEC_VERSION: &str = "1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GenerationMode {
    Sample,
    EnumerateThenSample,
}

/// The discrete axes of a subdomain and how items are drawn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubdomainSpec {
    pub version: String,
    pub subdomain: Subdomain,
    pub mode: GenerationMode,
    /// Axis name to its admissible values.
    pub ranges: BTreeMap<String, Vec<Value>>,
}

impl SubdomainSpec {
    pub fn builtin(subdomain: Subdomain) -> Self {
        let (mode, ranges) = match subdomain.domain() {
            Domain::Drawings => (
                GenerationMode::Sample,
                drawings::axes(subdomain)
                    .into_iter()
                    .map(|(k, v)| (k.to_string(), v.into_iter().map(Value::from).collect()))
                    .collect(),
            ),
            Domain::Towers => {
                let mut ranges: BTreeMap<String, Vec<Value>> = BTreeMap::new();
                for s in towers::catalog(subdomain).structures {
                    for (k, v) in s.features {
                        let vals = ranges.entry(k).or_default();
                        if !vals.contains(&v) {
                            vals.push(v);
                        }
                    }
                }
                ranges.insert("x0".into(), (0..20).map(Value::from).collect());
                (GenerationMode::EnumerateThenSample, ranges)
            }
        };
        SubdomainSpec {
            version: SPEC_VERSION.into(),
            subdomain,
            mode,
            ranges,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GenError {
    #[error("only {found} distinct valid items exist for {subdomain}, {wanted} requested")]
    TooFew {
        subdomain: Subdomain,
        wanted: usize,
        found: usize,
    },
    #[error("n must be at least 1")]
    ZeroCount,
    #[error("spec version {0} is not supported")]
    Version(String),
    #[error("template {template} failed to evaluate: {source}")]
    Template {
        template: String,
        source: SemanticsError,
    },
    #[error(transparent)]
    Library(#[from] LibraryError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stimulus {
    pub id: String,
    pub subdomain: Subdomain,
    pub params: BTreeMap<String, Value>,
    /// Programs at levels 0..=3.
    pub programs: Vec<Expr>,
    pub digest: String,
}

impl Stimulus {
    pub fn domain(&self) -> Domain {
        self.subdomain.domain()
    }

    pub fn base(&self) -> &Expr {
        &self.programs[0]
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct StimulusCorpus {
    pub stimuli: Vec<Stimulus>,
}

/// First 16 hex digits of SHA-256 over the printed base program.
pub fn stimulus_id(base: &Expr) -> String {
    hex::encode(Sha256::digest(base.to_string().as_bytes()))[..16].to_string()
}

fn make_stimulus(
    lib: &ConceptLibrary,
    inst: Instance,
    rendering: &Rendering,
) -> Result<Stimulus, GenError> {
    let programs = LEVELS
        .iter()
        .map(|&k| lib.expand_above(&inst.program, k))
        .collect::<Result<Vec<_>, _>>()?;
    let mut params = inst.features;
    params.insert("template".into(), Value::from(inst.template));
    Ok(Stimulus {
        id: stimulus_id(&programs[0]),
        subdomain: lib.subdomain,
        params,
        programs,
        digest: rendering.digest(),
    })
}

fn render(lib: &ConceptLibrary, inst: &Instance) -> Result<Rendering, SemanticsError> {
    let base = lib
        .expand(&inst.program)
        .expect("template calls resolve in their own library");
    evaluate(lib.domain(), &base)
}

/// Generates `n` distinct stimuli; deterministic in `seed`.
pub fn generate_stimuli(
    spec: &SubdomainSpec,
    n: usize,
    seed: u64,
) -> Result<StimulusCorpus, GenError> {
    if n == 0 {
        return Err(GenError::ZeroCount);
    }
    if spec.version != SPEC_VERSION {
        return Err(GenError::Version(spec.version.clone()));
    }
    let sub = spec.subdomain;
    let lib = build_library(sub, 3)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stimuli = Vec::with_capacity(n);
    match spec.mode {
        GenerationMode::Sample => {
            let mut seen = HashSet::new();
            let budget = 200 * n + 1000;
            for _ in 0..budget {
                if stimuli.len() == n {
                    break;
                }
                let inst = drawings::sample(sub, &mut rng);
                let r = render(&lib, &inst).map_err(|source| GenError::Template {
                    template: inst.template.clone(),
                    source,
                })?;
                if seen.insert(r.digest()) {
                    stimuli.push(make_stimulus(&lib, inst, &r)?);
                }
            }
            if stimuli.len() < n {
                return Err(GenError::TooFew {
                    subdomain: sub,
                    wanted: n,
                    found: stimuli.len(),
                });
            }
        }
        GenerationMode::EnumerateThenSample => {
            let survivors = enumerate_towers(&lib)?;
            if survivors.len() < n {
                return Err(GenError::TooFew {
                    subdomain: sub,
                    wanted: n,
                    found: survivors.len(),
                });
            }
            for (inst, shifted) in survivors.choose_multiple(&mut rng, n) {
                let r = render(&lib, inst).map_err(|source| GenError::Template {
                    template: inst.template.clone(),
                    source,
                })?;
                debug_assert_eq!(&r, shifted);
                stimuli.push(make_stimulus(&lib, inst.clone(), &r)?);
            }
        }
    }
    Ok(StimulusCorpus { stimuli })
}

/// All tower candidates that fit the grid, first occurrence per picture.
///
/// Gravity is translation invariant, so each structure is evaluated once and
/// its other placements are obtained by shifting the blocks sideways.
pub fn enumerate_towers(lib: &ConceptLibrary) -> Result<Vec<(Instance, Rendering)>, GenError> {
    let catalog = towers::catalog(lib.subdomain);
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for s in &catalog.structures {
        let Some((x0, placements)) =
            (0..GRID as i64).find_map(|x0| match render(lib, &catalog.instance(s, x0)) {
                Ok(Rendering::Tower(p)) => Some((x0, p)),
                _ => None,
            })
        else {
            continue;
        };
        let lo = placements.iter().map(|p| p.x as i64).min().unwrap_or(0);
        let hi = placements
            .iter()
            .map(|p| (p.x + p.kind.width()) as i64)
            .max()
            .unwrap_or(0);
        for x in 0..GRID as i64 {
            let shift = x - x0;
            if lo + shift < 0 || hi + shift > GRID as i64 {
                continue;
            }
            let moved: Vec<BlockPlacement> = placements
                .iter()
                .map(|p| BlockPlacement {
                    x: (p.x as i64 + shift) as usize,
                    ..*p
                })
                .collect();
            let r = Rendering::Tower(moved);
            if seen.insert(r.digest()) {
                out.push((catalog.instance(s, x), r));
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelStats {
    pub level: usize,
    pub min: usize,
    pub mean: f64,
    pub max: usize,
}

/// Min, mean and max program length per level.
pub fn corpus_summary(corpus: &StimulusCorpus) -> Vec<LevelStats> {
    LEVELS
        .iter()
        .map(|&k| {
            let lens: Vec<usize> = corpus
                .stimuli
                .iter()
                .map(|s| program_length(&s.programs[k]))
                .collect();
            LevelStats {
                level: k,
                min: lens.iter().copied().min().unwrap_or(0),
                mean: lens.iter().sum::<usize>() as f64 / lens.len().max(1) as f64,
                max: lens.iter().copied().max().unwrap_or(0),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct StimulusRecord {
    id: String,
    domain: Domain,
    subdomain: Subdomain,
    params: BTreeMap<String, Value>,
    #[serde(rename = "program_L0")]
    program_l0: String,
    #[serde(rename = "program_L1")]
    program_l1: String,
    #[serde(rename = "program_L2")]
    program_l2: String,
    #[serde(rename = "program_L3")]
    program_l3: String,
    digest: String,
}

#[derive(Debug, Error)]
pub enum CorpusIoError {
    #[error("line {line}: {source}")]
    Json {
        line: usize,
        source: serde_json::Error,
    },
    #[error("line {line}, level {level}: {source}")]
    Program {
        line: usize,
        level: usize,
        source: ParseError,
    },
    #[error("line {line}: domain does not match subdomain")]
    Domain { line: usize },
    #[error(transparent)]
    Library(#[from] LibraryError),
}

impl StimulusCorpus {
    pub fn len(&self) -> usize {
        self.stimuli.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stimuli.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Stimulus> {
        self.stimuli.iter().find(|s| s.id == id)
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for s in &self.stimuli {
            let p: Vec<String> = s.programs.iter().map(|e| e.to_string()).collect();
            let rec = StimulusRecord {
                id: s.id.clone(),
                domain: s.domain(),
                subdomain: s.subdomain,
                params: s.params.clone(),
                program_l0: p[0].clone(),
                program_l1: p[1].clone(),
                program_l2: p[2].clone(),
                program_l3: p[3].clone(),
                digest: s.digest.clone(),
            };
            out.push_str(&serde_json::to_string(&rec).expect("records serialize"));
            out.push('\n');
        }
        out
    }

    /// Parses a corpus, validating each level's program against that
    /// level's library.
    pub fn from_jsonl(text: &str) -> Result<Self, CorpusIoError> {
        let mut libs: HashMap<(Subdomain, usize), ConceptLibrary> = HashMap::new();
        let mut stimuli = Vec::new();
        for (i, line) in text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
        {
            let rec: StimulusRecord =
                serde_json::from_str(line).map_err(|source| CorpusIoError::Json {
                    line: i + 1,
                    source,
                })?;
            if rec.subdomain.domain() != rec.domain {
                return Err(CorpusIoError::Domain { line: i + 1 });
            }
            let texts = [
                &rec.program_l0,
                &rec.program_l1,
                &rec.program_l2,
                &rec.program_l3,
            ];
            let mut programs = Vec::with_capacity(4);
            for (level, t) in texts.iter().enumerate() {
                let key = (rec.subdomain, level);
                if let std::collections::hash_map::Entry::Vacant(v) = libs.entry(key) {
                    v.insert(build_library(rec.subdomain, level)?);
                }
                let e = parse_sexpr(t, &libs[&key].inventory).map_err(|source| {
                    CorpusIoError::Program {
                        line: i + 1,
                        level,
                        source,
                    }
                })?;
                programs.push(e);
            }
            stimuli.push(Stimulus {
                id: rec.id,
                subdomain: rec.subdomain,
                params: rec.params,
                programs,
                digest: rec.digest,
            });
        }
        Ok(StimulusCorpus { stimuli })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_drawing_corpus() {
        let spec = SubdomainSpec::builtin(Subdomain::Vehicles);
        let c = generate_stimuli(&spec, 5, 1).unwrap();
        assert_eq!(c.len(), 5);
        let back = StimulusCorpus::from_jsonl(&c.to_jsonl()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn zero_rejected() {
        let spec = SubdomainSpec::builtin(Subdomain::Houses);
        assert_eq!(generate_stimuli(&spec, 0, 1), Err(GenError::ZeroCount));
    }

    #[test]
    fn singleton_summary() {
        let spec = SubdomainSpec::builtin(Subdomain::Houses);
        let c = generate_stimuli(&spec, 1, 3).unwrap();
        for s in corpus_summary(&c) {
            assert_eq!(s.min as f64, s.mean);
            assert_eq!(s.max, s.min);
        }
    }
}
