#![allow(dead_code)]

use std::collections::BTreeMap;
use std::sync::{Mutex, OnceLock};

use partlex::domain::Subdomain;
use partlex::stimgen::{generate_stimuli, StimulusCorpus, SubdomainSpec};

pub const SEED: u64 = 7;
pub const N: usize = 250;

/// Seed-7 corpus of 250 stimuli, generated once per test binary.
pub fn corpus(sub: Subdomain) -> StimulusCorpus {
    static CACHE: OnceLock<Mutex<BTreeMap<Subdomain, StimulusCorpus>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(c) = cache.lock().unwrap().get(&sub) {
        return c.clone();
    }
    let c = generate_stimuli(&SubdomainSpec::builtin(sub), N, SEED).unwrap();
    cache.lock().unwrap().entry(sub).or_insert(c).clone()
}
