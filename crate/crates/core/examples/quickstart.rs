//! Generates one subdomain, prints its cost curve, then checks that
//! descriptions emitted from level 2 align best with the level-2 library.
//!
//!     cargo run --release -p partlex --example quickstart

use partlex::alignment::{cross_validate, synth_descriptions, CrossValConfig, SynthConfig};
use partlex::domain::{Subdomain, LEVELS};
use partlex::library::{build_library, combined_cost};
use partlex::stimgen::{generate_stimuli, SubdomainSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sub = Subdomain::Vehicles;
    let corpus = generate_stimuli(&SubdomainSpec::builtin(sub), 250, 7)?;
    println!("example L0 program: {}", corpus.stimuli[0].programs[0]);
    println!("example L2 program: {}", corpus.stimuli[0].programs[2]);

    let descs = synth_descriptions(
        &corpus,
        SynthConfig {
            level: 2,
            noise: 0.2,
            synonyms: 2,
            seed: 1,
        },
    )?;
    println!("level  |L|  mean|pi|   cost   mean loglik");
    for k in LEVELS {
        let lib = build_library(sub, k)?;
        let cost = combined_cost(&lib, corpus.stimuli.iter().map(|s| s.base()))?;
        let cv = cross_validate(
            &corpus,
            &descs,
            &lib,
            CrossValConfig {
                seed: 1,
                ..Default::default()
            },
        )?;
        println!(
            "L{k}   {:>4} {:>9.2} {:>7.2} {:>12.4}",
            cost.size, cost.mean_len, cost.cost, cv.overall
        );
    }
    Ok(())
}
