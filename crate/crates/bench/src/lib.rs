//! Fixtures shared by the criterion benches.

use thinc_core::synthgen::generate;
use thinc_core::{featurize, shipped, FeatureMatrix, InstanceRecord, SynthSpec};

pub fn corpus(instances: usize, seed: u64) -> Vec<InstanceRecord> {
    generate(&SynthSpec {
        instances,
        seed,
        ..SynthSpec::default()
    })
    .expect("default spec is valid")
}

pub fn matrix(theory: &str, instances: usize, seed: u64) -> FeatureMatrix {
    let config = shipped::shipped_theory(theory).expect("shipped theory");
    featurize(&corpus(instances, seed), &config).0
}
