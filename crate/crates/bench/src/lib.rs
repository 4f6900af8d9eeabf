//! Shared inputs for the solver benchmarks.

use nsopt::{generate_instance, GeneratorConfig, NetworkInstance};

/// A small instance that every method solves in well under a second.
pub fn small_instance(seed: u64) -> NetworkInstance {
    let cfg = GeneratorConfig { chain_length: 1, ..GeneratorConfig::tiny(6, 12, 2, 2) };
    generate_instance(&cfg, seed).expect("valid generator config")
}

/// A mid-sized instance for the LP relaxations and column generation.
pub fn medium_instance(seed: u64) -> NetworkInstance {
    generate_instance(&GeneratorConfig::new(12, 36, 3, 3), seed).expect("valid generator config")
}
