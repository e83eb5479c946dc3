//! Fixtures shared by the kernel benchmarks.

use afrelay::{db_to_linear, Impairments, SystemConfig};

/// K = 50, M = 10, N = 100 at μ = ν = 20 dB.
pub fn reference_config(delta: f64) -> SystemConfig {
    SystemConfig::new(50, 10, 100, db_to_linear(20.0), db_to_linear(20.0))
        .with_impairments(Impairments::uniform(delta))
}
