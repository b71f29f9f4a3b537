//! Shared fixtures for the criterion benches.

use sphere_spectra::network::init_default;
use sphere_spectra::{NetworkParams, TrainingConfig};

/// A fixed-seed network of width `m` for timing runs.
pub fn network(m: usize, seed: u64) -> NetworkParams {
    let config = TrainingConfig {
        m,
        seed,
        ..TrainingConfig::default()
    };
    init_default(&config).expect("valid fixture config")
}

/// A short training configuration: `epochs` passes over 100 samples.
pub fn short_run(epochs: usize) -> TrainingConfig {
    TrainingConfig {
        epochs,
        record_every: epochs,
        target_grid_ell: 16,
        ..TrainingConfig::default()
    }
}
