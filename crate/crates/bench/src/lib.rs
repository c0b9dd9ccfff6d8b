//! Shared workloads for the criterion benches.

use mpspec::{EntryDistribution, SpectralSample};

/// Gaussian spectrum with aspect ratio 1/2.
pub fn half_aspect_spectrum(p: usize, seed: u64) -> SpectralSample {
    SpectralSample::simulate(p, 2 * p, seed, EntryDistribution::Gaussian).expect("simulation succeeds")
}

/// Evenly spaced interior points of the c = 1/2 bulk.
pub fn bulk_points(count: usize) -> Vec<f64> {
    let (a, b) = ((1.0 - 0.5f64.sqrt()).powi(2), (1.0 + 0.5f64.sqrt()).powi(2));
    (1..=count).map(|i| a + (b - a) * i as f64 / (count + 1) as f64).collect()
}
