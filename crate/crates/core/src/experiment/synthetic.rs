//! Synthetic labeled data for tests and studies that need no external files.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::dataset::Dataset;
use crate::error::Result;

/// Balanced binary data where feature `j` is `N(±shifts[j], 1)`, positive
/// mean for class 1.
pub fn two_gaussians(n: usize, shifts: &[f64], seed: u64) -> Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let y: bool = rng.random();
        let sign = if y { 1.0 } else { -1.0 };
        rows.push(
            shifts
                .iter()
                .map(|s| sign * s + rng.sample::<f64, _>(StandardNormal))
                .collect(),
        );
        labels.push(if y { 1.0 } else { 0.0 });
    }
    let names = (0..shifts.len()).map(|j| format!("x{j}")).collect();
    Dataset::from_rows(&rows, Some(labels))?.with_feature_names(names)
}

/// Feature index of the informative signal in [`dependent_surrogate`].
pub const SURROGATE_GOOD: usize = 0;
/// Feature index of the barely informative signal.
pub const SURROGATE_BAD: usize = 1;

/// One strongly informative feature, one barely informative feature, and a
/// few moderately informative ones that only a full model can combine.
pub fn dependent_surrogate(n: usize, seed: u64) -> Result<Dataset> {
    two_gaussians(n, &[1.5, 0.3, 0.8, 0.8, 0.8, 0.0], seed)
}
