//! Synthetic fair dataset generator.
//!
//! Construction: every instance draws six standard-normal features and a
//! score that mixes the feature mean with independent noise (about 80% of
//! score variance explained by features, so learners can do well without
//! being perfect). Rows are then sorted by score and consecutive rank pairs
//! are split randomly between the two groups, one row each. With `n`
//! divisible by four the label threshold sits exactly at the median midpoint,
//! every rank pair lands wholly on one side of it, and therefore:
//!
//! - each group has exactly `n/2` rows,
//! - the base rate is exactly one half,
//! - the label parity gap is exactly zero.
//!
//! That makes the generator a controlled starting point for bias injection:
//! anything nonzero measured later was put there by the injection, not by
//! the data.

use crate::data::{Dataset, Feature, FeatureData};
use crate::error::Error;
use crate::scalar::Scalar;
use crate::seeds;
use crate::Result;
use rand::Rng;

pub const DEFAULT_SYNTHETIC_N: usize = 5000;
const N_FEATURES: usize = 6;

/// Generates the paired-rank synthetic dataset. `n` must be a positive
/// multiple of 4 (so the median midpoint splits whole rank pairs).
pub fn make_synthetic<S: Scalar>(n: usize, seed: u64) -> Result<Dataset<S>> {
    if n < 8 || n % 4 != 0 {
        return Err(Error::InvalidInput(format!(
            "synthetic size must be a multiple of 4 and at least 8, got {n}"
        )));
    }
    let feature_seed = seeds::mix_str(seed, "synthetic-features");
    let noise_seed = seeds::mix_str(seed, "synthetic-score-noise");
    let ids: Vec<u64> = (0..n as u64).collect();
    let mut features_raw: Vec<Vec<f64>> = vec![Vec::with_capacity(n); N_FEATURES];
    let mut score: Vec<f64> = Vec::with_capacity(n);
    let explained = 0.8f64.sqrt();
    let unexplained = 0.2f64.sqrt();
    for &id in &ids {
        let mut sum = 0.0;
        for (j, col) in features_raw.iter_mut().enumerate() {
            let x = seeds::per_id_normal(seeds::mix(feature_seed, j as u64), id);
            col.push(x);
            sum += x;
        }
        let signal = sum / (N_FEATURES as f64).sqrt();
        let eta = seeds::per_id_normal(noise_seed, id);
        score.push(signal * explained + eta * unexplained);
    }

    // Sort ranks by score and deal each consecutive pair randomly, one row to
    // each group.
    let mut ranks: Vec<usize> = (0..n).collect();
    ranks.sort_by(|&a, &b| score[a].total_cmp(&score[b]).then(a.cmp(&b)));
    let mut sensitive = vec![0u8; n];
    let mut rng = seeds::rng(seeds::mix_str(seed, "synthetic-pairing"));
    for pair in ranks.chunks(2) {
        let flip: bool = rng.gen();
        sensitive[pair[0]] = u8::from(flip);
        sensitive[pair[1]] = u8::from(!flip);
    }
    let threshold = (score[ranks[n / 2 - 1]] + score[ranks[n / 2]]) / 2.0;
    let label: Vec<u8> = score.iter().map(|&s| u8::from(s >= threshold)).collect();

    let mut features: Vec<Feature<S>> = features_raw
        .into_iter()
        .enumerate()
        .map(|(j, col)| Feature {
            name: format!("x{j}"),
            sensitive: false,
            data: FeatureData::Numeric(col.into_iter().map(S::from_f64_lossy).collect()),
        })
        .collect();
    features.push(Feature {
        name: "group".into(),
        sensitive: true,
        data: FeatureData::Numeric(sensitive.iter().map(|&a| S::from_u8(a).unwrap()).collect()),
    });

    Dataset::new(
        "synthetic",
        ids,
        sensitive,
        score.into_iter().map(S::from_f64_lossy).collect(),
        label,
        vec![S::one(); n],
        S::from_f64_lossy(threshold),
        features,
    )
}
