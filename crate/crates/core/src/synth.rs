//! Seeded synthetic data: grouped lognormal samples and noisy K–S points.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, LogNormal, Normal};

use crate::error::{Error, Result};
use crate::ingest::GroupedDataset;
use crate::moments::SKPoint;
use crate::urnsim::rng_for;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticGroupsConfig {
    pub n_groups: usize,
    pub min_size: usize,
    pub max_size: usize,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub seed: u64,
}

impl Default for SyntheticGroupsConfig {
    fn default() -> Self {
        SyntheticGroupsConfig {
            n_groups: 110,
            min_size: 20,
            max_size: 320,
            sigma_min: 1.0,
            sigma_max: 2.0,
            seed: 1,
        }
    }
}

/// Groups `G001..` of lognormal values with a per-group log-scale spread.
pub fn synthetic_groups(config: &SyntheticGroupsConfig) -> Result<GroupedDataset> {
    if config.n_groups == 0 || config.min_size == 0 || config.min_size > config.max_size {
        return Err(Error::InvalidArgument(
            "invalid synthetic group layout".into(),
        ));
    }
    if !(config.sigma_min > 0.0 && config.sigma_min <= config.sigma_max) {
        return Err(Error::InvalidArgument(
            "invalid synthetic sigma range".into(),
        ));
    }
    let mut rng = rng_for(config.seed);
    let mut groups = BTreeMap::new();
    for g in 0..config.n_groups {
        let size = rng.random_range(config.min_size..=config.max_size);
        let sigma = rng.random_range(config.sigma_min..=config.sigma_max);
        let mu = rng.random_range(8.0..10.0);
        let dist = LogNormal::new(mu, sigma).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        let values: Vec<f64> = (0..size).map(|_| dist.sample(&mut rng)).collect();
        groups.insert(format!("G{:03}", g + 1), values);
    }
    Ok(GroupedDataset {
        groups,
        value_label: "value".into(),
    })
}

/// `n` points with `S ~ U[s_min, s_max]` and `K = p S^ν + q + N(0, σ²)`.
#[allow(clippy::too_many_arguments)]
pub fn noisy_sk_points(
    n: usize,
    p: f64,
    nu: f64,
    q: f64,
    noise_sd: f64,
    s_range: (f64, f64),
    seed: u64,
) -> Result<Vec<SKPoint>> {
    let noise = Normal::new(0.0, noise_sd).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut rng = rng_for(seed);
    Ok((0..n)
        .map(|i| {
            let s = rng.random_range(s_range.0..=s_range.1);
            let k = p * s.powf(nu) + q + noise.sample(&mut rng);
            SKPoint {
                group_key: format!("P{:03}", i + 1),
                s,
                k,
                n: 100,
            }
        })
        .collect())
}
