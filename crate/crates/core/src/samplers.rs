//! Batch formation.
//!
//! [`m_per_class_batches`] draws `batch_size / m` distinct classes per batch
//! and `m` members of each. The generator is ChaCha8 seeded from the config;
//! selections use a partial Fisher-Yates shuffle driven by `random_range`, so
//! a given seed always yields the same batches.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::LabelVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerConfig {
    /// Samples per class per batch.
    pub m: usize,
    pub batch_size: usize,
    /// Number of batches per epoch.
    pub epoch_length: usize,
    #[serde(default)]
    pub seed: u64,
}

impl SamplerConfig {
    pub fn validate(&self, labels: &LabelVector) -> Result<()> {
        if self.m == 0 || self.batch_size == 0 || self.epoch_length == 0 {
            return Err(Error::Config(
                "sampler m, batch_size and epoch_length must be positive".into(),
            ));
        }
        if !self.batch_size.is_multiple_of(self.m) {
            return Err(Error::Config(format!(
                "batch_size {} is not divisible by m = {}",
                self.batch_size, self.m
            )));
        }
        let classes = labels.distinct_present();
        if self.batch_size / self.m > classes {
            return Err(Error::Config(format!(
                "batch of {} classes requested but only {classes} are present",
                self.batch_size / self.m
            )));
        }
        Ok(())
    }
}

/// Moves `k` uniformly chosen items to the front of `items` and returns them.
fn partial_shuffle<'a, T, R: Rng>(items: &'a mut [T], k: usize, rng: &mut R) -> &'a [T] {
    for i in 0..k {
        let j = rng.random_range(i..items.len());
        items.swap(i, j);
    }
    &items[..k]
}

/// Produces `cfg.epoch_length` batches of indices into `labels`.
///
/// Classes with fewer than `m` members are sampled with replacement.
pub fn m_per_class_batches(labels: &LabelVector, cfg: &SamplerConfig) -> Result<Vec<Vec<usize>>> {
    cfg.validate(labels)?;
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); labels.num_classes()];
    for (i, &c) in labels.ids().iter().enumerate() {
        members[c].push(i);
    }
    let mut classes: Vec<usize> = (0..members.len())
        .filter(|&c| !members[c].is_empty())
        .collect();
    let per_batch = cfg.batch_size / cfg.m;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut batches = Vec::with_capacity(cfg.epoch_length);
    for _ in 0..cfg.epoch_length {
        let chosen = partial_shuffle(&mut classes, per_batch, &mut rng).to_vec();
        let mut batch = Vec::with_capacity(cfg.batch_size);
        for c in chosen {
            let pool = &mut members[c];
            if pool.len() >= cfg.m {
                batch.extend_from_slice(partial_shuffle(pool, cfg.m, &mut rng));
            } else {
                batch.extend((0..cfg.m).map(|_| pool[rng.random_range(0..pool.len())]));
            }
        }
        batches.push(batch);
    }
    Ok(batches)
}
