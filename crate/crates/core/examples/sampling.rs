//! Class-balanced batches: `m` samples from each of `batch_size / m` classes.

use std::collections::BTreeMap;

use mlkit::samplers::{m_per_class_batches, SamplerConfig};
use mlkit::{LabelVector, Result};

pub fn run_example() -> Result<Vec<Vec<usize>>> {
    let y = LabelVector::from_raw((0..40u64).map(|i| i % 5));
    let cfg = SamplerConfig {
        m: 4,
        batch_size: 12,
        epoch_length: 3,
        seed: 7,
    };
    let batches = m_per_class_batches(&y, &cfg)?;
    for batch in &batches {
        let mut per_class = BTreeMap::new();
        for &i in batch {
            *per_class.entry(y.original(y.get(i))).or_insert(0) += 1;
        }
        println!("{batch:?} -> {per_class:?}");
    }
    Ok(batches)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example().map(|_| ())
}
