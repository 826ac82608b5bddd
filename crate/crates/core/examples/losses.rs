//! Every loss at its defaults on one small batch, with gradient norms.

use mlkit::losses::{ClassWeights, LossConfig, LossKind};
use mlkit::{EmbeddingBatch, LabelVector, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn run_example() -> Result<Vec<(LossKind, f64)>> {
    let x = EmbeddingBatch::from_rows(&[
        vec![1.0, 0.2, -0.3],
        vec![0.2, 0.9, -0.1],
        vec![-0.2, 1.0, 0.4],
        vec![0.6, 0.3, 0.6],
        vec![0.3, -0.9, 1.0],
        vec![0.9, -0.4, 0.2],
    ])?;
    let y = LabelVector::from_raw([10, 10, 20, 20, 30, 30]);
    let weights = ClassWeights::init(y.num_classes(), x.dim(), &mut ChaCha8Rng::seed_from_u64(0));

    let mut values = Vec::new();
    for kind in LossKind::ALL {
        let cfg = LossConfig::new(kind);
        let w = kind.is_classification().then_some(&weights);
        let out = cfg.compute(&x, &y, None, w)?;
        let norm = out
            .grad_embeddings
            .iter()
            .map(|g| g * g)
            .sum::<f64>()
            .sqrt();
        println!(
            "{kind:<20} value {:.6}  |grad| {norm:.6}  distance {}",
            out.value, cfg.distance
        );
        values.push((kind, out.value));
    }
    Ok(values)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example().map(|_| ())
}
