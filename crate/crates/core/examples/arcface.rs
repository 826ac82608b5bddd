//! Classification-style training: ArcFace learns class weights next to the embedder.

use mlkit::cli::SyntheticSpec;
use mlkit::losses::{arcface_logits, ClassWeights, LossConfig, LossKind};
use mlkit::samplers::SamplerConfig;
use mlkit::train_test::{train, Architecture, EmbedderModel, OptimizerConfig, TrainConfig};
use mlkit::{l2_normalize_rows, EmbeddingBatch, Result, DEFAULT_EPS};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Training-set accuracy of predicting the class whose weight row has the largest cosine.
pub fn run_example() -> Result<f64> {
    // the margin shifts only the true-class logit
    println!(
        "logits with margin: {:?}",
        arcface_logits(&[0.8, 0.3], 0, 0.5, 64.0)
    );

    let spec = SyntheticSpec {
        classes: 3,
        per_class: 30,
        d_in: 6,
        center_spread: 4.0,
        noise_dev: 1.0,
        seed: 2,
    };
    let (x, y) = spec.generate()?;
    let loss = LossConfig::new(LossKind::ArcFace).with_param("scale", 16.0);
    let sampler = SamplerConfig {
        m: 6,
        batch_size: 18,
        epoch_length: 5,
        seed: 0,
    };
    let cfg = TrainConfig::new(
        loss,
        sampler,
        OptimizerConfig {
            learning_rate: 0.01,
            momentum: 0.9,
        },
        20,
    );

    let mut model = EmbedderModel::new(Architecture::Linear { d_in: 6, d_out: 4 }, 0)?;
    let mut weights = ClassWeights::init(y.num_classes(), 4, &mut ChaCha8Rng::seed_from_u64(0));
    let record = train(&mut model, Some(&mut weights), &x, &y, &cfg, &mut ())?;
    let losses = record.epoch_mean_losses();
    println!(
        "mean loss: first epoch {:.4}, last epoch {:.4}",
        losses[0],
        losses[losses.len() - 1]
    );

    let emb = l2_normalize_rows(&EmbeddingBatch::new(model.forward(x.view())?)?, DEFAULT_EPS);
    let w = l2_normalize_rows(
        &EmbeddingBatch::new(weights.as_array().clone())?,
        DEFAULT_EPS,
    );
    let scores = emb.view().dot(&w.view().t());
    let correct = scores
        .rows()
        .into_iter()
        .zip(y.ids())
        .filter(|(row, &label)| {
            let best = (0..row.len()).fold(0, |b, j| if row[j] > row[b] { j } else { b });
            best == label
        })
        .count();
    let accuracy = correct as f64 / y.len() as f64;
    println!("accuracy {accuracy:.3}");
    Ok(accuracy)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example().map(|_| ())
}
