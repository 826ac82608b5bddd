//! Training a small MLP embedder with a custom hook, then checkpointing and evaluating it.

use std::path::Path;

use mlkit::accuracy::{AccuracyCalculator, CalculatorConfig};
use mlkit::cli::SyntheticSpec;
use mlkit::distances::DistanceKind;
use mlkit::losses::{LossConfig, LossKind};
use mlkit::miners::MinerConfig;
use mlkit::samplers::SamplerConfig;
use mlkit::train_test::{
    checkpoint_load, checkpoint_save, evaluate, train, Architecture, EmbedderModel, EpochContext,
    OptimizerConfig, TrainConfig, TrainHooks, TrainRecord, Transform,
};
use mlkit::{MetricReport, Result};

/// Prints the mean loss of every tenth epoch.
struct Progress;

impl TrainHooks for Progress {
    fn end_of_epoch(&mut self, ctx: &EpochContext<'_>, record: &mut TrainRecord) -> Result<()> {
        if ctx.epoch.is_multiple_of(10) {
            let loss = record.epoch_mean_losses()[ctx.epoch - 1];
            println!("epoch {:>3}/{}  mean loss {loss:.5}", ctx.epoch, ctx.epochs);
        }
        Ok(())
    }
}

pub fn run_example(dir: &Path) -> Result<MetricReport> {
    let spec = SyntheticSpec {
        classes: 4,
        per_class: 40,
        d_in: 8,
        center_spread: 1.2,
        noise_dev: 1.0,
        seed: 1,
    };
    let (x, y) = spec.generate()?;

    let loss = LossConfig::new(LossKind::MultiSimilarity);
    let sampler = SamplerConfig {
        m: 5,
        batch_size: 20,
        epoch_length: 8,
        seed: 0,
    };
    let mut cfg = TrainConfig::new(
        loss,
        sampler,
        OptimizerConfig {
            learning_rate: 0.02,
            momentum: 0.9,
        },
        30,
    );
    cfg.miner = Some(MinerConfig::default());

    let mut model = EmbedderModel::new(
        Architecture::Mlp {
            d_in: 8,
            hidden: 16,
            d_out: 3,
        },
        5,
    )?;
    let record = train(&mut model, None, &x, &y, &cfg, &mut Progress)?;
    println!("{} iterations", record.iterations.len());

    let path = dir.join("mlp.ckpt");
    checkpoint_save(&model, &path)?;
    let restored = checkpoint_load(&path)?;
    assert_eq!(restored, model);

    let calc = AccuracyCalculator::new(CalculatorConfig {
        distance: DistanceKind::CosineSimilarity,
        ..CalculatorConfig::default()
    })?;
    let eval = evaluate(&restored, &x, &y, &calc, Transform::L2Normalize)?;
    println!("{}", eval.report.to_json());
    Ok(eval.report)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    let dir = std::env::temp_dir().join("mlkit-training-example");
    std::fs::create_dir_all(&dir).map_err(|e| mlkit::Error::io(&dir, e))?;
    run_example(&dir).map(|_| ())
}
