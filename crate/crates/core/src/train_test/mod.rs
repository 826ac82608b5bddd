//! Training loop, hooks, checkpoints and evaluation.
//!
//! [`train`] runs seeded SGD with classical momentum over an
//! [`EmbedderModel`]; gradients flow from the loss to the embeddings and
//! then through the model by the chain rule. [`evaluate`] embeds a dataset,
//! scores it with an [`AccuracyCalculator`] and projects it to two
//! dimensions.

mod checkpoint;
mod model;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array, Array1, Array2, ArrayView2, Axis, Dimension};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use checkpoint::{checkpoint_load, checkpoint_save, Checkpoint, FORMAT_VERSION, MAGIC};
pub use model::{Architecture, EmbedderModel, ForwardCache, Gradients, Layer};

use crate::accuracy::AccuracyCalculator;
use crate::error::{Error, Result};
use crate::losses::{ClassWeights, LossConfig, LossKind};
use crate::miners::MinerConfig;
use crate::samplers::{m_per_class_batches, SamplerConfig};
use crate::types::{
    l2_normalize_rows, EmbeddingBatch, LabelVector, MetricReport, TupleSet, DEFAULT_EPS,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerConfig {
    pub learning_rate: f64,
    #[serde(default)]
    pub momentum: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub loss: LossConfig,
    #[serde(default)]
    pub miner: Option<MinerConfig>,
    pub sampler: SamplerConfig,
    pub optimizer: OptimizerConfig,
    pub epochs: usize,
    #[serde(default)]
    pub seed: u64,
    /// Save a checkpoint every this many epochs (and after the last one).
    #[serde(default = "default_checkpoint_every")]
    pub checkpoint_every: usize,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn default_checkpoint_every() -> usize {
    10
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("mlkit-output")
}

impl TrainConfig {
    pub fn new(
        loss: LossConfig,
        sampler: SamplerConfig,
        optimizer: OptimizerConfig,
        epochs: usize,
    ) -> Self {
        Self {
            loss,
            miner: None,
            sampler,
            optimizer,
            epochs,
            seed: 0,
            checkpoint_every: default_checkpoint_every(),
            output_dir: default_output_dir(),
        }
    }

    /// Checks everything that does not depend on the data.
    pub fn validate(&self) -> Result<()> {
        self.loss.validate()?;
        if let Some(m) = &self.miner {
            m.validate()?;
        }
        let OptimizerConfig {
            learning_rate,
            momentum,
        } = self.optimizer;
        if !(learning_rate.is_finite() && learning_rate >= 0.0) {
            return Err(Error::Config(format!(
                "learning_rate must be finite and >= 0, got {learning_rate}"
            )));
        }
        if !(0.0..1.0).contains(&momentum) {
            return Err(Error::Config(format!(
                "momentum must lie in [0, 1), got {momentum}"
            )));
        }
        if self.epochs == 0 || self.checkpoint_every == 0 {
            return Err(Error::Config(
                "epochs and checkpoint_every must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Counts of the tuples a miner returned for one batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TupleCounts {
    pub pos_pairs: usize,
    pub neg_pairs: usize,
    pub triplets: usize,
}

impl From<&TupleSet> for TupleCounts {
    fn from(t: &TupleSet) -> Self {
        Self {
            pos_pairs: t.pos_pairs.len(),
            neg_pairs: t.neg_pairs.len(),
            triplets: t.triplets.len(),
        }
    }
}

/// One optimizer step. `epoch` and `iteration` count from 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub epoch: usize,
    pub iteration: usize,
    pub loss: f64,
    pub mined: Option<TupleCounts>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochReport {
    pub epoch: usize,
    pub report: MetricReport,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainRecord {
    pub iterations: Vec<IterationRecord>,
    pub epoch_reports: Vec<EpochReport>,
    pub checkpoints: Vec<PathBuf>,
}

impl TrainRecord {
    /// Mean loss of every epoch seen so far, in order.
    pub fn epoch_mean_losses(&self) -> Vec<f64> {
        let mut out: Vec<(usize, f64, usize)> = Vec::new();
        for r in &self.iterations {
            match out.last_mut() {
                Some((e, sum, n)) if *e == r.epoch => {
                    *sum += r.loss;
                    *n += 1;
                }
                _ => out.push((r.epoch, r.loss, 1)),
            }
        }
        out.into_iter().map(|(_, s, n)| s / n as f64).collect()
    }
}

/// State visible to end-of-epoch hooks.
pub struct EpochContext<'a> {
    pub epoch: usize,
    pub epochs: usize,
    pub model: &'a EmbedderModel,
    pub class_weights: Option<&'a ClassWeights>,
}

/// Callbacks run synchronously on the training thread.
pub trait TrainHooks {
    fn end_of_iteration(&mut self, _it: &IterationRecord, _record: &mut TrainRecord) -> Result<()> {
        Ok(())
    }

    fn end_of_epoch(&mut self, _ctx: &EpochContext<'_>, _record: &mut TrainRecord) -> Result<()> {
        Ok(())
    }
}

impl TrainHooks for () {}

struct Momentum {
    layers: Vec<Layer>,
    class_weights: Option<Array2<f64>>,
}

fn sgd_step<D: Dimension>(
    param: &mut Array<f64, D>,
    velocity: &mut Array<f64, D>,
    grad: &Array<f64, D>,
    opt: &OptimizerConfig,
) {
    velocity.zip_mut_with(grad, |v, &g| *v = opt.momentum * *v + g);
    param.zip_mut_with(velocity, |p, &v| *p -= opt.learning_rate * v);
}

fn diverged(mut record: TrainRecord, it: IterationRecord) -> Error {
    record.iterations.push(it);
    Error::DivergenceDetected {
        epoch: it.epoch,
        iteration: it.iteration,
        record: Box::new(record),
    }
}

/// Trains `model` (and `class_weights` for classification losses) in place.
///
/// Each epoch draws `cfg.sampler.epoch_length` batches with a seed derived
/// from `cfg.seed`, so two runs with the same inputs are bit-identical.
pub fn train(
    model: &mut EmbedderModel,
    mut class_weights: Option<&mut ClassWeights>,
    data: &EmbeddingBatch,
    y: &LabelVector,
    cfg: &TrainConfig,
    hooks: &mut dyn TrainHooks,
) -> Result<TrainRecord> {
    cfg.validate()?;
    cfg.sampler.validate(y)?;
    if data.rows() != y.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} rows but {} labels",
            data.rows(),
            y.len()
        )));
    }
    let arch = model.architecture();
    if data.dim() != arch.d_in() {
        return Err(Error::DimensionMismatch {
            left: data.dim(),
            right: arch.d_in(),
        });
    }
    if cfg.loss.name == LossKind::ArcFace {
        let w = class_weights
            .as_deref()
            .ok_or_else(|| Error::Config("ArcFaceLoss training needs class weights".into()))?;
        if w.dim() != arch.d_out() {
            return Err(Error::DimensionMismatch {
                left: w.dim(),
                right: arch.d_out(),
            });
        }
        if w.classes() < y.num_classes() {
            return Err(Error::LabelOutOfRange {
                label: y.num_classes() - 1,
                classes: w.classes(),
            });
        }
    }

    let mut velocity = Momentum {
        layers: model
            .layers()
            .iter()
            .map(|l| Layer {
                weight: Array2::zeros(l.weight.raw_dim()),
                bias: Array1::zeros(l.bias.raw_dim()),
            })
            .collect(),
        class_weights: class_weights
            .as_deref()
            .map(|w| Array2::zeros(w.as_array().raw_dim())),
    };
    let opt = cfg.optimizer;
    let mut seeds = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut record = TrainRecord::default();

    for epoch in 1..=cfg.epochs {
        let sampler = SamplerConfig {
            seed: cfg.sampler.seed ^ seeds.next_u64(),
            ..cfg.sampler
        };
        for (i, batch) in m_per_class_batches(y, &sampler)?.into_iter().enumerate() {
            let mut it = IterationRecord {
                epoch,
                iteration: i + 1,
                loss: f64::NAN,
                mined: None,
            };
            let xb = data.select(&batch);
            let yb = y.select(&batch);
            let (emb, cache) = model.forward_cached(xb.view())?;
            let Ok(emb) = EmbeddingBatch::new(emb) else {
                return Err(diverged(record, it));
            };
            let mined = cfg.miner.as_ref().map(|m| m.mine(&emb, &yb)).transpose()?;
            it.mined = mined.as_ref().map(TupleCounts::from);
            let out = cfg
                .loss
                .compute(&emb, &yb, mined.as_ref(), class_weights.as_deref())?;
            it.loss = out.value;
            if !out.value.is_finite() {
                return Err(diverged(record, it));
            }

            let grads = model.backward(&cache, &out.grad_embeddings);
            for ((layer, v), g) in model
                .layers_mut()
                .iter_mut()
                .zip(&mut velocity.layers)
                .zip(&grads)
            {
                sgd_step(&mut layer.weight, &mut v.weight, &g.weight, &opt);
                sgd_step(&mut layer.bias, &mut v.bias, &g.bias, &opt);
            }
            if let (Some(w), Some(g), Some(v)) = (
                class_weights.as_deref_mut(),
                out.grad_weights.as_ref(),
                velocity.class_weights.as_mut(),
            ) {
                sgd_step(w.as_array_mut(), v, g, &opt);
            }
            if !model.is_finite() {
                return Err(diverged(record, it));
            }
            record.iterations.push(it);
            hooks.end_of_iteration(&it, &mut record)?;
        }
        let ctx = EpochContext {
            epoch,
            epochs: cfg.epochs,
            model,
            class_weights: class_weights.as_deref(),
        };
        hooks.end_of_epoch(&ctx, &mut record)?;
    }
    Ok(record)
}

/// Post-processing applied to embeddings before scoring.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    None,
    #[default]
    L2Normalize,
}

impl Transform {
    pub fn apply(self, x: &EmbeddingBatch) -> EmbeddingBatch {
        match self {
            Transform::None => x.clone(),
            Transform::L2Normalize => l2_normalize_rows(x, DEFAULT_EPS),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub report: MetricReport,
    /// Transformed embeddings that were scored.
    pub embeddings: EmbeddingBatch,
    /// Top-2 principal-component coordinates, one row per sample.
    pub projection: Array2<f64>,
}

/// Embeds `data`, applies `transform`, and scores every row against all
/// others with self-matches excluded.
pub fn evaluate(
    model: &EmbedderModel,
    data: &EmbeddingBatch,
    y: &LabelVector,
    calculator: &AccuracyCalculator,
    transform: Transform,
) -> Result<Evaluation> {
    let emb = EmbeddingBatch::new(model.forward(data.view())?)?;
    let emb = transform.apply(&emb);
    let report = calculator.get_accuracy(&emb, &emb, y, y, true)?;
    let projection = pca_projection(emb.view(), 2);
    Ok(Evaluation {
        report,
        embeddings: emb,
        projection,
    })
}

/// Coordinates of the centered rows of `x` along the leading `components`
/// principal axes. Axes beyond the data dimension are zero columns. Each
/// axis is signed so its largest-magnitude entry is positive.
pub fn pca_projection(x: ArrayView2<'_, f64>, components: usize) -> Array2<f64> {
    let (n, d) = x.dim();
    let mean = x.mean_axis(Axis(0)).unwrap_or_else(|| Array1::zeros(d));
    let centered = &x - &mean;
    let cov = centered.t().dot(&centered) / (n.max(2) - 1) as f64;
    let eig = SymmetricEigen::new(DMatrix::from_fn(d, d, |i, j| cov[[i, j]]));
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .total_cmp(&eig.eigenvalues[a])
            .then(a.cmp(&b))
    });
    let mut out = Array2::zeros((n, components));
    for (c, &k) in order.iter().take(components).enumerate() {
        let axis = eig.eigenvectors.column(k);
        let lead = axis.iter().copied().fold(
            0.0f64,
            |best, v| if v.abs() > best.abs() { v } else { best },
        );
        let sign = if lead < 0.0 { -1.0 } else { 1.0 };
        let axis = Array1::from_iter(axis.iter().map(|v| v * sign));
        out.column_mut(c).assign(&centered.dot(&axis));
    }
    out
}

/// Writes a JSON line per iteration, saves checkpoints, and optionally
/// scores a validation set at the end of every epoch.
pub struct HookContainer {
    dir: PathBuf,
    checkpoint_every: usize,
    log: BufWriter<File>,
    validation: Option<Validation>,
}

struct Validation {
    data: EmbeddingBatch,
    labels: LabelVector,
    calculator: AccuracyCalculator,
    transform: Transform,
}

pub const LOG_FILE: &str = "train_log.jsonl";

impl HookContainer {
    /// Creates `dir` if needed and truncates its log file.
    pub fn new(dir: impl AsRef<Path>, checkpoint_every: usize) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let log_path = dir.join(LOG_FILE);
        let log = File::create(&log_path).map_err(|e| Error::io(&log_path, e))?;
        Ok(Self {
            dir,
            checkpoint_every: checkpoint_every.max(1),
            log: BufWriter::new(log),
            validation: None,
        })
    }

    pub fn with_validation(
        mut self,
        data: EmbeddingBatch,
        labels: LabelVector,
        calculator: AccuracyCalculator,
        transform: Transform,
    ) -> Self {
        self.validation = Some(Validation {
            data,
            labels,
            calculator,
            transform,
        });
        self
    }

    pub fn checkpoint_path(&self, epoch: usize) -> PathBuf {
        self.dir.join(format!("epoch_{epoch:04}.ckpt"))
    }

    fn log_error(&self, e: std::io::Error) -> Error {
        Error::io(self.dir.join(LOG_FILE), e)
    }
}

impl TrainHooks for HookContainer {
    fn end_of_iteration(&mut self, it: &IterationRecord, _record: &mut TrainRecord) -> Result<()> {
        let line = serde_json::to_string(it).expect("iteration records serialize");
        writeln!(self.log, "{line}").map_err(|e| self.log_error(e))
    }

    fn end_of_epoch(&mut self, ctx: &EpochContext<'_>, record: &mut TrainRecord) -> Result<()> {
        self.log.flush().map_err(|e| self.log_error(e))?;
        if ctx.epoch.is_multiple_of(self.checkpoint_every) || ctx.epoch == ctx.epochs {
            let path = self.checkpoint_path(ctx.epoch);
            Checkpoint {
                model: ctx.model.clone(),
                class_weights: ctx.class_weights.cloned(),
            }
            .save(&path)?;
            record.checkpoints.push(path);
        }
        if let Some(v) = &self.validation {
            let eval = evaluate(ctx.model, &v.data, &v.labels, &v.calculator, v.transform)?;
            record.epoch_reports.push(EpochReport {
                epoch: ctx.epoch,
                report: eval.report,
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn pca_orders_axes_by_variance() {
        // spread along y is four times the spread along x
        let x = array![[1.0, 0.0], [-1.0, 0.0], [0.0, 4.0], [0.0, -4.0]];
        let p = pca_projection(x.view(), 2);
        assert_eq!(p.dim(), (4, 2));
        let expected = array![[0.0, 1.0], [0.0, -1.0], [4.0, 0.0], [-4.0, 0.0]];
        for (a, b) in p.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-12, "{p}");
        }
        // asking for more axes than dimensions pads with zeros
        let wide = pca_projection(x.view(), 3);
        assert!(wide.column(2).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn config_validation() {
        let sampler = SamplerConfig {
            m: 2,
            batch_size: 4,
            epoch_length: 1,
            seed: 0,
        };
        let loss = LossConfig::new(LossKind::Contrastive);
        let ok = TrainConfig::new(
            loss,
            sampler,
            OptimizerConfig {
                learning_rate: 0.0,
                momentum: 0.0,
            },
            1,
        );
        assert!(ok.validate().is_ok());
        let bad = [
            OptimizerConfig {
                learning_rate: -0.1,
                momentum: 0.0,
            },
            OptimizerConfig {
                learning_rate: f64::NAN,
                momentum: 0.0,
            },
            OptimizerConfig {
                learning_rate: 0.1,
                momentum: 1.0,
            },
        ];
        for optimizer in bad {
            assert!(matches!(
                TrainConfig {
                    optimizer,
                    ..ok.clone()
                }
                .validate(),
                Err(Error::Config(_))
            ));
        }
        assert!(TrainConfig { epochs: 0, ..ok }.validate().is_err());
    }
}
