//! Config files, dataset I/O and the `train` / `eval` commands.
//!
//! A run is described by one TOML file:
//!
//! ```toml
//! [dataset]
//! kind = "synthetic"
//! classes = 3
//! per_class = 100
//! d_in = 10
//! center_spread = 5.0
//! noise_dev = 1.0
//! seed = 0
//!
//! [model]
//! kind = "linear"
//! d_out = 2
//!
//! [train]
//! epochs = 200
//! output_dir = "runs/demo"
//! loss = { name = "triplet_margin", distance = { kind = "cosine_similarity" } }
//! miner = { epsilon = 0.1 }
//! sampler = { m = 8, batch_size = 24, epoch_length = 12 }
//! optimizer = { learning_rate = 0.05, momentum = 0.9 }
//!
//! [calculator]
//! metrics = ["precision_at_1", "map_at_r"]
//! ```
//!
//! Unknown keys are rejected everywhere.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use ndarray::{Array2, ArrayView2};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::accuracy::{AccuracyCalculator, CalculatorConfig};
use crate::distances::DistanceKind;
use crate::error::{Error, Result};
use crate::losses::{ClassWeights, LossKind};
use crate::train_test::{
    evaluate, train, Architecture, Checkpoint, EmbedderModel, HookContainer, TrainConfig,
    TrainRecord, Transform, LOG_FILE,
};
use crate::types::{EmbeddingBatch, LabelVector, MetricReport};

pub const REPORT_FILE: &str = "report.json";
pub const PROJECTION_FILE: &str = "projection.csv";
pub const FINAL_CHECKPOINT: &str = "final.ckpt";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub classes: usize,
    pub per_class: usize,
    pub d_in: usize,
    pub center_spread: f64,
    pub noise_dev: f64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSpec {
    Synthetic(SyntheticSpec),
    Files {
        embeddings: PathBuf,
        labels: PathBuf,
    },
}

/// Embedder shape; the input width comes from the dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Linear { d_out: usize },
    Mlp { hidden: usize, d_out: usize },
}

impl ModelSpec {
    pub fn architecture(self, d_in: usize) -> Architecture {
        match self {
            ModelSpec::Linear { d_out } => Architecture::Linear { d_in, d_out },
            ModelSpec::Mlp { hidden, d_out } => Architecture::Mlp {
                d_in,
                hidden,
                d_out,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: DatasetSpec,
    pub model: ModelSpec,
    pub train: TrainConfig,
    #[serde(default)]
    pub calculator: CalculatorConfig,
    #[serde(default)]
    pub transform: Transform,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.classes == 0 || self.per_class == 0 || self.d_in == 0 {
            return Err(Error::Config(
                "synthetic classes, per_class and d_in must be positive".into(),
            ));
        }
        if !(self.center_spread.is_finite() && self.center_spread >= 0.0)
            || !(self.noise_dev.is_finite() && self.noise_dev >= 0.0)
        {
            return Err(Error::Config(
                "center_spread and noise_dev must be finite and >= 0".into(),
            ));
        }
        Ok(())
    }

    /// Class centers are `center_spread * N(0, I)`; points are
    /// `center + noise_dev * N(0, I)`, grouped by class.
    pub fn generate(&self) -> Result<(EmbeddingBatch, LabelVector)> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let unit = Normal::new(0.0, 1.0).expect("valid deviation");
        let centers = Array2::from_shape_simple_fn((self.classes, self.d_in), || {
            self.center_spread * unit.sample(&mut rng)
        });
        let n = self.classes * self.per_class;
        let mut x = Array2::zeros((n, self.d_in));
        let mut labels = Vec::with_capacity(n);
        for c in 0..self.classes {
            for i in 0..self.per_class {
                let row = c * self.per_class + i;
                for j in 0..self.d_in {
                    x[[row, j]] = centers[[c, j]] + self.noise_dev * unit.sample(&mut rng);
                }
                labels.push(c as u64);
            }
        }
        Ok((EmbeddingBatch::new(x)?, LabelVector::from_raw(labels)))
    }
}

impl DatasetSpec {
    pub fn load(&self) -> Result<(EmbeddingBatch, LabelVector)> {
        match self {
            DatasetSpec::Synthetic(spec) => spec.generate(),
            DatasetSpec::Files { embeddings, labels } => {
                let (x, y) = load_embeddings_csv(embeddings, Some(labels))?;
                Ok((x, y.expect("labels requested")))
            }
        }
    }
}

/// Reads a headerless numeric CSV and, if given, a labels file with one
/// integer per line. Line numbers in errors count from 1.
pub fn load_embeddings_csv(
    path: impl AsRef<Path>,
    labels_path: Option<&Path>,
) -> Result<(EmbeddingBatch, Option<LabelVector>)> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let mut values = Vec::new();
    let mut width = None;
    let mut rows = 0;
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            return Err(Error::RaggedRow {
                path: path.to_path_buf(),
                line,
                expected,
                found: record.len(),
            });
        }
        for field in &record {
            let v: f64 = field.parse().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                line,
                message: format!("`{field}` is not a number"),
            })?;
            values.push(v);
        }
        rows += 1;
    }
    let Some(width) = width else {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: "no rows".into(),
        });
    };
    let x = Array2::from_shape_vec((rows, width), values).expect("row widths checked");
    let batch = EmbeddingBatch::new(x)?;
    let labels = match labels_path {
        None => None,
        Some(lp) => {
            let y = load_labels(lp)?;
            if y.len() != batch.rows() {
                return Err(Error::ShapeMismatch(format!(
                    "{} has {} rows but {} has {} labels",
                    path.display(),
                    batch.rows(),
                    lp.display(),
                    y.len()
                )));
            }
            Some(y)
        }
    };
    Ok((batch, labels))
}

/// One unsigned integer label per line.
pub fn load_labels(path: impl AsRef<Path>) -> Result<LabelVector> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut raw = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let token = line.trim();
        raw.push(token.parse::<u64>().map_err(|_| Error::Parse {
            path: path.to_path_buf(),
            line: i as u64 + 1,
            message: format!("`{token}` is not a non-negative integer label"),
        })?);
    }
    if raw.is_empty() {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: "no labels".into(),
        });
    }
    Ok(LabelVector::from_raw(raw))
}

/// Writes rows with 17 significant digits, enough to reload every value exactly.
pub fn write_embeddings_csv(path: impl AsRef<Path>, x: ArrayView2<'_, f64>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for row in x.rows() {
        let fields: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn write_labels(path: impl AsRef<Path>, y: &LabelVector) -> Result<()> {
    let path = path.as_ref();
    let out: String = y.originals().iter().map(|l| format!("{l}\n")).collect();
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Everything a validated run needs before training starts.
pub struct PreparedRun {
    pub config: RunConfig,
    pub data: EmbeddingBatch,
    pub labels: LabelVector,
    pub model: EmbedderModel,
    pub class_weights: Option<ClassWeights>,
    pub calculator: AccuracyCalculator,
}

#[derive(Debug)]
pub struct RunArtifacts {
    pub record: TrainRecord,
    pub report: MetricReport,
    pub model: EmbedderModel,
    pub output_dir: PathBuf,
}

/// Loads data and checks every part of the config against it.
pub fn prepare_run(config: RunConfig) -> Result<PreparedRun> {
    let (data, labels) = config.dataset.load()?;
    config.train.validate()?;
    config.train.sampler.validate(&labels)?;
    let arch = config.model.architecture(data.dim());
    let mut seeds = ChaCha8Rng::seed_from_u64(config.train.seed);
    let model = EmbedderModel::new(arch, seeds.next_u64())?;
    let class_weights = (config.train.loss.name == LossKind::ArcFace)
        .then(|| ClassWeights::init(labels.num_classes(), arch.d_out(), &mut seeds));
    let calculator = AccuracyCalculator::new(config.calculator.clone())?;
    Ok(PreparedRun {
        config,
        data,
        labels,
        model,
        class_weights,
        calculator,
    })
}

/// Trains, evaluates, and writes the log, checkpoints, report and projection.
pub fn execute_run(run: PreparedRun) -> Result<RunArtifacts> {
    let PreparedRun {
        config,
        data,
        labels,
        mut model,
        mut class_weights,
        calculator,
    } = run;
    let dir = config.train.output_dir.clone();
    let mut hooks = HookContainer::new(&dir, config.train.checkpoint_every)?;
    let record = train(
        &mut model,
        class_weights.as_mut(),
        &data,
        &labels,
        &config.train,
        &mut hooks,
    )?;
    Checkpoint {
        model: model.clone(),
        class_weights,
    }
    .save(dir.join(FINAL_CHECKPOINT))?;
    let eval = evaluate(&model, &data, &labels, &calculator, config.transform)?;
    let report_path = dir.join(REPORT_FILE);
    fs::write(&report_path, eval.report.to_json() + "\n")
        .map_err(|e| Error::io(&report_path, e))?;
    write_embeddings_csv(dir.join(PROJECTION_FILE), eval.projection.view())?;
    Ok(RunArtifacts {
        record,
        report: eval.report,
        model,
        output_dir: dir,
    })
}

/// Exit code 0 on success, 1 for config or input errors, 2 for failures
/// during training or output.
pub fn cmd_train(config_path: &Path, err: &mut dyn Write) -> i32 {
    let prepared = RunConfig::load(config_path).and_then(prepare_run);
    let run = match prepared {
        Ok(run) => run,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return 1;
        }
    };
    match execute_run(run) {
        Ok(art) => {
            let _ = writeln!(
                err,
                "wrote {}, {} and {} to {}",
                LOG_FILE,
                REPORT_FILE,
                FINAL_CHECKPOINT,
                art.output_dir.display()
            );
            0
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            2
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvalArgs {
    pub embeddings: PathBuf,
    pub labels: PathBuf,
    pub k: Option<usize>,
    pub metrics: Option<Vec<String>>,
    pub distance: Option<DistanceKind>,
}

pub fn eval_report(args: &EvalArgs) -> Result<MetricReport> {
    let (x, y) = load_embeddings_csv(&args.embeddings, Some(&args.labels))?;
    let y = y.expect("labels requested");
    let mut cfg = CalculatorConfig {
        k: args.k,
        metrics: args.metrics.clone(),
        ..CalculatorConfig::default()
    };
    if let Some(d) = args.distance {
        cfg.distance = d;
    }
    AccuracyCalculator::new(cfg)?.get_accuracy(&x, &x, &y, &y, true)
}

/// Prints the report as JSON to `out`; exit code 1 on any error.
pub fn cmd_eval(args: &EvalArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match eval_report(args) {
        Ok(report) => {
            let _ = writeln!(out, "{}", report.to_json());
            0
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}
