//! Metric learning losses.
//!
//! A loss is configured by a [`LossConfig`]: the loss kind, the distance it
//! reads, the reducer that collapses its per-tuple values, and optional
//! embedding/weight regularizers. Computing it runs the full pipeline
//!
//! ```text
//! tuples -> distance matrix -> per-tuple losses -> reducer -> + reg_weight * reduce(regularizer)
//! ```
//!
//! and returns the scalar together with exact (sub)gradients.
//!
//! Tuple losses are written against a [`DistanceMatrix`]: each term records
//! its partial derivatives with respect to the matrix entries it read, the
//! reducer supplies `d value / d term`, and [`distances::backward`] carries the
//! accumulated matrix gradient back to the embeddings.

mod arcface;
mod circle;
mod contrastive;
mod multi_similarity;
mod ntxent;
mod triplet;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView2};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::distances::{
    self, check_distance_compatibility, pairwise_matrix, DistanceKind, DistanceMatrix,
};
use crate::error::{Error, Result};
use crate::miners::{all_tuples, pairs_to_triplets, triplets_to_pairs};
use crate::reducers::{ReducedBundle, ReducerKind};
use crate::regularizers::RegularizerKind;
use crate::types::{
    normalize_rows, validate_batch, EmbeddingBatch, LabelVector, LossBundle, TupleArity, TupleSet,
    DEFAULT_EPS,
};

pub use arcface::arcface_logits;
pub use circle::Circle;
pub use contrastive::Contrastive;
pub use multi_similarity::MultiSimilarity;
pub use ntxent::NtXent;
pub use triplet::TripletMargin;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    TripletMargin,
    Contrastive,
    #[serde(rename = "ntxent")]
    NtXent,
    MultiSimilarity,
    Circle,
    #[serde(rename = "arcface")]
    ArcFace,
}

impl LossKind {
    pub const ALL: [LossKind; 6] = [
        LossKind::TripletMargin,
        LossKind::Contrastive,
        LossKind::NtXent,
        LossKind::MultiSimilarity,
        LossKind::Circle,
        LossKind::ArcFace,
    ];

    /// Hyperparameter names and their defaults.
    pub fn default_hyperparameters(self) -> &'static [(&'static str, f64)] {
        match self {
            LossKind::TripletMargin => &[("margin", 0.05)],
            LossKind::Contrastive => &[("pos_margin", 0.0), ("neg_margin", 1.0)],
            LossKind::NtXent => &[("temperature", 0.07)],
            LossKind::MultiSimilarity => &[("alpha", 2.0), ("beta", 50.0), ("base", 0.5)],
            LossKind::Circle => &[("m", 0.4), ("gamma", 80.0)],
            LossKind::ArcFace => &[("margin", 0.5), ("scale", 64.0)],
        }
    }

    pub fn default_distance(self) -> DistanceKind {
        match self {
            LossKind::TripletMargin | LossKind::Contrastive => DistanceKind::EUCLIDEAN,
            _ => DistanceKind::CosineSimilarity,
        }
    }

    pub fn is_classification(self) -> bool {
        self == LossKind::ArcFace
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LossKind::TripletMargin => "TripletMarginLoss",
            LossKind::Contrastive => "ContrastiveLoss",
            LossKind::NtXent => "NTXentLoss",
            LossKind::MultiSimilarity => "MultiSimilarityLoss",
            LossKind::Circle => "CircleLoss",
            LossKind::ArcFace => "ArcFaceLoss",
        })
    }
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        let key = key.strip_suffix("loss").unwrap_or(&key);
        Ok(match key {
            "tripletmargin" | "triplet" => LossKind::TripletMargin,
            "contrastive" => LossKind::Contrastive,
            "ntxent" => LossKind::NtXent,
            "multisimilarity" => LossKind::MultiSimilarity,
            "circle" => LossKind::Circle,
            "arcface" => LossKind::ArcFace,
            _ => return Err(Error::InvalidParameter(format!("unknown loss `{s}`"))),
        })
    }
}

/// A configured loss.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "LossConfigRepr")]
pub struct LossConfig {
    pub name: LossKind,
    pub distance: DistanceKind,
    pub reducer: ReducerKind,
    pub embedding_regularizer: Option<RegularizerKind>,
    pub embedding_reg_weight: f64,
    pub weight_regularizer: Option<RegularizerKind>,
    pub weight_reg_weight: f64,
    pub hyperparameters: BTreeMap<String, f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LossConfigRepr {
    name: LossKind,
    #[serde(default)]
    distance: Option<DistanceKind>,
    #[serde(default)]
    reducer: ReducerKind,
    #[serde(default)]
    embedding_regularizer: Option<RegularizerKind>,
    #[serde(default = "one")]
    embedding_reg_weight: f64,
    #[serde(default)]
    weight_regularizer: Option<RegularizerKind>,
    #[serde(default = "one")]
    weight_reg_weight: f64,
    #[serde(default)]
    hyperparameters: BTreeMap<String, f64>,
}

fn one() -> f64 {
    1.0
}

impl From<LossConfigRepr> for LossConfig {
    fn from(r: LossConfigRepr) -> Self {
        LossConfig {
            name: r.name,
            distance: r.distance.unwrap_or_else(|| r.name.default_distance()),
            reducer: r.reducer,
            embedding_regularizer: r.embedding_regularizer,
            embedding_reg_weight: r.embedding_reg_weight,
            weight_regularizer: r.weight_regularizer,
            weight_reg_weight: r.weight_reg_weight,
            hyperparameters: r.hyperparameters,
        }
    }
}

impl LossConfig {
    /// Defaults for `name`: its default distance, a mean reducer, no regularizers.
    pub fn new(name: LossKind) -> Self {
        Self {
            name,
            distance: name.default_distance(),
            reducer: ReducerKind::mean(),
            embedding_regularizer: None,
            embedding_reg_weight: 1.0,
            weight_regularizer: None,
            weight_reg_weight: 1.0,
            hyperparameters: BTreeMap::new(),
        }
    }

    pub fn with_distance(mut self, distance: DistanceKind) -> Self {
        self.distance = distance;
        self
    }

    pub fn with_reducer(mut self, reducer: ReducerKind) -> Self {
        self.reducer = reducer;
        self
    }

    pub fn with_param(mut self, key: &str, value: f64) -> Self {
        self.hyperparameters.insert(key.to_string(), value);
        self
    }

    pub fn with_embedding_regularizer(mut self, reg: RegularizerKind, weight: f64) -> Self {
        self.embedding_regularizer = Some(reg);
        self.embedding_reg_weight = weight;
        self
    }

    pub fn with_weight_regularizer(mut self, reg: RegularizerKind, weight: f64) -> Self {
        self.weight_regularizer = Some(reg);
        self.weight_reg_weight = weight;
        self
    }

    /// Value of hyperparameter `key`, falling back to the loss default.
    pub fn param(&self, key: &str) -> f64 {
        if let Some(v) = self.hyperparameters.get(key) {
            return *v;
        }
        self.name
            .default_hyperparameters()
            .iter()
            .find(|(k, _)| *k == key)
            .map(|(_, v)| *v)
            .unwrap_or_else(|| panic!("{} has no hyperparameter `{key}`", self.name))
    }

    pub fn validate(&self) -> Result<()> {
        let known = self.name.default_hyperparameters();
        for (key, value) in &self.hyperparameters {
            if !known.iter().any(|(k, _)| k == key) {
                let names: Vec<&str> = known.iter().map(|(k, _)| *k).collect();
                return Err(Error::InvalidParameter(format!(
                    "{} has no hyperparameter `{key}` (expected one of {names:?})",
                    self.name
                )));
            }
            if !value.is_finite() {
                return Err(Error::InvalidParameter(format!("`{key}` must be finite")));
            }
        }
        let require = |ok: bool, msg: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{}: {msg}", self.name)))
            }
        };
        match self.name {
            LossKind::NtXent => {
                require(self.param("temperature") > 0.0, "temperature must be > 0")?
            }
            LossKind::MultiSimilarity => {
                require(self.param("alpha") > 0.0, "alpha must be > 0")?;
                require(self.param("beta") > 0.0, "beta must be > 0")?;
            }
            LossKind::Circle => {
                let m = self.param("m");
                require(m > 0.0 && m < 1.0, "m must lie in (0, 1)")?;
                require(self.param("gamma") > 0.0, "gamma must be > 0")?;
            }
            LossKind::ArcFace => {
                require(self.param("margin") >= 0.0, "margin must be >= 0")?;
                require(self.param("scale") > 0.0, "scale must be > 0")?;
            }
            LossKind::TripletMargin | LossKind::Contrastive => {}
        }
        require(
            self.embedding_reg_weight >= 0.0 && self.embedding_reg_weight.is_finite(),
            "embedding_reg_weight must be finite and >= 0",
        )?;
        require(
            self.weight_reg_weight >= 0.0 && self.weight_reg_weight.is_finite(),
            "weight_reg_weight must be finite and >= 0",
        )?;
        if let Some(reg) = &self.embedding_regularizer {
            reg.validate()?;
            require(
                !matches!(reg, RegularizerKind::RegularFace),
                "RegularFace regularizes class weights, not embeddings",
            )?;
        }
        if let Some(reg) = &self.weight_regularizer {
            reg.validate()?;
            require(
                self.name.is_classification(),
                "weight_regularizer is only available for classification losses",
            )?;
        }
        self.reducer.validate()?;
        check_distance_compatibility(self.name, self.distance)
    }

    /// Runs the loss. `weights` is required for classification losses and ignored otherwise.
    pub fn compute(
        &self,
        x: &EmbeddingBatch,
        y: &LabelVector,
        tuples: Option<&TupleSet>,
        weights: Option<&ClassWeights>,
    ) -> Result<LossOutput> {
        match self.name {
            LossKind::ArcFace => {
                let w = weights.ok_or_else(|| {
                    Error::InvalidParameter("ArcFaceLoss needs class weights".into())
                })?;
                arcface::compute(x, y, w, tuples, self)
            }
            LossKind::TripletMargin => {
                run_tuple_loss(&TripletMargin::from_config(self), x, y, tuples, self)
            }
            LossKind::Contrastive => {
                run_tuple_loss(&Contrastive::from_config(self), x, y, tuples, self)
            }
            LossKind::NtXent => run_tuple_loss(&NtXent::from_config(self), x, y, tuples, self),
            LossKind::MultiSimilarity => {
                run_tuple_loss(&MultiSimilarity::from_config(self), x, y, tuples, self)
            }
            LossKind::Circle => run_tuple_loss(&Circle::from_config(self), x, y, tuples, self),
        }
    }

    fn expect(&self, kind: LossKind) -> Result<()> {
        if self.name == kind {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "config is for {}, not {kind}",
                self.name
            )))
        }
    }
}

/// One learned weight row per class.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassWeights {
    w: Array2<f64>,
}

impl ClassWeights {
    pub fn new(w: Array2<f64>) -> Result<Self> {
        if w.nrows() == 0 || w.ncols() == 0 {
            return Err(Error::ShapeMismatch(
                "class weights must be non-empty".into(),
            ));
        }
        if w.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "class weights must be finite".into(),
            ));
        }
        Ok(Self { w })
    }

    /// Zero-mean Gaussian entries (deviation 0.01), then unit rows.
    pub fn init<R: Rng + ?Sized>(classes: usize, dim: usize, rng: &mut R) -> Self {
        let normal = Normal::new(0.0, 0.01).expect("valid deviation");
        let raw = Array2::from_shape_simple_fn((classes, dim), || normal.sample(rng));
        Self {
            w: normalize_rows(raw.view(), DEFAULT_EPS),
        }
    }

    pub fn classes(&self) -> usize {
        self.w.nrows()
    }

    pub fn dim(&self) -> usize {
        self.w.ncols()
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.w.view()
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.w
    }

    pub(crate) fn as_array_mut(&mut self) -> &mut Array2<f64> {
        &mut self.w
    }
}

/// The loss value, its gradients, and the pre-reduction record.
#[derive(Debug, Clone, PartialEq)]
pub struct LossOutput {
    pub value: f64,
    pub grad_embeddings: Array2<f64>,
    pub grad_weights: Option<Array2<f64>>,
    pub bundle: LossBundle,
    pub embedding_reg_bundle: LossBundle,
    pub weight_reg_bundle: Option<LossBundle>,
    /// Tuples the loss consumed, after defaulting and arity conversion.
    pub tuples: Option<TupleSet>,
    /// Smallest distance of any hinge/clamp argument from its kink; `inf` for smooth losses.
    pub kink_gap: f64,
}

/// `reduce(tuple) + embedding_reg_weight * reduce(reg) [+ weight_reg_weight * reduce(weight_reg)]`.
pub fn compose_final_loss(
    tuple_bundle: &LossBundle,
    reg_bundle: &LossBundle,
    weight_reg_bundle: Option<&LossBundle>,
    cfg: &LossConfig,
) -> f64 {
    let mut value = cfg.reducer.reduce(tuple_bundle)
        + cfg.embedding_reg_weight * cfg.reducer.reduce(reg_bundle);
    if let Some(b) = weight_reg_bundle {
        value += cfg.weight_reg_weight * cfg.reducer.reduce(b);
    }
    value
}

/// Partial derivatives `d term / d M[i][j]` of one loss term.
pub(crate) type Partials = Vec<(usize, usize, f64)>;

/// Terms of a tuple loss together with their partials.
#[derive(Debug, Default)]
pub struct Evaluated {
    pub bundle: LossBundle,
    pub(crate) element: Vec<Partials>,
    pub(crate) pos_pair: Vec<Partials>,
    pub(crate) neg_pair: Vec<Partials>,
    pub(crate) triplet: Vec<Partials>,
    pub kink_gap: f64,
}

impl Evaluated {
    pub(crate) fn new() -> Self {
        Self {
            kink_gap: f64::INFINITY,
            ..Self::default()
        }
    }

    pub(crate) fn note_kink(&mut self, argument: f64) {
        self.kink_gap = self.kink_gap.min(argument.abs());
    }

    /// `d(sum_t w_t * v_t) / dM` accumulated into `grad`.
    pub(crate) fn scatter(&self, weights: &ReducedBundle, grad: &mut Array2<f64>) {
        let lists = [
            (&self.element, &weights.element),
            (&self.pos_pair, &weights.pos_pair),
            (&self.neg_pair, &weights.neg_pair),
            (&self.triplet, &weights.triplet),
        ];
        for (partials, w) in lists {
            for (term, &wt) in partials.iter().zip(w.iter()) {
                if wt == 0.0 {
                    continue;
                }
                for &(i, j, g) in term {
                    grad[[i, j]] += wt * g;
                }
            }
        }
    }
}

/// A loss defined on entries of a batch-vs-batch distance matrix.
pub trait MatrixLoss {
    fn kind(&self) -> LossKind;

    /// Tuple arity the loss consumes.
    fn arity(&self) -> TupleArity;

    /// Per-term values and partials for `tuples` of a batch of size `n`.
    fn evaluate(&self, mat: &DistanceMatrix, tuples: &TupleSet, n: usize) -> Evaluated;

    fn bundle(&self, mat: &DistanceMatrix, tuples: &TupleSet, n: usize) -> LossBundle {
        self.evaluate(mat, tuples, n).bundle
    }
}

/// Default tuples when none are supplied, and arity conversion otherwise.
pub(crate) fn resolve_tuples(
    y: &LabelVector,
    tuples: Option<&TupleSet>,
    arity: TupleArity,
) -> Result<TupleSet> {
    let t = match tuples {
        None => return Ok(all_tuples(y, arity)),
        Some(t) => {
            t.validate(y)?;
            t
        }
    };
    Ok(match (t.arity, arity) {
        (TupleArity::Pairs, TupleArity::Triplets) => pairs_to_triplets(t),
        (TupleArity::Triplets, TupleArity::Pairs) => triplets_to_pairs(t),
        _ => t.clone(),
    })
}

fn check_inputs(x: &EmbeddingBatch, y: &LabelVector, cfg: &LossConfig) -> Result<()> {
    validate_batch(x.view(), y)?;
    cfg.validate()
}

pub(crate) fn run_tuple_loss(
    kernel: &dyn MatrixLoss,
    x: &EmbeddingBatch,
    y: &LabelVector,
    tuples: Option<&TupleSet>,
    cfg: &LossConfig,
) -> Result<LossOutput> {
    cfg.expect(kernel.kind())?;
    check_inputs(x, y, cfg)?;
    let tuples = resolve_tuples(y, tuples, kernel.arity())?;
    let n = x.rows();
    let mat = pairwise_matrix(cfg.distance, x, x)?;
    let mut ev = kernel.evaluate(&mat, &tuples, n);
    ev.bundle.empty_tuples = tuples.is_empty();
    let reduced = cfg.reducer.reduce_weighted(&ev.bundle);
    let mut dmat = Array2::zeros((n, n));
    ev.scatter(&reduced, &mut dmat);
    let (gx, gy) = distances::backward(cfg.distance, x.view(), x.view(), &dmat);
    let mut grad = gx + gy;

    let reg_bundle = embedding_regularization(x, cfg, &mut grad)?;
    let value = reduced.value + cfg.embedding_reg_weight * cfg.reducer.reduce(&reg_bundle);
    Ok(LossOutput {
        value,
        grad_embeddings: grad,
        grad_weights: None,
        bundle: ev.bundle,
        embedding_reg_bundle: reg_bundle,
        weight_reg_bundle: None,
        tuples: Some(tuples),
        kink_gap: ev.kink_gap,
    })
}

/// Adds the embedding regularizer's gradient into `grad` and returns its bundle.
pub(crate) fn embedding_regularization(
    x: &EmbeddingBatch,
    cfg: &LossConfig,
    grad: &mut Array2<f64>,
) -> Result<LossBundle> {
    let Some(reg) = &cfg.embedding_regularizer else {
        return Ok(LossBundle::default());
    };
    let bundle = reg.bundle(x.view())?;
    if cfg.embedding_reg_weight != 0.0 {
        let w: Vec<f64> = cfg
            .reducer
            .reduce_weighted(&bundle)
            .element
            .iter()
            .map(|w| w * cfg.embedding_reg_weight)
            .collect();
        *grad += &reg.backward(x.view(), &w);
    }
    Ok(bundle)
}

/// `log(sum_i exp(z_i))` and the softmax of `z`, computed with the max subtracted.
pub(crate) fn log_sum_exp(z: &[f64]) -> (f64, Vec<f64>) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if z.is_empty() || max == f64::NEG_INFINITY {
        return (f64::NEG_INFINITY, vec![0.0; z.len()]);
    }
    let exps: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    (
        max + total.ln(),
        exps.into_iter().map(|e| e / total).collect(),
    )
}

/// Positive and negative partners per anchor, deduplicated and ascending.
pub(crate) fn anchor_groups(tuples: &TupleSet, n: usize) -> (Vec<Vec<usize>>, Vec<Vec<usize>>) {
    let mut pos = vec![Vec::new(); n];
    let mut neg = vec![Vec::new(); n];
    for &(a, p) in &tuples.pos_pairs {
        pos[a].push(p);
    }
    for &(a, q) in &tuples.neg_pairs {
        neg[a].push(q);
    }
    for v in pos.iter_mut().chain(neg.iter_mut()) {
        v.sort_unstable();
        v.dedup();
    }
    (pos, neg)
}

pub fn triplet_margin_loss(
    x: &EmbeddingBatch,
    y: &LabelVector,
    tuples: Option<&TupleSet>,
    cfg: &LossConfig,
) -> Result<LossOutput> {
    cfg.expect(LossKind::TripletMargin)?;
    cfg.compute(x, y, tuples, None)
}

pub fn contrastive_loss(
    x: &EmbeddingBatch,
    y: &LabelVector,
    tuples: Option<&TupleSet>,
    cfg: &LossConfig,
) -> Result<LossOutput> {
    cfg.expect(LossKind::Contrastive)?;
    cfg.compute(x, y, tuples, None)
}

pub fn ntxent_loss(
    x: &EmbeddingBatch,
    y: &LabelVector,
    tuples: Option<&TupleSet>,
    cfg: &LossConfig,
) -> Result<LossOutput> {
    cfg.expect(LossKind::NtXent)?;
    cfg.compute(x, y, tuples, None)
}

pub fn multi_similarity_loss(
    x: &EmbeddingBatch,
    y: &LabelVector,
    tuples: Option<&TupleSet>,
    cfg: &LossConfig,
) -> Result<LossOutput> {
    cfg.expect(LossKind::MultiSimilarity)?;
    cfg.compute(x, y, tuples, None)
}

pub fn circle_loss(
    x: &EmbeddingBatch,
    y: &LabelVector,
    tuples: Option<&TupleSet>,
    cfg: &LossConfig,
) -> Result<LossOutput> {
    cfg.expect(LossKind::Circle)?;
    cfg.compute(x, y, tuples, None)
}

/// ArcFace over class weights. Tuples, when given, weight each element by
/// how often it occurs in them.
pub fn arcface_loss(
    x: &EmbeddingBatch,
    y: &LabelVector,
    weights: &ClassWeights,
    tuples: Option<&TupleSet>,
    cfg: &LossConfig,
) -> Result<LossOutput> {
    cfg.expect(LossKind::ArcFace)?;
    cfg.compute(x, y, tuples, Some(weights))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regularizers::RegularizerKind;

    #[test]
    fn compose_examples() {
        let cfg = LossConfig::new(LossKind::TripletMargin)
            .with_embedding_regularizer(RegularizerKind::Lp { p: 2.0, power: 1 }, 0.5);
        let tuple = LossBundle::elements(vec![0, 1], vec![1.0, 3.0]);
        let reg = LossBundle::elements(vec![0, 1], vec![0.5, 1.5]);
        assert_eq!(compose_final_loss(&tuple, &reg, None, &cfg), 2.5);
        let zero = LossConfig {
            embedding_reg_weight: 0.0,
            ..cfg.clone()
        };
        assert_eq!(compose_final_loss(&tuple, &reg, None, &zero), 2.0);
        let empty = LossBundle::default();
        assert_eq!(compose_final_loss(&empty, &empty, Some(&empty), &cfg), 0.0);
        let weights = [0.0, 1.0, 2.0];
        let values: Vec<f64> = weights
            .iter()
            .map(|&w| {
                compose_final_loss(
                    &tuple,
                    &reg,
                    None,
                    &LossConfig {
                        embedding_reg_weight: w,
                        ..cfg.clone()
                    },
                )
            })
            .collect();
        assert_eq!(values, vec![2.0, 3.0, 4.0]);
    }

    #[test]
    fn config_validation() {
        assert!(LossConfig::new(LossKind::NtXent)
            .with_param("temperature", 0.0)
            .validate()
            .is_err());
        assert!(LossConfig::new(LossKind::NtXent)
            .with_param("temprature", 0.1)
            .validate()
            .is_err());
        assert!(LossConfig::new(LossKind::Circle)
            .with_param("m", 1.5)
            .validate()
            .is_err());
        assert!(LossConfig::new(LossKind::ArcFace)
            .with_distance(DistanceKind::EUCLIDEAN)
            .validate()
            .is_err());
        assert!(LossConfig::new(LossKind::TripletMargin)
            .with_weight_regularizer(RegularizerKind::RegularFace, 1.0)
            .validate()
            .is_err());
        for kind in LossKind::ALL {
            assert!(LossConfig::new(kind).validate().is_ok(), "{kind}");
            assert_eq!(kind.to_string().parse::<LossKind>().unwrap(), kind);
        }
    }

    #[test]
    fn wrong_entry_point() {
        let x = EmbeddingBatch::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let y = LabelVector::from_raw([0, 1]);
        let cfg = LossConfig::new(LossKind::Contrastive);
        assert!(triplet_margin_loss(&x, &y, None, &cfg).is_err());
    }

    #[test]
    fn stable_log_sum_exp() {
        let (lse, soft) = log_sum_exp(&[1000.0, 1000.0]);
        assert!((lse - (1000.0 + 2f64.ln())).abs() < 1e-9);
        assert_eq!(soft, vec![0.5, 0.5]);
    }
}
