//! Value types shared by every stage of the pipeline.
//!
//! All of them are immutable after construction. Embeddings are stored as
//! dense row-major `f64` matrices, labels are canonicalized to `0..C`.

use std::collections::BTreeMap;
use std::sync::Arc;

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default floor used when dividing by norms or variances.
pub const DEFAULT_EPS: f64 = 1e-8;

/// An `n x d` matrix of row-vector embeddings with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingBatch {
    data: Array2<f64>,
}

impl EmbeddingBatch {
    pub fn new(data: Array2<f64>) -> Result<Self> {
        let (n, d) = data.dim();
        if n == 0 || d == 0 {
            return Err(Error::ShapeMismatch(format!(
                "embedding batch must be at least 1x1, got {n}x{d}"
            )));
        }
        check_finite(data.view())?;
        Ok(Self { data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != d) {
            return Err(Error::ShapeMismatch(format!(
                "row {bad} has {} columns, expected {d}",
                rows[bad].len()
            )));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        let data = Array2::from_shape_vec((rows.len(), d), flat)
            .map_err(|e| Error::ShapeMismatch(e.to_string()))?;
        Self::new(data)
    }

    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn dim(&self) -> usize {
        self.data.ncols()
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.data.view()
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.data.row(i)
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn into_array(self) -> Array2<f64> {
        self.data
    }

    /// Gathers the given rows (repeats allowed) into a new batch.
    pub fn select(&self, indices: &[usize]) -> EmbeddingBatch {
        EmbeddingBatch {
            data: self.data.select(Axis(0), indices),
        }
    }
}

fn check_finite(data: ArrayView2<'_, f64>) -> Result<()> {
    for ((row, col), v) in data.indexed_iter() {
        if !v.is_finite() {
            return Err(Error::NonFiniteInput { row, col });
        }
    }
    Ok(())
}

/// Class labels aligned with the rows of an [`EmbeddingBatch`].
///
/// Original ids may be sparse; they are mapped to `0..C` in ascending order
/// of the original id. Subsets created with [`LabelVector::select`] keep the
/// class map of the full label set so canonical ids stay stable across
/// mini-batches.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelVector {
    ids: Vec<usize>,
    classes: Arc<Vec<u64>>,
}

impl LabelVector {
    pub fn from_raw<I: IntoIterator<Item = u64>>(raw: I) -> Self {
        let raw: Vec<u64> = raw.into_iter().collect();
        let mut classes = raw.clone();
        classes.sort_unstable();
        classes.dedup();
        let ids = raw
            .iter()
            .map(|r| classes.binary_search(r).expect("class present"))
            .collect();
        Self {
            ids,
            classes: Arc::new(classes),
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Canonical class ids in `0..num_classes()`.
    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    pub fn get(&self, i: usize) -> usize {
        self.ids[i]
    }

    /// Number of classes in the class map (including classes absent from a subset).
    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    /// Number of distinct classes actually present in this vector.
    pub fn distinct_present(&self) -> usize {
        let mut seen = vec![false; self.classes.len()];
        self.ids.iter().for_each(|&c| seen[c] = true);
        seen.into_iter().filter(|&s| s).count()
    }

    pub fn original(&self, canonical: usize) -> u64 {
        self.classes[canonical]
    }

    pub fn originals(&self) -> Vec<u64> {
        self.ids.iter().map(|&c| self.classes[c]).collect()
    }

    pub fn select(&self, indices: &[usize]) -> LabelVector {
        LabelVector {
            ids: indices.iter().map(|&i| self.ids[i]).collect(),
            classes: Arc::clone(&self.classes),
        }
    }
}

/// Checks that labels line up with the rows of `data` and that every entry is finite.
pub fn validate_batch(data: ArrayView2<'_, f64>, labels: &LabelVector) -> Result<()> {
    if data.nrows() != labels.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} embedding rows but {} labels",
            data.nrows(),
            labels.len()
        )));
    }
    check_finite(data)
}

/// Divides each row by `max(norm, eps)`.
pub fn l2_normalize_rows(x: &EmbeddingBatch, eps: f64) -> EmbeddingBatch {
    EmbeddingBatch {
        data: normalize_rows(x.view(), eps),
    }
}

pub(crate) fn normalize_rows(x: ArrayView2<'_, f64>, eps: f64) -> Array2<f64> {
    let mut out = x.to_owned();
    for mut row in out.rows_mut() {
        let norm = row.dot(&row).sqrt().max(eps);
        row.mapv_inplace(|v| v / norm);
    }
    out
}

pub type Pair = (usize, usize);
pub type Triplet = (usize, usize, usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TupleArity {
    Pairs,
    Triplets,
}

/// Index tuples selected from a batch: either pairs or triplets, never both.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TupleSet {
    pub pos_pairs: Vec<Pair>,
    pub neg_pairs: Vec<Pair>,
    pub triplets: Vec<Triplet>,
    pub arity: TupleArity,
}

impl TupleSet {
    pub fn pairs(pos_pairs: Vec<Pair>, neg_pairs: Vec<Pair>) -> Self {
        Self {
            pos_pairs,
            neg_pairs,
            triplets: Vec::new(),
            arity: TupleArity::Pairs,
        }
    }

    pub fn triplets(triplets: Vec<Triplet>) -> Self {
        Self {
            pos_pairs: Vec::new(),
            neg_pairs: Vec::new(),
            triplets,
            arity: TupleArity::Triplets,
        }
    }

    pub fn is_empty(&self) -> bool {
        match self.arity {
            TupleArity::Pairs => self.pos_pairs.is_empty() && self.neg_pairs.is_empty(),
            TupleArity::Triplets => self.triplets.is_empty(),
        }
    }

    /// Checks index ranges and label consistency against `labels`.
    pub fn validate(&self, labels: &LabelVector) -> Result<()> {
        let n = labels.len();
        let y = labels.ids();
        let bad = |msg: String| Err(Error::InvalidTuples(msg));
        match self.arity {
            TupleArity::Pairs => {
                if !self.triplets.is_empty() {
                    return bad("pair tuple set also holds triplets".into());
                }
                for &(a, p) in &self.pos_pairs {
                    if a >= n || p >= n {
                        return bad(format!("positive pair ({a},{p}) out of range for n={n}"));
                    }
                    if a == p || y[a] != y[p] {
                        return bad(format!("({a},{p}) is not a positive pair"));
                    }
                }
                for &(a, q) in &self.neg_pairs {
                    if a >= n || q >= n {
                        return bad(format!("negative pair ({a},{q}) out of range for n={n}"));
                    }
                    if y[a] == y[q] {
                        return bad(format!("({a},{q}) is not a negative pair"));
                    }
                }
            }
            TupleArity::Triplets => {
                if !self.pos_pairs.is_empty() || !self.neg_pairs.is_empty() {
                    return bad("triplet tuple set also holds pairs".into());
                }
                for &(a, p, q) in &self.triplets {
                    if a >= n || p >= n || q >= n {
                        return bad(format!("triplet ({a},{p},{q}) out of range for n={n}"));
                    }
                    if a == p || y[a] != y[p] || y[a] == y[q] {
                        return bad(format!("({a},{p},{q}) is not a valid triplet"));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Loss values with the indices they were computed from.
#[derive(Debug, Clone, PartialEq)]
pub struct LossTerms<I> {
    pub values: Vec<f64>,
    pub indices: Vec<I>,
}

impl<I> Default for LossTerms<I> {
    fn default() -> Self {
        Self {
            values: Vec::new(),
            indices: Vec::new(),
        }
    }
}

impl<I> LossTerms<I> {
    pub fn push(&mut self, index: I, value: f64) {
        self.indices.push(index);
        self.values.push(value);
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// The pre-reduction record of a loss computation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LossBundle {
    pub per_element: LossTerms<usize>,
    pub per_pos_pair: LossTerms<Pair>,
    pub per_neg_pair: LossTerms<Pair>,
    pub per_triplet: LossTerms<Triplet>,
    /// Set when the loss had no usable tuples.
    pub empty_tuples: bool,
    /// Anchors whose terms were dropped (e.g. positives without any negative).
    pub skipped_anchors: Vec<usize>,
}

impl LossBundle {
    pub fn is_empty(&self) -> bool {
        self.per_element.is_empty()
            && self.per_pos_pair.is_empty()
            && self.per_neg_pair.is_empty()
            && self.per_triplet.is_empty()
    }

    pub fn elements(indices: Vec<usize>, values: Vec<f64>) -> Self {
        Self {
            per_element: LossTerms { values, indices },
            ..Self::default()
        }
    }
}

/// Metric name to value, iterated in lexicographic key order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MetricReport(pub BTreeMap<String, f64>);

impl MetricReport {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.0.get(name).copied()
    }

    pub fn insert(&mut self, name: impl Into<String>, value: f64) {
        self.0.insert(name.into(), value);
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.0.keys().map(String::as_str)
    }

    /// Pretty JSON with sorted keys.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.0).expect("report serializes")
    }
}
