//! Online tuple mining and conversions between tuple arities.
//!
//! All outputs are sorted lexicographically by index.

use serde::{Deserialize, Serialize};

use crate::distances::{pairwise_matrix, DistanceKind};
use crate::error::{Error, Result};
use crate::types::{EmbeddingBatch, LabelVector, Pair, Triplet, TupleArity, TupleSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MinerKind {
    #[default]
    MultiSimilarity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MinerConfig {
    #[serde(default)]
    pub name: MinerKind,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_distance")]
    pub distance: DistanceKind,
}

fn default_epsilon() -> f64 {
    0.1
}

fn default_distance() -> DistanceKind {
    DistanceKind::CosineSimilarity
}

impl Default for MinerConfig {
    fn default() -> Self {
        Self {
            name: MinerKind::MultiSimilarity,
            epsilon: default_epsilon(),
            distance: default_distance(),
        }
    }
}

impl MinerConfig {
    pub fn validate(&self) -> Result<()> {
        // +inf disables both thresholds and is allowed
        if self.epsilon.is_nan() || self.epsilon < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "miner epsilon must be >= 0, got {}",
                self.epsilon
            )));
        }
        self.distance.validate()
    }

    pub fn mine(&self, x: &EmbeddingBatch, y: &LabelVector) -> Result<TupleSet> {
        match self.name {
            MinerKind::MultiSimilarity => multi_similarity_miner(x, y, self),
        }
    }
}

/// Every valid tuple of the requested arity.
pub fn all_tuples(y: &LabelVector, arity: TupleArity) -> TupleSet {
    let ids = y.ids();
    let n = ids.len();
    match arity {
        TupleArity::Pairs => {
            let mut pos = Vec::new();
            let mut neg = Vec::new();
            for a in 0..n {
                for b in 0..n {
                    if ids[a] != ids[b] {
                        neg.push((a, b));
                    } else if a != b {
                        pos.push((a, b));
                    }
                }
            }
            TupleSet::pairs(pos, neg)
        }
        TupleArity::Triplets => {
            let mut triplets = Vec::new();
            for a in 0..n {
                for p in (0..n).filter(|&p| p != a && ids[p] == ids[a]) {
                    for q in (0..n).filter(|&q| ids[q] != ids[a]) {
                        triplets.push((a, p, q));
                    }
                }
            }
            TupleSet::triplets(triplets)
        }
    }
}

/// Keeps positives that are less similar than the hardest negative (plus
/// `epsilon`) and negatives that are more similar than the hardest positive
/// (minus `epsilon`). For non-inverted distances the comparisons flip.
pub fn multi_similarity_miner(
    x: &EmbeddingBatch,
    y: &LabelVector,
    cfg: &MinerConfig,
) -> Result<TupleSet> {
    cfg.validate()?;
    if x.rows() != y.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} embeddings but {} labels",
            x.rows(),
            y.len()
        )));
    }
    let mat = pairwise_matrix(cfg.distance, x, x)?;
    let ids = y.ids();
    let n = ids.len();
    let eps = cfg.epsilon;
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for a in 0..n {
        let positives: Vec<usize> = (0..n).filter(|&j| j != a && ids[j] == ids[a]).collect();
        let negatives: Vec<usize> = (0..n).filter(|&j| ids[j] != ids[a]).collect();
        if positives.is_empty() || negatives.is_empty() {
            continue;
        }
        let row = |j: usize| mat.get(a, j);
        let fold_max = |set: &[usize]| {
            set.iter()
                .map(|&j| row(j))
                .fold(f64::NEG_INFINITY, f64::max)
        };
        let fold_min = |set: &[usize]| set.iter().map(|&j| row(j)).fold(f64::INFINITY, f64::min);
        if mat.inverted {
            let hardest_neg = fold_max(&negatives);
            let hardest_pos = fold_min(&positives);
            pos.extend(
                positives
                    .iter()
                    .filter(|&&p| row(p) < hardest_neg + eps)
                    .map(|&p| (a, p)),
            );
            neg.extend(
                negatives
                    .iter()
                    .filter(|&&q| row(q) > hardest_pos - eps)
                    .map(|&q| (a, q)),
            );
        } else {
            let hardest_neg = fold_min(&negatives);
            let hardest_pos = fold_max(&positives);
            pos.extend(
                positives
                    .iter()
                    .filter(|&&p| row(p) > hardest_neg - eps)
                    .map(|&p| (a, p)),
            );
            neg.extend(
                negatives
                    .iter()
                    .filter(|&&q| row(q) < hardest_pos + eps)
                    .map(|&q| (a, q)),
            );
        }
    }
    Ok(TupleSet::pairs(pos, neg))
}

/// Combines every positive pair with every negative pair sharing its anchor.
pub fn pairs_to_triplets(t: &TupleSet) -> TupleSet {
    if t.arity == TupleArity::Triplets {
        return t.clone();
    }
    let mut triplets: Vec<Triplet> = Vec::new();
    for &(a, p) in &t.pos_pairs {
        triplets.extend(
            t.neg_pairs
                .iter()
                .filter(|&&(na, _)| na == a)
                .map(|&(_, q)| (a, p, q)),
        );
    }
    triplets.sort_unstable();
    TupleSet::triplets(triplets)
}

/// Splits every triplet into its positive and negative pair, keeping duplicates.
pub fn triplets_to_pairs(t: &TupleSet) -> TupleSet {
    if t.arity == TupleArity::Pairs {
        return t.clone();
    }
    let mut pos: Vec<Pair> = t.triplets.iter().map(|&(a, p, _)| (a, p)).collect();
    let mut neg: Vec<Pair> = t.triplets.iter().map(|&(a, _, q)| (a, q)).collect();
    pos.sort_unstable();
    neg.sort_unstable();
    TupleSet::pairs(pos, neg)
}

/// Occurrence count of each index across all tuples, divided by the largest count.
pub fn tuple_frequency_weights(t: &TupleSet, n: usize) -> Vec<f64> {
    let mut counts = vec![0usize; n];
    let mut bump = |i: usize| {
        if i < n {
            counts[i] += 1;
        }
    };
    for &(a, b) in t.pos_pairs.iter().chain(&t.neg_pairs) {
        bump(a);
        bump(b);
    }
    for &(a, p, q) in &t.triplets {
        bump(a);
        bump(p);
        bump(q);
    }
    let max = counts.iter().copied().max().unwrap_or(0);
    if max == 0 {
        return vec![0.0; n];
    }
    counts.iter().map(|&c| c as f64 / max as f64).collect()
}
