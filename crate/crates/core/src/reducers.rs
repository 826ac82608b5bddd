//! Collapse a [`LossBundle`] into a scalar.
//!
//! Each populated list (elements, positive pairs, negative pairs, triplets)
//! is reduced on its own and the per-list results are added. Every reduction
//! here is a weighted sum `sum_i w_i v_i` with piecewise-constant weights, so
//! [`ReducerKind::reduce_weighted`] also returns the weights, which are the
//! derivative of the result with respect to each loss value.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::LossBundle;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ReduceOp {
    #[default]
    Mean,
    Sum,
    /// Mean over the values inside the closed band `[low, high]`.
    Threshold {
        low: f64,
        high: f64,
    },
}

impl ReduceOp {
    pub fn validate(self) -> Result<()> {
        match self {
            ReduceOp::Threshold { low, high } if low.is_nan() || high.is_nan() || low > high => {
                Err(Error::InvalidParameter(format!(
                    "threshold reducer needs low <= high, got [{low}, {high}]"
                )))
            }
            _ => Ok(()),
        }
    }

    /// Reduces one list; returns the value and the per-entry weights.
    pub fn reduce_list(self, values: &[f64]) -> (f64, Vec<f64>) {
        if values.is_empty() {
            return (0.0, Vec::new());
        }
        match self {
            ReduceOp::Sum => (values.iter().sum(), vec![1.0; values.len()]),
            ReduceOp::Mean => {
                let w = 1.0 / values.len() as f64;
                (values.iter().sum::<f64>() * w, vec![w; values.len()])
            }
            ReduceOp::Threshold { low, high } => {
                let keep: Vec<bool> = values.iter().map(|&v| low <= v && v <= high).collect();
                let kept = keep.iter().filter(|&&k| k).count();
                if kept == 0 {
                    return (0.0, vec![0.0; values.len()]);
                }
                let w = 1.0 / kept as f64;
                let total: f64 = values
                    .iter()
                    .zip(&keep)
                    .filter(|(_, &k)| k)
                    .map(|(v, _)| v)
                    .sum();
                let weights = keep.iter().map(|&k| if k { w } else { 0.0 }).collect();
                (total * w, weights)
            }
        }
    }
}

/// A reduction, optionally overridden per list.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReducerKind {
    #[serde(default)]
    pub default: ReduceOp,
    #[serde(default)]
    pub element: Option<ReduceOp>,
    #[serde(default)]
    pub pos_pair: Option<ReduceOp>,
    #[serde(default)]
    pub neg_pair: Option<ReduceOp>,
    #[serde(default)]
    pub triplet: Option<ReduceOp>,
}

/// Result of a reduction plus `d result / d value` for every entry of the bundle.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReducedBundle {
    pub value: f64,
    pub element: Vec<f64>,
    pub pos_pair: Vec<f64>,
    pub neg_pair: Vec<f64>,
    pub triplet: Vec<f64>,
}

impl ReducerKind {
    pub fn uniform(op: ReduceOp) -> Self {
        Self {
            default: op,
            ..Self::default()
        }
    }

    pub fn mean() -> Self {
        Self::uniform(ReduceOp::Mean)
    }

    pub fn sum() -> Self {
        Self::uniform(ReduceOp::Sum)
    }

    pub fn threshold(low: f64, high: f64) -> Self {
        Self::uniform(ReduceOp::Threshold { low, high })
    }

    pub fn validate(&self) -> Result<()> {
        self.default.validate()?;
        for op in [self.element, self.pos_pair, self.neg_pair, self.triplet]
            .into_iter()
            .flatten()
        {
            op.validate()?;
        }
        Ok(())
    }

    pub fn reduce(&self, bundle: &LossBundle) -> f64 {
        self.reduce_weighted(bundle).value
    }

    pub fn reduce_weighted(&self, bundle: &LossBundle) -> ReducedBundle {
        let pick = |o: Option<ReduceOp>| o.unwrap_or(self.default);
        let (ve, element) = pick(self.element).reduce_list(&bundle.per_element.values);
        let (vp, pos_pair) = pick(self.pos_pair).reduce_list(&bundle.per_pos_pair.values);
        let (vn, neg_pair) = pick(self.neg_pair).reduce_list(&bundle.per_neg_pair.values);
        let (vt, triplet) = pick(self.triplet).reduce_list(&bundle.per_triplet.values);
        ReducedBundle {
            value: ve + vp + vn + vt,
            element,
            pos_pair,
            neg_pair,
            triplet,
        }
    }
}

/// Reduces `bundle` with `reducer`.
pub fn reduce(bundle: &LossBundle, reducer: &ReducerKind) -> f64 {
    reducer.reduce(bundle)
}
