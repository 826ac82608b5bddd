use ndarray::Array2;

use crate::distances::{self, pairwise_matrix_view, DistanceKind};
use crate::error::{Error, Result};
use crate::miners::tuple_frequency_weights;
use crate::types::{EmbeddingBatch, LabelVector, LossBundle, TupleSet};

use super::{
    check_inputs, embedding_regularization, log_sum_exp, ClassWeights, LossConfig, LossKind,
    LossOutput,
};

/// Cosines are clamped this far inside `[-1, 1]` before `acos`.
const COS_CLAMP: f64 = 1e-7;

/// Logits of one sample: `scale * cos(theta_y + margin)` for the target
/// class, `scale * cos(theta_j)` for the rest.
pub fn arcface_logits(cosines: &[f64], label: usize, margin: f64, scale: f64) -> Vec<f64> {
    cosines
        .iter()
        .enumerate()
        .map(|(j, &c)| {
            if j == label {
                scale * target_cosine(c, margin).0
            } else {
                scale * c
            }
        })
        .collect()
}

/// `cos(acos(c) + margin)` and its derivative in `c`.
fn target_cosine(c: f64, margin: f64) -> (f64, f64) {
    if margin == 0.0 {
        return (c, 1.0);
    }
    let lo = -1.0 + COS_CLAMP;
    let hi = 1.0 - COS_CLAMP;
    let clamped = c.clamp(lo, hi);
    let theta = clamped.acos();
    let value = (theta + margin).cos();
    let slope = if c > lo && c < hi {
        (theta + margin).sin() / theta.sin()
    } else {
        0.0
    };
    (value, slope)
}

pub(super) fn compute(
    x: &EmbeddingBatch,
    y: &LabelVector,
    weights: &ClassWeights,
    tuples: Option<&TupleSet>,
    cfg: &LossConfig,
) -> Result<LossOutput> {
    cfg.expect(LossKind::ArcFace)?;
    check_inputs(x, y, cfg)?;
    if weights.dim() != x.dim() {
        return Err(Error::DimensionMismatch {
            left: x.dim(),
            right: weights.dim(),
        });
    }
    let classes = weights.classes();
    if let Some(&label) = y.ids().iter().find(|&&l| l >= classes) {
        return Err(Error::LabelOutOfRange { label, classes });
    }
    let n = x.rows();
    let frequency = match tuples {
        Some(t) => {
            t.validate(y)?;
            tuple_frequency_weights(t, n)
        }
        None => vec![1.0; n],
    };
    let (margin, scale) = (cfg.param("margin"), cfg.param("scale"));

    // Both admissible kinds compare unit rows, which makes them the cosine.
    let cos = pairwise_matrix_view(DistanceKind::CosineSimilarity, x.view(), weights.view())?;
    let mut bundle = LossBundle::default();
    let mut partials: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut kink_gap = f64::INFINITY;
    for (i, &fw) in frequency.iter().enumerate() {
        let label = y.get(i);
        let row: Vec<f64> = cos.values.row(i).to_vec();
        let logits = arcface_logits(&row, label, margin, scale);
        let (lse, soft) = log_sum_exp(&logits);
        bundle.per_element.push(i, fw * (lse - logits[label]));
        let (_, slope) = target_cosine(row[label], margin);
        if margin != 0.0 {
            kink_gap = kink_gap.min((row[label].abs() - (1.0 - COS_CLAMP)).abs());
        }
        partials.push(
            soft.iter()
                .enumerate()
                .map(|(j, &p)| {
                    if j == label {
                        fw * (p - 1.0) * scale * slope
                    } else {
                        fw * p * scale
                    }
                })
                .collect(),
        );
    }
    bundle.empty_tuples = tuples.is_some_and(|t| t.is_empty());

    let reduced = cfg.reducer.reduce_weighted(&bundle);
    let mut dcos = Array2::zeros((n, classes));
    for (i, (row, &w)) in partials.iter().zip(&reduced.element).enumerate() {
        for (j, g) in row.iter().enumerate() {
            dcos[[i, j]] = w * g;
        }
    }
    let (mut grad_x, mut grad_w) = distances::backward(
        DistanceKind::CosineSimilarity,
        x.view(),
        weights.view(),
        &dcos,
    );

    let mut value = reduced.value;
    let weight_reg_bundle = match &cfg.weight_regularizer {
        Some(reg) => {
            let b = reg.bundle(weights.view())?;
            let r = cfg.reducer.reduce_weighted(&b);
            value += cfg.weight_reg_weight * r.value;
            if cfg.weight_reg_weight != 0.0 {
                let w: Vec<f64> = r
                    .element
                    .iter()
                    .map(|v| v * cfg.weight_reg_weight)
                    .collect();
                grad_w += &reg.backward(weights.view(), &w);
            }
            Some(b)
        }
        None => None,
    };
    let reg_bundle = embedding_regularization(x, cfg, &mut grad_x)?;
    value += cfg.embedding_reg_weight * cfg.reducer.reduce(&reg_bundle);

    Ok(LossOutput {
        value,
        grad_embeddings: grad_x,
        grad_weights: Some(grad_w),
        bundle,
        embedding_reg_bundle: reg_bundle,
        weight_reg_bundle,
        tuples: tuples.cloned(),
        kink_gap,
    })
}
