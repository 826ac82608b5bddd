use crate::distances::DistanceMatrix;
use crate::types::{TupleArity, TupleSet};

use super::{anchor_groups, log_sum_exp, Evaluated, LossConfig, LossKind, MatrixLoss};

/// Normalized temperature-scaled cross entropy.
///
/// Every positive pair `(a, p)` is a softmax classification of `p` against
/// the negatives paired with `a`. Distances are negated so that larger
/// logits always mean more similar.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NtXent {
    pub temperature: f64,
}

impl NtXent {
    pub fn from_config(cfg: &LossConfig) -> Self {
        Self {
            temperature: cfg.param("temperature"),
        }
    }
}

impl MatrixLoss for NtXent {
    fn kind(&self) -> LossKind {
        LossKind::NtXent
    }

    fn arity(&self) -> TupleArity {
        TupleArity::Pairs
    }

    fn evaluate(&self, mat: &DistanceMatrix, tuples: &TupleSet, n: usize) -> Evaluated {
        let mut ev = Evaluated::new();
        let (_, negatives) = anchor_groups(tuples, n);
        let sign = if mat.inverted { 1.0 } else { -1.0 };
        let scale = sign / self.temperature;
        for &(a, p) in &tuples.pos_pairs {
            let negs = &negatives[a];
            if negs.is_empty() {
                if !ev.bundle.skipped_anchors.contains(&a) {
                    ev.bundle.skipped_anchors.push(a);
                }
                continue;
            }
            let mut logits = Vec::with_capacity(negs.len() + 1);
            logits.push(mat.get(a, p) * scale);
            logits.extend(negs.iter().map(|&q| mat.get(a, q) * scale));
            let (lse, soft) = log_sum_exp(&logits);
            ev.bundle.per_pos_pair.push((a, p), lse - logits[0]);
            let mut partials = Vec::with_capacity(logits.len());
            partials.push((a, p, (soft[0] - 1.0) * scale));
            partials.extend(
                negs.iter()
                    .zip(&soft[1..])
                    .map(|(&q, &s)| (a, q, s * scale)),
            );
            ev.pos_pair.push(partials);
        }
        ev.bundle.skipped_anchors.sort_unstable();
        ev
    }
}
