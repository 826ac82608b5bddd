use crate::distances::DistanceMatrix;
use crate::types::{TupleArity, TupleSet};

use super::{Evaluated, LossConfig, LossKind, MatrixLoss};

/// Positive pairs pay `[d - pos_margin]_+`, negative pairs `[neg_margin - d]_+`;
/// both hinges flip on similarities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contrastive {
    pub pos_margin: f64,
    pub neg_margin: f64,
}

impl Contrastive {
    pub fn from_config(cfg: &LossConfig) -> Self {
        Self {
            pos_margin: cfg.param("pos_margin"),
            neg_margin: cfg.param("neg_margin"),
        }
    }
}

impl MatrixLoss for Contrastive {
    fn kind(&self) -> LossKind {
        LossKind::Contrastive
    }

    fn arity(&self) -> TupleArity {
        TupleArity::Pairs
    }

    fn evaluate(&self, mat: &DistanceMatrix, tuples: &TupleSet, _n: usize) -> Evaluated {
        let mut ev = Evaluated::new();
        let sign = if mat.inverted { -1.0 } else { 1.0 };
        for &(a, p) in &tuples.pos_pairs {
            let arg = sign * (mat.get(a, p) - self.pos_margin);
            ev.note_kink(arg);
            ev.bundle.per_pos_pair.push((a, p), arg.max(0.0));
            ev.pos_pair.push(if arg > 0.0 {
                vec![(a, p, sign)]
            } else {
                Vec::new()
            });
        }
        for &(a, q) in &tuples.neg_pairs {
            let arg = sign * (self.neg_margin - mat.get(a, q));
            ev.note_kink(arg);
            ev.bundle.per_neg_pair.push((a, q), arg.max(0.0));
            ev.neg_pair.push(if arg > 0.0 {
                vec![(a, q, -sign)]
            } else {
                Vec::new()
            });
        }
        ev
    }
}
