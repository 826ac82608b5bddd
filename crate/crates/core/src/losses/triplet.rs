use crate::distances::DistanceMatrix;
use crate::types::{TupleArity, TupleSet};

use super::{Evaluated, LossConfig, LossKind, MatrixLoss};

/// `[d_ap - d_an + margin]_+`, or `[s_an - s_ap + margin]_+` on similarities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TripletMargin {
    pub margin: f64,
}

impl TripletMargin {
    pub fn from_config(cfg: &LossConfig) -> Self {
        Self {
            margin: cfg.param("margin"),
        }
    }
}

impl MatrixLoss for TripletMargin {
    fn kind(&self) -> LossKind {
        LossKind::TripletMargin
    }

    fn arity(&self) -> TupleArity {
        TupleArity::Triplets
    }

    fn evaluate(&self, mat: &DistanceMatrix, tuples: &TupleSet, _n: usize) -> Evaluated {
        let mut ev = Evaluated::new();
        for &(a, p, q) in &tuples.triplets {
            // entries entering the hinge with + and - sign
            let (plus, minus) = if mat.inverted {
                ((a, q), (a, p))
            } else {
                ((a, p), (a, q))
            };
            let arg = mat.get(plus.0, plus.1) - mat.get(minus.0, minus.1) + self.margin;
            ev.note_kink(arg);
            ev.bundle.per_triplet.push((a, p, q), arg.max(0.0));
            ev.triplet.push(if arg > 0.0 {
                vec![(plus.0, plus.1, 1.0), (minus.0, minus.1, -1.0)]
            } else {
                Vec::new()
            });
        }
        ev
    }
}
