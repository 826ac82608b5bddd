use crate::distances::DistanceMatrix;
use crate::types::{TupleArity, TupleSet};

use super::{anchor_groups, log_sum_exp, Evaluated, LossConfig, LossKind, MatrixLoss};

/// Per anchor: `1/alpha log(1 + sum_p e^{-alpha (s_ap - base)}) + 1/beta log(1 + sum_n e^{beta (s_an - base)})`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultiSimilarity {
    pub alpha: f64,
    pub beta: f64,
    pub base: f64,
}

impl MultiSimilarity {
    pub fn from_config(cfg: &LossConfig) -> Self {
        Self {
            alpha: cfg.param("alpha"),
            beta: cfg.param("beta"),
            base: cfg.param("base"),
        }
    }
}

/// `scale^-1 * log(1 + sum_i e^{z_i})` with `z_i = scale * dir * (s_i - base)`,
/// plus `d/ds_i`.
fn soft_term(sims: &[f64], scale: f64, dir: f64, base: f64) -> (f64, Vec<f64>) {
    let mut z = Vec::with_capacity(sims.len() + 1);
    z.push(0.0);
    z.extend(sims.iter().map(|s| scale * dir * (s - base)));
    let (lse, soft) = log_sum_exp(&z);
    (lse / scale, soft[1..].iter().map(|p| p * dir).collect())
}

impl MatrixLoss for MultiSimilarity {
    fn kind(&self) -> LossKind {
        LossKind::MultiSimilarity
    }

    fn arity(&self) -> TupleArity {
        TupleArity::Pairs
    }

    fn evaluate(&self, mat: &DistanceMatrix, tuples: &TupleSet, n: usize) -> Evaluated {
        debug_assert!(mat.inverted);
        let mut ev = Evaluated::new();
        let (positives, negatives) = anchor_groups(tuples, n);
        for a in 0..n {
            let mut value = 0.0;
            let mut partials = Vec::new();
            let pos = &positives[a];
            if !pos.is_empty() {
                let sims: Vec<f64> = pos.iter().map(|&p| mat.get(a, p)).collect();
                let (v, g) = soft_term(&sims, self.alpha, -1.0, self.base);
                value += v;
                partials.extend(pos.iter().zip(g).map(|(&p, g)| (a, p, g)));
            }
            let neg = &negatives[a];
            if !neg.is_empty() {
                let sims: Vec<f64> = neg.iter().map(|&q| mat.get(a, q)).collect();
                let (v, g) = soft_term(&sims, self.beta, 1.0, self.base);
                value += v;
                partials.extend(neg.iter().zip(g).map(|(&q, g)| (a, q, g)));
            }
            ev.bundle.per_element.push(a, value);
            ev.element.push(partials);
        }
        ev
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distances::DistanceKind;
    use ndarray::array;

    #[test]
    fn hand_values() {
        let loss = MultiSimilarity {
            alpha: 2.0,
            beta: 50.0,
            base: 0.5,
        };
        let s = DistanceMatrix::from_values(
            array![[1.0, 0.5, 0.5], [0.5, 1.0, 0.0], [0.5, 0.0, 1.0]],
            DistanceKind::CosineSimilarity,
        );
        let empty = TupleSet::pairs(vec![], vec![]);
        assert_eq!(loss.bundle(&s, &empty, 3).per_element.values, vec![0.0; 3]);

        let pos_only = TupleSet::pairs(vec![(0, 1)], vec![]);
        let v = loss.bundle(&s, &pos_only, 3).per_element.values[0];
        assert!((v - 0.5 * 2f64.ln()).abs() < 1e-15);
        assert!((v - 0.346574).abs() < 1e-6);

        let neg_only = TupleSet::pairs(vec![], vec![(0, 2)]);
        let v = loss.bundle(&s, &neg_only, 3).per_element.values[0];
        assert!((v - 2f64.ln() / 50.0).abs() < 1e-15);
        assert!((v - 0.013863).abs() < 1e-6);
    }
}
