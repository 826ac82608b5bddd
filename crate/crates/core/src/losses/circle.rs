use crate::distances::DistanceMatrix;
use crate::types::{TupleArity, TupleSet};

use super::{anchor_groups, log_sum_exp, Evaluated, LossConfig, LossKind, MatrixLoss};

/// Per anchor: `log(1 + sum_n sum_p exp(gamma (a_n (s_n - d_n) - a_p (s_p - d_p))))`
/// with `a_p = [1 + m - s_p]_+`, `a_n = [s_n + m]_+`, `d_p = 1 - m`, `d_n = m`.
///
/// The double sum factorizes, so the loss is `softplus(lse_n + lse_p)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Circle {
    pub m: f64,
    pub gamma: f64,
}

impl Circle {
    pub fn from_config(cfg: &LossConfig) -> Self {
        Self {
            m: cfg.param("m"),
            gamma: cfg.param("gamma"),
        }
    }
}

fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

impl MatrixLoss for Circle {
    fn kind(&self) -> LossKind {
        LossKind::Circle
    }

    fn arity(&self) -> TupleArity {
        TupleArity::Pairs
    }

    fn evaluate(&self, mat: &DistanceMatrix, tuples: &TupleSet, n: usize) -> Evaluated {
        debug_assert!(mat.inverted);
        let mut ev = Evaluated::new();
        let (positives, negatives) = anchor_groups(tuples, n);
        let (m, gamma) = (self.m, self.gamma);
        for a in 0..n {
            let (pos, neg) = (&positives[a], &negatives[a]);
            if pos.is_empty() || neg.is_empty() {
                ev.bundle.per_element.push(a, 0.0);
                ev.element.push(Vec::new());
                continue;
            }
            // logits and their slopes w.r.t. the similarity
            let mut zp = Vec::with_capacity(pos.len());
            let mut dzp = Vec::with_capacity(pos.len());
            for &p in pos {
                let s = mat.get(a, p);
                let weight = 1.0 + m - s;
                ev.note_kink(weight);
                if weight > 0.0 {
                    zp.push(-gamma * weight * (s - (1.0 - m)));
                    dzp.push(-gamma * (2.0 - 2.0 * s));
                } else {
                    zp.push(0.0);
                    dzp.push(0.0);
                }
            }
            let mut zn = Vec::with_capacity(neg.len());
            let mut dzn = Vec::with_capacity(neg.len());
            for &q in neg {
                let s = mat.get(a, q);
                let weight = s + m;
                ev.note_kink(weight);
                if weight > 0.0 {
                    zn.push(gamma * weight * (s - m));
                    dzn.push(2.0 * gamma * s);
                } else {
                    zn.push(0.0);
                    dzn.push(0.0);
                }
            }
            let (lse_p, soft_p) = log_sum_exp(&zp);
            let (lse_n, soft_n) = log_sum_exp(&zn);
            let t = lse_p + lse_n;
            let outer = sigmoid(t);
            ev.bundle.per_element.push(a, softplus(t));
            let mut partials = Vec::with_capacity(pos.len() + neg.len());
            partials.extend(
                pos.iter()
                    .enumerate()
                    .map(|(k, &p)| (a, p, outer * soft_p[k] * dzp[k])),
            );
            partials.extend(
                neg.iter()
                    .enumerate()
                    .map(|(k, &q)| (a, q, outer * soft_n[k] * dzn[k])),
            );
            ev.element.push(partials);
        }
        ev
    }
}
