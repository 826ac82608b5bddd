//! Brute-force reference implementations used as oracles.

use mlkit::distances::{pairwise_matrix, DistanceKind};
use mlkit::{EmbeddingBatch, LabelVector, Pair};

/// Multi-similarity mining by enumeration: a positive survives if some
/// negative of the same anchor beats it by less than `eps`, and vice versa.
pub fn mine(
    x: &EmbeddingBatch,
    y: &LabelVector,
    eps: f64,
    kind: DistanceKind,
) -> (Vec<Pair>, Vec<Pair>) {
    let m = pairwise_matrix(kind, x, x).unwrap();
    let ids = y.ids();
    let n = ids.len();
    let s = |i: usize, j: usize| m.get(i, j);
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for a in 0..n {
        for b in 0..n {
            if a == b {
                continue;
            }
            let same = ids[a] == ids[b];
            let keep = (0..n).any(|c| {
                if c == a || (ids[c] == ids[a]) == same {
                    return false;
                }
                // `b` is the candidate, `c` ranges over the opposite set
                match (same, kind.is_inverted()) {
                    (true, true) => s(a, b) < s(a, c) + eps,
                    (false, true) => s(a, b) > s(a, c) - eps,
                    (true, false) => s(a, b) > s(a, c) - eps,
                    (false, false) => s(a, b) < s(a, c) + eps,
                }
            });
            if keep {
                if same {
                    pos.push((a, b));
                } else {
                    neg.push((a, b));
                }
            }
        }
    }
    (pos, neg)
}

/// Per-query (P@1, R-precision, MAP@R) from a full Euclidean sort of every
/// other row; `None` for queries without a same-class partner.
pub fn retrieval(x: &[Vec<f64>], labels: &[u64]) -> Vec<Option<(f64, f64, f64)>> {
    let n = x.len();
    (0..n)
        .map(|q| {
            let mut order: Vec<(f64, usize)> = (0..n)
                .filter(|&j| j != q)
                .map(|j| {
                    let d: f64 = x[q].iter().zip(&x[j]).map(|(a, b)| (a - b) * (a - b)).sum();
                    (d.sqrt(), j)
                })
                .collect();
            order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let relevant: Vec<bool> = order.iter().map(|&(_, j)| labels[j] == labels[q]).collect();
            let r = relevant.iter().filter(|&&v| v).count();
            if r == 0 {
                return None;
            }
            let p1 = if relevant[0] { 1.0 } else { 0.0 };
            let rp = relevant[..r].iter().filter(|&&v| v).count() as f64 / r as f64;
            let mut ap = 0.0;
            for i in 0..r {
                if relevant[i] {
                    let prefix = relevant[..=i].iter().filter(|&&v| v).count() as f64;
                    ap += prefix / (i + 1) as f64;
                }
            }
            Some((p1, rp, ap / r as f64))
        })
        .collect()
}

/// Mutual information (nats) by summing over every pair of label values.
pub fn mutual_information(truth: &[u64], pred: &[u64]) -> f64 {
    let n = truth.len() as f64;
    let mut ts: Vec<u64> = truth.to_vec();
    ts.sort_unstable();
    ts.dedup();
    let mut ps: Vec<u64> = pred.to_vec();
    ps.sort_unstable();
    ps.dedup();
    let mut mi = 0.0;
    for &t in &ts {
        for &p in &ps {
            let joint = truth
                .iter()
                .zip(pred)
                .filter(|&(&a, &b)| a == t && b == p)
                .count() as f64;
            if joint == 0.0 {
                continue;
            }
            let a = truth.iter().filter(|&&v| v == t).count() as f64;
            let b = pred.iter().filter(|&&v| v == p).count() as f64;
            mi += joint / n * (n * joint / (a * b)).ln();
        }
    }
    mi
}
