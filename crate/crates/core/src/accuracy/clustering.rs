//! Mutual-information scores between two labelings.
//!
//! Natural logarithms throughout. NMI and AMI normalize by the arithmetic
//! mean of the two entropies; AMI subtracts the exact expected mutual
//! information under the hypergeometric (permutation) model.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Co-occurrence counts of two labelings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Contingency {
    /// `counts[i][j]`: samples with the i-th true class and j-th predicted cluster.
    pub counts: Vec<Vec<usize>>,
    pub row_sums: Vec<usize>,
    pub col_sums: Vec<usize>,
    pub n: usize,
}

impl Contingency {
    pub fn new<T: Ord + Clone, U: Ord + Clone>(truth: &[T], pred: &[U]) -> Result<Self> {
        if truth.len() != pred.len() {
            return Err(Error::LengthMismatch {
                left: truth.len(),
                right: pred.len(),
            });
        }
        if truth.is_empty() {
            return Err(Error::InvalidParameter(
                "labelings must be non-empty".into(),
            ));
        }
        let rows = index_map(truth);
        let cols = index_map(pred);
        let mut counts = vec![vec![0usize; cols.len()]; rows.len()];
        for (t, p) in truth.iter().zip(pred) {
            counts[rows[t]][cols[p]] += 1;
        }
        let row_sums = counts.iter().map(|r| r.iter().sum()).collect();
        let col_sums = (0..cols.len())
            .map(|j| counts.iter().map(|r| r[j]).sum())
            .collect();
        Ok(Self {
            counts,
            row_sums,
            col_sums,
            n: truth.len(),
        })
    }

    pub fn mutual_information(&self) -> f64 {
        let n = self.n as f64;
        let mut mi = 0.0;
        for (i, row) in self.counts.iter().enumerate() {
            for (j, &nij) in row.iter().enumerate() {
                if nij == 0 {
                    continue;
                }
                let nij = nij as f64;
                mi +=
                    nij / n * (n * nij / (self.row_sums[i] as f64 * self.col_sums[j] as f64)).ln();
            }
        }
        mi.max(0.0)
    }

    pub fn entropies(&self) -> (f64, f64) {
        (
            entropy(&self.row_sums, self.n),
            entropy(&self.col_sums, self.n),
        )
    }

    /// Expected mutual information of two random labelings with these marginals.
    pub fn expected_mutual_information(&self) -> f64 {
        let n = self.n;
        let log_fact = log_factorials(n);
        let nf = n as f64;
        let mut emi = 0.0;
        for &a in &self.row_sums {
            for &b in &self.col_sums {
                let start = (a + b).saturating_sub(n).max(1);
                let end = a.min(b);
                let fixed =
                    log_fact[a] + log_fact[b] + log_fact[n - a] + log_fact[n - b] - log_fact[n];
                for nij in start..=end {
                    let log_p = fixed
                        - log_fact[nij]
                        - log_fact[a - nij]
                        - log_fact[b - nij]
                        - log_fact[n + nij - a - b];
                    let nijf = nij as f64;
                    emi += nijf / nf * (nf * nijf / (a as f64 * b as f64)).ln() * log_p.exp();
                }
            }
        }
        emi
    }
}

fn index_map<T: Ord + Clone>(labels: &[T]) -> BTreeMap<T, usize> {
    let mut map = BTreeMap::new();
    for l in labels {
        map.entry(l.clone()).or_insert(0);
    }
    for (i, v) in map.values_mut().enumerate() {
        *v = i;
    }
    map
}

fn entropy(counts: &[usize], n: usize) -> f64 {
    let n = n as f64;
    -counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            p * p.ln()
        })
        .sum::<f64>()
}

fn log_factorials(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(0.0);
    let mut acc = 0.0;
    for k in 1..=n {
        acc += (k as f64).ln();
        out.push(acc);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusteringScores {
    pub nmi: f64,
    pub ami: f64,
}

pub fn clustering_metrics<T: Ord + Clone, U: Ord + Clone>(
    truth: &[T],
    pred: &[U],
) -> Result<ClusteringScores> {
    let table = Contingency::new(truth, pred)?;
    if table.row_sums.len() == 1 && table.col_sums.len() == 1 {
        return Ok(ClusteringScores { nmi: 1.0, ami: 1.0 });
    }
    let mi = table.mutual_information();
    let (hu, hv) = table.entropies();
    let mean_h = 0.5 * (hu + hv);
    let nmi = if mean_h > 0.0 {
        (mi / mean_h).min(1.0)
    } else {
        0.0
    };
    let emi = table.expected_mutual_information();
    let denom = mean_h - emi;
    let ami = if denom > 0.0 { (mi - emi) / denom } else { 0.0 };
    Ok(ClusteringScores { nmi, ami })
}
