use crate::error::{Error, Result};

/// Retrieval scores of one query; `None` when the query has no relevant references.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueryScores {
    pub precision_at_1: f64,
    pub r_precision: f64,
    pub map_at_r: f64,
    /// Number of same-class references.
    pub r: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetrievalMetrics {
    pub precision_at_1: f64,
    pub r_precision: f64,
    pub map_at_r: f64,
}

/// Same-class reference counts per query.
pub fn relevant_counts<T: PartialEq>(
    query_labels: &[T],
    reference_labels: &[T],
    self_excluded: bool,
) -> Vec<usize> {
    query_labels
        .iter()
        .map(|q| {
            let total = reference_labels.iter().filter(|r| *r == q).count();
            total - usize::from(self_excluded && total > 0)
        })
        .collect()
}

/// Per-query Precision@1, R-Precision and MAP@R.
pub fn per_query<T: PartialEq>(
    neighbors: &[Vec<usize>],
    query_labels: &[T],
    reference_labels: &[T],
    self_excluded: bool,
) -> Result<Vec<Option<QueryScores>>> {
    if neighbors.len() != query_labels.len() {
        return Err(Error::LengthMismatch {
            left: neighbors.len(),
            right: query_labels.len(),
        });
    }
    let counts = relevant_counts(query_labels, reference_labels, self_excluded);
    let mut out = Vec::with_capacity(neighbors.len());
    for (qi, (list, &r)) in neighbors.iter().zip(&counts).enumerate() {
        if r == 0 {
            out.push(None);
            continue;
        }
        if list.len() < r {
            return Err(Error::InsufficientNeighbors {
                query: qi,
                have: list.len(),
                need: r,
            });
        }
        let label = &query_labels[qi];
        let mut hits = 0usize;
        let mut precision_sum = 0.0;
        for (rank, &j) in list[..r].iter().enumerate() {
            if reference_labels[j] == *label {
                hits += 1;
                precision_sum += hits as f64 / (rank + 1) as f64;
            }
        }
        out.push(Some(QueryScores {
            precision_at_1: f64::from(u8::from(reference_labels[list[0]] == *label)),
            r_precision: hits as f64 / r as f64,
            map_at_r: precision_sum / r as f64,
            r,
        }));
    }
    Ok(out)
}

/// Averages of [`per_query`] over queries with at least one relevant reference.
pub fn retrieval_metrics<T: PartialEq>(
    neighbors: &[Vec<usize>],
    query_labels: &[T],
    reference_labels: &[T],
    self_excluded: bool,
) -> Result<RetrievalMetrics> {
    let scores: Vec<QueryScores> =
        per_query(neighbors, query_labels, reference_labels, self_excluded)?
            .into_iter()
            .flatten()
            .collect();
    if scores.is_empty() {
        return Ok(RetrievalMetrics {
            precision_at_1: 0.0,
            r_precision: 0.0,
            map_at_r: 0.0,
        });
    }
    let mean = |f: fn(&QueryScores) -> f64| scores.iter().map(f).sum::<f64>() / scores.len() as f64;
    Ok(RetrievalMetrics {
        precision_at_1: mean(|s| s.precision_at_1),
        r_precision: mean(|s| s.r_precision),
        map_at_r: mean(|s| s.map_at_r),
    })
}
