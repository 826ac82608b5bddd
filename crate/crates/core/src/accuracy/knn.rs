use std::cmp::Ordering;

use crate::distances::{pairwise_matrix, DistanceKind};
use crate::error::{Error, Result};
use crate::types::EmbeddingBatch;

/// Exact top-`k` reference indices for every query row.
///
/// Neighbors are ordered nearest first (ascending distance, or descending
/// similarity for inverted kinds); ties go to the lower reference index.
/// With `exclude_self` the query set is taken to be the reference set and
/// reference `i` is never returned for query `i`.
pub fn knn(
    query: &EmbeddingBatch,
    reference: &EmbeddingBatch,
    k: usize,
    kind: DistanceKind,
    exclude_self: bool,
) -> Result<Vec<Vec<usize>>> {
    if exclude_self && query.rows() != reference.rows() {
        return Err(Error::ShapeMismatch(format!(
            "self-exclusion needs query and reference to be the same set, got {} and {} rows",
            query.rows(),
            reference.rows()
        )));
    }
    let available = reference.rows() - usize::from(exclude_self);
    if k > available {
        return Err(Error::KTooLarge { k, available });
    }
    let mat = pairwise_matrix(kind, query, reference)?;
    let closer = |a: f64, b: f64| -> Ordering {
        if mat.inverted {
            b.total_cmp(&a)
        } else {
            a.total_cmp(&b)
        }
    };
    let mut out = Vec::with_capacity(query.rows());
    for (i, row) in mat.values.rows().into_iter().enumerate() {
        let mut order: Vec<usize> = (0..reference.rows())
            .filter(|&j| !(exclude_self && j == i))
            .collect();
        order.sort_by(|&a, &b| closer(row[a], row[b]).then(a.cmp(&b)));
        order.truncate(k);
        out.push(order);
    }
    Ok(out)
}
