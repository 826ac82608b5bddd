//! Pairwise matrices for every distance kind, and their gradients.

use mlkit::distances::{backward, pairwise_matrix, DistanceKind};
use mlkit::{EmbeddingBatch, Result};
use ndarray::Array2;

pub fn run_example() -> Result<Vec<(DistanceKind, Array2<f64>)>> {
    let x = EmbeddingBatch::from_rows(&[vec![0.0, 0.0], vec![3.0, 4.0], vec![1.0, -1.0]])?;
    let kinds = [
        DistanceKind::EUCLIDEAN,
        DistanceKind::Lp { p: 1.0 },
        DistanceKind::CosineSimilarity,
        DistanceKind::DotProductSimilarity,
        DistanceKind::Snr,
    ];
    let mut out = Vec::new();
    for kind in kinds {
        let m = pairwise_matrix(kind, &x, &x)?;
        println!("{kind} (inverted: {})\n{:.4}", m.inverted, m.values);
        out.push((kind, m.values));
    }

    // d(sum of all entries) / dx for the cosine matrix
    let ones = Array2::ones((3, 3));
    let (gx, gy) = backward(DistanceKind::CosineSimilarity, x.view(), x.view(), &ones);
    println!("gradient of the cosine sum:\n{:.4}", gx + gy);
    Ok(out)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example().map(|_| ())
}
