//! k-means on raw points, scored against the true classes with NMI and AMI.

use mlkit::accuracy::{clustering_metrics, kmeans, ClusteringScores, KMeansConfig};
use mlkit::Result;
use ndarray::Array2;

pub fn run_example() -> Result<ClusteringScores> {
    let centers = [[0.0, 0.0], [5.0, 5.0], [-5.0, 5.0]];
    let per = 20;
    let mut x = Array2::zeros((3 * per, 2));
    let mut truth = Vec::new();
    for (c, center) in centers.iter().enumerate() {
        for i in 0..per {
            let angle = i as f64 * 0.9;
            x[[c * per + i, 0]] = center[0] + angle.cos();
            x[[c * per + i, 1]] = center[1] + angle.sin() * 0.5;
            truth.push(c);
        }
    }
    let fit = kmeans(x.view(), 3, &KMeansConfig::default())?;
    println!("wcss {:.4} after {} iterations", fit.wcss, fit.iterations);
    let scores = clustering_metrics(&truth, &fit.labels)?;
    println!("NMI {:.4}  AMI {:.4}", scores.nmi, scores.ami);

    let shuffled: Vec<usize> = (0..3 * per).map(|i| (i * 7) % 3).collect();
    let chance = clustering_metrics(&truth, &shuffled)?;
    println!(
        "against an arbitrary labeling: NMI {:.4}  AMI {:.4}",
        chance.nmi, chance.ami
    );
    Ok(scores)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example().map(|_| ())
}
