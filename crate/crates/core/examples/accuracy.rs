//! Retrieval and clustering metrics, plus a custom metric that needs clusters.

use mlkit::accuracy::{AccuracyCalculator, CalculatorConfig, MetricInput, PRECISION_AT_1};
use mlkit::{EmbeddingBatch, LabelVector, MetricReport, Result};

/// Share of queries that belong to the majority class of their cluster.
fn cluster_purity(m: &MetricInput<'_>) -> f64 {
    let clusters = m.clusters.expect("registered with needs_clustering");
    let mut majority = std::collections::BTreeMap::new();
    for (c, l) in clusters.iter().zip(m.query_labels) {
        *majority.entry((*c, *l)).or_insert(0usize) += 1;
    }
    let mut best = std::collections::BTreeMap::new();
    for ((c, _), count) in majority {
        let slot = best.entry(c).or_insert(0usize);
        *slot = (*slot).max(count);
    }
    best.values().sum::<usize>() as f64 / clusters.len() as f64
}

pub fn run_example() -> Result<(MetricReport, usize)> {
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (c, (cx, cy)) in [(0.0, 0.0), (6.0, 0.0), (0.0, 6.0)].into_iter().enumerate() {
        for i in 0..8 {
            let t = i as f64;
            rows.push(vec![cx + (t * 0.7).sin(), cy + (t * 1.3).cos()]);
            labels.push(c as u64 + 1);
        }
    }
    let x = EmbeddingBatch::from_rows(&rows)?;
    let y = LabelVector::from_raw(labels);

    let mut calc = AccuracyCalculator::new(CalculatorConfig::default())?;
    calc.register_custom_metric("purity", cluster_purity, true)?;
    calc.register_custom_metric("always_one", |_| 1.0, false)?;
    let report = calc.get_accuracy(&x, &x, &y, &y, true)?;
    println!("{}", report.to_json());
    println!("metrics needing k-means: {:?}", calc.requires_clustering());

    calc.set_metrics([PRECISION_AT_1, "always_one"])?;
    let before = calc.kmeans_runs();
    calc.get_accuracy(&x, &x, &y, &y, true)?;
    let extra = calc.kmeans_runs() - before;
    println!("k-means runs for a retrieval-only request: {extra}");
    Ok((report, extra))
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example().map(|_| ())
}
