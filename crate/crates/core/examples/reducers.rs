//! Reducers and regularizers attached to a contrastive loss.

use mlkit::losses::{LossConfig, LossKind};
use mlkit::reducers::{ReduceOp, ReducerKind};
use mlkit::regularizers::RegularizerKind;
use mlkit::{EmbeddingBatch, LabelVector, LossBundle, Result};

pub fn run_example() -> Result<Vec<f64>> {
    let b = LossBundle::elements(vec![0, 1, 2, 3], vec![5.0, 15.0, 25.0, 35.0]);
    for (name, r) in [
        ("mean", ReducerKind::mean()),
        ("sum", ReducerKind::sum()),
        ("threshold [10, 30]", ReducerKind::threshold(10.0, 30.0)),
    ] {
        let out = r.reduce_weighted(&b);
        println!("{name:<20} {:>6}  weights {:?}", out.value, out.element);
    }

    let x = EmbeddingBatch::from_rows(&[
        vec![2.0, 0.0],
        vec![1.5, 0.5],
        vec![0.0, 3.0],
        vec![0.4, 2.0],
    ])?;
    let y = LabelVector::from_raw([0, 0, 1, 1]);
    let plain = LossConfig::new(LossKind::Contrastive);
    let configs = [
        plain.clone(),
        plain.clone().with_reducer(ReducerKind {
            neg_pair: Some(ReduceOp::Sum),
            ..ReducerKind::mean()
        }),
        plain.with_embedding_regularizer(RegularizerKind::Lp { p: 2.0, power: 1 }, 0.1),
    ];
    let mut values = Vec::new();
    for cfg in &configs {
        let out = cfg.compute(&x, &y, None, None)?;
        println!(
            "contrastive value {:.4} (regularizer terms {})",
            out.value,
            out.embedding_reg_bundle.per_element.len()
        );
        values.push(out.value);
    }
    Ok(values)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example().map(|_| ())
}
