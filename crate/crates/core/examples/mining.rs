//! Hard-pair mining, then converting the pairs into triplets for a triplet loss.

use mlkit::losses::{LossConfig, LossKind};
use mlkit::miners::{pairs_to_triplets, tuple_frequency_weights, MinerConfig};
use mlkit::{EmbeddingBatch, LabelVector, Result, TupleSet};

pub fn run_example() -> Result<TupleSet> {
    let x = EmbeddingBatch::from_rows(&[
        vec![1.0, 0.0],
        vec![0.8, 0.6],
        vec![0.0, 1.0],
        vec![-0.6, 0.8],
        vec![0.6, 0.8],
        vec![-1.0, 0.0],
    ])?;
    let y = LabelVector::from_raw([0, 0, 1, 1, 2, 2]);
    let miner = MinerConfig::default();
    let mined = miner.mine(&x, &y)?;
    println!("positive pairs {:?}", mined.pos_pairs);
    println!("negative pairs {:?}", mined.neg_pairs);

    let triplets = pairs_to_triplets(&mined);
    println!(
        "{} triplets, occurrence weights {:?}",
        triplets.triplets.len(),
        tuple_frequency_weights(&triplets, 6)
    );

    let cfg = LossConfig::new(LossKind::TripletMargin).with_distance(miner.distance);
    let all = cfg.compute(&x, &y, None, None)?.value;
    let hard = cfg.compute(&x, &y, Some(&mined), None)?.value;
    println!("triplet loss over all tuples {all:.4}, over mined tuples {hard:.4}");
    Ok(mined)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example().map(|_| ())
}
