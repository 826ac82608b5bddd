mod common;

use common::{brute, gaussian, labels, rng};
use mlkit::distances::DistanceKind;
use mlkit::miners::{
    multi_similarity_miner, pairs_to_triplets, triplets_to_pairs, tuple_frequency_weights,
    MinerConfig,
};
use mlkit::{EmbeddingBatch, TupleSet};
use rand::Rng;

fn config(epsilon: f64, distance: DistanceKind) -> MinerConfig {
    MinerConfig {
        epsilon,
        distance,
        ..MinerConfig::default()
    }
}

#[test]
fn miner_matches_enumeration() {
    for seed in 0..100 {
        let mut r = rng(seed);
        let n = r.random_range(2..=16);
        let d = r.random_range(2..=5);
        let x = EmbeddingBatch::new(gaussian(&mut r, n, d)).unwrap();
        let classes = r.random_range(2..=4);
        let y = labels(&mut r, n, classes);
        let eps = [0.0, 0.05, 0.1, 0.5][seed as usize % 4];
        for kind in [DistanceKind::CosineSimilarity, DistanceKind::EUCLIDEAN] {
            let mined = multi_similarity_miner(&x, &y, &config(eps, kind)).unwrap();
            let (pos, neg) = brute::mine(&x, &y, eps, kind);
            assert_eq!(mined.pos_pairs, pos, "seed {seed} {kind}");
            assert_eq!(mined.neg_pairs, neg, "seed {seed} {kind}");
        }
    }
}

#[test]
fn larger_epsilon_keeps_a_superset() {
    let grid = [0.0, 0.01, 0.1, 0.3, 1.0, f64::INFINITY];
    for seed in 0..50 {
        let mut r = rng(1000 + seed);
        let n = r.random_range(4..=16);
        let x = EmbeddingBatch::new(gaussian(&mut r, n, 3)).unwrap();
        let y = labels(&mut r, n, 3);
        let mut previous: Option<TupleSet> = None;
        for &eps in &grid {
            let t = multi_similarity_miner(&x, &y, &config(eps, DistanceKind::CosineSimilarity))
                .unwrap();
            if let Some(p) = &previous {
                assert!(p.pos_pairs.iter().all(|e| t.pos_pairs.contains(e)));
                assert!(p.neg_pairs.iter().all(|e| t.neg_pairs.contains(e)));
            }
            previous = Some(t);
        }
    }
}

#[test]
fn conversion_fixtures() {
    // shared anchor: every positive meets every negative of its anchor only
    let t = TupleSet::pairs(
        vec![(0, 1), (0, 2), (3, 4)],
        vec![(0, 5), (0, 6), (3, 7), (8, 9)],
    );
    assert_eq!(
        pairs_to_triplets(&t).triplets,
        vec![(0, 1, 5), (0, 1, 6), (0, 2, 5), (0, 2, 6), (3, 4, 7)]
    );
    // repeated triplets give repeated pairs
    let t = TupleSet::triplets(vec![(0, 1, 2), (0, 1, 3), (0, 1, 2)]);
    let p = triplets_to_pairs(&t);
    assert_eq!(p.pos_pairs, vec![(0, 1), (0, 1), (0, 1)]);
    assert_eq!(p.neg_pairs, vec![(0, 2), (0, 2), (0, 3)]);
    // identity for matching arity
    assert_eq!(pairs_to_triplets(&p.clone()).triplets.len(), 9);
    assert_eq!(triplets_to_pairs(&p), p);
}

#[test]
fn frequency_weights_hand_counts() {
    let t = TupleSet::triplets(vec![(0, 1, 2), (0, 1, 3), (4, 0, 2)]);
    // counts: 0 -> 3, 1 -> 2, 2 -> 2, 3 -> 1, 4 -> 1, 5 -> 0
    let w = tuple_frequency_weights(&t, 6);
    assert_eq!(
        w,
        vec![1.0, 2.0 / 3.0, 2.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 0.0]
    );
}
