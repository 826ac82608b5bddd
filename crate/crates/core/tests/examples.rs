//! Runs every example's `run_example` and checks what it reports.

#[path = "../examples/arcface.rs"]
mod arcface;
#[path = "../examples/clustering.rs"]
mod clustering;
#[path = "../examples/distances.rs"]
mod distances;
#[path = "../examples/losses.rs"]
mod losses;
#[path = "../examples/mining.rs"]
mod mining;
#[path = "../examples/reducers.rs"]
mod reducers;
#[path = "../examples/run_config.rs"]
mod run_config;
#[path = "../examples/sampling.rs"]
mod sampling;

#[test]
fn distances_example() {
    let out = distances::run_example().unwrap();
    assert_eq!(out.len(), 5);
    assert_eq!(out[0].1[[0, 1]], 5.0);
    assert_eq!(out[1].1[[0, 1]], 7.0);
}

#[test]
fn losses_example() {
    let values = losses::run_example().unwrap();
    assert_eq!(values.len(), 6);
    assert!(values.iter().all(|(_, v)| v.is_finite() && *v >= 0.0));
}

#[test]
fn mining_example() {
    let mined = mining::run_example().unwrap();
    assert!(!mined.is_empty());
    assert!(mined.pos_pairs.iter().all(|&(a, p)| a / 2 == p / 2));
}

#[test]
fn reducers_example() {
    let values = reducers::run_example().unwrap();
    assert!(values[1] >= values[0]);
    assert!(values[2] > values[0]);
}

#[test]
fn sampling_example() {
    let batches = sampling::run_example().unwrap();
    assert_eq!(batches.len(), 3);
    assert!(batches.iter().all(|b| b.len() == 12));
}

#[test]
fn accuracy_example() {
    let (report, extra_runs) = accuracy::run_example().unwrap();
    assert_eq!(report.get("precision_at_1"), Some(1.0));
    assert_eq!(report.get("purity"), Some(1.0));
    assert_eq!(report.get("always_one"), Some(1.0));
    assert_eq!(extra_runs, 0);
}

#[test]
fn clustering_example() {
    let s = clustering::run_example().unwrap();
    assert!((s.nmi - 1.0).abs() < 1e-12 && (s.ami - 1.0).abs() < 1e-12);
}

#[test]
fn training_example() {
    let dir = tempfile::tempdir().unwrap();
    let report = training::run_example(dir.path()).unwrap();
    assert!(report.get("precision_at_1").unwrap() > 0.9);
}

#[test]
fn arcface_example() {
    assert!(arcface::run_example().unwrap() > 0.9);
}

#[test]
fn run_config_example() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_config::run_example(dir.path()).unwrap();
    assert_eq!(report.len(), 3);
    assert!(report.get("precision_at_1").unwrap() > 0.9);
    assert!(dir.path().join("final.ckpt").is_file());
}
