//! The end-to-end benchmark run shared by several test targets.

use std::path::Path;

use mlkit::cli::RunConfig;

pub const BENCHMARK: &str = r#"
[dataset]
kind = "synthetic"
classes = 3
per_class = 100
d_in = 10
center_spread = 5.0
noise_dev = 1.0
seed = 0

[model]
kind = "linear"
d_out = 2

[train]
epochs = 200
seed = 0
checkpoint_every = 50
output_dir = "OUTPUT"
loss = { name = "triplet_margin", distance = { kind = "cosine_similarity" }, reducer = { default = { kind = "mean" } } }
miner = { name = "multi_similarity", epsilon = 0.1, distance = { kind = "cosine_similarity" } }
sampler = { m = 8, batch_size = 24, epoch_length = 12 }
optimizer = { learning_rate = 0.05, momentum = 0.9 }

[calculator]
metrics = ["precision_at_1", "r_precision", "map_at_r"]
exclude_self = true
"#;

pub fn benchmark_toml(output_dir: &Path) -> String {
    BENCHMARK.replace("OUTPUT", &output_dir.display().to_string())
}

pub fn benchmark_config(output_dir: &Path) -> RunConfig {
    RunConfig::from_toml(&benchmark_toml(output_dir)).unwrap()
}
