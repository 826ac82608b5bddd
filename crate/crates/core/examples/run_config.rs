//! A whole run driven by a TOML config, as the `mlkit train` command does it.

use std::fs;
use std::path::Path;

use mlkit::cli::{execute_run, prepare_run, RunConfig, PROJECTION_FILE, REPORT_FILE};
use mlkit::{MetricReport, Result};

const CONFIG: &str = r#"
[dataset]
kind = "synthetic"
classes = 3
per_class = 50
d_in = 10
center_spread = 5.0
noise_dev = 1.0

[model]
kind = "linear"
d_out = 2

[train]
epochs = 40
checkpoint_every = 20
output_dir = "OUTPUT"
loss = { name = "triplet_margin", distance = { kind = "cosine_similarity" } }
miner = { epsilon = 0.1 }
sampler = { m = 8, batch_size = 24, epoch_length = 6 }
optimizer = { learning_rate = 0.05, momentum = 0.9 }

[calculator]
metrics = ["precision_at_1", "map_at_r", "NMI"]
"#;

pub fn run_example(dir: &Path) -> Result<MetricReport> {
    let config = RunConfig::from_toml(&CONFIG.replace("OUTPUT", &dir.display().to_string()))?;
    let art = execute_run(prepare_run(config)?)?;
    for entry in fs::read_dir(dir).map_err(|e| mlkit::Error::io(dir, e))? {
        let entry = entry.map_err(|e| mlkit::Error::io(dir, e))?;
        println!("wrote {}", entry.file_name().to_string_lossy());
    }
    println!(
        "{}",
        fs::read_to_string(dir.join(REPORT_FILE))
            .unwrap_or_default()
            .trim()
    );
    println!("projection in {}", dir.join(PROJECTION_FILE).display());
    Ok(art.report)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example(&std::env::temp_dir().join("mlkit-run-config-example")).map(|_| ())
}
