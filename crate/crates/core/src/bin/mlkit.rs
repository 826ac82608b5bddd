use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mlkit::cli::{cmd_eval, cmd_train, EvalArgs};
use mlkit::distances::DistanceKind;

#[derive(Parser)]
#[command(
    name = "mlkit",
    version,
    about = "Train and evaluate metric learning embeddings"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train an embedder from a TOML run config, then evaluate it.
    Train {
        #[arg(long)]
        config: PathBuf,
    },
    /// Score saved embeddings and print the metric report as JSON.
    Eval {
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        k: Option<usize>,
        /// Comma-separated metric names.
        #[arg(long, value_delimiter = ',')]
        metrics: Option<Vec<String>>,
        /// euclidean, l1, lp:<p>, cosine, dot or snr.
        #[arg(long)]
        distance: Option<DistanceKind>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Train { config } => cmd_train(&config, &mut io::stderr()),
        Command::Eval {
            embeddings,
            labels,
            k,
            metrics,
            distance,
        } => {
            let args = EvalArgs {
                embeddings,
                labels,
                k,
                metrics,
                distance,
            };
            cmd_eval(&args, &mut io::stdout(), &mut io::stderr())
        }
    };
    ExitCode::from(code as u8)
}
