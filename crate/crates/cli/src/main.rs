//! `colorfulness`: rate images, sweep manipulations, anchor score scales,
//! cross-validate metrics, train and apply ColorNet, run the experiment
//! service.

mod commands;
mod output;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use colorfulness::color::DEFAULT_SATURATION_EPSILON;
use colorfulness::dataset::DEFAULT_FOLDS;
use colorfulness::metrics::MetricId;

use crate::output::Format;

#[derive(Parser, Debug)]
#[command(name = "colorfulness", version, about = "Image colorfulness metrics and experiments")]
pub struct Cli {
    /// Seed for every random stream (fold shuffles, initialisation, augmentation).
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    /// Guard added to L* in the Yendrikhovskij saturation.
    #[arg(long, global = true, default_value_t = DEFAULT_SATURATION_EPSILON)]
    pub epsilon: f64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Axis {
    /// Chroma scaled toward gray, factors evenly spaced in [0.2, 1].
    Saturation,
    /// Stripes of 1..=steps distinct hues.
    HueCount,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// One row per image and metric.
    Rate {
        #[arg(required = true)]
        images: Vec<PathBuf>,
        /// Repeatable; defaults to the four classical metrics.
        #[arg(long = "metric")]
        metrics: Vec<MetricId>,
        /// Also rate with this ColorNet checkpoint.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Evaluate all classical metrics along a manipulation series.
    Sweep {
        #[arg(long, value_enum)]
        axis: Axis,
        /// Base image for the saturation axis; a built-in flower when omitted.
        #[arg(long)]
        image: Option<PathBuf>,
        #[arg(long, default_value_t = 5)]
        steps: usize,
    },
    /// Fit the linear map from a source manifest's scores onto an anchor's.
    Anchor {
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        anchor: PathBuf,
        /// Write the source manifest with remapped scores here.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Write anchor and remapped source, ids prefixed by manifest name.
        #[arg(long)]
        merged: Option<PathBuf>,
    },
    /// k-fold PCC and SROCC of a metric against manifest scores.
    Eval {
        #[arg(long)]
        manifest: PathBuf,
        /// A classical metric, or `colornet` to train one model per fold.
        #[arg(long, default_value = "hasler")]
        metric: MetricId,
        #[arg(long, default_value_t = DEFAULT_FOLDS)]
        folds: usize,
        #[arg(long, default_value_t = 200)]
        epochs: usize,
    },
    /// Train ColorNet-mini on a whole manifest and write a checkpoint.
    Train {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[command(flatten)]
        hyper: commands::Hyper,
    },
    /// Rate images with a ColorNet checkpoint.
    Predict {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(required = true)]
        images: Vec<PathBuf>,
    },
    /// Run the pairwise-comparison experiment service.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        /// Session event logs live here.
        #[arg(long, default_value = "sessions")]
        data_dir: PathBuf,
        /// Stimulus manifests offered to sessions (repeatable).
        #[arg(long = "manifest", required = true)]
        manifests: Vec<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
