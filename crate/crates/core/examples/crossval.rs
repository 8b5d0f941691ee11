//! Desk-scale correlation table on the synthetic benchmark.
//!
//! `cargo run --release -p colorfulness --example crossval [epochs]`

use std::time::Instant;

use colorfulness::colornet::TrainPlan;
use colorfulness::dataset::{kfold_split, DatasetManifest, ManifestEntry};
use colorfulness::eval::{evaluate_classical, evaluate_colornet, ColorNetSetup};
use colorfulness::metrics::MetricId;
use colorfulness::synth::{benchmark, BenchmarkSpec};

fn main() -> colorfulness::Result<()> {
    let epochs: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(200);
    let items = benchmark(&BenchmarkSpec::default())?;
    let entries = items
        .iter()
        .map(|i| ManifestEntry {
            id: i.id.clone(),
            path: format!("{}.png", i.id).into(),
            score: i.score,
            source: "synthetic".into(),
        })
        .collect();
    let manifest = DatasetManifest::new("synthetic", entries)?;
    let images: Vec<_> = items.into_iter().map(|i| i.image).collect();
    let folds = kfold_split(&manifest, 10, 7)?;

    for metric in MetricId::CLASSICAL {
        let r = evaluate_classical(&manifest, &images, metric, &folds, 0.01)?;
        println!("{:<16} PCC {:.3}  SROCC {:.3}", metric.as_str(), r.mean_pcc, r.mean_srocc);
    }
    let mut setup = ColorNetSetup::desk();
    setup.plan = TrainPlan { epochs, ..setup.plan };
    let start = Instant::now();
    let r = evaluate_colornet(&manifest, &images, &folds, &setup, 11)?;
    println!(
        "{:<16} PCC {:.3}  SROCC {:.3}  ({:.1}s, best epochs {:?})",
        "colornet-mini",
        r.mean_pcc,
        r.mean_srocc,
        start.elapsed().as_secs_f64(),
        r.folds.iter().map(|f| f.best_epoch.unwrap_or(0)).collect::<Vec<_>>()
    );
    Ok(())
}
