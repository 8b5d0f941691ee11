use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Args;
use colorfulness::color::RgbImage;
use colorfulness::colornet::{
    load_checkpoint, predict, prepare_input, save_checkpoint, train, ModelConfig, OutputScale, RatingModel, TrainPlan,
    TrainingPair,
};
use colorfulness::dataset::{
    anchor_apply, anchor_fit, kfold_split, load_manifest, merge, prefix_ids, AugmentSpec, DatasetManifest,
};
use colorfulness::eval::{evaluate_classical, evaluate_colornet, load_images, ColorNetSetup, EvalReport};
use colorfulness::metrics::{classical, MetricId};
use colorfulness::synth::{flower, hue_swatches, scale_chroma};
use colorfulness_service::{serve, ServiceConfig};

use crate::output::{Cell, Rows};
use crate::{Axis, Cli, Command};

/// Exit code 1 for bad input, 2 for a broken precondition.
#[derive(Debug)]
pub enum Failure {
    Input(String),
    Contract(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 1,
            Failure::Contract(_) => 2,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Input(m) | Failure::Contract(m) => m,
        }
    }
}

impl From<colorfulness::Error> for Failure {
    fn from(e: colorfulness::Error) -> Self {
        if e.is_contract_violation() {
            Failure::Contract(e.to_string())
        } else {
            Failure::Input(e.to_string())
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

#[derive(Args, Debug, Clone)]
pub struct Hyper {
    #[arg(long, default_value_t = 200)]
    pub epochs: usize,
    #[arg(long, default_value_t = 4)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 1e-4)]
    pub feature_lr: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub head_lr: f64,
    #[arg(long, default_value_t = 0.75)]
    pub dropout: f64,
    /// Disable random flips.
    #[arg(long)]
    pub no_augment: bool,
}

pub fn run(cli: &Cli) -> Outcome {
    let rows = match &cli.command {
        Command::Rate {
            images,
            metrics,
            checkpoint,
        } => rate(images, metrics, checkpoint.as_deref(), cli.epsilon)?,
        Command::Sweep { axis, image, steps } => sweep(*axis, image.as_deref(), *steps, cli.epsilon)?,
        Command::Anchor {
            source,
            anchor,
            output,
            merged,
        } => anchor_cmd(source, anchor, output.as_deref(), merged.as_deref())?,
        Command::Eval {
            manifest,
            metric,
            folds,
            epochs,
        } => eval(manifest, *metric, *folds, *epochs, cli.seed, cli.epsilon)?,
        Command::Train { manifest, output, hyper } => train_cmd(manifest, output, hyper, cli.seed)?,
        Command::Predict { checkpoint, images } => {
            let model = load_checkpoint(checkpoint)?;
            rate_each(images, |img| Ok(vec![(MetricId::ColorNet, predict(&model, img)?.value)]))?
        }
        Command::Serve {
            addr,
            data_dir,
            manifests,
        } => {
            let config = ServiceConfig {
                addr: *addr,
                data_dir: data_dir.clone(),
                manifests: manifests.clone(),
            };
            let rt = tokio::runtime::Runtime::new()?;
            return rt.block_on(serve(config)).map_err(Failure::Input);
        }
    };
    let (rows, failed) = rows;
    let mut out = std::io::stdout().lock();
    rows.write(cli.format, &mut out)?;
    out.flush()?;
    match failed {
        Some(f) => Err(f),
        None => Ok(()),
    }
}

/// Rows plus a deferred failure: per-file errors still let the other rows print.
type Report = (Rows, Option<Failure>);

fn rate(images: &[PathBuf], metrics: &[MetricId], checkpoint: Option<&Path>, epsilon: f64) -> Result<Report, Failure> {
    let mut metrics = if metrics.is_empty() {
        MetricId::CLASSICAL.to_vec()
    } else {
        metrics.to_vec()
    };
    let model = match checkpoint {
        Some(p) => {
            if !metrics.contains(&MetricId::ColorNet) {
                metrics.push(MetricId::ColorNet);
            }
            Some(load_checkpoint(p)?)
        }
        None if metrics.contains(&MetricId::ColorNet) => {
            return Err(Failure::Contract("metric colornet needs --checkpoint".into()));
        }
        None => None,
    };
    rate_each(images, |img| {
        metrics
            .iter()
            .map(|&m| {
                let v = match (&model, m) {
                    (Some(model), MetricId::ColorNet) => predict(model, img)?,
                    _ => classical(m, img, epsilon)?,
                };
                Ok((m, v.value))
            })
            .collect()
    })
}

fn rate_each(
    images: &[PathBuf],
    score: impl Fn(&RgbImage) -> Result<Vec<(MetricId, f64)>, Failure>,
) -> Result<Report, Failure> {
    let mut rows = Rows::new(&["image", "metric", "value"]);
    let mut failed = 0;
    let mut worst = None;
    for path in images {
        let result = RgbImage::open(path).map_err(Failure::from).and_then(|img| score(&img));
        match result {
            Ok(values) => {
                for (m, v) in values {
                    rows.push(vec![path.display().to_string().into(), m.as_str().into(), v.into()]);
                }
            }
            Err(f) => {
                let shown = path.display().to_string();
                if f.message().starts_with(&shown) {
                    eprintln!("error: {}", f.message());
                } else {
                    eprintln!("error: {shown}: {}", f.message());
                }
                failed += 1;
                if worst.as_ref().is_none_or(|w: &Failure| f.code() > w.code()) {
                    worst = Some(f);
                }
            }
        }
    }
    let failure = worst.map(|w| {
        let msg = format!("{failed} of {} images could not be rated", images.len());
        match w {
            Failure::Input(_) => Failure::Input(msg),
            Failure::Contract(_) => Failure::Contract(msg),
        }
    });
    Ok((rows, failure))
}

fn classical_row(step: usize, level: f64, img: &RgbImage, epsilon: f64) -> Result<Vec<Cell>, Failure> {
    let mut cells = vec![Cell::from(step), Cell::from(level)];
    for m in MetricId::CLASSICAL {
        cells.push(classical(m, img, epsilon)?.value.into());
    }
    Ok(cells)
}

fn sweep(axis: Axis, image: Option<&Path>, steps: usize, epsilon: f64) -> Result<Report, Failure> {
    if steps < 2 {
        return Err(Failure::Contract(format!("a sweep needs at least 2 steps, got {steps}")));
    }
    let mut rows = Rows::new(&["step", "level", "hasler", "cqe1", "cqe2", "yendrikhovskij"]);
    match axis {
        Axis::Saturation => {
            let base = match image {
                Some(p) => RgbImage::open(p)?,
                None => flower(64),
            };
            for i in 0..steps {
                let t = 0.2 + 0.8 * i as f64 / (steps - 1) as f64;
                rows.push(classical_row(i, t, &scale_chroma(&base, t)?, epsilon)?);
            }
        }
        Axis::HueCount => {
            if image.is_some() {
                return Err(Failure::Contract("the hue-count axis generates its own images".into()));
            }
            for k in 1..=steps {
                rows.push(classical_row(k - 1, k as f64, &hue_swatches(k, steps, 64)?, epsilon)?);
            }
        }
    }
    Ok((rows, None))
}

fn anchor_cmd(source: &Path, anchor: &Path, output: Option<&Path>, merged: Option<&Path>) -> Result<Report, Failure> {
    let src = load_manifest(source, false)?;
    let anc = load_manifest(anchor, false)?;
    let (src_scores, anc_scores) = (src.scores(), anc.scores());
    let t = anchor_fit(src.name(), &src_scores, &anc_scores)?;
    let common = src_scores.ids().iter().filter(|id| anc_scores.get(id).is_some()).count();
    let remapped = anchor_apply(&src, &t)?;
    if let Some(p) = output {
        remapped.save(p)?;
    }
    if let Some(p) = merged {
        merge(&[prefix_ids(&anc), prefix_ids(&remapped)])?.save(p)?;
    }
    let mut rows = Rows::new(&["source", "a", "b", "r2", "common"]);
    rows.push(vec![t.source.clone().into(), t.a.into(), t.b.into(), t.fit_r2.into(), common.into()]);
    Ok((rows, None))
}

fn fold_rows(report: &EvalReport) -> Rows {
    let mut rows = Rows::new(&["fold", "pcc", "srocc"]);
    for f in &report.folds {
        rows.push(vec![f.fold.to_string().into(), f.pcc.into(), f.srocc.into()]);
    }
    rows.push(vec!["mean".into(), report.mean_pcc.into(), report.mean_srocc.into()]);
    rows
}

fn eval(manifest: &Path, metric: MetricId, k: usize, epochs: usize, seed: u64, epsilon: f64) -> Result<Report, Failure> {
    let m = load_manifest(manifest, true)?;
    let folds = kfold_split(&m, k, seed)?;
    let images = load_images(&m)?;
    let report = match metric {
        MetricId::ColorNet => {
            let mut setup = ColorNetSetup::desk();
            setup.plan.epochs = epochs;
            evaluate_colornet(&m, &images, &folds, &setup, seed)?
        }
        classical => evaluate_classical(&m, &images, classical, &folds, epsilon)?,
    };
    Ok((fold_rows(&report), None))
}

fn training_pairs(m: &DatasetManifest, size: usize) -> Result<Vec<TrainingPair>, Failure> {
    let images = load_images(m)?;
    Ok(images
        .iter()
        .zip(m.entries())
        .map(|(img, e)| TrainingPair::new(prepare_input(img, size)?, e.score))
        .collect::<colorfulness::Result<Vec<_>>>()?)
}

fn train_cmd(manifest: &Path, output: &Path, h: &Hyper, seed: u64) -> Result<Report, Failure> {
    let m = load_manifest(manifest, true)?;
    let config = ModelConfig {
        dropout: h.dropout,
        ..ModelConfig::mini()
    };
    config.validate()?;
    let data = training_pairs(&m, config.input_size)?;
    let plan = TrainPlan {
        epochs: h.epochs,
        batch_size: h.batch_size,
        augment: if h.no_augment {
            AugmentSpec::identity(config.input_size)
        } else {
            TrainPlan::standard(config.input_size).augment
        },
        feature_lr: h.feature_lr,
        head_lr: h.head_lr,
        ..TrainPlan::standard(config.input_size)
    };
    let mut model = RatingModel::new(config, seed)?;
    let targets: Vec<f64> = data.iter().map(|p| p.score).collect();
    model.set_output_scale(OutputScale::standardizing(&targets))?;
    let (model, history) = train(model, &data, &plan, seed)?;
    save_checkpoint(&model, output)?;
    let mut rows = Rows::new(&["epoch", "train_l1"]);
    for (e, loss) in history.iter().enumerate() {
        rows.push(vec![(e + 1).into(), (*loss).into()]);
    }
    Ok((rows, None))
}
