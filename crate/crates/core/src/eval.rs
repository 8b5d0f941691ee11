//! k-fold correlation protocol: per-fold PCC and SROCC on the test piece,
//! averaged over folds.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::color::RgbImage;
use crate::colornet::{
    forward, prepare_input, train_monitored, ModelConfig, Mode, OutputScale, RatingModel, TrainPlan, TrainingPair,
};
use crate::dataset::{DatasetManifest, FoldPlan};
use crate::error::{Error, Result};
use crate::metrics::{classical, MetricId};
use crate::stats::{pearson_slices, spearman_slices};

#[derive(Clone, Debug, PartialEq)]
pub struct FoldResult {
    pub fold: usize,
    pub pcc: f64,
    pub srocc: f64,
    pub test_ids: Vec<String>,
    /// Epoch picked on the validation piece (trained models only).
    pub best_epoch: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub folds: Vec<FoldResult>,
    pub mean_pcc: f64,
    pub mean_srocc: f64,
}

impl EvalReport {
    fn from_folds(folds: Vec<FoldResult>) -> Self {
        let n = folds.len() as f64;
        let mean_pcc = folds.iter().map(|f| f.pcc).sum::<f64>() / n;
        let mean_srocc = folds.iter().map(|f| f.srocc).sum::<f64>() / n;
        Self {
            folds,
            mean_pcc,
            mean_srocc,
        }
    }

    /// How many folds used each id as test data.
    pub fn test_role_counts(&self) -> BTreeMap<String, usize> {
        let mut counts = BTreeMap::new();
        for f in &self.folds {
            for id in &f.test_ids {
                *counts.entry(id.clone()).or_insert(0) += 1;
            }
        }
        counts
    }
}

/// Decodes every manifest image in entry order.
pub fn load_images(manifest: &DatasetManifest) -> Result<Vec<RgbImage>> {
    manifest.entries().iter().map(|e| RgbImage::open(&e.path)).collect()
}

struct Indexed<'a> {
    manifest: &'a DatasetManifest,
    images: &'a [RgbImage],
}

impl Indexed<'_> {
    fn new<'a>(manifest: &'a DatasetManifest, images: &'a [RgbImage], folds: &FoldPlan) -> Result<Indexed<'a>> {
        if images.len() != manifest.len() {
            return Err(Error::contract(format!(
                "{} images for {} manifest entries",
                images.len(),
                manifest.len()
            )));
        }
        if folds.assignments.len() != manifest.len() {
            return Err(Error::Alignment(format!(
                "fold plan covers {} ids, manifest has {}",
                folds.assignments.len(),
                manifest.len()
            )));
        }
        for (id, _) in &folds.assignments {
            if manifest.get(id).is_none() {
                return Err(Error::UnknownId(id.clone()));
            }
        }
        Ok(Indexed { manifest, images })
    }

    fn position(&self, id: &str) -> usize {
        self.manifest
            .entries()
            .iter()
            .position(|e| e.id == id)
            .expect("ids checked against the manifest")
    }

    fn score(&self, id: &str) -> f64 {
        self.manifest.entries()[self.position(id)].score
    }

    fn image(&self, id: &str) -> &RgbImage {
        &self.images[self.position(id)]
    }
}

fn correlate(fold: usize, ids: Vec<String>, predicted: &[f64], truth: &[f64], best_epoch: Option<usize>) -> Result<FoldResult> {
    Ok(FoldResult {
        fold,
        pcc: pearson_slices(predicted, truth)?,
        srocc: spearman_slices(predicted, truth)?,
        test_ids: ids,
        best_epoch,
    })
}

/// Scores a classical metric fold by fold; nothing is trained.
pub fn evaluate_classical(
    manifest: &DatasetManifest,
    images: &[RgbImage],
    metric: MetricId,
    folds: &FoldPlan,
    epsilon: f64,
) -> Result<EvalReport> {
    let idx = Indexed::new(manifest, images, folds)?;
    let mut out = Vec::with_capacity(folds.fold_count);
    for itr in 0..folds.fold_count {
        let roles = folds.roles(itr)?;
        let predicted = roles
            .test
            .iter()
            .map(|id| classical(metric, idx.image(id), epsilon).map(|s| s.value))
            .collect::<Result<Vec<_>>>()?;
        let truth: Vec<f64> = roles.test.iter().map(|id| idx.score(id)).collect();
        out.push(correlate(itr, roles.test, &predicted, &truth, None)?);
    }
    Ok(EvalReport::from_folds(out))
}

/// Architecture and schedule for per-fold training.
#[derive(Clone, Debug, PartialEq)]
pub struct ColorNetSetup {
    pub config: ModelConfig,
    pub plan: TrainPlan,
    /// Fit the output scaling to each training piece's score mean and spread.
    pub standardize_targets: bool,
}

impl ColorNetSetup {
    pub fn desk() -> Self {
        let config = ModelConfig::mini();
        let plan = TrainPlan::standard(config.input_size);
        Self {
            config,
            plan,
            standardize_targets: true,
        }
    }
}

/// Trains one model per fold on its training pieces, keeps the epoch with
/// the lowest validation loss and scores the test piece. Folds run in
/// parallel; each is seeded independently, so results do not depend on
/// scheduling.
pub fn evaluate_colornet(
    manifest: &DatasetManifest,
    images: &[RgbImage],
    folds: &FoldPlan,
    setup: &ColorNetSetup,
    seed: u64,
) -> Result<EvalReport> {
    let idx = Indexed::new(manifest, images, folds)?;
    setup.config.validate()?;
    let size = setup.config.input_size;
    let inputs = images
        .iter()
        .map(|img| prepare_input(img, size))
        .collect::<Result<Vec<_>>>()?;
    let pair = |id: &str| TrainingPair::new(inputs[idx.position(id)].clone(), idx.score(id));

    let results: Vec<Result<FoldResult>> = (0..folds.fold_count)
        .into_par_iter()
        .map(|itr| {
            let roles = folds.roles(itr)?;
            let train = roles.train.iter().map(|id| pair(id)).collect::<Result<Vec<_>>>()?;
            let validation = roles.validation.iter().map(|id| pair(id)).collect::<Result<Vec<_>>>()?;
            let fold_seed = seed.wrapping_add(itr as u64);
            let mut model = RatingModel::new(setup.config.clone(), fold_seed)?;
            if setup.standardize_targets {
                let targets: Vec<f64> = train.iter().map(|p| p.score).collect();
                model.set_output_scale(OutputScale::standardizing(&targets))?;
            }
            let outcome = train_monitored(model, &train, &validation, &setup.plan, fold_seed)?;
            let predicted = roles
                .test
                .iter()
                .map(|id| forward(&outcome.best, &inputs[idx.position(id)], Mode::Eval, 0).map(|r| r.0))
                .collect::<Result<Vec<_>>>()?;
            let truth: Vec<f64> = roles.test.iter().map(|id| idx.score(id)).collect();
            correlate(itr, roles.test, &predicted, &truth, outcome.best_epoch)
        })
        .collect();
    Ok(EvalReport::from_folds(results.into_iter().collect::<Result<Vec<_>>>()?))
}
