use rand::seq::SliceRandom;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::model::{backward_into, forward, Gradients, Mode, RatingModel};
use super::optim::{adam_step, decay_learning_rates, OptimizerState};
use super::tensor::Tensor;
use crate::dataset::{AugmentOp, AugmentSpec};
use crate::error::{Error, Result};

/// An input tensor with its subjective score.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingPair {
    pub image: Tensor,
    pub score: f64,
}

impl TrainingPair {
    pub fn new(image: Tensor, score: f64) -> Result<Self> {
        image.chw()?;
        if !score.is_finite() {
            return Err(Error::contract("training target must be finite"));
        }
        Ok(Self { image, score })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainPlan {
    pub epochs: usize,
    pub batch_size: usize,
    /// The crop must equal the model input extent.
    pub augment: AugmentSpec,
    pub feature_lr: f64,
    pub head_lr: f64,
    pub decay: f64,
    pub decay_interval: usize,
}

impl TrainPlan {
    /// 200 epochs, batches of 4, rates 1e-4 / 1e-3 decaying by 0.95 every 10 epochs.
    pub fn standard(input_size: usize) -> Self {
        Self {
            epochs: 200,
            batch_size: 4,
            augment: AugmentSpec {
                crop: input_size,
                flips: true,
                rotations: false,
            },
            feature_lr: 1e-4,
            head_lr: 1e-3,
            decay: 0.95,
            decay_interval: 10,
        }
    }
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    /// Parameters after the last epoch.
    pub model: RatingModel,
    /// Parameters at the epoch with the lowest validation loss (the final
    /// model when no validation data was given).
    pub best: RatingModel,
    pub best_epoch: Option<usize>,
    /// Mean training L1 per epoch, measured in train mode.
    pub history: Vec<f64>,
    /// Mean eval-mode L1 on the validation set per epoch.
    pub validation: Vec<f64>,
}

pub fn train(model: RatingModel, data: &[TrainingPair], plan: &TrainPlan, seed: u64) -> Result<(RatingModel, Vec<f64>)> {
    let out = train_monitored(model, data, &[], plan, seed)?;
    Ok((out.model, out.history))
}

/// Eval-mode mean L1 over `pairs`, each center-cropped to the input extent.
pub(crate) fn evaluate(model: &RatingModel, pairs: &[TrainingPair]) -> Result<f64> {
    let size = model.config().input_size;
    let mut total = 0.0;
    for p in pairs {
        let x = p.image.center_crop(size)?;
        total += (forward(model, &x, Mode::Eval, 0)?.0 - p.score).abs();
    }
    Ok(total / pairs.len() as f64)
}

/// Training with per-epoch validation tracking.
pub fn train_monitored(
    mut model: RatingModel,
    data: &[TrainingPair],
    validation: &[TrainingPair],
    plan: &TrainPlan,
    seed: u64,
) -> Result<TrainOutcome> {
    if data.is_empty() {
        return Err(Error::contract("training needs at least one example"));
    }
    if plan.batch_size == 0 {
        return Err(Error::contract("batch size must be positive"));
    }
    let size = model.config().input_size;
    if plan.augment.crop != size {
        return Err(Error::Shape(format!(
            "augmentation crop {} differs from the model input {size}",
            plan.augment.crop
        )));
    }
    let channels = model.config().input_channels;
    for (i, p) in data.iter().chain(validation).enumerate() {
        let (c, h, w) = p.image.chw()?;
        if c != channels || h < size || w < size {
            return Err(Error::Shape(format!(
                "example {i}: {c}x{h}x{w} cannot feed a {channels}x{size}x{size} input"
            )));
        }
    }
    if plan.epochs == 0 {
        let best = model.clone();
        return Ok(TrainOutcome {
            model,
            best,
            best_epoch: None,
            history: Vec::new(),
            validation: Vec::new(),
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut opt = OptimizerState::new(&model, plan.feature_lr, plan.head_lr);
    opt.decay = plan.decay;
    opt.decay_interval = plan.decay_interval;
    let mut grads = Gradients::zeros_like(&model);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut history = Vec::with_capacity(plan.epochs);
    let mut val_history = Vec::new();
    let mut best: Option<(f64, usize, RatingModel)> = None;

    for epoch in 0..plan.epochs {
        decay_learning_rates(&mut opt, epoch);
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(plan.batch_size) {
            grads.clear();
            for &i in batch {
                let pair = &data[i];
                let (c, h, w) = pair.image.chw()?;
                let op = AugmentOp::sample(w, h, &plan.augment, &mut rng)?;
                let x = Tensor::new(vec![c, size, size], op.apply_planar(pair.image.data(), c, w, h)?)?;
                let drop_seed = rng.next_u64();
                let (pred, cache) = forward(&model, &x, Mode::Train, drop_seed)?;
                let residual = pred - pair.score;
                epoch_loss += residual.abs();
                // subgradient of |r| taken as 0 at r = 0
                let slope = if residual > 0.0 {
                    1.0
                } else if residual < 0.0 {
                    -1.0
                } else {
                    0.0
                };
                backward_into(&model, &cache, slope / batch.len() as f64, &mut grads)?;
            }
            adam_step(&mut model, &grads, &mut opt)?;
        }
        history.push(epoch_loss / data.len() as f64);
        if !validation.is_empty() {
            let v = evaluate(&model, validation)?;
            val_history.push(v);
            if best.as_ref().is_none_or(|(b, _, _)| v < *b) {
                best = Some((v, epoch, model.clone()));
            }
        }
    }
    model.set_train_seed(seed);
    let (best, best_epoch) = match best {
        Some((_, e, mut m)) => {
            m.set_train_seed(seed);
            (m, Some(e))
        }
        None => (model.clone(), Some(plan.epochs - 1)),
    };
    Ok(TrainOutcome {
        model,
        best,
        best_epoch,
        history,
        validation: val_history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::colornet::{predict, ModelConfig};
    use crate::color::RgbImage;

    fn swatches(n: usize, size: usize) -> Vec<(RgbImage, f64)> {
        (0..n)
            .map(|k| {
                let img = RgbImage::from_fn(size, size, |x, y| {
                    let t = k as f64 / n as f64;
                    [
                        (255.0 * t) as u8,
                        ((x * 8 + k * 30) % 256) as u8,
                        ((y * 8 * (k % 3 + 1)) % 256) as u8,
                    ]
                });
                (img, 1.0 + k as f64 * 0.5)
            })
            .collect()
    }

    fn small_config() -> ModelConfig {
        ModelConfig {
            input_size: 8,
            widths: vec![4, 8],
            pools: vec![true, true],
            dropout: 0.0,
            ..ModelConfig::mini()
        }
    }

    fn pairs(data: &[(RgbImage, f64)]) -> Vec<TrainingPair> {
        data.iter()
            .map(|(img, s)| TrainingPair::new(Tensor::from_rgb(img), *s).unwrap())
            .collect()
    }

    #[test]
    fn zero_epochs_leave_model_untouched() {
        let model = RatingModel::new(small_config(), 1).unwrap();
        let plan = TrainPlan {
            epochs: 0,
            ..TrainPlan::standard(8)
        };
        let (trained, hist) = train(model.clone(), &pairs(&swatches(3, 8)), &plan, 5).unwrap();
        assert!(hist.is_empty());
        assert_eq!(trained, model);
    }

    #[test]
    fn training_is_reproducible() {
        let data = pairs(&swatches(6, 10));
        let plan = TrainPlan {
            epochs: 5,
            ..TrainPlan::standard(8)
        };
        let cfg = ModelConfig {
            dropout: 0.5,
            ..small_config()
        };
        let run = || train(RatingModel::new(cfg.clone(), 3).unwrap(), &data, &plan, 17).unwrap();
        let (m1, h1) = run();
        let (m2, h2) = run();
        assert_eq!(h1.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), h2.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
        assert_eq!(m1, m2);
        let (_, h3) = train(RatingModel::new(cfg, 3).unwrap(), &data, &plan, 18).unwrap();
        assert_ne!(h1, h3);
    }

    #[test]
    fn rejects_bad_inputs() {
        let model = RatingModel::new(small_config(), 1).unwrap();
        let plan = TrainPlan::standard(8);
        assert!(train(model.clone(), &[], &plan, 0).unwrap_err().is_contract_violation());
        let tiny = pairs(&swatches(2, 6));
        assert!(matches!(train(model.clone(), &tiny, &plan, 0), Err(Error::Shape(_))));
        let wrong_crop = TrainPlan::standard(6);
        assert!(train(model, &pairs(&swatches(2, 8)), &wrong_crop, 0).is_err());
        assert!(TrainingPair::new(Tensor::zeros(vec![3, 8, 8]), f64::NAN).is_err());
    }

    #[test]
    fn small_model_memorizes_and_predicts() {
        let data = swatches(4, 8);
        let plan = TrainPlan {
            epochs: 300,
            batch_size: 4,
            augment: AugmentSpec::identity(8),
            feature_lr: 1e-2,
            head_lr: 1e-2,
            decay: 0.95,
            decay_interval: 10,
        };
        let (model, hist) = train(RatingModel::new(small_config(), 2).unwrap(), &pairs(&data), &plan, 9).unwrap();
        assert!(hist.last().unwrap() < &0.1, "{:?}", &hist[hist.len() - 5..]);
        for (img, target) in &data {
            assert!((predict(&model, img).unwrap().value - target).abs() < 0.2);
        }
    }
}
