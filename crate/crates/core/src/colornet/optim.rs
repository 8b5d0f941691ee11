use super::model::{Gradients, ParamGroup, RatingModel};
use crate::error::{Error, Result};

/// ADAM moments plus the two-rate schedule.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerState {
    pub first: Vec<Vec<f64>>,
    pub second: Vec<Vec<f64>>,
    pub step: u64,
    pub feature_lr: f64,
    pub head_lr: f64,
    pub decay: f64,
    /// Rates decay at every positive multiple of this many epochs.
    pub decay_interval: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl OptimizerState {
    pub fn new(model: &RatingModel, feature_lr: f64, head_lr: f64) -> Self {
        let zeros: Vec<Vec<f64>> = model.params().iter().map(|p| vec![0.0; p.data.len()]).collect();
        Self {
            first: zeros.clone(),
            second: zeros,
            step: 0,
            feature_lr,
            head_lr,
            decay: 0.95,
            decay_interval: 10,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

pub fn adam_step(model: &mut RatingModel, grads: &Gradients, opt: &mut OptimizerState) -> Result<()> {
    let shapes_match = |bufs: &[Vec<f64>]| {
        bufs.len() == model.params().len() && bufs.iter().zip(model.params()).all(|(b, p)| b.len() == p.data.len())
    };
    if !shapes_match(&grads.tensors) || !shapes_match(&opt.first) || !shapes_match(&opt.second) {
        return Err(Error::contract("gradient or moment shapes do not match the model"));
    }
    if grads.tensors.iter().flatten().any(|g| !g.is_finite()) {
        return Err(Error::contract("non-finite gradient"));
    }
    opt.step += 1;
    let t = opt.step as i32;
    let c1 = 1.0 - opt.beta1.powi(t);
    let c2 = 1.0 - opt.beta2.powi(t);
    let (b1, b2, eps) = (opt.beta1, opt.beta2, opt.epsilon);
    for (k, p) in model.params_mut().iter_mut().enumerate() {
        let lr = match p.group {
            ParamGroup::Feature => opt.feature_lr,
            ParamGroup::Head => opt.head_lr,
        };
        let (m, v, g) = (&mut opt.first[k], &mut opt.second[k], &grads.tensors[k]);
        for i in 0..p.data.len() {
            m[i] = b1 * m[i] + (1.0 - b1) * g[i];
            v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
            p.data[i] -= lr * (m[i] / c1) / ((v[i] / c2).sqrt() + eps);
        }
    }
    Ok(())
}

/// Applies the step decay when `epoch` is a positive multiple of the interval.
pub fn decay_learning_rates(opt: &mut OptimizerState, epoch: usize) {
    if epoch > 0 && opt.decay_interval > 0 && epoch % opt.decay_interval == 0 {
        opt.feature_lr *= opt.decay;
        opt.head_lr *= opt.decay;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::colornet::{ModelConfig, OutputScale};

    fn head_only() -> RatingModel {
        RatingModel::zeros(ModelConfig {
            input_channels: 1,
            input_size: 2,
            widths: vec![1],
            pools: vec![false],
            hidden: 1,
            dropout: 0.0,
            output: OutputScale::IDENTITY,
        })
        .unwrap()
    }

    #[test]
    fn first_step_moves_by_the_rate() {
        let mut model = head_only();
        let mut opt = OptimizerState::new(&model, 1e-4, 1e-3);
        let mut g = Gradients::zeros_like(&model);
        let last = g.tensors.len() - 1;
        g.tensors[last][0] = 2.0;
        g.tensors[0][0] = 2.0;
        adam_step(&mut model, &g, &mut opt).unwrap();
        assert!((model.params()[last].data[0] + 1e-3).abs() < 1e-11);
        assert!((model.params()[0].data[0] + 1e-4).abs() < 1e-12);
        assert_eq!(opt.step, 1);
    }

    #[test]
    fn zero_gradient_leaves_parameters_and_decays_moments() {
        let mut model = head_only();
        let mut opt = OptimizerState::new(&model, 1e-4, 1e-3);
        let mut g = Gradients::zeros_like(&model);
        g.tensors[0][0] = 1.0;
        adam_step(&mut model, &g, &mut opt).unwrap();
        let before = model.clone();
        let (m, v) = (opt.first[0][0], opt.second[0][0]);
        g.clear();
        // a lone zero-gradient step still applies the surviving momentum
        // to the one touched weight; every untouched weight stays put
        adam_step(&mut model, &g, &mut opt).unwrap();
        assert_eq!(opt.first[0][0], 0.9 * m);
        assert_eq!(opt.second[0][0], 0.999 * v);
        for (a, b) in model.params().iter().zip(before.params()).skip(1) {
            assert_eq!(a.data, b.data);
        }
    }

    #[test]
    fn zero_gradient_from_fresh_state_is_a_no_op() {
        let mut model = head_only();
        let before = model.clone();
        let mut opt = OptimizerState::new(&model, 1e-4, 1e-3);
        let g = Gradients::zeros_like(&model);
        adam_step(&mut model, &g, &mut opt).unwrap();
        assert_eq!(model, before);
    }

    #[test]
    fn shape_mismatch_is_contract_violation() {
        let mut model = head_only();
        let mut opt = OptimizerState::new(&model, 1e-4, 1e-3);
        let mut g = Gradients::zeros_like(&model);
        g.tensors.pop();
        assert!(adam_step(&mut model, &g, &mut opt).unwrap_err().is_contract_violation());
    }

    #[test]
    fn decay_schedule() {
        let model = head_only();
        let mut opt = OptimizerState::new(&model, 1e-4, 1e-3);
        decay_learning_rates(&mut opt, 0);
        decay_learning_rates(&mut opt, 9);
        assert_eq!((opt.feature_lr, opt.head_lr), (1e-4, 1e-3));
        decay_learning_rates(&mut opt, 10);
        assert!((opt.head_lr - 0.95e-3).abs() < 1e-18);
        let mut opt = OptimizerState::new(&model, 1e-4, 1e-3);
        for epoch in 0..=100 {
            decay_learning_rates(&mut opt, epoch);
        }
        assert!((opt.head_lr - 1e-3 * 0.95f64.powi(10)).abs() < 1e-15);
        assert!((opt.feature_lr - 1e-4 * 0.95f64.powi(10)).abs() < 1e-16);
    }
}
