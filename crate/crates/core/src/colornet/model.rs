use std::sync::atomic::{AtomicU64, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::gemm::{gemm, Op};
use super::tensor::Tensor;
use crate::color::RgbImage;
use crate::error::{Error, Result};
use crate::metrics::{ColorfulnessScore, MetricId};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Which learning rate a parameter follows.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParamGroup {
    Feature,
    Head,
}

/// Fixed affine map applied to the network output: `offset + scale·raw`.
/// Lets the head work in standardized units while predictions come out in
/// the dataset's score units. Identity by default.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OutputScale {
    pub offset: f64,
    pub scale: f64,
}

impl OutputScale {
    pub const IDENTITY: OutputScale = OutputScale { offset: 0.0, scale: 1.0 };

    /// Mean and population spread of `targets`; identity when degenerate.
    pub fn standardizing(targets: &[f64]) -> Self {
        if targets.is_empty() {
            return Self::IDENTITY;
        }
        let n = targets.len() as f64;
        let mean = targets.iter().sum::<f64>() / n;
        let sd = (targets.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / n).sqrt();
        if sd.is_finite() && sd > 0.0 {
            OutputScale { offset: mean, scale: sd }
        } else {
            OutputScale { offset: mean, scale: 1.0 }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelConfig {
    pub input_channels: usize,
    /// Square input extent in pixels.
    pub input_size: usize,
    /// Output channels of each convolution block.
    pub widths: Vec<usize>,
    /// Whether each block ends in a 2×2 max-pool.
    pub pools: Vec<bool>,
    pub hidden: usize,
    pub dropout: f64,
    pub output: OutputScale,
}

impl ModelConfig {
    /// The desk-scale default: three pooled blocks of 16, 32 and 64
    /// channels on a 32×32 RGB input.
    pub fn mini() -> Self {
        Self {
            input_channels: 3,
            input_size: 32,
            widths: vec![16, 32, 64],
            pools: vec![true, true, true],
            hidden: 10,
            dropout: 0.75,
            output: OutputScale::IDENTITY,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_channels == 0 || self.input_size == 0 || self.hidden == 0 {
            return Err(Error::Shape("channels, input size and hidden width must be positive".into()));
        }
        if self.widths.is_empty() || self.widths.contains(&0) {
            return Err(Error::Shape("every convolution block needs at least one channel".into()));
        }
        if self.widths.len() != self.pools.len() {
            return Err(Error::Shape(format!(
                "{} block widths but {} pooling flags",
                self.widths.len(),
                self.pools.len()
            )));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::contract(format!("dropout rate {} outside [0, 1)", self.dropout)));
        }
        if !(self.output.offset.is_finite() && self.output.scale.is_finite()) {
            return Err(Error::contract("output scaling must be finite"));
        }
        let mut size = self.input_size;
        for (l, &pool) in self.pools.iter().enumerate() {
            if pool {
                size /= 2;
            }
            if size == 0 {
                return Err(Error::Shape(format!(
                    "conv{l}: input extent {} vanishes after pooling",
                    self.input_size
                )));
            }
        }
        Ok(())
    }

    fn block_inputs(&self) -> impl Iterator<Item = usize> + '_ {
        std::iter::once(self.input_channels).chain(self.widths.iter().copied())
    }

    /// Names, shapes and groups of every parameter tensor, in storage order.
    pub(crate) fn layout(&self) -> Vec<(String, Vec<usize>, ParamGroup)> {
        let mut out = Vec::new();
        for (l, (cin, cout)) in self.block_inputs().zip(&self.widths).enumerate() {
            out.push((format!("conv{l}.weight"), vec![*cout, cin, 3, 3], ParamGroup::Feature));
            out.push((format!("conv{l}.bias"), vec![*cout], ParamGroup::Feature));
        }
        let last = *self.widths.last().unwrap_or(&0);
        out.push(("fc1.weight".into(), vec![self.hidden, last], ParamGroup::Head));
        out.push(("fc1.bias".into(), vec![self.hidden], ParamGroup::Head));
        out.push(("fc2.weight".into(), vec![1, self.hidden], ParamGroup::Head));
        out.push(("fc2.bias".into(), vec![1], ParamGroup::Head));
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParamTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub group: ParamGroup,
    pub data: Vec<f64>,
}

static STAMPS: AtomicU64 = AtomicU64::new(1);

fn next_stamp() -> u64 {
    STAMPS.fetch_add(1, Ordering::Relaxed)
}

/// Convolution blocks followed by the rating head.
#[derive(Debug)]
pub struct RatingModel {
    config: ModelConfig,
    params: Vec<ParamTensor>,
    init_seed: Option<u64>,
    train_seed: Option<u64>,
    // identifies the exact parameter values a forward cache was built from
    stamp: u64,
}

impl Clone for RatingModel {
    fn clone(&self) -> Self {
        Self {
            config: self.config.clone(),
            params: self.params.clone(),
            init_seed: self.init_seed,
            train_seed: self.train_seed,
            stamp: next_stamp(),
        }
    }
}

impl PartialEq for RatingModel {
    fn eq(&self, other: &Self) -> bool {
        self.config == other.config
            && self.params == other.params
            && self.init_seed == other.init_seed
            && self.train_seed == other.train_seed
    }
}

impl RatingModel {
    /// Weights uniform in ±1/√fan_in from a seeded stream, biases zero.
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        let mut model = Self::zeros(config)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for p in &mut model.params {
            if p.name.ends_with(".weight") {
                let fan_in: usize = p.shape[1..].iter().product();
                let bound = 1.0 / (fan_in as f64).sqrt();
                for v in &mut p.data {
                    *v = rng.random_range(-bound..bound);
                }
            }
        }
        model.init_seed = Some(seed);
        Ok(model)
    }

    pub fn zeros(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let params = config
            .layout()
            .into_iter()
            .map(|(name, shape, group)| {
                let n = shape.iter().product();
                ParamTensor {
                    name,
                    shape,
                    group,
                    data: vec![0.0; n],
                }
            })
            .collect();
        Ok(Self {
            config,
            params,
            init_seed: None,
            train_seed: None,
            stamp: next_stamp(),
        })
    }

    /// Rebuilds a model from stored tensors, checking them against `config`.
    pub fn from_parts(
        config: ModelConfig,
        params: Vec<ParamTensor>,
        init_seed: Option<u64>,
        train_seed: Option<u64>,
    ) -> Result<Self> {
        let mut model = Self::zeros(config)?;
        if params.len() != model.params.len() {
            return Err(Error::Shape(format!(
                "config needs {} parameter tensors, got {}",
                model.params.len(),
                params.len()
            )));
        }
        for (slot, p) in model.params.iter_mut().zip(params) {
            if slot.name != p.name || slot.shape != p.shape || p.data.len() != slot.data.len() {
                return Err(Error::Shape(format!(
                    "expected {} {:?}, got {} {:?}",
                    slot.name, slot.shape, p.name, p.shape
                )));
            }
            if p.data.iter().any(|v| !v.is_finite()) {
                return Err(Error::contract(format!("{} holds non-finite values", p.name)));
            }
            slot.data = p.data;
        }
        model.init_seed = init_seed;
        model.train_seed = train_seed;
        Ok(model)
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn params(&self) -> &[ParamTensor] {
        &self.params
    }

    /// Mutable parameter access. Invalidates outstanding forward caches.
    pub fn params_mut(&mut self) -> &mut [ParamTensor] {
        self.stamp = next_stamp();
        &mut self.params
    }

    pub fn param(&self, name: &str) -> Option<&ParamTensor> {
        self.params.iter().find(|p| p.name == name)
    }

    pub fn param_count(&self) -> usize {
        self.params.iter().map(|p| p.data.len()).sum()
    }

    pub fn init_seed(&self) -> Option<u64> {
        self.init_seed
    }

    pub fn train_seed(&self) -> Option<u64> {
        self.train_seed
    }

    pub(crate) fn set_train_seed(&mut self, seed: u64) {
        self.train_seed = Some(seed);
    }

    pub fn set_output_scale(&mut self, output: OutputScale) -> Result<()> {
        if !(output.offset.is_finite() && output.scale.is_finite()) {
            return Err(Error::contract("output scaling must be finite"));
        }
        self.config.output = output;
        self.stamp = next_stamp();
        Ok(())
    }

    pub fn set_dropout(&mut self, rate: f64) -> Result<()> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::contract(format!("dropout rate {rate} outside [0, 1)")));
        }
        self.config.dropout = rate;
        self.stamp = next_stamp();
        Ok(())
    }

    fn conv(&self, l: usize) -> (&[f64], &[f64]) {
        (&self.params[2 * l].data, &self.params[2 * l + 1].data)
    }

    fn head(&self) -> [&[f64]; 4] {
        let k = 2 * self.config.widths.len();
        [
            &self.params[k].data,
            &self.params[k + 1].data,
            &self.params[k + 2].data,
            &self.params[k + 3].data,
        ]
    }
}

/// Parameter gradients, one buffer per model tensor in storage order.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub tensors: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(model: &RatingModel) -> Self {
        Self {
            tensors: model.params.iter().map(|p| vec![0.0; p.data.len()]).collect(),
        }
    }

    pub fn clear(&mut self) {
        for t in &mut self.tensors {
            t.fill(0.0);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.tensors.iter().flatten().all(|&g| g == 0.0)
    }
}

#[derive(Clone, Debug)]
struct BlockCache {
    in_c: usize,
    h: usize,
    w: usize,
    cols: Vec<f64>,
    active: Vec<bool>,
    // flat index into the rectified map feeding each pooled cell
    argmax: Option<Vec<usize>>,
}

/// Intermediate activations of one forward pass, consumed by [`backward`].
#[derive(Clone, Debug)]
pub struct ForwardCache {
    stamp: u64,
    mode: Mode,
    blocks: Vec<BlockCache>,
    spatial: usize,
    features: Vec<f64>,
    mask: Vec<f64>,
    hidden_pre: Vec<f64>,
    hidden: Vec<f64>,
    prediction: f64,
}

impl ForwardCache {
    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn prediction(&self) -> f64 {
        self.prediction
    }

    /// Globally pooled feature vector entering the head.
    pub fn features(&self) -> &[f64] {
        &self.features
    }

    /// Dense-10 activations before the rectifier.
    pub fn hidden_pre_activation(&self) -> &[f64] {
        &self.hidden_pre
    }
}

fn im2col(x: &[f64], c: usize, h: usize, w: usize) -> Vec<f64> {
    let hw = h * w;
    let mut cols = vec![0.0; c * 9 * hw];
    for ch in 0..c {
        let plane = &x[ch * hw..(ch + 1) * hw];
        for ky in 0..3 {
            for kx in 0..3 {
                let row = &mut cols[((ch * 9) + ky * 3 + kx) * hw..][..hw];
                for y in 0..h {
                    let sy = y as isize + ky as isize - 1;
                    if sy < 0 || sy >= h as isize {
                        continue;
                    }
                    let src = &plane[sy as usize * w..][..w];
                    let dst = &mut row[y * w..][..w];
                    match kx {
                        0 => dst[1..].copy_from_slice(&src[..w - 1]),
                        1 => dst.copy_from_slice(src),
                        _ => dst[..w - 1].copy_from_slice(&src[1..]),
                    }
                }
            }
        }
    }
    cols
}

fn col2im(cols: &[f64], c: usize, h: usize, w: usize) -> Vec<f64> {
    let hw = h * w;
    let mut x = vec![0.0; c * hw];
    for ch in 0..c {
        let plane = &mut x[ch * hw..(ch + 1) * hw];
        for ky in 0..3 {
            for kx in 0..3 {
                let row = &cols[((ch * 9) + ky * 3 + kx) * hw..][..hw];
                for y in 0..h {
                    let sy = y as isize + ky as isize - 1;
                    if sy < 0 || sy >= h as isize {
                        continue;
                    }
                    let dst = &mut plane[sy as usize * w..][..w];
                    let src = &row[y * w..][..w];
                    match kx {
                        0 => dst[..w - 1].iter_mut().zip(&src[1..]).for_each(|(d, s)| *d += s),
                        1 => dst.iter_mut().zip(src).for_each(|(d, s)| *d += s),
                        _ => dst[1..].iter_mut().zip(&src[..w - 1]).for_each(|(d, s)| *d += s),
                    }
                }
            }
        }
    }
    x
}

fn dropout_mask(n: usize, rate: f64, mode: Mode, seed: u64) -> Vec<f64> {
    if mode == Mode::Eval || rate == 0.0 {
        return vec![1.0; n];
    }
    let keep = 1.0 / (1.0 - rate);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| if rng.random::<f64>() >= rate { keep } else { 0.0 })
        .collect()
}

/// One pass through the network. `seed` drives the dropout mask in train
/// mode and is ignored in eval mode.
pub fn forward(model: &RatingModel, image: &Tensor, mode: Mode, seed: u64) -> Result<(f64, ForwardCache)> {
    let cfg = &model.config;
    let (c, h, w) = image.chw()?;
    if c != cfg.input_channels || h != cfg.input_size || w != cfg.input_size {
        return Err(Error::Shape(format!(
            "input: expected {}x{}x{}, got {c}x{h}x{w}",
            cfg.input_channels, cfg.input_size, cfg.input_size
        )));
    }

    let mut x = image.data().to_vec();
    let (mut cur_c, mut cur_h, mut cur_w) = (c, h, w);
    let mut blocks = Vec::with_capacity(cfg.widths.len());
    for (l, (&cout, &pool)) in cfg.widths.iter().zip(&cfg.pools).enumerate() {
        let (weight, bias) = model.conv(l);
        let hw = cur_h * cur_w;
        let cols = im2col(&x, cur_c, cur_h, cur_w);
        let mut out = vec![0.0; cout * hw];
        for (o, b) in out.chunks_exact_mut(hw).zip(bias) {
            o.fill(*b);
        }
        gemm(cout, cur_c * 9, hw, weight, Op::N, &cols, Op::N, 1.0, &mut out);
        let active: Vec<bool> = out.iter().map(|&v| v > 0.0).collect();
        for v in &mut out {
            *v = v.max(0.0);
        }
        let (next, argmax, nh, nw) = if pool {
            let (ph, pw) = (cur_h / 2, cur_w / 2);
            let mut pooled = Vec::with_capacity(cout * ph * pw);
            let mut arg = Vec::with_capacity(cout * ph * pw);
            for ch in 0..cout {
                for py in 0..ph {
                    for px in 0..pw {
                        let base = ch * hw + 2 * py * cur_w + 2 * px;
                        let mut best = base;
                        for cand in [base + 1, base + cur_w, base + cur_w + 1] {
                            if out[cand] > out[best] {
                                best = cand;
                            }
                        }
                        pooled.push(out[best]);
                        arg.push(best);
                    }
                }
            }
            (pooled, Some(arg), ph, pw)
        } else {
            (out, None, cur_h, cur_w)
        };
        blocks.push(BlockCache {
            in_c: cur_c,
            h: cur_h,
            w: cur_w,
            cols,
            active,
            argmax,
        });
        x = next;
        cur_c = cout;
        cur_h = nh;
        cur_w = nw;
    }

    let spatial = cur_h * cur_w;
    let features: Vec<f64> = x.chunks_exact(spatial).map(|p| p.iter().sum::<f64>() / spatial as f64).collect();
    let mask = dropout_mask(features.len(), cfg.dropout, mode, seed);
    let dropped: Vec<f64> = features.iter().zip(&mask).map(|(f, m)| f * m).collect();

    let [w1, b1, w2, b2] = model.head();
    let hidden_pre: Vec<f64> = b1
        .iter()
        .enumerate()
        .map(|(j, b)| b + w1[j * dropped.len()..][..dropped.len()].iter().zip(&dropped).map(|(a, d)| a * d).sum::<f64>())
        .collect();
    let hidden: Vec<f64> = hidden_pre.iter().map(|v| v.max(0.0)).collect();
    let raw = b2[0] + w2.iter().zip(&hidden).map(|(a, h)| a * h).sum::<f64>();
    let prediction = cfg.output.offset + cfg.output.scale * raw;
    if !prediction.is_finite() {
        return Err(Error::contract("forward pass produced a non-finite prediction"));
    }

    Ok((
        prediction,
        ForwardCache {
            stamp: model.stamp,
            mode,
            blocks,
            spatial,
            features,
            mask,
            hidden_pre,
            hidden,
            prediction,
        },
    ))
}

/// Gradients of `d_pred · prediction` with respect to every parameter.
pub fn backward(model: &RatingModel, cache: &ForwardCache, d_pred: f64) -> Result<Gradients> {
    let mut grads = Gradients::zeros_like(model);
    backward_into(model, cache, d_pred, &mut grads)?;
    Ok(grads)
}

/// Like [`backward`] but accumulates into existing buffers.
pub(crate) fn backward_into(model: &RatingModel, cache: &ForwardCache, d_pred: f64, grads: &mut Gradients) -> Result<()> {
    if cache.stamp != model.stamp {
        return Err(Error::contract("forward cache is stale: the model changed since it was built"));
    }
    if !d_pred.is_finite() {
        return Err(Error::contract("loss gradient must be finite"));
    }
    if grads.tensors.len() != model.params.len()
        || grads.tensors.iter().zip(&model.params).any(|(g, p)| g.len() != p.data.len())
    {
        return Err(Error::contract("gradient buffers do not match the model"));
    }
    if d_pred == 0.0 {
        return Ok(());
    }
    let cfg = &model.config;
    let nb = cfg.widths.len();
    let d_raw = d_pred * cfg.output.scale;
    let [w1, _, w2, _] = model.head();
    let nf = cache.features.len();

    let k = 2 * nb;
    for (j, h) in cache.hidden.iter().enumerate() {
        grads.tensors[k + 2][j] += d_raw * h;
    }
    grads.tensors[k + 3][0] += d_raw;
    let d_hidden_pre: Vec<f64> = cache
        .hidden_pre
        .iter()
        .zip(w2)
        .map(|(&z, &w)| if z > 0.0 { d_raw * w } else { 0.0 })
        .collect();
    let mut d_dropped = vec![0.0; nf];
    for (j, &dz) in d_hidden_pre.iter().enumerate() {
        if dz == 0.0 {
            continue;
        }
        let row = &w1[j * nf..][..nf];
        let grow = &mut grads.tensors[k][j * nf..][..nf];
        for i in 0..nf {
            grow[i] += dz * cache.features[i] * cache.mask[i];
            d_dropped[i] += dz * row[i];
        }
        grads.tensors[k + 1][j] += dz;
    }

    // global average pool spreads each feature gradient evenly
    let spatial = cache.spatial;
    let mut d_x: Vec<f64> = d_dropped
        .iter()
        .zip(&cache.mask)
        .flat_map(|(d, m)| std::iter::repeat_n(d * m / spatial as f64, spatial))
        .collect();

    for l in (0..nb).rev() {
        let b = &cache.blocks[l];
        let cout = cfg.widths[l];
        let hw = b.h * b.w;
        let mut d_out = match &b.argmax {
            Some(arg) => {
                let mut full = vec![0.0; cout * hw];
                for (&src, &g) in arg.iter().zip(&d_x) {
                    full[src] += g;
                }
                full
            }
            None => d_x,
        };
        for (g, &on) in d_out.iter_mut().zip(&b.active) {
            if !on {
                *g = 0.0;
            }
        }
        let kdim = b.in_c * 9;
        gemm(cout, hw, kdim, &d_out, Op::N, &b.cols, Op::T, 1.0, &mut grads.tensors[2 * l]);
        for (gb, row) in grads.tensors[2 * l + 1].iter_mut().zip(d_out.chunks_exact(hw)) {
            *gb += row.iter().sum::<f64>();
        }
        if l == 0 {
            break;
        }
        let (weight, _) = model.conv(l);
        let mut d_cols = vec![0.0; kdim * hw];
        gemm(kdim, cout, hw, weight, Op::T, &d_out, Op::N, 0.0, &mut d_cols);
        d_x = col2im(&d_cols, b.in_c, b.h, b.w);
    }
    Ok(())
}

/// Mean absolute error.
pub fn l1_loss(pred: &[f64], target: &[f64]) -> Result<f64> {
    if pred.len() != target.len() || pred.is_empty() {
        return Err(Error::contract(format!(
            "l1 loss needs equal non-empty inputs, got {} and {}",
            pred.len(),
            target.len()
        )));
    }
    Ok(pred.iter().zip(target).map(|(p, t)| (t - p).abs()).sum::<f64>() / pred.len() as f64)
}

/// Network input for an arbitrary image: short side resized to the model
/// extent, then the central square.
pub fn prepare_input(img: &RgbImage, size: usize) -> Result<Tensor> {
    if img.width() == 0 || img.height() == 0 {
        return Err(Error::contract("cannot rate a zero-extent image"));
    }
    Tensor::from_rgb(img).fit_square(size)
}

pub fn predict(model: &RatingModel, img: &RgbImage) -> Result<ColorfulnessScore> {
    let x = prepare_input(img, model.config.input_size)?;
    let (value, _) = forward(model, &x, Mode::Eval, 0)?;
    Ok(ColorfulnessScore {
        metric: MetricId::ColorNet,
        value,
    })
}
