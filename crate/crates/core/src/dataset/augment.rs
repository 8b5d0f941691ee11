use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::color::RgbImage;
use crate::error::{Error, Result};

/// Training-time augmentation: a square random crop, optionally followed by
/// random flips and quarter-turn rotations.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AugmentSpec {
    pub crop: usize,
    pub flips: bool,
    pub rotations: bool,
}

impl AugmentSpec {
    /// No-op spec for a `size`×`size` input.
    pub fn identity(size: usize) -> Self {
        Self {
            crop: size,
            flips: false,
            rotations: false,
        }
    }
}

/// One sampled augmentation. Output is always `size`×`size`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AugmentOp {
    pub x0: usize,
    pub y0: usize,
    pub size: usize,
    pub flip_h: bool,
    pub flip_v: bool,
    /// Clockwise quarter turns, 0..4.
    pub quarter_turns: u8,
}

impl AugmentOp {
    pub fn sample(width: usize, height: usize, spec: &AugmentSpec, rng: &mut impl Rng) -> Result<Self> {
        if spec.crop == 0 || spec.crop > width.min(height) {
            return Err(Error::contract(format!(
                "crop {} does not fit a {width}x{height} image",
                spec.crop
            )));
        }
        let x0 = rng.random_range(0..=width - spec.crop);
        let y0 = rng.random_range(0..=height - spec.crop);
        let (flip_h, flip_v) = if spec.flips {
            (rng.random::<bool>(), rng.random::<bool>())
        } else {
            (false, false)
        };
        let quarter_turns = if spec.rotations { rng.random_range(0..4u8) } else { 0 };
        Ok(Self {
            x0,
            y0,
            size: spec.crop,
            flip_h,
            flip_v,
            quarter_turns,
        })
    }

    /// Source coordinate feeding output pixel (x, y).
    pub fn source(&self, x: usize, y: usize) -> (usize, usize) {
        let s = self.size;
        let (mut x, mut y) = (x, y);
        // undo the rotations: out(x, y) = in(y, s - 1 - x) per clockwise turn
        for _ in 0..self.quarter_turns {
            (x, y) = (y, s - 1 - x);
        }
        if self.flip_h {
            x = s - 1 - x;
        }
        if self.flip_v {
            y = s - 1 - y;
        }
        (self.x0 + x, self.y0 + y)
    }

    pub fn apply(&self, img: &RgbImage) -> Result<RgbImage> {
        if self.x0 + self.size > img.width() || self.y0 + self.size > img.height() {
            return Err(Error::contract("augmentation window exceeds the image"));
        }
        Ok(RgbImage::from_fn(self.size, self.size, |x, y| {
            let (sx, sy) = self.source(x, y);
            img.pixel(sx, sy)
        }))
    }

    /// Applies the op to a planar `channels`×`height`×`width` buffer.
    pub fn apply_planar(&self, data: &[f64], channels: usize, width: usize, height: usize) -> Result<Vec<f64>> {
        if data.len() != channels * width * height || self.x0 + self.size > width || self.y0 + self.size > height {
            return Err(Error::contract("augmentation window exceeds the tensor"));
        }
        let s = self.size;
        let mut out = vec![0.0; channels * s * s];
        for y in 0..s {
            for x in 0..s {
                let (sx, sy) = self.source(x, y);
                for c in 0..channels {
                    out[c * s * s + y * s + x] = data[c * width * height + sy * width + sx];
                }
            }
        }
        Ok(out)
    }
}

pub fn augment(img: &RgbImage, spec: &AugmentSpec, seed: u64) -> Result<RgbImage> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    AugmentOp::sample(img.width(), img.height(), spec, &mut rng)?.apply(img)
}
