use crate::color::RgbImage;
use crate::error::{Error, Result};

/// Dense row-major tensor of 64-bit reals.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(Error::Shape(format!(
                "shape {shape:?} needs {expected} values, got {}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::contract("tensor entries must be finite"));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Self { shape, data: vec![0.0; n] }
    }

    /// Planar 3×H×W tensor with channel values scaled to [0, 1].
    pub fn from_rgb(img: &RgbImage) -> Self {
        let (w, h) = (img.width(), img.height());
        let mut data = vec![0.0; 3 * w * h];
        for (i, px) in img.pixels().enumerate() {
            for c in 0..3 {
                data[c * w * h + i] = f64::from(px[c]) / 255.0;
            }
        }
        Self {
            shape: vec![3, h, w],
            data,
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// (channels, height, width) of a rank-3 tensor.
    pub fn chw(&self) -> Result<(usize, usize, usize)> {
        match self.shape[..] {
            [c, h, w] => Ok((c, h, w)),
            _ => Err(Error::Shape(format!("expected a C×H×W tensor, got shape {:?}", self.shape))),
        }
    }

    /// Bilinear resampling of every plane of a C×H×W tensor. Sample
    /// positions use pixel-center alignment, so equal extents are a no-op.
    pub fn resize_bilinear(&self, new_h: usize, new_w: usize) -> Result<Tensor> {
        let (c, h, w) = self.chw()?;
        if h == 0 || w == 0 || new_h == 0 || new_w == 0 {
            return Err(Error::contract("cannot resize a zero-extent tensor"));
        }
        if (h, w) == (new_h, new_w) {
            return Ok(self.clone());
        }
        let taps = |src: usize, dst: usize| -> Vec<(usize, usize, f64)> {
            let ratio = src as f64 / dst as f64;
            (0..dst)
                .map(|o| {
                    let pos = ((o as f64 + 0.5) * ratio - 0.5).clamp(0.0, (src - 1) as f64);
                    let lo = pos.floor() as usize;
                    let hi = (lo + 1).min(src - 1);
                    (lo, hi, pos - lo as f64)
                })
                .collect()
        };
        let ys = taps(h, new_h);
        let xs = taps(w, new_w);
        let mut data = Vec::with_capacity(c * new_h * new_w);
        for plane in self.data.chunks_exact(h * w) {
            for &(y0, y1, fy) in &ys {
                for &(x0, x1, fx) in &xs {
                    let top = plane[y0 * w + x0] * (1.0 - fx) + plane[y0 * w + x1] * fx;
                    let bottom = plane[y1 * w + x0] * (1.0 - fx) + plane[y1 * w + x1] * fx;
                    data.push(top * (1.0 - fy) + bottom * fy);
                }
            }
        }
        Ok(Tensor {
            shape: vec![c, new_h, new_w],
            data,
        })
    }

    /// Central `size`×`size` window; odd margins favour the top-left.
    pub fn center_crop(&self, size: usize) -> Result<Tensor> {
        let (c, h, w) = self.chw()?;
        if size == 0 || size > h || size > w {
            return Err(Error::contract(format!("cannot crop {size}x{size} from {w}x{h}")));
        }
        let (y0, x0) = ((h - size) / 2, (w - size) / 2);
        let mut data = Vec::with_capacity(c * size * size);
        for plane in self.data.chunks_exact(h * w) {
            for y in y0..y0 + size {
                data.extend_from_slice(&plane[y * w + x0..y * w + x0 + size]);
            }
        }
        Ok(Tensor {
            shape: vec![c, size, size],
            data,
        })
    }

    /// Resizes so the short side equals `size`, then takes the central square.
    pub fn fit_square(&self, size: usize) -> Result<Tensor> {
        let (_, h, w) = self.chw()?;
        if h == 0 || w == 0 || size == 0 {
            return Err(Error::contract("cannot fit a zero-extent tensor"));
        }
        let short = h.min(w);
        let scaled = |v: usize| ((v as f64 * size as f64 / short as f64).round() as usize).max(size);
        let resized = if h <= w {
            self.resize_bilinear(size, scaled(w))?
        } else {
            self.resize_bilinear(scaled(h), size)?
        };
        resized.center_crop(size)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_must_match() {
        assert!(matches!(Tensor::new(vec![2, 3], vec![0.0; 5]), Err(Error::Shape(_))));
        assert!(Tensor::new(vec![1], vec![f64::NAN]).is_err());
    }

    #[test]
    fn rgb_is_planar_unit_range() {
        let img = RgbImage::from_fn(2, 1, |x, _| if x == 0 { [255, 0, 51] } else { [0, 255, 0] });
        let t = Tensor::from_rgb(&img);
        assert_eq!(t.shape(), &[3, 1, 2]);
        assert_eq!(t.data(), &[1.0, 0.0, 0.0, 1.0, 0.2, 0.0]);
    }

    #[test]
    fn resize_preserves_constants_and_linear_ramps() {
        let t = Tensor::new(vec![1, 4, 4], vec![0.25; 16]).unwrap();
        assert!(t.resize_bilinear(7, 3).unwrap().data().iter().all(|v| (v - 0.25).abs() < 1e-15));
        // a ramp sampled at pixel centres halves cleanly
        let ramp = Tensor::new(vec![1, 1, 4], vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        let half = ramp.resize_bilinear(1, 2).unwrap();
        assert_eq!(half.data(), &[0.5, 2.5]);
    }

    #[test]
    fn fit_square_crops_long_side() {
        let data: Vec<f64> = (0..2 * 4).map(|v| v as f64).collect();
        let t = Tensor::new(vec![1, 2, 4], data).unwrap();
        let sq = t.fit_square(2).unwrap();
        assert_eq!(sq.shape(), &[1, 2, 2]);
        assert_eq!(sq.data(), &[1.0, 2.0, 5.0, 6.0]);
        assert!(t.fit_square(0).is_err());
    }
}
