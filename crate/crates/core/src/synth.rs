//! Procedural test imagery: the flower fixture, dominant-hue swatches,
//! chroma manipulation series and the scored benchmark set.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::color::{linear_to_srgb, srgb_to_linear, RgbImage, SRGB_TO_XYZ};
use crate::dataset::{DatasetManifest, ManifestEntry};
use crate::error::{Error, Result};
use crate::metrics::cf_hasler;

/// HSV with all components in [0, 1] to real RGB codes in [0, 255].
pub fn hsv_to_rgb(h: f64, s: f64, v: f64) -> [f64; 3] {
    let h6 = (h.rem_euclid(1.0)) * 6.0;
    let sector = h6.floor();
    let f = h6 - sector;
    let (p, q, t) = (v * (1.0 - s), v * (1.0 - s * f), v * (1.0 - s * (1.0 - f)));
    let rgb = match sector as u8 {
        0 => [v, t, p],
        1 => [q, v, p],
        2 => [p, v, t],
        3 => [p, q, v],
        4 => [t, p, v],
        _ => [v, p, q],
    };
    rgb.map(|c| c * 255.0)
}

fn quantize(c: [f64; 3]) -> [u8; 3] {
    c.map(|v| v.round().clamp(0.0, 255.0) as u8)
}

/// Moves every pixel toward its own luminance gray in linear light:
/// `gray + t·(pixel − gray)`, then re-encodes to 8-bit sRGB.
pub fn scale_chroma(img: &RgbImage, t: f64) -> Result<RgbImage> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::contract(format!("chroma factor {t} outside [0, 1]")));
    }
    let luma = SRGB_TO_XYZ[1];
    Ok(RgbImage::from_fn(img.width(), img.height(), |x, y| {
        let lin = img.pixel(x, y).map(srgb_to_linear);
        let gray = luma[0] * lin[0] + luma[1] * lin[1] + luma[2] * lin[2];
        quantize(lin.map(|c| linear_to_srgb(gray + t * (c - gray))))
    }))
}

/// A stylized flower: magenta petals around a yellow disc, a green stem
/// and leaves, sky above a grass strip.
pub fn flower(size: usize) -> RgbImage {
    let s = size.max(1) as f64;
    RgbImage::from_fn(size, size, |x, y| {
        let u = (x as f64 + 0.5) / s * 2.0 - 1.0;
        let v = (y as f64 + 0.5) / s * 2.0 - 1.0;
        // flower head centred slightly above the middle
        let (cx, cy) = (u, v + 0.25);
        let r = (cx * cx + cy * cy).sqrt();
        let theta = cy.atan2(cx);
        let petal_edge = 0.55 * (0.55 + 0.45 * (3.0 * theta).cos().abs());
        let texture = 6.0 * (17.0 * u).sin() * (13.0 * v).cos();
        let c = if r < 0.15 {
            [250.0, 205.0 - 120.0 * r, 40.0]
        } else if r < petal_edge {
            let shade = 1.0 - 0.5 * r;
            [235.0 * shade, 40.0 * shade, 150.0 * shade]
        } else if u.abs() < 0.04 && v > -0.1 {
            [40.0, 140.0, 50.0]
        } else if ((u - 0.18).powi(2) / 0.03 + (v - 0.45).powi(2) / 0.006) < 1.0 {
            [60.0, 170.0, 60.0]
        } else if v > 0.7 {
            [70.0, 120.0 + 30.0 * v, 45.0]
        } else {
            [120.0 + 40.0 * v, 165.0 + 30.0 * v, 225.0]
        };
        quantize(c.map(|ch| ch + texture))
    })
}

/// `k` of `slots` equal-width vertical stripes painted with hues spaced
/// 1/`slots` of the circle apart at fixed saturation and value; the
/// remaining stripes are mid gray.
pub fn hue_swatches(k: usize, slots: usize, size: usize) -> Result<RgbImage> {
    if slots == 0 || k > slots || size < slots {
        return Err(Error::contract(format!(
            "cannot paint {k} of {slots} swatches on a {size}-pixel canvas"
        )));
    }
    Ok(RgbImage::from_fn(size, size, |x, _| {
        let slot = x * slots / size;
        if slot < k {
            quantize(hsv_to_rgb(slot as f64 / slots as f64, 0.8, 0.9))
        } else {
            [128, 128, 128]
        }
    }))
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchmarkSpec {
    pub count: usize,
    pub size: usize,
    /// Target range of the affinely mapped scores.
    pub score_range: (f64, f64),
    /// Noise standard deviation as a fraction of the score range.
    pub noise_fraction: f64,
    pub seed: u64,
}

impl Default for BenchmarkSpec {
    fn default() -> Self {
        Self {
            count: 180,
            size: 32,
            score_range: (1.0, 9.0),
            noise_fraction: 0.05,
            seed: 2020,
        }
    }
}

#[derive(Clone, Debug)]
pub struct BenchmarkItem {
    pub id: String,
    pub image: RgbImage,
    pub hasler: f64,
    pub score: f64,
}

/// A random scene: a shaded background plus a few ellipses, then a random
/// global chroma reduction so colorfulness spans the full range.
pub fn random_scene(size: usize, rng: &mut impl Rng) -> RgbImage {
    let s = size as f64;
    let bg_hue = rng.random::<f64>();
    let bg_sat = rng.random::<f64>();
    let bg_val = rng.random_range(0.3..0.95);
    let blobs: Vec<([f64; 3], f64, f64, f64, f64)> = (0..rng.random_range(1..=5))
        .map(|_| {
            let col = hsv_to_rgb(rng.random(), rng.random_range(0.2..1.0), rng.random_range(0.3..1.0));
            (col, rng.random_range(0.0..s), rng.random_range(0.0..s), rng.random_range(0.1..0.5) * s, rng.random_range(0.1..0.5) * s)
        })
        .collect();
    let grain = rng.random_range(0.0..10.0);
    let noise: Vec<f64> = (0..size * size).map(|_| rng.random_range(-1.0..1.0) * grain).collect();
    let img = RgbImage::from_fn(size, size, |x, y| {
        let (xf, yf) = (x as f64 + 0.5, y as f64 + 0.5);
        let mut c = hsv_to_rgb(bg_hue, bg_sat, bg_val * (0.75 + 0.25 * yf / s));
        for &(col, bx, by, rx, ry) in &blobs {
            if ((xf - bx) / rx).powi(2) + ((yf - by) / ry).powi(2) < 1.0 {
                c = col;
            }
        }
        let n = noise[y * size + x];
        quantize(c.map(|v| v + n))
    });
    let t = rng.random::<f64>();
    scale_chroma(&img, t).expect("factor drawn from [0, 1)")
}

/// Scenes scored by affinely mapped Hasler colorfulness plus Gaussian noise.
pub fn benchmark(spec: &BenchmarkSpec) -> Result<Vec<BenchmarkItem>> {
    let (lo, hi) = spec.score_range;
    if spec.count < 2 || spec.size == 0 || !(hi > lo) || !(spec.noise_fraction >= 0.0) {
        return Err(Error::contract("benchmark needs ≥2 images, a positive size and an increasing range"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let digits = (spec.count - 1).to_string().len().max(3);
    let mut items: Vec<BenchmarkItem> = (0..spec.count)
        .map(|k| {
            let image = random_scene(spec.size, &mut rng);
            let hasler = cf_hasler(&image).value;
            BenchmarkItem {
                id: format!("img{k:0digits$}"),
                image,
                hasler,
                score: 0.0,
            }
        })
        .collect();
    let hmin = items.iter().map(|i| i.hasler).fold(f64::INFINITY, f64::min);
    let hmax = items.iter().map(|i| i.hasler).fold(f64::NEG_INFINITY, f64::max);
    if hmax <= hmin {
        return Err(Error::DegenerateRange("every generated scene has the same colorfulness".into()));
    }
    let noise = Normal::new(0.0, spec.noise_fraction * (hi - lo)).expect("finite non-negative sigma");
    for item in &mut items {
        item.score = lo + (hi - lo) * (item.hasler - hmin) / (hmax - hmin) + noise.sample(&mut rng);
    }
    Ok(items)
}

/// Writes each image as `<id>.png` into `dir` plus a `<name>.csv` manifest.
pub fn write_benchmark(items: &[BenchmarkItem], dir: &Path, name: &str) -> Result<DatasetManifest> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut entries = Vec::with_capacity(items.len());
    for item in items {
        let file = format!("{}.png", item.id);
        item.image.save_png(dir.join(&file))?;
        entries.push(ManifestEntry {
            id: item.id.clone(),
            path: file.into(),
            score: item.score,
            source: name.to_string(),
        });
    }
    let manifest = DatasetManifest::new(name, entries)?;
    manifest.save(dir.join(format!("{name}.csv")))?;
    Ok(manifest)
}
