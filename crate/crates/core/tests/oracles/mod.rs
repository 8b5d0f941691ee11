//! Deliberately naive pixel-loop re-implementations of the classical
//! metrics, shared by the metric tests and the acceptance suite.

use colorfulness::color::RgbImage;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// 20 seeded 16×16 noise images.
pub fn random_images() -> Vec<RgbImage> {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC0105);
    (0..20)
        .map(|_| RgbImage::from_fn(16, 16, |_, _| [rng.random(), rng.random(), rng.random()]))
        .collect()
}

struct Moments {
    mean: f64,
    std: f64,
}

fn moments(xs: &[f64]) -> Moments {
    let mut sum = 0.0;
    for x in xs {
        sum += x;
    }
    let mean = sum / xs.len() as f64;
    let mut sq = 0.0;
    for x in xs {
        sq += (x - mean) * (x - mean);
    }
    Moments {
        mean,
        std: (sq / xs.len() as f64).sqrt(),
    }
}

fn planes(img: &RgbImage) -> (Vec<f64>, Vec<f64>) {
    let mut rg = Vec::new();
    let mut yb = Vec::new();
    for y in 0..img.height() {
        for x in 0..img.width() {
            let [r, g, b] = img.pixel(x, y);
            let (r, g, b) = (r as f64, g as f64, b as f64);
            rg.push(r - g);
            yb.push(0.5 * (r + g) - b);
        }
    }
    (rg, yb)
}

pub fn oracle_hasler(img: &RgbImage) -> f64 {
    let (rg, yb) = planes(img);
    let (a, b) = (moments(&rg), moments(&yb));
    (a.std * a.std + b.std * b.std).sqrt() + 0.3 * (a.mean * a.mean + b.mean * b.mean).sqrt()
}

fn guarded_ln(x: f64) -> f64 {
    if x < 1e-6 {
        (1e-6f64).ln()
    } else {
        x.ln()
    }
}

pub fn oracle_cqe1(img: &RgbImage) -> f64 {
    let (rg, yb) = planes(img);
    let (a, b) = (moments(&rg), moments(&yb));
    if a.std == 0.0 && b.std == 0.0 {
        return 0.0;
    }
    let t = |m: &Moments| {
        let var = if m.std * m.std < 1e-6 { 1e-6 } else { m.std * m.std };
        let mu = if m.mean.abs() < 1e-6 { 1e-6 } else { m.mean.abs() };
        guarded_ln(var / mu.powf(0.2))
    };
    0.02 * t(&a) * t(&b)
}

pub fn oracle_cqe2(img: &RgbImage) -> f64 {
    let (rg, yb) = planes(img);
    let mut both = rg.clone();
    both.extend_from_slice(&yb);
    let (a, b, c) = (moments(&rg), moments(&yb), moments(&both));
    if a.std == 0.0 && b.std == 0.0 {
        return 0.0;
    }
    let denom = |d: f64| {
        if d.abs() < 1e-6 {
            1e-6f64.copysign(d)
        } else {
            d
        }
    };
    let ln2 = |v: f64| guarded_ln(v * v);
    let spread = ln2(a.std) * ln2(b.std) / denom(ln2(c.std));
    let level = ln2(a.mean) * ln2(b.mean) / denom(ln2(c.mean));
    0.02 * spread * level
}

pub fn oracle_yendrikhovskij(img: &RgbImage) -> f64 {
    let m = [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ];
    let white: Vec<f64> = m.iter().map(|r| r[0] + r[1] + r[2]).collect();
    let un = 4.0 * white[0] / (white[0] + 15.0 * white[1] + 3.0 * white[2]);
    let vn = 9.0 * white[1] / (white[0] + 15.0 * white[1] + 3.0 * white[2]);
    let lin = |c: u8| {
        let c = c as f64 / 255.0;
        if c <= 0.04045 {
            c / 12.92
        } else {
            ((c + 0.055) / 1.055).powf(2.4)
        }
    };
    let mut s = Vec::new();
    for y in 0..img.height() {
        for x in 0..img.width() {
            let p = img.pixel(x, y);
            let rgb = [lin(p[0]), lin(p[1]), lin(p[2])];
            let mut xyz = [0.0; 3];
            for i in 0..3 {
                for j in 0..3 {
                    xyz[i] += m[i][j] * rgb[j];
                }
            }
            let yr = xyz[1] / white[1];
            let l = if yr > (6.0f64 / 29.0).powi(3) {
                116.0 * yr.powf(1.0 / 3.0) - 16.0
            } else {
                yr * 24389.0 / 27.0
            };
            let d = xyz[0] + 15.0 * xyz[1] + 3.0 * xyz[2];
            let (u, v) = if d > 0.0 {
                (13.0 * l * (4.0 * xyz[0] / d - un), 13.0 * l * (9.0 * xyz[1] / d - vn))
            } else {
                (0.0, 0.0)
            };
            s.push((u * u + v * v).sqrt() / (l + 0.01));
        }
    }
    let mo = moments(&s);
    mo.mean + mo.std
}

pub fn rel(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}
