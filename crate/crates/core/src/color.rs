//! Raster decoding and the color-space arithmetic every metric builds on:
//! opponent channels and CIE 1976 L\*u\*v\* saturation.

use std::io::Cursor;

use image::{ImageFormat, ImageReader, Limits};

use crate::error::{Error, Result};

/// Linear sRGB to CIE XYZ (D65), rows X, Y, Z.
pub const SRGB_TO_XYZ: [[f64; 3]; 3] = [
    [0.4124564, 0.3575761, 0.1804375],
    [0.2126729, 0.7151522, 0.0721750],
    [0.0193339, 0.1191920, 0.9503041],
];

/// Published D65 reference white (Xn, Yn, Zn).
pub const D65_WHITE: [f64; 3] = [0.95047, 1.0, 1.08883];

/// Published u′ chromaticity of the D65 white.
pub const D65_U_PRIME: f64 = 0.1978398;

/// Published v′ chromaticity of the D65 white.
pub const D65_V_PRIME: f64 = 0.4683363;

/// Below this relative luminance L\* switches from the cube root to the
/// linear segment: (6/29)³.
pub const LSTAR_THRESHOLD: f64 = 216.0 / 24389.0;

/// Default ε guarding the saturation denominator at black pixels.
pub const DEFAULT_SATURATION_EPSILON: f64 = 0.01;

const SRGB_LINEAR_THRESHOLD: f64 = 0.04045;

// Largest raster accepted by `decode_image`; keeps hostile headers from
// requesting absurd allocations.
const MAX_DIMENSION: u32 = 16_384;

/// 8-bit interleaved RGB raster, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::contract(format!(
                "image extent must be at least 1x1, got {width}x{height}"
            )));
        }
        if data.len() != width * height * 3 {
            return Err(Error::contract(format!(
                "image data holds {} bytes, expected {}",
                data.len(),
                width * height * 3
            )));
        }
        Ok(Self { width, height, data })
    }

    /// Builds an image by evaluating `f(x, y)` at every pixel.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> [u8; 3]) -> Self {
        assert!(width > 0 && height > 0, "image extent must be non-zero");
        let mut data = Vec::with_capacity(width * height * 3);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(x, y));
            }
        }
        Self { width, height, data }
    }

    pub fn solid(width: usize, height: usize, rgb: [u8; 3]) -> Self {
        Self::from_fn(width, height, |_, _| rgb)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn pixels(&self) -> impl Iterator<Item = [u8; 3]> + '_ {
        self.data.chunks_exact(3).map(|p| [p[0], p[1], p[2]])
    }

    /// Encodes the raster as an 8-bit RGB PNG.
    pub fn to_png(&self) -> Vec<u8> {
        let buf = image::RgbImage::from_raw(self.width as u32, self.height as u32, self.data.clone())
            .expect("dimensions validated at construction");
        let mut out = Cursor::new(Vec::new());
        buf.write_to(&mut out, ImageFormat::Png)
            .expect("PNG encoding into memory cannot fail");
        out.into_inner()
    }

    pub fn save_png(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_png()).map_err(|e| Error::io(path, e))
    }

    pub fn open(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        decode_image(&bytes)
    }
}

/// Decodes an 8-bit PNG or baseline JPEG stream. Alpha is dropped; 16-bit
/// and 12-bit sources are rejected.
pub fn decode_image(bytes: &[u8]) -> Result<RgbImage> {
    let (format, payload_offset) = if bytes.starts_with(&PNG_SIGNATURE) {
        (ImageFormat::Png, scan_png(bytes)?)
    } else if bytes.starts_with(&[0xFF, 0xD8]) {
        (ImageFormat::Jpeg, scan_jpeg(bytes)?)
    } else {
        return Err(Error::Decode {
            offset: 0,
            reason: "stream is neither PNG nor JPEG".into(),
        });
    };

    let mut limits = Limits::default();
    limits.max_image_width = Some(MAX_DIMENSION);
    limits.max_image_height = Some(MAX_DIMENSION);
    let mut reader = ImageReader::with_format(Cursor::new(bytes), format);
    reader.limits(limits);
    let decoded = reader.decode().map_err(|e| Error::Decode {
        offset: payload_offset,
        reason: e.to_string(),
    })?;

    let color = decoded.color();
    if color.bytes_per_pixel() / color.channel_count() > 1 {
        return Err(Error::UnsupportedFormat(format!("{color:?} has more than 8 bits per channel")));
    }
    let rgb = decoded.to_rgb8();
    let (w, h) = rgb.dimensions();
    RgbImage::new(w as usize, h as usize, rgb.into_raw()).map_err(|_| Error::Decode {
        offset: payload_offset,
        reason: "decoded raster has zero extent".into(),
    })
}

const PNG_SIGNATURE: [u8; 8] = [0x89, b'P', b'N', b'G', b'\r', b'\n', 0x1A, b'\n'];

/// Walks the PNG chunk structure, returning the offset of the first IDAT.
fn scan_png(bytes: &[u8]) -> Result<usize> {
    let mut pos = PNG_SIGNATURE.len();
    let mut first_idat = None;
    let mut seen_header = false;
    loop {
        if bytes.len() < pos + 8 {
            return Err(Error::Decode {
                offset: pos,
                reason: "truncated chunk header".into(),
            });
        }
        let len = u32::from_be_bytes(bytes[pos..pos + 4].try_into().unwrap()) as usize;
        let kind = &bytes[pos + 4..pos + 8];
        let end = pos
            .checked_add(12)
            .and_then(|p| p.checked_add(len))
            .filter(|&e| e <= bytes.len())
            .ok_or_else(|| Error::Decode {
                offset: pos,
                reason: format!("chunk {} overruns the stream", String::from_utf8_lossy(kind)),
            })?;
        if !seen_header {
            if kind != b"IHDR" || len != 13 {
                return Err(Error::Decode {
                    offset: pos,
                    reason: "first chunk is not a valid IHDR".into(),
                });
            }
            let bit_depth = bytes[pos + 16];
            if bit_depth == 16 {
                return Err(Error::UnsupportedFormat("16-bit PNG".into()));
            }
            seen_header = true;
        }
        if kind == b"IDAT" && first_idat.is_none() {
            first_idat = Some(pos);
        }
        if kind == b"IEND" {
            return first_idat.ok_or(Error::Decode {
                offset: pos,
                reason: "IEND before any IDAT".into(),
            });
        }
        pos = end;
    }
}

/// Walks JPEG marker segments up to the scan, returning the SOS offset.
fn scan_jpeg(bytes: &[u8]) -> Result<usize> {
    let mut pos = 2;
    loop {
        if bytes.len() < pos + 4 {
            return Err(Error::Decode {
                offset: pos,
                reason: "truncated marker segment".into(),
            });
        }
        if bytes[pos] != 0xFF {
            return Err(Error::Decode {
                offset: pos,
                reason: format!("expected marker, found byte {:#04x}", bytes[pos]),
            });
        }
        let marker = bytes[pos + 1];
        if marker == 0xFF {
            // fill byte
            pos += 1;
            continue;
        }
        let len = u16::from_be_bytes([bytes[pos + 2], bytes[pos + 3]]) as usize;
        if len < 2 || pos + 2 + len > bytes.len() {
            return Err(Error::Decode {
                offset: pos,
                reason: format!("segment {marker:#04x} length {len} overruns the stream"),
            });
        }
        match marker {
            0xC0..=0xCF if marker != 0xC4 && marker != 0xC8 && marker != 0xCC => {
                let precision = *bytes.get(pos + 4).unwrap_or(&0);
                if precision != 8 {
                    return Err(Error::UnsupportedFormat(format!("{precision}-bit JPEG")));
                }
            }
            0xDA => return Ok(pos),
            _ => {}
        }
        pos += 2 + len;
    }
}

/// Per-pixel opponent planes: rg = R − G and yb = (R + G)/2 − B.
#[derive(Clone, Debug, PartialEq)]
pub struct OpponentPair {
    width: usize,
    height: usize,
    rg: Vec<f64>,
    yb: Vec<f64>,
}

impl OpponentPair {
    /// Wraps precomputed planes. Used when the statistics of interest are not
    /// reachable with 8-bit pixel values.
    pub fn from_planes(width: usize, height: usize, rg: Vec<f64>, yb: Vec<f64>) -> Result<Self> {
        let n = width * height;
        if n == 0 || rg.len() != n || yb.len() != n {
            return Err(Error::contract(format!(
                "opponent planes must both hold {width}x{height} values"
            )));
        }
        Ok(Self { width, height, rg, yb })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn rg(&self) -> &[f64] {
        &self.rg
    }

    pub fn yb(&self) -> &[f64] {
        &self.yb
    }
}

/// Opponent channels on raw 8-bit values (no normalization).
pub fn opponent_channels(img: &RgbImage) -> OpponentPair {
    let (rg, yb) = img
        .pixels()
        .map(|[r, g, b]| {
            let (r, g, b) = (f64::from(r), f64::from(g), f64::from(b));
            (r - g, 0.5 * (r + g) - b)
        })
        .unzip();
    OpponentPair {
        width: img.width,
        height: img.height,
        rg,
        yb,
    }
}

/// CIE 1976 L\*u\*v\* planes.
#[derive(Clone, Debug, PartialEq)]
pub struct LuvImage {
    width: usize,
    height: usize,
    l: Vec<f64>,
    u: Vec<f64>,
    v: Vec<f64>,
}

impl LuvImage {
    pub fn from_planes(width: usize, height: usize, l: Vec<f64>, u: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        let n = width * height;
        if n == 0 || l.len() != n || u.len() != n || v.len() != n {
            return Err(Error::contract(format!("L*u*v* planes must all hold {width}x{height} values")));
        }
        Ok(Self { width, height, l, u, v })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn lightness(&self) -> &[f64] {
        &self.l
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }
}

/// sRGB electro-optical transfer function on an 8-bit code value.
pub fn srgb_to_linear(code: u8) -> f64 {
    let c = f64::from(code) / 255.0;
    if c <= SRGB_LINEAR_THRESHOLD {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

/// Inverse transfer function, returning a real code value in [0, 255].
pub fn linear_to_srgb(linear: f64) -> f64 {
    let l = linear.clamp(0.0, 1.0);
    let c = if l <= SRGB_LINEAR_THRESHOLD / 12.92 {
        l * 12.92
    } else {
        1.055 * l.powf(1.0 / 2.4) - 0.055
    };
    c * 255.0
}

// The matrix rows sum to the reference white only to 1e-7; using the row sums
// keeps achromatic input exactly on the neutral axis.
fn reference_white() -> [f64; 3] {
    SRGB_TO_XYZ.map(|row| row[0] + row[1] + row[2])
}

fn uv_prime(x: f64, y: f64, z: f64) -> Option<(f64, f64)> {
    let d = x + 15.0 * y + 3.0 * z;
    (d > 0.0).then(|| (4.0 * x / d, 9.0 * y / d))
}

/// Reference white and its (u′, v′) as used by [`rgb_to_luv`].
pub fn luv_reference() -> ([f64; 3], (f64, f64)) {
    let w = reference_white();
    let uv = uv_prime(w[0], w[1], w[2]).expect("white has positive luminance");
    (w, uv)
}

/// Converts one 8-bit sRGB pixel to (L\*, u\*, v\*).
pub fn pixel_to_luv(rgb: [u8; 3]) -> [f64; 3] {
    let ([_, yn, _], (un, vn)) = luv_reference();
    let lin = rgb.map(srgb_to_linear);
    let [x, y, z] = SRGB_TO_XYZ.map(|row| row[0] * lin[0] + row[1] * lin[1] + row[2] * lin[2]);
    let yr = y / yn;
    let l = if yr > LSTAR_THRESHOLD {
        116.0 * yr.cbrt() - 16.0
    } else {
        (29.0f64 / 3.0).powi(3) * yr
    };
    // Neutral pixels sit exactly on the white axis; skip the rounding noise.
    if rgb[0] == rgb[1] && rgb[1] == rgb[2] {
        return [l, 0.0, 0.0];
    }
    match uv_prime(x, y, z) {
        Some((up, vp)) => [l, 13.0 * l * (up - un), 13.0 * l * (vp - vn)],
        None => [l, 0.0, 0.0],
    }
}

pub fn rgb_to_luv(img: &RgbImage) -> LuvImage {
    let n = img.pixel_count();
    let (mut l, mut u, mut v) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for px in img.pixels() {
        let [pl, pu, pv] = pixel_to_luv(px);
        l.push(pl);
        u.push(pu);
        v.push(pv);
    }
    LuvImage {
        width: img.width,
        height: img.height,
        l,
        u,
        v,
    }
}

/// Chroma-to-lightness ratio per pixel, with the ε used.
#[derive(Clone, Debug, PartialEq)]
pub struct SaturationMap {
    values: Vec<f64>,
    epsilon: f64,
}

impl SaturationMap {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

/// S = sqrt(u\*² + v\*²) / (L\* + ε).
pub fn saturation_map(luv: &LuvImage, epsilon: f64) -> Result<SaturationMap> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::contract(format!("saturation epsilon must be finite and > 0, got {epsilon}")));
    }
    let values = luv
        .l
        .iter()
        .zip(&luv.u)
        .zip(&luv.v)
        .map(|((&l, &u), &v)| u.hypot(v) / (l + epsilon))
        .collect();
    Ok(SaturationMap { values, epsilon })
}
