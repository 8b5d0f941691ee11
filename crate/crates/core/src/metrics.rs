//! Classical colorfulness metrics: Hasler–Süsstrunk, the two CQE variants of
//! Panetta et al., and Yendrikhovskij's saturation statistic.

use std::fmt;
use std::str::FromStr;

use crate::color::{opponent_channels, rgb_to_luv, saturation_map, OpponentPair, RgbImage};
use crate::error::{Error, Result};

/// Floor applied to CQE log arguments and denominators.
pub const CQE_FLOOR: f64 = 1e-6;

/// Logarithm used inside the CQE metrics.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LogBase {
    Natural,
    Ten,
}

impl LogBase {
    fn log(self, x: f64) -> f64 {
        match self {
            LogBase::Natural => x.ln(),
            LogBase::Ten => x.log10(),
        }
    }
}

/// Base used by [`cqe1`] and [`cqe2`].
pub const CQE_LOG_BASE: LogBase = LogBase::Natural;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MetricId {
    Hasler,
    Cqe1,
    Cqe2,
    Yendrikhovskij,
    ColorNet,
}

impl MetricId {
    pub const CLASSICAL: [MetricId; 4] = [MetricId::Hasler, MetricId::Cqe1, MetricId::Cqe2, MetricId::Yendrikhovskij];

    pub fn as_str(self) -> &'static str {
        match self {
            MetricId::Hasler => "hasler",
            MetricId::Cqe1 => "cqe1",
            MetricId::Cqe2 => "cqe2",
            MetricId::Yendrikhovskij => "yendrikhovskij",
            MetricId::ColorNet => "colornet",
        }
    }
}

impl fmt::Display for MetricId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MetricId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hasler" => Ok(MetricId::Hasler),
            "cqe1" => Ok(MetricId::Cqe1),
            "cqe2" => Ok(MetricId::Cqe2),
            "yendrikhovskij" => Ok(MetricId::Yendrikhovskij),
            "colornet" => Ok(MetricId::ColorNet),
            other => Err(Error::UnknownId(other.to_string())),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ColorfulnessScore {
    pub metric: MetricId,
    pub value: f64,
}

/// First- and second-order statistics of the opponent planes and of their
/// concatenation. Standard deviations are population (divide by N).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChannelStats {
    pub mu_rg: f64,
    pub mu_yb: f64,
    pub sigma_rg: f64,
    pub sigma_yb: f64,
    pub mu_c: f64,
    pub sigma_c: f64,
}

pub(crate) fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let (sum, n) = values.clone().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = sum / n as f64;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    (mean, var.sqrt())
}

pub fn channel_stats(op: &OpponentPair) -> ChannelStats {
    let (mu_rg, sigma_rg) = mean_std(op.rg().iter().copied());
    let (mu_yb, sigma_yb) = mean_std(op.yb().iter().copied());
    let (mu_c, sigma_c) = mean_std(op.rg().iter().chain(op.yb()).copied());
    ChannelStats {
        mu_rg,
        mu_yb,
        sigma_rg,
        sigma_yb,
        mu_c,
        sigma_c,
    }
}

pub fn hasler_from_stats(s: &ChannelStats) -> f64 {
    s.sigma_rg.hypot(s.sigma_yb) + 0.3 * s.mu_rg.hypot(s.mu_yb)
}

pub fn cf_hasler(img: &RgbImage) -> ColorfulnessScore {
    ColorfulnessScore {
        metric: MetricId::Hasler,
        value: hasler_from_stats(&channel_stats(&opponent_channels(img))),
    }
}

fn floor(x: f64) -> f64 {
    x.max(CQE_FLOOR)
}

// Keeps a denominator at least CQE_FLOOR away from zero, preserving sign.
fn away_from_zero(x: f64) -> f64 {
    if x.abs() >= CQE_FLOOR {
        x
    } else if x < 0.0 {
        -CQE_FLOOR
    } else {
        CQE_FLOOR
    }
}

fn degenerate(s: &ChannelStats) -> bool {
    s.sigma_rg == 0.0 && s.sigma_yb == 0.0
}

pub fn cqe1_from_stats(s: &ChannelStats, base: LogBase) -> f64 {
    if degenerate(s) {
        return 0.0;
    }
    let term = |sigma: f64, mu: f64| {
        let arg = floor(sigma * sigma) / floor(mu.abs()).powf(0.2);
        base.log(floor(arg))
    };
    0.02 * term(s.sigma_rg, s.mu_rg) * term(s.sigma_yb, s.mu_yb)
}

pub fn cqe2_from_stats(s: &ChannelStats, base: LogBase) -> f64 {
    if degenerate(s) {
        return 0.0;
    }
    let log_sq = |x: f64| base.log(floor(x * x));
    let spread = log_sq(s.sigma_rg) * log_sq(s.sigma_yb) / away_from_zero(log_sq(s.sigma_c));
    let level = log_sq(s.mu_rg) * log_sq(s.mu_yb) / away_from_zero(log_sq(s.mu_c));
    0.02 * spread * level
}

pub fn cqe1_with_base(img: &RgbImage, base: LogBase) -> ColorfulnessScore {
    ColorfulnessScore {
        metric: MetricId::Cqe1,
        value: cqe1_from_stats(&channel_stats(&opponent_channels(img)), base),
    }
}

pub fn cqe2_with_base(img: &RgbImage, base: LogBase) -> ColorfulnessScore {
    ColorfulnessScore {
        metric: MetricId::Cqe2,
        value: cqe2_from_stats(&channel_stats(&opponent_channels(img)), base),
    }
}

pub fn cqe1(img: &RgbImage) -> ColorfulnessScore {
    cqe1_with_base(img, CQE_LOG_BASE)
}

pub fn cqe2(img: &RgbImage) -> ColorfulnessScore {
    cqe2_with_base(img, CQE_LOG_BASE)
}

/// Mean plus population standard deviation of the L\*u\*v\* saturation map.
pub fn cf_yendrikhovskij(img: &RgbImage, epsilon: f64) -> Result<ColorfulnessScore> {
    let sat = saturation_map(&rgb_to_luv(img), epsilon)?;
    let (mu, sigma) = mean_std(sat.values().iter().copied());
    Ok(ColorfulnessScore {
        metric: MetricId::Yendrikhovskij,
        value: mu + sigma,
    })
}

/// Evaluates any classical metric by id. `ColorNet` needs a trained model
/// and is rejected here.
pub fn classical(metric: MetricId, img: &RgbImage, epsilon: f64) -> Result<ColorfulnessScore> {
    match metric {
        MetricId::Hasler => Ok(cf_hasler(img)),
        MetricId::Cqe1 => Ok(cqe1(img)),
        MetricId::Cqe2 => Ok(cqe2(img)),
        MetricId::Yendrikhovskij => cf_yendrikhovskij(img, epsilon),
        MetricId::ColorNet => Err(Error::contract("colornet scores require a trained model")),
    }
}
