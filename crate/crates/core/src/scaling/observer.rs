use std::f64::consts::SQRT_2;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::normal::normal_cdf;
use crate::error::{Error, Result};
use crate::stats::ScoreVector;

/// Deterministic random stream driving simulated observers.
pub type SeedStream = ChaCha8Rng;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vote {
    pub winner: String,
    pub loser: String,
}

/// Case V probability that a stimulus with latent score `qi` beats one
/// with `qj`.
pub fn win_probability(qi: f64, qj: f64) -> f64 {
    normal_cdf((qi - qj) / SQRT_2)
}

/// Draws one simulated judgement for `pair` from the latent scores.
pub fn simulate_observer(latent: &ScoreVector, pair: (&str, &str), stream: &mut SeedStream) -> Result<Vote> {
    let (i, j) = pair;
    let qi = latent.get(i).ok_or_else(|| Error::UnknownId(i.to_string()))?;
    let qj = latent.get(j).ok_or_else(|| Error::UnknownId(j.to_string()))?;
    let p = win_probability(qi, qj);
    let (winner, loser) = if stream.random::<f64>() < p { (i, j) } else { (j, i) };
    Ok(Vote {
        winner: winner.to_string(),
        loser: loser.to_string(),
    })
}
