use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::matrix::PwcMatrix;
use super::thurstone::thurstone_scale;
use crate::error::{Error, Result};

pub const DEFAULT_LOOPS: usize = 5;

/// Adaptive square design state for one observer.
///
/// Stimuli are laid out row-major, in current rank order, on a grid with
/// ⌈√n⌉ columns; each loop compares grid neighbours. `loop_index == loops`
/// marks a finished schedule.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AsdState {
    pub ids: Vec<String>,
    /// Stimulus indices (into `ids`), best-ranked first.
    pub rank_order: Vec<usize>,
    pub grid_cols: usize,
    pub loop_index: usize,
    pub loops: usize,
    pub rng_seed: u64,
}

impl AsdState {
    pub fn n(&self) -> usize {
        self.ids.len()
    }

    pub fn is_complete(&self) -> bool {
        self.loop_index >= self.loops
    }

    pub fn rank_ids(&self) -> Vec<&str> {
        self.rank_order.iter().map(|&k| self.ids[k].as_str()).collect()
    }

    pub fn pairs_per_loop(&self) -> usize {
        grid_pairs(self.n()).len()
    }
}

fn grid_cols(n: usize) -> usize {
    let mut c = (n as f64).sqrt() as usize;
    while c * c < n {
        c += 1;
    }
    while c > 1 && (c - 1) * (c - 1) >= n {
        c -= 1;
    }
    c.max(1)
}

pub fn asd_init(ids: Vec<String>, seed: u64, loops: usize) -> Result<AsdState> {
    if ids.len() < 2 {
        return Err(Error::contract(format!("adaptive square design needs at least 2 stimuli, got {}", ids.len())));
    }
    if loops == 0 {
        return Err(Error::contract("loop count must be at least 1"));
    }
    let mut rank_order: Vec<usize> = (0..ids.len()).collect();
    rank_order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    Ok(AsdState {
        grid_cols: grid_cols(ids.len()),
        ids,
        rank_order,
        loop_index: 0,
        loops,
        rng_seed: seed,
    })
}

/// Neighbouring cell positions of the rank grid for `n` stimuli: all
/// horizontal neighbours row by row, then all vertical ones.
pub fn grid_pairs(n: usize) -> Vec<(usize, usize)> {
    let cols = grid_cols(n);
    let mut pairs = Vec::new();
    for p in 0..n {
        if (p + 1) % cols != 0 && p + 1 < n {
            pairs.push((p, p + 1));
        }
    }
    for p in 0..n {
        if p + cols < n {
            pairs.push((p, p + cols));
        }
    }
    pairs
}

/// The current loop's comparisons as stimulus-index pairs, or `None` once
/// every loop has run.
pub fn asd_next_pairs(st: &AsdState) -> Option<Vec<(usize, usize)>> {
    if st.is_complete() {
        return None;
    }
    Some(
        grid_pairs(st.n())
            .into_iter()
            .map(|(a, b)| (st.rank_order[a], st.rank_order[b]))
            .collect(),
    )
}

/// Re-ranks by Case V scores of the accumulated counts and advances the loop.
pub fn asd_update(st: &AsdState, m: &PwcMatrix) -> Result<AsdState> {
    if m.n() != st.n() {
        return Err(Error::contract(format!("matrix covers {} stimuli, design has {}", m.n(), st.n())));
    }
    let mut next = st.clone();
    next.loop_index = (st.loop_index + 1).min(st.loops);
    if m.total() == 0 {
        return Ok(next);
    }
    let scores = thurstone_scale(m)?.scores;
    // stable: ties keep their current relative order
    next.rank_order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    Ok(next)
}
