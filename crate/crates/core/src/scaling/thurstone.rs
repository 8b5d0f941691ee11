use std::f64::consts::SQRT_2;

use super::matrix::PwcMatrix;
use super::normal::{ln_cdf, mills};
use crate::error::{Error, Result};
use crate::stats::ScoreVector;

/// Added to both cells of every compared pair before scaling, so unanimous
/// outcomes still have a finite maximum-likelihood solution.
pub const SMOOTHING: f64 = 0.5;

#[derive(Clone, Copy, Debug)]
pub struct ThurstoneOptions {
    /// Converged once the largest score update falls below this.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Stimulus whose score is pinned to zero.
    pub anchor_index: usize,
}

impl Default for ThurstoneOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            max_iterations: 10_000,
            anchor_index: 0,
        }
    }
}

/// Latent Case V scores; `scores[anchor_index] == 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScaledScores {
    pub ids: Vec<String>,
    pub scores: Vec<f64>,
    pub anchor_index: usize,
}

impl ScaledScores {
    pub fn to_score_vector(&self) -> ScoreVector {
        ScoreVector::new(self.ids.clone(), self.scores.clone()).expect("matrix ids are unique")
    }
}

/// Smoothed Case V log-likelihood over a comparison matrix,
/// P(i beats j) = Φ((q_i − q_j)/√2).
#[derive(Clone, Debug)]
pub struct ThurstoneProblem {
    n: usize,
    // (i, j, wins of i over j, wins of j over i), smoothed, i < j
    pairs: Vec<(usize, usize, f64, f64)>,
}

impl ThurstoneProblem {
    pub fn new(m: &PwcMatrix) -> Result<Self> {
        let n = m.n();
        let mut pairs = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if m.compared(i, j) > 0 {
                    pairs.push((
                        i,
                        j,
                        m.get(i, j) as f64 + SMOOTHING,
                        m.get(j, i) as f64 + SMOOTHING,
                    ));
                }
            }
        }
        let problem = Self { n, pairs };
        let components = problem.components();
        if components.len() > 1 {
            return Err(Error::Disconnected {
                components: components
                    .into_iter()
                    .map(|c| c.into_iter().map(|k| m.ids()[k].clone()).collect())
                    .collect(),
            });
        }
        Ok(problem)
    }

    fn components(&self) -> Vec<Vec<usize>> {
        let mut parent: Vec<usize> = (0..self.n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for &(i, j, _, _) in &self.pairs {
            let (a, b) = (find(&mut parent, i), find(&mut parent, j));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
        let mut groups: Vec<Vec<usize>> = Vec::new();
        let mut slot = vec![usize::MAX; self.n];
        for k in 0..self.n {
            let root = find(&mut parent, k);
            if slot[root] == usize::MAX {
                slot[root] = groups.len();
                groups.push(Vec::new());
            }
            groups[slot[root]].push(k);
        }
        groups
    }

    pub fn log_likelihood(&self, q: &[f64]) -> f64 {
        self.pairs
            .iter()
            .map(|&(i, j, wij, wji)| {
                let d = (q[i] - q[j]) / SQRT_2;
                wij * ln_cdf(d) + wji * ln_cdf(-d)
            })
            .sum()
    }

    pub fn gradient(&self, q: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.n];
        for &(i, j, wij, wji) in &self.pairs {
            let d = (q[i] - q[j]) / SQRT_2;
            let dd = (wij * mills(d) - wji * mills(-d)) / SQRT_2;
            g[i] += dd;
            g[j] -= dd;
        }
        g
    }

    /// Negative Hessian: a weighted graph Laplacian with weights
    /// −(w_ij h(d) + w_ji h(−d))/2, where h(x) = −r(x)(x + r(x)) and r is
    /// the inverse Mills ratio.
    fn curvature(&self, q: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut h = vec![0.0; n * n];
        let second = |x: f64| {
            let r = mills(x);
            -r * (x + r)
        };
        for &(i, j, wij, wji) in &self.pairs {
            let d = (q[i] - q[j]) / SQRT_2;
            let w = -(wij * second(d) + wji * second(-d)) / 2.0;
            h[i * n + i] += w;
            h[j * n + j] += w;
            h[i * n + j] -= w;
            h[j * n + i] -= w;
        }
        h
    }

    /// Damped Newton ascent with the anchor score held at zero.
    pub fn solve(&self, opts: &ThurstoneOptions) -> Result<Vec<f64>> {
        let n = self.n;
        if opts.anchor_index >= n {
            return Err(Error::contract(format!("anchor index {} out of range", opts.anchor_index)));
        }
        let mut q = vec![0.0; n];
        if n == 1 {
            return Ok(q);
        }
        let free: Vec<usize> = (0..n).filter(|&k| k != opts.anchor_index).collect();
        let mut ll = self.log_likelihood(&q);
        for _ in 0..opts.max_iterations {
            let g = self.gradient(&q);
            let h = self.curvature(&q);
            let m = free.len();
            let mut a = vec![0.0; m * m];
            for (r, &i) in free.iter().enumerate() {
                for (c, &j) in free.iter().enumerate() {
                    a[r * m + c] = h[i * n + j];
                }
            }
            let rhs: Vec<f64> = free.iter().map(|&i| g[i]).collect();
            let step = cholesky_solve(&mut a, m, &rhs).unwrap_or(rhs);

            let mut t = 1.0;
            let mut next = q.clone();
            let mut next_ll;
            loop {
                for (k, &i) in free.iter().enumerate() {
                    next[i] = q[i] + t * step[k];
                }
                next_ll = self.log_likelihood(&next);
                if next_ll >= ll - 1e-12 * ll.abs() || t < 1e-12 {
                    break;
                }
                t *= 0.5;
            }
            let update = step.iter().map(|s| (t * s).abs()).fold(0.0, f64::max);
            q = next;
            ll = next_ll;
            if update < opts.tolerance {
                return Ok(q);
            }
        }
        let g = self.gradient(&q);
        Err(Error::NonConvergence {
            iterations: opts.max_iterations,
            gradient_norm: free.iter().map(|&i| g[i] * g[i]).sum::<f64>().sqrt(),
        })
    }
}

/// Solves A x = b for symmetric positive-definite A (row-major, m×m).
fn cholesky_solve(a: &mut [f64], m: usize, b: &[f64]) -> Option<Vec<f64>> {
    for j in 0..m {
        let mut d = a[j * m + j];
        for k in 0..j {
            d -= a[j * m + k] * a[j * m + k];
        }
        if !(d > 0.0) {
            return None;
        }
        let d = d.sqrt();
        a[j * m + j] = d;
        for i in j + 1..m {
            let mut s = a[i * m + j];
            for k in 0..j {
                s -= a[i * m + k] * a[j * m + k];
            }
            a[i * m + j] = s / d;
        }
    }
    let mut y = b.to_vec();
    for i in 0..m {
        for k in 0..i {
            y[i] -= a[i * m + k] * y[k];
        }
        y[i] /= a[i * m + i];
    }
    for i in (0..m).rev() {
        for k in i + 1..m {
            y[i] -= a[k * m + i] * y[k];
        }
        y[i] /= a[i * m + i];
    }
    Some(y)
}

/// Maximum-likelihood Case V scaling with default options.
pub fn thurstone_scale(m: &PwcMatrix) -> Result<ScaledScores> {
    thurstone_scale_with(m, &ThurstoneOptions::default())
}

pub fn thurstone_scale_with(m: &PwcMatrix, opts: &ThurstoneOptions) -> Result<ScaledScores> {
    let scores = ThurstoneProblem::new(m)?.solve(opts)?;
    Ok(ScaledScores {
        ids: m.ids().to_vec(),
        scores,
        anchor_index: opts.anchor_index,
    })
}

/// Affine map sending the lowest score to `lo` and the highest to `hi`.
pub fn map_to_scale(s: &ScaledScores, lo: f64, hi: f64) -> Result<ScoreVector> {
    if !(hi > lo) {
        return Err(Error::contract(format!("scale bounds must satisfy hi > lo, got [{lo}, {hi}]")));
    }
    let min = s.scores.iter().copied().fold(f64::INFINITY, f64::min);
    let max = s.scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(max > min) {
        return Err(Error::DegenerateRange("all scores are equal".into()));
    }
    let values = s
        .scores
        .iter()
        .map(|&v| lo + (v - min) * (hi - lo) / (max - min))
        .collect();
    ScoreVector::new(s.ids.clone(), values)
}
