//! Pairwise-comparison psychometrics: Thurstone Case V scaling, the adaptive
//! square design (ASD) pair scheduler, a simulated observer, and mapping of
//! latent scores onto a bounded rating scale.

mod asd;
mod matrix;
mod normal;
mod observer;
mod thurstone;

pub use asd::{asd_init, asd_next_pairs, asd_update, grid_pairs, AsdState, DEFAULT_LOOPS};
pub use matrix::PwcMatrix;
pub use normal::{normal_cdf, normal_quantile};
pub use observer::{simulate_observer, win_probability, SeedStream, Vote};
pub use thurstone::{map_to_scale, thurstone_scale, ScaledScores, ThurstoneOptions, ThurstoneProblem};
