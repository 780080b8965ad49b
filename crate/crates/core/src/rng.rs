//! Deterministic random substreams.
//!
//! Every consumer draws from a ChaCha stream keyed by `(seed, trial, family)`,
//! so adding trials or families never perturbs existing draws.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Independent consumers of randomness within one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Family {
    Geometry = 1,
    Shadowing = 2,
    FadingDl = 3,
    FadingUl = 4,
    FadingBs = 5,
    FadingUe = 6,
    PilotDl = 7,
    PilotUl = 8,
    PilotSi = 9,
    PilotSptStage1 = 10,
    PilotSptStage2 = 11,
    PilotSptShadowUl = 12,
    Impairments = 13,
    Trial = 14,
}

pub fn substream(seed: u64, trial: u64, family: Family) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&trial.to_le_bytes());
    key[16..24].copy_from_slice(&(family as u64).to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// Seed of trial `trial` under root seed `root`.
pub fn trial_seed(root: u64, trial: u64) -> u64 {
    substream(root, trial, Family::Trial).random()
}

/// One draw of CN(0, 1).
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// One draw of a zero-mean real Gaussian with standard deviation `sd`.
pub fn normal<R: Rng + ?Sized>(rng: &mut R, sd: f64) -> f64 {
    let x: f64 = rng.sample(StandardNormal);
    x * sd
}
