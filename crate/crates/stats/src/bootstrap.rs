//! Cluster resampling and interval construction.

use genstrat_core::seeding;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Observations;

pub const B_ALPHA: usize = 2000;
pub const B_PROFILE: usize = 500;
pub const B_DECOMPOSITION: usize = 2000;

/// Which cluster set is resampled with replacement.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    /// All clusters together.
    Global,
    /// Within each game, to the game's original cluster count.
    ByGame,
    /// Within each (game, pair) edge, to the edge's original count.
    ByEdge,
}

/// Cluster multiplicities for one replicate.
pub fn draw(obs: &Observations, scheme: Scheme, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut w = vec![0.0; obs.clusters.len()];
    let mut pick = |set: &[usize], rng: &mut ChaCha8Rng| {
        for _ in 0..set.len() {
            w[set[rng.random_range(0..set.len())]] += 1.0;
        }
    };
    match scheme {
        Scheme::Global => {
            let all: Vec<usize> = (0..obs.clusters.len()).collect();
            pick(&all, rng);
        }
        Scheme::ByGame => obs.by_game.iter().for_each(|s| pick(s, rng)),
        Scheme::ByEdge => obs.edges.iter().for_each(|s| pick(s, rng)),
    }
    w
}

pub fn replicate_rng(label: &str, seed: u64, b: usize) -> ChaCha8Rng {
    seeding::rng(label, &[seed, b as u64])
}

/// Runs `stat` on `b` replicates in parallel. Output order is replicate order
/// and each replicate's stream depends only on `(label, seed, index)`.
pub fn replicates<T, F>(obs: &Observations, scheme: Scheme, b: usize, label: &str, seed: u64, stat: F) -> Vec<T>
where
    T: Send,
    F: Fn(&[f64]) -> T + Sync,
{
    (0..b)
        .into_par_iter()
        .map(|i| {
            let mut rng = replicate_rng(label, seed, i);
            let w = draw(obs, scheme, &mut rng);
            stat(&w)
        })
        .collect()
}

/// Type-7 sample quantile of sorted data.
pub fn quantile_sorted(v: &[f64], p: f64) -> f64 {
    assert!(!v.is_empty());
    let h = (v.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(v.len() - 1);
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v: Vec<f64> = values.iter().cloned().filter(|x| x.is_finite()).collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Equal-tailed percentile interval at `level`; `None` for no finite values.
pub fn percentile_ci(values: &[f64], level: f64) -> Option<(f64, f64)> {
    let v = sorted(values);
    if v.is_empty() {
        return None;
    }
    let a = (1.0 - level) / 2.0;
    Some((quantile_sorted(&v, a), quantile_sorted(&v, 1.0 - a)))
}

/// Reflected interval `(2θ̂ − q_hi, 2θ̂ − q_lo)`, which shifts the percentile
/// interval by the estimated bias.
pub fn reflected_ci(theta: f64, values: &[f64], level: f64) -> Option<(f64, f64)> {
    percentile_ci(values, level).map(|(lo, hi)| (2.0 * theta - hi, 2.0 * theta - lo))
}

/// Sample std with n−1; 0 for fewer than two values.
pub fn std_error(values: &[f64]) -> f64 {
    let v: Vec<f64> = values.iter().cloned().filter(|x| x.is_finite()).collect();
    if v.len() < 2 {
        return 0.0;
    }
    let m = v.iter().sum::<f64>() / v.len() as f64;
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

/// Two-sided bootstrap p-value for H0: θ = 0, from the share of replicates on
/// either side of zero. Zeros count toward both sides.
pub fn two_sided_p(values: &[f64]) -> f64 {
    let v: Vec<f64> = values.iter().cloned().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return 1.0;
    }
    let n = v.len() as f64;
    let le = v.iter().filter(|x| **x <= 0.0).count() as f64 / n;
    let ge = v.iter().filter(|x| **x >= 0.0).count() as f64 / n;
    (2.0 * le.min(ge)).min(1.0)
}
