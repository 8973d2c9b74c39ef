//! Pairwise seat-balanced mean margins.

use serde::{Deserialize, Serialize};

use crate::bootstrap::{self, Scheme};
use crate::data::Observations;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeadToHead {
    pub models: Vec<String>,
    /// Row minus column, chips per game; antisymmetric, `None` for unplayed pairs.
    pub mean: Vec<Vec<Option<f64>>>,
    pub ci: Vec<Vec<Option<(f64, f64)>>>,
    /// 95% interval excludes 0.
    pub significant: Vec<Vec<bool>>,
    pub b: usize,
    pub seed: u64,
}

impl HeadToHead {
    pub fn significant_count(&self) -> usize {
        self.significant.iter().flatten().filter(|s| **s).count()
    }
}

/// Mean of the two per-seat means, oriented lo over hi; a pair seen from one
/// seat only uses that seat.
fn pair_means(obs: &Observations, w: &[f64]) -> Vec<Vec<Option<f64>>> {
    let n = obs.models.len();
    let mut acc = vec![vec![[(0.0, 0.0); 2]; n]; n];
    for (c, wt) in obs.clusters.iter().zip(w) {
        for s in 0..2 {
            acc[c.lo][c.hi][s].0 += wt * c.by_seat[s].0;
            acc[c.lo][c.hi][s].1 += wt * c.by_seat[s].1;
        }
    }
    let mut out = vec![vec![None; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let seats: Vec<f64> = acc[i][j].iter().filter(|(k, _)| *k > 0.0).map(|(k, s)| s / k).collect();
            if !seats.is_empty() {
                let m = seats.iter().sum::<f64>() / seats.len() as f64;
                out[i][j] = Some(m);
                out[j][i] = Some(-m);
            }
        }
    }
    out
}

pub fn head_to_head_matrix(obs: &Observations, b: usize, seed: u64) -> HeadToHead {
    let n = obs.models.len();
    let mean = pair_means(obs, &obs.unit_weights());
    let reps = bootstrap::replicates(obs, Scheme::ByEdge, b, "bootstrap-h2h", seed, |w| pair_means(obs, w));
    let mut ci = vec![vec![None; n]; n];
    let mut significant = vec![vec![false; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let draws: Vec<f64> = reps.iter().filter_map(|r| r[i][j]).collect();
            if let Some((lo, hi)) = bootstrap::percentile_ci(&draws, 0.95) {
                ci[i][j] = Some((lo, hi));
                ci[j][i] = Some((-hi, -lo));
                let sig = lo > 0.0 || hi < 0.0;
                significant[i][j] = sig;
                significant[j][i] = sig;
            }
        }
    }
    HeadToHead { models: obs.models.clone(), mean, ci, significant, b, seed }
}
