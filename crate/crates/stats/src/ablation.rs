//! Paired within-sibling gain of a model family's high setting over its low one.

use std::collections::BTreeMap;

use genstrat_core::seeding;
use genstrat_core::tournament::AblationPair;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bootstrap::percentile_ci;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub family: String,
    /// `None` for the pooled row.
    pub anchor: Option<String>,
    pub delta: f64,
    pub ci: (f64, f64),
    pub n: usize,
    pub games: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub rows: Vec<AblationRow>,
    /// Requested families that had no complete pairs.
    pub omitted: Vec<String>,
    pub b: usize,
    pub seed: u64,
}

/// Mean Δ with a percentile interval from resampling game seeds.
/// Replicate `r` draws from the stream `("bootstrap-ablation", stream ++ [r])`.
pub fn cluster_delta(deltas: &[(u64, f64)], b: usize, stream: &[u64]) -> (f64, (f64, f64), usize) {
    let mut by_game: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
    for (g, d) in deltas {
        by_game.entry(*g).or_default().push(*d);
    }
    let groups: Vec<(f64, f64)> = by_game.values().map(|v| (v.iter().sum(), v.len() as f64)).collect();
    let point = deltas.iter().map(|d| d.1).sum::<f64>() / deltas.len() as f64;
    let reps: Vec<f64> = (0..b)
        .into_par_iter()
        .map(|r| {
            let parts: Vec<u64> = stream.iter().cloned().chain([r as u64]).collect();
            let mut rng = seeding::rng("bootstrap-ablation", &parts);
            let (mut s, mut n) = (0.0, 0.0);
            for _ in 0..groups.len() {
                let (gs, gn) = groups[rng.random_range(0..groups.len())];
                s += gs;
                n += gn;
            }
            s / n
        })
        .collect();
    (point, percentile_ci(&reps, 0.95).unwrap_or((point, point)), groups.len())
}

/// Rows for every (family, anchor) and one pooled row per family.
pub fn ablation_delta(pairs: &[AblationPair], families: &[String], b: usize, seed: u64) -> AblationReport {
    let mut grouped: BTreeMap<(String, Option<String>), Vec<(u64, f64)>> = BTreeMap::new();
    for p in pairs.iter().filter(|p| p.low.is_ok() && p.high.is_ok()) {
        let d = (p.game_seed, p.delta());
        grouped.entry((p.family.clone(), Some(p.anchor.clone()))).or_default().push(d);
        grouped.entry((p.family.clone(), None)).or_default().push(d);
    }
    let rows = grouped
        .into_iter()
        .map(|((family, anchor), deltas)| {
            let stream = [seed, seeding::derive(&family, &[]), anchor.as_ref().map_or(0, |a| seeding::derive(a, &[]))];
            let (delta, ci, games) = cluster_delta(&deltas, b, &stream);
            AblationRow { family, anchor, delta, ci, n: deltas.len(), games }
        })
        .collect::<Vec<_>>();
    let omitted = families.iter().filter(|f| !rows.iter().any(|r| &r.family == *f)).cloned().collect();
    AblationReport { rows, omitted, b, seed }
}
