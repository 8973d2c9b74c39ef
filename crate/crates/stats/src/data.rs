//! Slot rows reduced to paired-comparison clusters.
//!
//! A cluster is one (game, unordered pair, run) tuple and holds both seat
//! siblings. Every resampling scheme weights whole clusters, so siblings are
//! never split.

use std::collections::BTreeMap;

use genstrat_core::tournament::SlotRow;
use serde::{Deserialize, Serialize};

use crate::StatsError;

/// One played match, margin from Alice's side.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub game: u64,
    pub alice: String,
    pub bob: String,
    pub run: u32,
    pub margin: f64,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ClusterKey {
    pub game: u64,
    pub lo: String,
    pub hi: String,
    pub run: u32,
}

/// Sufficient statistics of one cluster. Sums are oriented `lo` over `hi`.
#[derive(Clone, Debug, PartialEq)]
pub struct Cluster {
    pub key: ClusterKey,
    pub game_idx: usize,
    pub lo: usize,
    pub hi: usize,
    pub n: f64,
    pub sum: f64,
    pub sumsq: f64,
    /// `[lo seated as Alice, hi seated as Alice]`, each (count, sum oriented lo over hi).
    pub by_seat: [(f64, f64); 2],
}

#[derive(Clone, Debug)]
pub struct Observations {
    /// Sorted, deduplicated.
    pub models: Vec<String>,
    /// Sorted, deduplicated.
    pub games: Vec<u64>,
    /// Sorted by key.
    pub clusters: Vec<Cluster>,
    /// Cluster indices per game.
    pub by_game: Vec<Vec<usize>>,
    /// Cluster indices per (game, lo, hi) edge, in key order.
    pub edges: Vec<Vec<usize>>,
    pub records: Vec<Record>,
}

impl Observations {
    pub fn from_records(records: Vec<Record>) -> Result<Self, StatsError> {
        if records.is_empty() {
            return Err(StatsError::Empty);
        }
        if let Some(r) = records.iter().find(|r| r.alice == r.bob) {
            return Err(StatsError::Invalid(format!("self-play row for {} on game {}", r.alice, r.game)));
        }
        if let Some(r) = records.iter().find(|r| !r.margin.is_finite()) {
            return Err(StatsError::Invalid(format!("non-finite margin on game {}", r.game)));
        }
        let mut models: Vec<String> = records.iter().flat_map(|r| [r.alice.clone(), r.bob.clone()]).collect();
        models.sort();
        models.dedup();
        let mut games: Vec<u64> = records.iter().map(|r| r.game).collect();
        games.sort_unstable();
        games.dedup();
        let midx = |m: &str| models.binary_search_by(|x| x.as_str().cmp(m)).unwrap();
        let gidx = |g: u64| games.binary_search(&g).unwrap();

        let mut map: BTreeMap<ClusterKey, Cluster> = BTreeMap::new();
        for r in &records {
            let (a, b) = (midx(&r.alice), midx(&r.bob));
            let (lo, hi, y, seat) = if a < b { (a, b, r.margin, 0) } else { (b, a, -r.margin, 1) };
            let key = ClusterKey { game: r.game, lo: models[lo].clone(), hi: models[hi].clone(), run: r.run };
            let c = map.entry(key.clone()).or_insert_with(|| Cluster {
                key,
                game_idx: gidx(r.game),
                lo,
                hi,
                n: 0.0,
                sum: 0.0,
                sumsq: 0.0,
                by_seat: [(0.0, 0.0); 2],
            });
            c.n += 1.0;
            c.sum += y;
            c.sumsq += y * y;
            c.by_seat[seat].0 += 1.0;
            c.by_seat[seat].1 += y;
        }
        let clusters: Vec<Cluster> = map.into_values().collect();
        let mut by_game = vec![Vec::new(); games.len()];
        let mut edges: Vec<Vec<usize>> = Vec::new();
        for (i, c) in clusters.iter().enumerate() {
            by_game[c.game_idx].push(i);
            let same_edge = i > 0 && {
                let p = &clusters[i - 1];
                (p.game_idx, p.lo, p.hi) == (c.game_idx, c.lo, c.hi)
            };
            if same_edge {
                edges.last_mut().unwrap().push(i);
            } else {
                edges.push(vec![i]);
            }
        }
        Ok(Observations { models, games, clusters, by_game, edges, records })
    }

    /// Completed slots only; discarded and errored rows carry no margin.
    pub fn from_slots(rows: &[SlotRow]) -> Result<Self, StatsError> {
        let records = rows
            .iter()
            .filter(|r| r.is_ok())
            .map(|r| Record {
                game: r.game_seed,
                alice: r.model_alice.clone(),
                bob: r.model_bob.clone(),
                run: r.run_id,
                margin: r.margin as f64,
            })
            .collect();
        Self::from_records(records)
    }

    pub fn subset(&self, keep_game: impl Fn(u64) -> bool, keep_model: impl Fn(&str) -> bool) -> Result<Self, StatsError> {
        let recs = self
            .records
            .iter()
            .filter(|r| keep_game(r.game) && keep_model(&r.alice) && keep_model(&r.bob))
            .cloned()
            .collect();
        Self::from_records(recs)
    }

    pub fn unit_weights(&self) -> Vec<f64> {
        vec![1.0; self.clusters.len()]
    }

    pub fn model_index(&self, m: &str) -> Option<usize> {
        self.models.binary_search_by(|x| x.as_str().cmp(m)).ok()
    }

    pub fn game_index(&self, g: u64) -> Option<usize> {
        self.games.binary_search(&g).ok()
    }

    /// Population std of all signed margins on a game, both orientations pooled,
    /// so the mean is exactly 0 and the result is the weighted RMS margin.
    pub fn sigma_game(&self, g: usize, w: &[f64]) -> f64 {
        let (mut n, mut ss) = (0.0, 0.0);
        for &c in &self.by_game[g] {
            n += w[c] * self.clusters[c].n;
            ss += w[c] * self.clusters[c].sumsq;
        }
        if n > 0.0 {
            (ss / n).sqrt()
        } else {
            0.0
        }
    }
}
