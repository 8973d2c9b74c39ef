//! Min-max normalisation of the axis table and farthest-point benchmark selection.

use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::axes::AxisRecord;

#[derive(Debug, Error)]
pub enum SelectionError {
    #[error("pool is empty")]
    Empty,
    #[error("duplicate seed {0} in pool")]
    DuplicateSeed(u64),
    #[error("asked for {k} games from a pool of {n}")]
    TooMany { k: usize, n: usize },
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("benchmark manifest: {0}")]
    Parse(#[from] serde_json::Error),
}

/// Pool in the unit cube, rows sorted by seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalizedPool {
    pub seeds: Vec<u64>,
    pub points: Vec<[f64; 6]>,
    /// Per-axis (min, max) over the pool.
    pub bounds: [(f64, f64); 6],
}

impl NormalizedPool {
    /// Maps a fresh vector with the stored bounds, clamping into [0,1]. The flag reports clamping.
    pub fn apply(&self, x: &[f64; 6]) -> ([f64; 6], bool) {
        let mut clamped = false;
        let mut out = [0.0; 6];
        for (a, o) in out.iter_mut().enumerate() {
            let (lo, hi) = self.bounds[a];
            if hi > lo {
                let v = (x[a] - lo) / (hi - lo);
                clamped |= !(0.0..=1.0).contains(&v);
                *o = v.clamp(0.0, 1.0);
            }
        }
        (out, clamped)
    }

    pub fn len(&self) -> usize {
        self.seeds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seeds.is_empty()
    }
}

pub fn minmax_normalize(rows: &[AxisRecord]) -> Result<NormalizedPool, SelectionError> {
    let raw: Vec<(u64, [f64; 6])> = rows.iter().map(|r| (r.seed, r.axes.values())).collect();
    normalize_vectors(&raw)
}

pub fn normalize_vectors(rows: &[(u64, [f64; 6])]) -> Result<NormalizedPool, SelectionError> {
    if rows.is_empty() {
        return Err(SelectionError::Empty);
    }
    let mut rows = rows.to_vec();
    rows.sort_by_key(|r| r.0);
    if let Some(w) = rows.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(SelectionError::DuplicateSeed(w[0].0));
    }
    let mut bounds = [(f64::INFINITY, f64::NEG_INFINITY); 6];
    for (_, x) in &rows {
        for a in 0..6 {
            bounds[a].0 = bounds[a].0.min(x[a]);
            bounds[a].1 = bounds[a].1.max(x[a]);
        }
    }
    let mut pool = NormalizedPool { seeds: rows.iter().map(|r| r.0).collect(), points: Vec::new(), bounds };
    pool.points = rows.iter().map(|(_, x)| pool.apply(x).0).collect();
    Ok(pool)
}

fn dist(a: &[f64; 6], b: &[f64; 6]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pick {
    pub rank: usize,
    pub seed: u64,
    pub point: [f64; 6],
    /// Distance to the nearest earlier pick; `None` for the centroid game.
    pub min_distance: Option<f64>,
}

/// Greedy max-min selection seeded with the game nearest the pool mean.
/// Rows are seed-sorted, so strict comparisons break ties toward the lowest seed.
pub fn farthest_point_sample(pool: &NormalizedPool, k: usize) -> Result<Vec<Pick>, SelectionError> {
    let n = pool.len();
    if k > n {
        return Err(SelectionError::TooMany { k, n });
    }
    if k == 0 {
        return Ok(Vec::new());
    }
    let mut mean = [0.0; 6];
    for p in &pool.points {
        for a in 0..6 {
            mean[a] += p[a] / n as f64;
        }
    }
    let first = (0..n).fold(0, |b, i| if dist(&pool.points[i], &mean) < dist(&pool.points[b], &mean) { i } else { b });
    let mut picks = vec![Pick { rank: 0, seed: pool.seeds[first], point: pool.points[first], min_distance: None }];
    let mut taken = vec![false; n];
    taken[first] = true;
    let mut nearest: Vec<f64> = pool.points.iter().map(|p| dist(p, &pool.points[first])).collect();
    while picks.len() < k {
        let mut best: Option<usize> = None;
        for i in (0..n).filter(|i| !taken[*i]) {
            if best.is_none_or(|b| nearest[i] > nearest[b]) {
                best = Some(i);
            }
        }
        let b = best.expect("k <= n leaves a candidate");
        taken[b] = true;
        picks.push(Pick { rank: picks.len(), seed: pool.seeds[b], point: pool.points[b], min_distance: Some(nearest[b]) });
        for i in 0..n {
            nearest[i] = nearest[i].min(dist(&pool.points[i], &pool.points[b]));
        }
    }
    Ok(picks)
}

pub fn write_benchmark<W: Write>(picks: &[Pick], mut out: W) -> Result<(), SelectionError> {
    for p in picks {
        serde_json::to_writer(&mut out, p)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Reads a manifest written by [`write_benchmark`], skipping blank lines and `_provenance` records.
pub fn read_benchmark<R: BufRead>(input: R) -> Result<Vec<Pick>, SelectionError> {
    let mut picks = Vec::new();
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() || line.contains("\"_provenance\"") {
            continue;
        }
        picks.push(serde_json::from_str(&line)?);
    }
    Ok(picks)
}
