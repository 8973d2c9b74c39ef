//! Per-game rank reversals against a Poisson-binomial null.
//!
//! Under the null each pair's per-game difference is normal around the overall
//! gap, so a reversal has probability `Φ(−|gap| / SE)`. Pairs are treated as
//! independent; the report carries that caveat in `independence_assumed`.

use serde::{Deserialize, Serialize};

use crate::bootstrap;
use crate::fit::{CellMatrix, GameBootstrap};
use crate::multiple::{bh_fdr, bh_qvalues};

/// Standard normal CDF.
pub fn phi(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Reversal probability for a pair with overall gap `gap` and per-cell SE `se`.
/// A zero SE is a point mass: 0.5 on a zero gap, 0 otherwise.
pub fn p_rev(gap: f64, se: f64) -> f64 {
    if se > 0.0 {
        phi(-gap.abs() / se)
    } else if gap == 0.0 {
        0.5
    } else {
        0.0
    }
}

/// `z_g` with explicit sentinels for a zero null variance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum ZStat {
    Finite(f64),
    /// `V_g = 0` and more reversals than expected.
    PosInfinity,
    /// `V_g = 0` and exactly the expected count.
    Undefined,
}

impl ZStat {
    pub fn p_value(&self) -> f64 {
        match self {
            ZStat::Finite(z) => 1.0 - phi(*z),
            ZStat::PosInfinity => 0.0,
            ZStat::Undefined => 1.0,
        }
    }
}

impl std::fmt::Display for ZStat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ZStat::Finite(z) => write!(f, "{z:.4}"),
            ZStat::PosInfinity => write!(f, "+inf"),
            ZStat::Undefined => write!(f, "undefined"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameStability {
    pub game: u64,
    pub pairs: usize,
    pub n_obs: usize,
    pub e: f64,
    pub v: f64,
    pub z: ZStat,
    pub p: f64,
    pub q: f64,
    pub reject_05: bool,
    pub reject_10: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReversalCell {
    pub game: u64,
    /// Ordered so `stronger` leads overall.
    pub stronger: String,
    pub weaker: String,
    pub gap: f64,
    pub cell_diff: f64,
    /// Share of replicates where the per-game difference keeps the overall sign.
    pub p: f64,
    pub q: f64,
    pub reject_05: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankStabilityReport {
    pub games: Vec<GameStability>,
    pub cells: Vec<ReversalCell>,
    pub independence_assumed: bool,
}

/// Sums over pairs identified on one game: `(N_obs, E_g, V_g, pairs)`.
/// `se(i, j)` is the per-cell SE of `α_{i,g} − α_{j,g}`.
pub fn game_counts(
    column: &[Option<f64>],
    overall: &[f64],
    se: impl Fn(usize, usize) -> f64,
) -> (usize, f64, f64, usize) {
    let (mut n_obs, mut e, mut v, mut pairs) = (0, 0.0, 0.0, 0);
    for i in 0..column.len() {
        for j in (i + 1)..column.len() {
            let (Some(ai), Some(aj)) = (column[i], column[j]) else { continue };
            let gap = overall[i] - overall[j];
            let p = p_rev(gap, se(i, j));
            pairs += 1;
            e += p;
            v += p * (1.0 - p);
            if gap * (ai - aj) < 0.0 {
                n_obs += 1;
            }
        }
    }
    (n_obs, e, v, pairs)
}

pub fn z_stat(n_obs: usize, e: f64, v: f64) -> ZStat {
    let d = n_obs as f64 - e;
    if v > 0.0 {
        ZStat::Finite(d / v.sqrt())
    } else if d > 0.0 {
        ZStat::PosInfinity
    } else {
        ZStat::Undefined
    }
}

pub fn rank_stability(
    models: &[String],
    games: &[u64],
    per_game: &CellMatrix,
    overall: &[f64],
    boot: &GameBootstrap,
) -> RankStabilityReport {
    let mut rows = Vec::new();
    let mut cells = Vec::new();
    for (g, &game) in games.iter().enumerate() {
        let column: Vec<Option<f64>> = per_game.iter().map(|r| r[g]).collect();
        let se = |i: usize, j: usize| bootstrap::std_error(&boot.cell_diff(i, j, g));
        let (n_obs, e, v, pairs) = game_counts(&column, overall, se);
        let z = z_stat(n_obs, e, v);
        rows.push(GameStability {
            game,
            pairs,
            n_obs,
            e,
            v,
            z,
            p: z.p_value(),
            q: 1.0,
            reject_05: false,
            reject_10: false,
        });
        for i in 0..models.len() {
            for j in 0..models.len() {
                let (Some(ai), Some(aj)) = (column[i], column[j]) else { continue };
                let gap = overall[i] - overall[j];
                if gap <= 0.0 || ai - aj >= 0.0 {
                    continue;
                }
                let draws = boot.cell_diff(i, j, g);
                let p = if draws.is_empty() {
                    1.0
                } else {
                    draws.iter().filter(|d| **d >= 0.0).count() as f64 / draws.len() as f64
                };
                cells.push(ReversalCell {
                    game,
                    stronger: models[i].clone(),
                    weaker: models[j].clone(),
                    gap,
                    cell_diff: ai - aj,
                    p,
                    q: 1.0,
                    reject_05: false,
                });
            }
        }
    }
    let gp: Vec<f64> = rows.iter().map(|r| r.p).collect();
    let (q, r05, r10) = (bh_qvalues(&gp), bh_fdr(&gp, 0.05), bh_fdr(&gp, 0.10));
    for (k, r) in rows.iter_mut().enumerate() {
        r.q = q[k];
        r.reject_05 = r05[k];
        r.reject_10 = r10[k];
    }
    let cp: Vec<f64> = cells.iter().map(|c| c.p).collect();
    let (cq, c05) = (bh_qvalues(&cp), bh_fdr(&cp, 0.05));
    for (k, c) in cells.iter_mut().enumerate() {
        c.q = cq[k];
        c.reject_05 = c05[k];
    }
    RankStabilityReport { games: rows, cells, independence_assumed: true }
}
