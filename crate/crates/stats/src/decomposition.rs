//! Model main effect versus model×game interaction in per-game strengths.

use serde::{Deserialize, Serialize};

use crate::bootstrap::{self, Scheme, B_DECOMPOSITION};
use crate::data::Observations;
use crate::fit::{fit_alpha_per_game, per_game_weighted, CellMatrix};
use crate::StatsError;

/// Tolerance on per-game column means, which the sum-to-zero fit forces to 0.
pub const GAME_EFFECT_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Components {
    pub sigma2_m: f64,
    pub sigma2_mg: f64,
    /// `σ²_MG / σ²_M`; infinite when the main effect vanishes.
    pub ratio: f64,
    pub cells: usize,
}

/// Over identified cells only: `ᾱ_m·` and `ᾱ` are means of present cells,
/// the game effect `ᾱ_·g` is 0 by construction.
pub fn variance_components(alpha: &CellMatrix) -> Result<Components, StatsError> {
    let n_games = alpha.first().map_or(0, |r| r.len());
    for g in 0..n_games {
        let col: Vec<f64> = alpha.iter().filter_map(|r| r[g]).collect();
        let s: f64 = col.iter().sum();
        if s.abs() > GAME_EFFECT_TOL * col.len().max(1) as f64 {
            return Err(StatsError::Invalid(format!("game {g} column sums to {s}, not 0")));
        }
    }
    let rows: Vec<(f64, Vec<(usize, f64)>)> = alpha
        .iter()
        .filter_map(|r| {
            let cells: Vec<(usize, f64)> = r.iter().enumerate().filter_map(|(g, a)| a.map(|a| (g, a))).collect();
            (!cells.is_empty()).then(|| (cells.iter().map(|c| c.1).sum::<f64>() / cells.len() as f64, cells))
        })
        .collect();
    let cells: usize = rows.iter().map(|r| r.1.len()).sum();
    if cells == 0 {
        return Err(StatsError::Empty);
    }
    let grand = rows.iter().flat_map(|r| r.1.iter().map(|c| c.1)).sum::<f64>() / cells as f64;
    let sigma2_m = rows.iter().map(|r| (r.0 - grand).powi(2)).sum::<f64>() / rows.len() as f64;
    let sigma2_mg =
        rows.iter().flat_map(|(m, cs)| cs.iter().map(move |(_, a)| (a - m + grand).powi(2))).sum::<f64>() / cells as f64;
    let ratio = if sigma2_m > 0.0 { sigma2_mg / sigma2_m } else { f64::INFINITY };
    Ok(Components { sigma2_m, sigma2_mg, ratio, cells })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub point: Components,
    pub ci_sigma2_m: Option<(f64, f64)>,
    pub ci_sigma2_mg: Option<(f64, f64)>,
    pub ci_ratio: Option<(f64, f64)>,
    pub b: usize,
    pub seed: u64,
}

/// Edge-level bootstrap: each (game, pair) edge keeps its original cluster
/// count, so every cell keeps its size. One replicate yields one joint
/// `(σ²_M, σ²_MG, ratio)` triple.
pub fn variance_decomposition(obs: &Observations, b: usize, seed: u64) -> Result<Decomposition, StatsError> {
    let point = variance_components(&fit_alpha_per_game(obs).alpha)?;
    let reps = bootstrap::replicates(obs, Scheme::ByEdge, b, "bootstrap-cell", seed, |w| {
        variance_components(&per_game_weighted(obs, w)).ok()
    });
    let ok: Vec<Components> = reps.into_iter().flatten().collect();
    let col = |f: fn(&Components) -> f64| ok.iter().map(f).collect::<Vec<f64>>();
    Ok(Decomposition {
        point,
        ci_sigma2_m: bootstrap::reflected_ci(point.sigma2_m, &col(|c| c.sigma2_m), 0.95),
        ci_sigma2_mg: bootstrap::reflected_ci(point.sigma2_mg, &col(|c| c.sigma2_mg), 0.95),
        ci_ratio: bootstrap::reflected_ci(point.ratio, &col(|c| c.ratio), 0.95),
        b,
        seed,
    })
}

pub fn default_decomposition(obs: &Observations, seed: u64) -> Result<Decomposition, StatsError> {
    variance_decomposition(obs, B_DECOMPOSITION, seed)
}
