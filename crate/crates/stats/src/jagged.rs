//! Local dispersion of stakes-normalised per-game strength over axis-space neighbourhoods.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::bootstrap;
use crate::data::Observations;
use crate::fit::{fit_alpha, fit_alpha_per_game, CellMatrix, GameBootstrap};
use crate::profile::AXES;
use crate::rank::kendall_tau;
use crate::StatsError;

pub const DEFAULT_K: usize = 3;

/// Each game followed by its `k` nearest others (Euclidean, min-max scaled
/// over the given points). Distance ties go to the lower index.
pub fn neighbourhoods(points: &[[f64; AXES]], k: usize) -> Vec<Vec<usize>> {
    let mut lo = [f64::INFINITY; AXES];
    let mut hi = [f64::NEG_INFINITY; AXES];
    for p in points {
        for a in 0..AXES {
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
    }
    let unit: Vec<[f64; AXES]> = points
        .iter()
        .map(|p| std::array::from_fn(|a| if hi[a] > lo[a] { (p[a] - lo[a]) / (hi[a] - lo[a]) } else { 0.0 }))
        .collect();
    let d = |i: usize, j: usize| unit[i].iter().zip(&unit[j]).map(|(x, y)| (x - y).powi(2)).sum::<f64>();
    (0..points.len())
        .map(|g| {
            let mut others: Vec<usize> = (0..points.len()).filter(|&h| h != g).collect();
            others.sort_by(|&a, &b| d(g, a).total_cmp(&d(g, b)).then(a.cmp(&b)));
            std::iter::once(g).chain(others.into_iter().take(k)).collect()
        })
        .collect()
}

fn pop_std(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n).sqrt()
}

/// `J_m` = mean over games with an identified `z_{m,g}` of the population std
/// of `z_m` over that game's neighbourhood. `None` for a model with no cells.
pub fn jaggedness_from_z(z: &CellMatrix, nbrs: &[Vec<usize>]) -> Vec<Option<f64>> {
    z.iter()
        .map(|row| {
            let local: Vec<f64> = nbrs
                .iter()
                .enumerate()
                .filter(|(g, _)| row[*g].is_some())
                .map(|(_, n)| pop_std(&n.iter().filter_map(|&h| row[h]).collect::<Vec<_>>()))
                .collect();
            (!local.is_empty()).then(|| local.iter().sum::<f64>() / local.len() as f64)
        })
        .collect()
}

/// `(α_{m,g} − α_m) / σ_g`; games with `σ_g = 0` give no cells.
pub fn studentize(per_game: &CellMatrix, overall: &[f64], sigma: &[f64]) -> CellMatrix {
    per_game
        .iter()
        .zip(overall)
        .map(|(row, a)| {
            row.iter().zip(sigma).map(|(c, s)| if *s > 0.0 { c.map(|x| (x - a) / s) } else { None }).collect()
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JaggednessReport {
    pub models: Vec<String>,
    pub k: usize,
    /// Games with `σ_g > 0`; all per-game vectors below follow this order.
    pub games: Vec<u64>,
    /// Games dropped for a zero stakes scale.
    pub excluded: Vec<u64>,
    pub sigma: Vec<f64>,
    pub z: CellMatrix,
    pub neighbours: Vec<Vec<usize>>,
    pub j: Vec<Option<f64>>,
    /// Reflected percentile interval.
    pub ci: Vec<Option<(f64, f64)>>,
    pub b: usize,
    pub seed: u64,
}

fn restrict(m: &CellMatrix, keep: &[usize]) -> CellMatrix {
    m.iter().map(|r| keep.iter().map(|&g| r[g]).collect()).collect()
}

pub fn jaggedness(
    obs: &Observations,
    table: &[(u64, [f64; AXES])],
    boot: &GameBootstrap,
    k: usize,
) -> Result<JaggednessReport, StatsError> {
    let lookup: BTreeMap<u64, [f64; AXES]> = table.iter().cloned().collect();
    let unit = obs.unit_weights();
    let sigma_all: Vec<f64> = (0..obs.games.len()).map(|g| obs.sigma_game(g, &unit)).collect();
    let keep: Vec<usize> = (0..obs.games.len()).filter(|&g| sigma_all[g] > 0.0).collect();
    if keep.len() < k + 1 {
        return Err(StatsError::TooFewGames { need: k + 1, got: keep.len() });
    }
    let points: Vec<[f64; AXES]> = keep
        .iter()
        .map(|&g| lookup.get(&obs.games[g]).cloned().ok_or(StatsError::MissingAxes(obs.games[g])))
        .collect::<Result<_, _>>()?;
    let nbrs = neighbourhoods(&points, k);
    let overall = fit_alpha(obs)?;
    let sigma: Vec<f64> = keep.iter().map(|&g| sigma_all[g]).collect();
    let z = studentize(&restrict(&fit_alpha_per_game(obs).alpha, &keep), &overall.alpha, &sigma);
    let j = jaggedness_from_z(&z, &nbrs);

    let reps: Vec<Vec<Option<f64>>> = boot
        .per_game
        .iter()
        .zip(&boot.overall)
        .zip(&boot.sigma)
        .filter_map(|((pg, o), s)| {
            let o = o.as_ref()?;
            let s: Vec<f64> = keep.iter().map(|&g| s[g]).collect();
            Some(jaggedness_from_z(&studentize(&restrict(pg, &keep), o, &s), &nbrs))
        })
        .collect();
    let ci = (0..obs.models.len())
        .map(|m| {
            let draws: Vec<f64> = reps.iter().filter_map(|r| r[m]).collect();
            j[m].and_then(|t| bootstrap::reflected_ci(t, &draws, 0.95))
        })
        .collect();
    Ok(JaggednessReport {
        models: obs.models.clone(),
        k,
        games: keep.iter().map(|&g| obs.games[g]).collect(),
        excluded: (0..obs.games.len()).filter(|g| !keep.contains(g)).map(|g| obs.games[g]).collect(),
        sigma,
        z,
        neighbours: nbrs,
        j,
        ci,
        b: boot.b,
        seed: boot.seed,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KSweepRow {
    pub k: usize,
    pub j: Vec<Option<f64>>,
    /// Kendall τ of this row's ordering against the first row's, over models defined in both.
    pub tau_vs_first: Option<f64>,
}

/// Point estimates for several `k`, holding the studentised surface fixed.
pub fn k_sweep(report: &JaggednessReport, table: &[(u64, [f64; AXES])], ks: &[usize]) -> Vec<KSweepRow> {
    let lookup: BTreeMap<u64, [f64; AXES]> = table.iter().cloned().collect();
    let points: Vec<[f64; AXES]> = report.games.iter().map(|g| lookup[g]).collect();
    let rows: Vec<Vec<Option<f64>>> = ks
        .iter()
        .map(|&k| jaggedness_from_z(&report.z, &neighbourhoods(&points, k.min(points.len().saturating_sub(1)))))
        .collect();
    ks.iter()
        .zip(&rows)
        .map(|(&k, j)| {
            let (a, b): (Vec<f64>, Vec<f64>) =
                rows[0].iter().zip(j).filter_map(|(x, y)| Some(((*x)?, (*y)?))).unzip();
            KSweepRow { k, j: j.clone(), tau_vs_first: kendall_tau(&a, &b) }
        })
        .collect()
}
