//! Capability profiles: per-model regressions of per-game strength on z-scored axes.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::bootstrap::{self, quantile_sorted};
use crate::data::Observations;
use crate::diagnostics::{design_full_rank, vif};
use crate::fit::{fit_alpha_per_game, CellMatrix, GameBootstrap};
use crate::linalg::ols;
use crate::multiple::bh_fdr;
use crate::StatsError;

pub const AXES: usize = 6;
pub const AXIS_NAMES: [&str; AXES] =
    ["state_space", "temporal_depth", "info_sensitivity", "opponent_modeling", "risk", "brittleness"];
pub const CONTROL_NAME: &str = "log10_rulebook_chars";

/// Axis z-scores over the benchmark games, population denominator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZScores {
    pub games: Vec<u64>,
    pub mean: [f64; AXES],
    pub std: [f64; AXES],
    pub z: Vec<[f64; AXES]>,
}

impl ZScores {
    pub fn column(&self, a: usize) -> Vec<f64> {
        self.z.iter().map(|r| r[a]).collect()
    }

    /// A constant axis keeps `std = 0` and z-scores of 0.
    pub fn apply(&self, x: &[f64; AXES]) -> [f64; AXES] {
        let mut out = [0.0; AXES];
        for a in 0..AXES {
            if self.std[a] > 0.0 {
                out[a] = (x[a] - self.mean[a]) / self.std[a];
            }
        }
        out
    }
}

/// Rows for `games` looked up in `table`, in `games` order.
pub fn zscore(table: &[(u64, [f64; AXES])], games: &[u64]) -> Result<ZScores, StatsError> {
    let lookup: BTreeMap<u64, [f64; AXES]> = table.iter().cloned().collect();
    let raw: Vec<[f64; AXES]> =
        games.iter().map(|g| lookup.get(g).cloned().ok_or(StatsError::MissingAxes(*g))).collect::<Result<_, _>>()?;
    if raw.is_empty() {
        return Err(StatsError::Empty);
    }
    let n = raw.len() as f64;
    let mut mean = [0.0; AXES];
    let mut std = [0.0; AXES];
    for a in 0..AXES {
        mean[a] = raw.iter().map(|r| r[a]).sum::<f64>() / n;
        std[a] = (raw.iter().map(|r| (r[a] - mean[a]).powi(2)).sum::<f64>() / n).sqrt();
    }
    let mut zs = ZScores { games: games.to_vec(), mean, std, z: Vec::new() };
    zs.z = raw.iter().map(|r| zs.apply(r)).collect();
    Ok(zs)
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct ProfileOptions {
    pub b: usize,
    pub seed: u64,
    pub q: f64,
    /// Rulebook character counts per game; when set, `log10` of the count
    /// enters every regression as an extra control.
    pub rulebook_chars: Option<BTreeMap<u64, usize>>,
}

impl ProfileOptions {
    pub fn new(b: usize, seed: u64) -> Self {
        ProfileOptions { b, seed, q: 0.05, rulebook_chars: None }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProfileFit {
    pub models: Vec<String>,
    /// `intercept`, the six axes, then the optional control.
    pub regressors: Vec<String>,
    /// `[model][regressor]`.
    pub coef: Vec<Vec<f64>>,
    pub ci: Vec<Vec<Option<(f64, f64)>>>,
    pub p: Vec<Vec<f64>>,
    /// BH flags over the `models × 6` slope family, `[model][axis]`.
    pub reject: Vec<Vec<bool>>,
    pub q: f64,
    pub b: usize,
    pub seed: u64,
    pub zscores: ZScores,
    /// Median control value, used when evaluating predictions.
    pub control_median: Option<f64>,
    /// `[replicate][model][regressor]`; NaN where a model had no identified cells.
    #[serde(skip)]
    pub replicates: Vec<Vec<Vec<f64>>>,
}

impl ProfileFit {
    pub fn slope(&self, m: usize, a: usize) -> f64 {
        self.coef[m][a + 1]
    }

    pub fn slopes(&self) -> Vec<[f64; AXES]> {
        self.coef.iter().map(|c| std::array::from_fn(|a| c[a + 1])).collect()
    }

    pub fn rejections(&self) -> usize {
        self.reject.iter().flatten().filter(|r| **r).count()
    }
}

fn design(zs: &ZScores, control: Option<&[f64]>) -> Vec<Vec<f64>> {
    let mut rows: Vec<Vec<f64>> = zs.z.iter().map(|z| std::iter::once(1.0).chain(z.iter().cloned()).collect()).collect();
    if let Some(c) = control {
        rows.iter_mut().zip(c).for_each(|(r, v)| r.push(*v));
    }
    rows
}

fn fit_rows(x: &[Vec<f64>], alpha: &CellMatrix) -> Vec<Vec<f64>> {
    let p = x[0].len();
    alpha
        .iter()
        .map(|row| {
            let keep: Vec<usize> = (0..row.len()).filter(|&g| row[g].is_some()).collect();
            if keep.is_empty() {
                return vec![f64::NAN; p];
            }
            let xm = DMatrix::from_fn(keep.len(), p, |i, j| x[keep[i]][j]);
            let y = DVector::from_iterator(keep.len(), keep.iter().map(|&g| row[g].unwrap()));
            ols(&xm, &y).iter().cloned().collect()
        })
        .collect()
}

fn vif_report(cols: &[Vec<f64>], names: &[String]) -> String {
    names.iter().zip(vif(cols)).map(|(n, v)| format!("{n}={v}")).collect::<Vec<_>>().join(", ")
}

/// Fits every model on the same z-scored design; `boot` supplies the
/// game-stratified replicates for intervals and p-values.
pub fn capability_profile(
    obs: &Observations,
    table: &[(u64, [f64; AXES])],
    boot: &GameBootstrap,
    opts: &ProfileOptions,
) -> Result<ProfileFit, StatsError> {
    let zs = zscore(table, &obs.games)?;
    let control: Option<Vec<f64>> = match &opts.rulebook_chars {
        Some(chars) => Some(
            obs.games
                .iter()
                .map(|g| {
                    chars
                        .get(g)
                        .map(|c| (*c.max(&1) as f64).log10())
                        .ok_or_else(|| StatsError::Invalid(format!("no rulebook length for game {g}")))
                })
                .collect::<Result<_, _>>()?,
        ),
        None => None,
    };
    let mut regressors: Vec<String> = std::iter::once("intercept".to_string())
        .chain(AXIS_NAMES.iter().map(|s| s.to_string()))
        .collect();
    let mut cols: Vec<Vec<f64>> = (0..AXES).map(|a| zs.column(a)).collect();
    if let Some(c) = &control {
        regressors.push(CONTROL_NAME.into());
        cols.push(c.clone());
    }
    if !design_full_rank(&cols) {
        return Err(StatsError::RankDeficient(vif_report(&cols, &regressors[1..])));
    }
    let x = design(&zs, control.as_deref());
    let pg = fit_alpha_per_game(obs);
    for (m, row) in pg.alpha.iter().enumerate() {
        let present: Vec<Vec<f64>> = cols.iter().map(|c| c.iter().zip(row).filter(|(_, a)| a.is_some()).map(|(v, _)| *v).collect()).collect();
        if !design_full_rank(&present) {
            return Err(StatsError::RankDeficient(format!(
                "{} over its identified games: {}",
                obs.models[m],
                vif_report(&present, &regressors[1..])
            )));
        }
    }
    let coef = fit_rows(&x, &pg.alpha);
    let replicates: Vec<Vec<Vec<f64>>> = boot.per_game.iter().map(|a| fit_rows(&x, a)).collect();

    let n_models = obs.models.len();
    let n_reg = regressors.len();
    let draws = |m: usize, k: usize| replicates.iter().map(|r| r[m][k]).collect::<Vec<f64>>();
    let ci = (0..n_models).map(|m| (0..n_reg).map(|k| bootstrap::percentile_ci(&draws(m, k), 0.95)).collect()).collect();
    let p: Vec<Vec<f64>> =
        (0..n_models).map(|m| (0..n_reg).map(|k| bootstrap::two_sided_p(&draws(m, k))).collect()).collect();
    let family: Vec<f64> = p.iter().flat_map(|row| row[1..=AXES].iter().cloned()).collect();
    let flags = bh_fdr(&family, opts.q);
    let reject = flags.chunks(AXES).map(|c| c.to_vec()).collect();
    let control_median = control.map(|mut c| {
        c.sort_by(f64::total_cmp);
        quantile_sorted(&c, 0.5)
    });
    Ok(ProfileFit {
        models: obs.models.clone(),
        regressors,
        coef,
        ci,
        p,
        reject,
        q: opts.q,
        b: boot.b,
        seed: boot.seed,
        zscores: zs,
        control_median,
        replicates,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtremePrediction {
    pub model: String,
    pub axis: String,
    pub z_max: f64,
    pub value: f64,
    pub ci: Option<(f64, f64)>,
}

/// Evaluates each model's linear predictor with one axis at its maximum z and
/// the others, and the control if any, at their medians.
pub fn predicted_alpha_at_extremes(fit: &ProfileFit) -> Vec<ExtremePrediction> {
    let median: [f64; AXES] = std::array::from_fn(|a| {
        let mut c = fit.zscores.column(a);
        c.sort_by(f64::total_cmp);
        quantile_sorted(&c, 0.5)
    });
    let mut out = Vec::new();
    for (m, model) in fit.models.iter().enumerate() {
        for a in 0..AXES {
            let z_max = fit.zscores.column(a).into_iter().fold(f64::NEG_INFINITY, f64::max);
            let mut x: Vec<f64> = std::iter::once(1.0).chain(median.iter().cloned()).collect();
            x[a + 1] = z_max;
            if let Some(c) = fit.control_median {
                x.push(c);
            }
            let eval = |beta: &[f64]| beta.iter().zip(&x).map(|(b, v)| b * v).sum::<f64>();
            let reps: Vec<f64> = fit.replicates.iter().map(|r| eval(&r[m])).collect();
            out.push(ExtremePrediction {
                model: model.clone(),
                axis: AXIS_NAMES[a].into(),
                z_max,
                value: eval(&fit.coef[m]),
                ci: bootstrap::percentile_ci(&reps, 0.95),
            });
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Composite {
    /// Unit-norm PC1 of the centred model×axis slope matrix, entries summing positive.
    pub weights: [f64; AXES],
    pub explained: f64,
    /// `(game, score)` in z-table order.
    pub scores: Vec<(u64, f64)>,
    /// 0 = low, 1 = mid, 2 = high, aligned with `scores`.
    pub tertile: Vec<u8>,
    pub sizes: [usize; 3],
}

/// Low tertile gets `⌊n/3⌋`; the remainder goes to the high tertile first,
/// so 50 games split 16/17/17.
pub fn tertile_sizes(n: usize) -> [usize; 3] {
    let base = n / 3;
    let r = n % 3;
    [base, base + usize::from(r >= 2), base + usize::from(r >= 1)]
}

pub fn composite_complexity(slopes: &[[f64; AXES]], zs: &ZScores) -> Composite {
    let m = slopes.len();
    let mut mat = DMatrix::from_fn(m, AXES, |i, a| slopes[i][a]);
    for a in 0..AXES {
        let mean = mat.column(a).mean();
        mat.column_mut(a).add_scalar_mut(-mean);
    }
    let svd = mat.svd(false, true);
    let vt = svd.v_t.expect("requested");
    let sv = &svd.singular_values;
    let top = sv.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map_or(0, |(i, _)| i);
    let mut w: [f64; AXES] = std::array::from_fn(|a| vt[(top, a)]);
    if w.iter().sum::<f64>() < 0.0 {
        w.iter_mut().for_each(|x| *x = -*x);
    }
    let total: f64 = sv.iter().map(|s| s * s).sum();
    let explained = if total > 0.0 { sv[top].powi(2) / total } else { 0.0 };
    let scores: Vec<(u64, f64)> =
        zs.games.iter().zip(&zs.z).map(|(g, z)| (*g, z.iter().zip(&w).map(|(a, b)| a * b).sum())).collect();
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&i, &j| scores[i].1.total_cmp(&scores[j].1).then(scores[i].0.cmp(&scores[j].0)));
    let sizes = tertile_sizes(scores.len());
    let mut tertile = vec![0u8; scores.len()];
    for (rank, &i) in order.iter().enumerate() {
        tertile[i] = if rank < sizes[0] {
            0
        } else if rank < sizes[0] + sizes[1] {
            1
        } else {
            2
        };
    }
    Composite { weights: w, explained, scores, tertile, sizes }
}
