//! Additive paired-comparison strengths and the logistic win model.
//!
//! Margins follow `y = α_i − α_j + ε` with `Σ α = 0`. The normal equations have
//! the comparison-graph Laplacian as their matrix; its pseudo-inverse gives the
//! minimum-norm solution, which is the sum-to-zero one when the graph is connected.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bootstrap::{self, Scheme};
use crate::data::{Cluster, Observations};
use crate::linalg::{components, pinv_solve};
use crate::rank::kendall_tau;
use crate::StatsError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootMeta {
    pub b: usize,
    pub seed: u64,
    pub scheme: Scheme,
    /// Replicates whose resampled graph was not identifiable.
    pub dropped: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrengthFit {
    pub models: Vec<String>,
    /// Chips per game. Sums to 0.
    pub alpha: Vec<f64>,
    pub ci: Option<Vec<(f64, f64)>>,
    pub se: Option<Vec<f64>>,
    pub rows: usize,
    pub clusters: usize,
    pub constraint: String,
    pub bootstrap: Option<BootMeta>,
}

impl StrengthFit {
    pub fn alpha_of(&self, model: &str) -> Option<f64> {
        self.models.iter().position(|m| m == model).map(|i| self.alpha[i])
    }

    /// Model indices from strongest to weakest; ties keep name order.
    pub fn ranking(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.models.len()).collect();
        idx.sort_by(|a, b| self.alpha[*b].total_cmp(&self.alpha[*a]));
        idx
    }
}

/// Weighted least squares over `members`; other models get no entry.
/// `members` must be connected under the supplied clusters.
pub(crate) fn solve_members<'a>(
    n_models: usize,
    members: &[usize],
    clusters: impl Iterator<Item = (&'a Cluster, f64)>,
) -> Vec<f64> {
    let mut pos = vec![usize::MAX; n_models];
    for (k, &m) in members.iter().enumerate() {
        pos[m] = k;
    }
    let k = members.len();
    let mut l = DMatrix::<f64>::zeros(k, k);
    let mut b = DVector::<f64>::zeros(k);
    for (c, w) in clusters {
        let (i, j) = (pos[c.lo], pos[c.hi]);
        if w == 0.0 || i == usize::MAX || j == usize::MAX {
            continue;
        }
        let n = w * c.n;
        let s = w * c.sum;
        l[(i, i)] += n;
        l[(j, j)] += n;
        l[(i, j)] -= n;
        l[(j, i)] -= n;
        b[i] += s;
        b[j] -= s;
    }
    let mut a: Vec<f64> = pinv_solve(&l, &b).iter().cloned().collect();
    let mean = a.iter().sum::<f64>() / k.max(1) as f64;
    a.iter_mut().for_each(|x| *x -= mean);
    a
}

/// Overall α under cluster weights, or the components when not identifiable.
pub(crate) fn alpha_weighted(obs: &Observations, w: &[f64]) -> Result<Vec<f64>, Vec<Vec<usize>>> {
    let nodes: Vec<usize> = (0..obs.models.len()).collect();
    let comps = components(
        &nodes,
        obs.clusters.iter().zip(w).filter(|(_, w)| **w > 0.0).map(|(c, _)| (c.lo, c.hi)),
    );
    if comps.len() > 1 {
        return Err(comps);
    }
    Ok(solve_members(obs.models.len(), &nodes, obs.clusters.iter().zip(w.iter().cloned())))
}

fn named(obs: &Observations, comps: Vec<Vec<usize>>) -> StatsError {
    StatsError::Disconnected(comps.into_iter().map(|c| c.into_iter().map(|i| obs.models[i].clone()).collect()).collect())
}

pub fn fit_alpha(obs: &Observations) -> Result<StrengthFit, StatsError> {
    let alpha = alpha_weighted(obs, &obs.unit_weights()).map_err(|c| named(obs, c))?;
    Ok(StrengthFit {
        models: obs.models.clone(),
        alpha,
        ci: None,
        se: None,
        rows: obs.records.len(),
        clusters: obs.clusters.len(),
        constraint: "sum-to-zero".into(),
        bootstrap: None,
    })
}

/// Point fit plus paired-cluster percentile intervals at 95%.
pub fn fit_alpha_ci(obs: &Observations, b: usize, seed: u64) -> Result<StrengthFit, StatsError> {
    let mut fit = fit_alpha(obs)?;
    let reps = bootstrap::replicates(obs, Scheme::Global, b, "bootstrap-alpha", seed, |w| alpha_weighted(obs, w).ok());
    let ok: Vec<&Vec<f64>> = reps.iter().flatten().collect();
    let col = |m: usize| ok.iter().map(|r| r[m]).collect::<Vec<f64>>();
    fit.ci = Some(
        (0..fit.models.len())
            .map(|m| bootstrap::percentile_ci(&col(m), 0.95).unwrap_or((f64::NAN, f64::NAN)))
            .collect(),
    );
    fit.se = Some((0..fit.models.len()).map(|m| bootstrap::std_error(&col(m))).collect());
    fit.bootstrap = Some(BootMeta { b, seed, scheme: Scheme::Global, dropped: reps.len() - ok.len() });
    Ok(fit)
}

pub fn refit_subset(
    obs: &Observations,
    keep_game: impl Fn(u64) -> bool,
    keep_model: impl Fn(&str) -> bool,
) -> Result<StrengthFit, StatsError> {
    fit_alpha(&obs.subset(keep_game, keep_model)?)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LeaveOneOut {
    pub dropped_game: u64,
    pub fit: Option<StrengthFit>,
    pub error: Option<String>,
    /// Kendall τ against the full fit over shared models.
    pub tau: Option<f64>,
}

pub fn leave_one_game_out(obs: &Observations) -> Result<Vec<LeaveOneOut>, StatsError> {
    let full = fit_alpha(obs)?;
    Ok(obs
        .games
        .par_iter()
        .map(|&g| match refit_subset(obs, |x| x != g, |_| true) {
            Ok(fit) => {
                let shared: Vec<(f64, f64)> = fit
                    .models
                    .iter()
                    .zip(&fit.alpha)
                    .filter_map(|(m, a)| full.alpha_of(m).map(|f| (f, *a)))
                    .collect();
                let (x, y): (Vec<f64>, Vec<f64>) = shared.into_iter().unzip();
                LeaveOneOut { dropped_game: g, tau: kendall_tau(&x, &y), fit: Some(fit), error: None }
            }
            Err(e) => LeaveOneOut { dropped_game: g, fit: None, error: Some(e.to_string()), tau: None },
        })
        .collect())
}

/// Per-game α matrix, `[model][game]`; `None` marks cells without identifying data.
pub type CellMatrix = Vec<Vec<Option<f64>>>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerGameAlpha {
    pub models: Vec<String>,
    pub games: Vec<u64>,
    pub alpha: CellMatrix,
    pub se: Option<CellMatrix>,
}

impl PerGameAlpha {
    pub fn masked_cells(&self) -> usize {
        self.alpha.iter().flatten().filter(|c| c.is_none()).count()
    }

    pub fn column(&self, g: usize) -> Vec<Option<f64>> {
        self.alpha.iter().map(|row| row[g]).collect()
    }
}

/// Within each game, models outside the largest connected component are masked.
/// Size ties go to the component holding the lowest model index.
pub(crate) fn per_game_weighted(obs: &Observations, w: &[f64]) -> CellMatrix {
    let mut out = vec![vec![None; obs.games.len()]; obs.models.len()];
    for (g, set) in obs.by_game.iter().enumerate() {
        let live: Vec<usize> = set.iter().cloned().filter(|&c| w[c] > 0.0).collect();
        let nodes: Vec<usize> = live.iter().flat_map(|&c| [obs.clusters[c].lo, obs.clusters[c].hi]).collect();
        let comps = components(&nodes, live.iter().map(|&c| (obs.clusters[c].lo, obs.clusters[c].hi)));
        let mut best: Option<&Vec<usize>> = None;
        for c in &comps {
            if best.is_none_or(|b| c.len() > b.len()) {
                best = Some(c);
            }
        }
        let Some(members) = best else { continue };
        let a = solve_members(obs.models.len(), members, live.iter().map(|&c| (&obs.clusters[c], w[c])));
        for (k, &m) in members.iter().enumerate() {
            out[m][g] = Some(a[k]);
        }
    }
    out
}

pub fn fit_alpha_per_game(obs: &Observations) -> PerGameAlpha {
    PerGameAlpha {
        models: obs.models.clone(),
        games: obs.games.clone(),
        alpha: per_game_weighted(obs, &obs.unit_weights()),
        se: None,
    }
}

/// Game-stratified replicates shared by every per-game analysis.
#[derive(Clone, Debug)]
pub struct GameBootstrap {
    pub b: usize,
    pub seed: u64,
    pub per_game: Vec<CellMatrix>,
    pub overall: Vec<Option<Vec<f64>>>,
    /// Per-replicate σ_g.
    pub sigma: Vec<Vec<f64>>,
}

pub fn game_bootstrap(obs: &Observations, b: usize, seed: u64) -> GameBootstrap {
    let reps = bootstrap::replicates(obs, Scheme::ByGame, b, "bootstrap-game", seed, |w| {
        let sigma = (0..obs.games.len()).map(|g| obs.sigma_game(g, w)).collect::<Vec<_>>();
        (per_game_weighted(obs, w), alpha_weighted(obs, w).ok(), sigma)
    });
    let mut out = GameBootstrap { b, seed, per_game: Vec::new(), overall: Vec::new(), sigma: Vec::new() };
    for (p, o, s) in reps {
        out.per_game.push(p);
        out.overall.push(o);
        out.sigma.push(s);
    }
    out
}

impl GameBootstrap {
    pub fn cell(&self, m: usize, g: usize) -> Vec<f64> {
        self.per_game.iter().filter_map(|r| r[m][g]).collect()
    }

    /// Replicate values of `α_{i,g} − α_{j,g}` where both cells are identified.
    pub fn cell_diff(&self, i: usize, j: usize, g: usize) -> Vec<f64> {
        self.per_game.iter().filter_map(|r| Some(r[i][g]? - r[j][g]?)).collect()
    }

    pub fn attach_se(&self, pg: &mut PerGameAlpha) {
        let se = (0..pg.models.len())
            .map(|m| {
                (0..pg.games.len())
                    .map(|g| pg.alpha[m][g].map(|_| bootstrap::std_error(&self.cell(m, g))))
                    .collect()
            })
            .collect();
        pg.se = Some(se);
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BtFit {
    pub models: Vec<String>,
    /// Log-odds scale, sum to 0.
    pub scores: Vec<f64>,
    pub decisive: usize,
    /// Rows with margin exactly 0, left out of the likelihood.
    pub ties_excluded: usize,
    /// Some model set never lost (or never won) against the rest; the MLE
    /// does not exist and the scores carry a ridge penalty.
    pub separated: bool,
    pub ridge: f64,
    pub iterations: usize,
}

pub const BT_RIDGE: f64 = 0.01;
const BT_MAX_ITER: usize = 500;

fn strongly_connected(n: usize, wins: &[Vec<f64>]) -> bool {
    let reach = |forward: bool| {
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for j in 0..n {
                let e = if forward { wins[i][j] } else { wins[j][i] };
                if e > 0.0 && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen.iter().all(|s| *s)
    };
    n == 0 || (reach(true) && reach(false))
}

/// Logistic paired-comparison MLE, `P(i beats j) = σ(s_i − s_j)`, by Newton steps.
pub fn bradley_terry(obs: &Observations) -> Result<BtFit, StatsError> {
    let n = obs.models.len();
    let mut wins = vec![vec![0.0; n]; n];
    let mut ties = 0;
    let mut decisive = 0;
    for r in &obs.records {
        let (a, b) = (obs.model_index(&r.alice).unwrap(), obs.model_index(&r.bob).unwrap());
        if r.margin > 0.0 {
            wins[a][b] += 1.0;
        } else if r.margin < 0.0 {
            wins[b][a] += 1.0;
        } else {
            ties += 1;
            continue;
        }
        decisive += 1;
    }
    let nodes: Vec<usize> = (0..n).collect();
    let edges = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).filter(|&(i, j)| wins[i][j] > 0.0);
    let comps = components(&nodes, edges);
    if comps.len() > 1 {
        return Err(named(obs, comps));
    }
    let separated = !strongly_connected(n, &wins);
    let ridge = if separated { BT_RIDGE } else { 0.0 };
    let mut s = DVector::<f64>::zeros(n);
    let mut iterations = 0;
    for it in 1..=BT_MAX_ITER {
        iterations = it;
        let mut g = DVector::<f64>::zeros(n);
        let mut h = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for j in (i + 1)..n {
                let nij = wins[i][j] + wins[j][i];
                if nij == 0.0 {
                    continue;
                }
                let p = 1.0 / (1.0 + (-(s[i] - s[j])).exp());
                let d = wins[i][j] - nij * p;
                g[i] += d;
                g[j] -= d;
                let v = nij * p * (1.0 - p);
                h[(i, i)] += v;
                h[(j, j)] += v;
                h[(i, j)] -= v;
                h[(j, i)] -= v;
            }
        }
        for i in 0..n {
            g[i] -= ridge * s[i];
            h[(i, i)] += ridge;
        }
        let step = pinv_solve(&h, &g);
        s += &step;
        let mean = s.mean();
        s.add_scalar_mut(-mean);
        if step.amax() < 1e-13 {
            break;
        }
    }
    Ok(BtFit {
        models: obs.models.clone(),
        scores: s.iter().cloned().collect(),
        decisive,
        ties_excluded: ties,
        separated,
        ridge,
        iterations,
    })
}

/// Model pairs ordered one way by BT scores and the other by α.
pub fn discordant_pairs(bt: &BtFit, fit: &StrengthFit) -> Vec<(String, String)> {
    let mut out = Vec::new();
    for i in 0..bt.models.len() {
        for j in (i + 1)..bt.models.len() {
            let (Some(ai), Some(aj)) = (fit.alpha_of(&bt.models[i]), fit.alpha_of(&bt.models[j])) else { continue };
            if (bt.scores[i] - bt.scores[j]) * (ai - aj) < 0.0 {
                out.push((bt.models[i].clone(), bt.models[j].clone()));
            }
        }
    }
    out
}
