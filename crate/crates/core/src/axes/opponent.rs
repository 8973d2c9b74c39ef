//! Axes that need fresh play: opponent modelling over Sobol opponents and L1 brittleness.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock};

use rand::Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use sobol::params::JoeKuoD6;
use sobol::Sobol;

use super::log::{argmax_label, EpisodeLog};
use super::{AxisError, TierBudget};
use crate::engine::{DecisionType, GameSpec, GameState, Menu, Seat};
use crate::policy::{play_episode, DtPolicy, Policy, Uniform};
use crate::seeding;

/// Modal share below this over the global pass marks a decision type for refinement.
pub const UNSTABLE_SHARE: f64 = 0.9;
pub const REFINE_RADIUS: f64 = 0.1;
pub const PERTURB_MASS: f64 = 0.03;
pub const BRITTLENESS_FLOOR: f64 = 1e-6;

fn params() -> &'static JoeKuoD6 {
    static P: OnceLock<JoeKuoD6> = OnceLock::new();
    P.get_or_init(JoeKuoD6::standard)
}

/// The first `n` unit-cube Sobol points after `skip` points, never including the origin.
pub fn sobol_points(n: usize, dim: usize, skip: usize) -> Result<Vec<Vec<f64>>, AxisError> {
    let max = params().max_dims;
    if dim == 0 || dim > max {
        return Err(AxisError::SobolDims { dims: dim, max });
    }
    Ok(Sobol::<f64>::new(dim, params()).skip(1 + skip).take(n).collect())
}

/// Exponential spacings: `-ln(1-u)` per coordinate, normalised within each block.
pub fn to_blocks(u: &[f64], sizes: &[usize]) -> Vec<f64> {
    let mut out = Vec::with_capacity(u.len());
    let mut at = 0;
    for &m in sizes {
        let x: Vec<f64> = u[at..at + m].iter().map(|v| -(1.0 - v).ln()).collect();
        let s: f64 = x.iter().sum();
        if s > 0.0 {
            out.extend(x.iter().map(|v| v / s));
        } else {
            out.extend(std::iter::repeat_n(1.0 / m as f64, m));
        }
        at += m;
    }
    out
}

/// Points the refinement pass concentrates around.
#[derive(Clone, Debug, Default)]
pub struct RefineHint {
    /// Size of the leading global pass.
    pub global: usize,
    pub centers: Vec<Vec<f64>>,
    pub radius: f64,
}

/// `n` points on a product of simplices. After `hint.global` points, the remaining ones
/// continue the sequence and are pulled toward the hint centres in turn.
pub fn sobol_blocks(n: usize, sizes: &[usize], hint: Option<&RefineHint>) -> Result<Vec<Vec<f64>>, AxisError> {
    let dim: usize = sizes.iter().sum();
    let raw = sobol_points(n, dim, 0)?;
    Ok(raw
        .iter()
        .enumerate()
        .map(|(i, u)| {
            let p = to_blocks(u, sizes);
            match hint {
                Some(h) if i >= h.global && !h.centers.is_empty() => {
                    let c = &h.centers[(i - h.global) % h.centers.len()];
                    c.iter().zip(&p).map(|(c, p)| (1.0 - h.radius) * c + h.radius * p).collect()
                }
                _ => p,
            }
        })
        .collect())
}

pub fn sobol_simplex(n: usize, dim: usize, hint: Option<&RefineHint>) -> Result<Vec<Vec<f64>>, AxisError> {
    sobol_blocks(n, &[dim], hint)
}

/// Opponent decision types and their label order, as seen in the log.
fn seat_blocks(log: &EpisodeLog, seat: Seat) -> Vec<(u32, Vec<u32>)> {
    (0..log.dts.len() as u32).filter(|d| log.dts[*d as usize].0 == seat).map(|d| (d, log.dt_labels(d))).collect()
}

fn dt_policy(log: &EpisodeLog, blocks: &[(u32, Vec<u32>)], flat: &[f64]) -> DtPolicy {
    let mut weights = HashMap::new();
    let mut at = 0;
    for (d, labels) in blocks {
        let w = labels.iter().enumerate().map(|(i, l)| (log.label(*l).to_string(), flat[at + i])).collect();
        weights.insert(log.dts[*d as usize].1.clone(), w);
        at += labels.len();
    }
    DtPolicy { weights }
}

fn seat_pair<'a>(focal: Seat, f: &'a dyn Policy, o: &'a dyn Policy) -> [&'a dyn Policy; 2] {
    match focal {
        Seat::Alice => [f, o],
        Seat::Bob => [o, f],
    }
}

type DtStats = HashMap<u32, HashMap<u32, (u64, f64)>>;

/// Focal payoff and per-dt action statistics over `playouts` episodes.
fn playout_stats(
    spec: &Arc<GameSpec>,
    log: &EpisodeLog,
    focal: Seat,
    opponent: &dyn Policy,
    seed: u64,
    playouts: usize,
) -> Result<DtStats, AxisError> {
    let mut stats: DtStats = HashMap::new();
    for k in 0..playouts as u64 {
        // Shared across opponents so their comparison uses common random numbers.
        let parts = [seed, focal.index() as u64, k];
        let mut rngs = [seeding::rng("opp-rng-a", &parts), seeding::rng("opp-rng-b", &parts)];
        let played = play_episode(
            spec,
            seeding::derive("opp-chance", &parts),
            seat_pair(focal, &Uniform, opponent),
            &mut rngs,
            [false, false],
        )?;
        let u = played.payoff[focal.index()] as f64;
        for d in played.decisions.iter().filter(|d| d.seat == focal) {
            let (Some(dt), Some(l)) = (log.dt_id(focal, &d.dt), log.label_id(&d.label)) else { continue };
            let s = stats.entry(dt).or_default().entry(l).or_insert((0, 0.0));
            s.0 += 1;
            s.1 += u;
        }
    }
    Ok(stats)
}

/// Modal label and its share among the defined argmaxes, ties to the lower label rank.
fn modal(log: &EpisodeLog, dt: u32, argmaxes: impl Iterator<Item = Option<u32>>) -> Option<(u32, f64)> {
    let mut counts: HashMap<u32, usize> = HashMap::new();
    let mut total = 0;
    for a in argmaxes.flatten() {
        *counts.entry(a).or_default() += 1;
        total += 1;
    }
    let rank = &log.dt_label_rank[dt as usize];
    counts
        .into_iter()
        .max_by(|a, b| a.1.cmp(&b.1).then(rank.get(&b.0).cmp(&rank.get(&a.0))).then(b.0.cmp(&a.0)))
        .map(|(l, c)| (l, c as f64 / total as f64))
}

/// Per-seat opponent-modelling terms: (focal dt, modal share) over all sampled opponents.
pub fn opponent_shares(
    spec: &Arc<GameSpec>,
    log: &EpisodeLog,
    budget: &TierBudget,
    seed: u64,
) -> Result<Vec<(u32, f64)>, AxisError> {
    let mut out = Vec::new();
    for focal in Seat::BOTH {
        let focal_dts: Vec<u32> = seat_blocks(log, focal).into_iter().map(|b| b.0).collect();
        let blocks = seat_blocks(log, focal.other());
        if focal_dts.is_empty() {
            continue;
        }
        if blocks.is_empty() {
            // A silent opponent cannot shift the best response.
            out.extend(focal_dts.iter().map(|d| (*d, 1.0)));
            continue;
        }
        let sizes: Vec<usize> = blocks.iter().map(|b| b.1.len()).collect();
        let evaluate = |points: &[Vec<f64>]| -> Result<Vec<HashMap<u32, u32>>, AxisError> {
            points
                .par_iter()
                .map(|p| {
                    let opp = dt_policy(log, &blocks, p);
                    let stats = playout_stats(spec, log, focal, &opp, seed, budget.playouts)?;
                    Ok(stats
                        .iter()
                        .filter_map(|(d, s)| {
                            let rank = &log.dt_label_rank[*d as usize];
                            argmax_label(s, s.keys().copied(), |l| rank.get(&l).copied().unwrap_or(usize::MAX)).map(|a| (*d, a))
                        })
                        .collect())
                })
                .collect()
        };
        let global = sobol_blocks(budget.sobol_global, &sizes, None)?;
        let mut argmaxes = evaluate(&global)?;
        if budget.sobol_refine > 0 {
            let mut flipped = vec![false; global.len()];
            for d in &focal_dts {
                let Some((mode, share)) = modal(log, *d, argmaxes.iter().map(|a| a.get(d).copied())) else { continue };
                if share < UNSTABLE_SHARE {
                    for (i, a) in argmaxes.iter().enumerate() {
                        if a.get(d).is_some_and(|l| *l != mode) {
                            flipped[i] = true;
                        }
                    }
                }
            }
            let centers: Vec<Vec<f64>> =
                global.iter().zip(&flipped).filter(|(_, f)| **f).map(|(p, _)| p.clone()).collect();
            let hint = RefineHint { global: global.len(), centers, radius: REFINE_RADIUS };
            let all = sobol_blocks(budget.sobol_global + budget.sobol_refine, &sizes, Some(&hint))?;
            argmaxes.extend(evaluate(&all[global.len()..])?);
        }
        for d in focal_dts {
            let share = modal(log, d, argmaxes.iter().map(|a| a.get(&d).copied())).map_or(1.0, |m| m.1);
            out.push((d, share));
        }
    }
    Ok(out)
}

pub fn axis_opponent_modeling(
    spec: &Arc<GameSpec>,
    log: &EpisodeLog,
    budget: &TierBudget,
    seed: u64,
) -> Result<f64, AxisError> {
    let visits = log.dt_visits();
    let total: u64 = visits.iter().sum();
    if total == 0 {
        return Ok(0.0);
    }
    let shares = opponent_shares(spec, log, budget, seed)?;
    let v: f64 = shares.iter().map(|(d, s)| visits[*d as usize] as f64 / total as f64 * (1.0 - s)).sum();
    Ok(v.clamp(0.0, 1.0))
}

/// Moves `mass` of the base choice at one (seat, dt) evenly onto the other options.
pub struct Perturbed<'a> {
    pub base: &'a dyn Policy,
    pub seat: Seat,
    pub dt: DecisionType,
    pub mass: f64,
}

impl Policy for Perturbed<'_> {
    fn probabilities(&self, state: &GameState, menu: &Menu) -> Vec<f64> {
        let mut p = self.base.probabilities(state, menu);
        let n = p.len();
        if menu.seat != self.seat || menu.dt != self.dt || n < 2 {
            return p;
        }
        let top = (0..n).fold(0, |b, i| if p[i] > p[b] { i } else { b });
        let share = self.mass / (n - 1) as f64;
        for (i, x) in p.iter_mut().enumerate() {
            *x = (1.0 - self.mass) * *x + if i == top { 0.0 } else { share };
        }
        p
    }
}

/// Slope of `y` on a 0/1 indicator: mean of the flagged group minus mean of the rest.
pub fn indicator_slope(y: &[f64], flag: &[bool]) -> f64 {
    let mean = |on: bool| {
        let v: Vec<f64> = y.iter().zip(flag).filter(|(_, f)| **f == on).map(|(y, _)| *y).collect();
        if v.is_empty() {
            0.0
        } else {
            v.iter().sum::<f64>() / v.len() as f64
        }
    };
    mean(true) - mean(false)
}

#[derive(Clone, Debug, PartialEq)]
pub struct BrittlenessTerms {
    /// (perturbed dt id, payoff change per unit mass) for each trial.
    pub trials: Vec<(u32, f64)>,
    /// (dt id, weight, slope) for each perturbed decision type.
    pub slopes: Vec<(u32, f64, f64)>,
    pub sum: f64,
    pub value: f64,
}

fn dirichlet_opponent(log: &EpisodeLog, blocks: &[(u32, Vec<u32>)], parts: &[u64]) -> DtPolicy {
    let mut rng = seeding::rng("brittle-dirichlet", parts);
    let mut flat = Vec::new();
    for (_, labels) in blocks {
        let x: Vec<f64> = labels.iter().map(|_| rng.sample::<f64, _>(Exp1)).collect();
        let s: f64 = x.iter().sum();
        flat.extend(x.iter().map(|v| v / s));
    }
    dt_policy(log, blocks, &flat)
}

pub fn brittleness_for_seat(
    spec: &Arc<GameSpec>,
    log: &EpisodeLog,
    l1: &dyn Policy,
    focal: Seat,
    budget: &TierBudget,
    seed: u64,
) -> Result<BrittlenessTerms, AxisError> {
    let s = focal.index() as u64;
    let mut counts: HashMap<u32, u64> = HashMap::new();
    if budget.l1_episodes > 0 {
        for e in 0..budget.l1_episodes as u64 {
            let parts = [seed, s, e];
            let mut rngs = [seeding::rng("l1w-a", &parts), seeding::rng("l1w-b", &parts)];
            let played =
                play_episode(spec, seeding::derive("l1w-chance", &parts), seat_pair(focal, l1, &Uniform), &mut rngs, [false, false])?;
            for d in played.decisions.iter().filter(|d| d.seat == focal) {
                if let Some(id) = log.dt_id(focal, &d.dt) {
                    *counts.entry(id).or_default() += 1;
                }
            }
        }
    } else {
        for (d, n) in log.dt_visits().into_iter().enumerate() {
            if log.dts[d].0 == focal && n > 0 {
                counts.insert(d as u32, n);
            }
        }
    }
    let total: u64 = counts.values().sum();
    let mut dts: Vec<(u32, f64)> = counts
        .iter()
        .filter(|(d, _)| log.dt_labels(**d).len() >= 2)
        .map(|(d, n)| (*d, *n as f64 / total as f64))
        .collect();
    dts.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let sigma = log.payoff_sd();
    if dts.is_empty() || sigma == 0.0 || budget.brittle_trials == 0 {
        return Ok(BrittlenessTerms { trials: Vec::new(), slopes: Vec::new(), sum: 0.0, value: BRITTLENESS_FLOOR.log10() });
    }
    let blocks = seat_blocks(log, focal.other());
    let opponents: Vec<DtPolicy> =
        (0..budget.brittle_opponents as u64).map(|j| dirichlet_opponent(log, &blocks, &[seed, s, j])).collect();
    // Trial t replays the same chance and agent streams for its base and perturbed runs.
    let mean_payoff = |policy: &dyn Policy, t: u64| -> Result<f64, AxisError> {
        let mut sum = 0.0;
        for (j, opp) in opponents.iter().enumerate() {
            for k in 0..budget.brittle_playouts as u64 {
                let parts = [seed, s, t, j as u64, k];
                let mut rngs = [seeding::rng("brittle-a", &parts), seeding::rng("brittle-b", &parts)];
                let played = play_episode(
                    spec,
                    seeding::derive("brittle-chance", &parts),
                    seat_pair(focal, policy, opp),
                    &mut rngs,
                    [false, false],
                )?;
                sum += played.payoff[focal.index()] as f64;
            }
        }
        Ok(sum / (opponents.len() * budget.brittle_playouts).max(1) as f64)
    };
    let trials: Vec<u32> = (0..budget.brittle_trials).map(|t| dts[t % dts.len()].0).collect();
    let delta: Vec<f64> = trials
        .par_iter()
        .enumerate()
        .map(|(t, d)| {
            let pert = Perturbed { base: l1, seat: focal, dt: log.dts[*d as usize].1.clone(), mass: PERTURB_MASS };
            Ok((mean_payoff(&pert, t as u64)? - mean_payoff(l1, t as u64)?) / PERTURB_MASS)
        })
        .collect::<Result<_, AxisError>>()?;
    let slopes: Vec<(u32, f64, f64)> = dts
        .iter()
        .map(|(d, w)| {
            let flag: Vec<bool> = trials.iter().map(|t| t == d).collect();
            (*d, *w, indicator_slope(&delta, &flag))
        })
        .collect();
    let sum = slopes.iter().map(|(_, w, b)| w * b.abs()).sum::<f64>() / sigma;
    let trials = trials.into_iter().zip(delta).collect();
    Ok(BrittlenessTerms { trials, slopes, sum, value: sum.max(BRITTLENESS_FLOOR).log10() })
}

pub fn axis_brittleness(
    spec: &Arc<GameSpec>,
    log: &EpisodeLog,
    l1: &dyn Policy,
    budget: &TierBudget,
    seed: u64,
) -> Result<f64, AxisError> {
    let a = brittleness_for_seat(spec, log, l1, Seat::Alice, budget, seed)?;
    let b = brittleness_for_seat(spec, log, l1, Seat::Bob, budget, seed)?;
    Ok((a.value + b.value) / 2.0)
}
