//! Axes computed directly from an L0 log.

use std::collections::{HashMap, HashSet};

use super::log::{argmax_label, EpisodeLog};
use super::AxisError;

/// Reported risk below this is stored as exactly zero.
pub const RISK_FLOOR: f64 = 0.01;
pub const RISK_MIN_VISITS: u64 = 20;
pub const RISK_MIN_TRIES: usize = 5;

pub fn axis_state_space(log: &EpisodeLog) -> Result<f64, AxisError> {
    if log.infos.is_empty() {
        return Err(AxisError::EmptyLog);
    }
    Ok((log.infos.len() as f64).log10())
}

/// Per decision type: (f_d, eta_d^2, r_d).
pub fn temporal_terms(log: &EpisodeLog) -> Vec<(f64, f64, f64)> {
    let n_dt = log.dts.len();
    let n_eps = log.n_episodes();
    let mut visits = vec![0u64; n_dt];
    let mut remaining = vec![0u64; n_dt];
    // First visit per episode: (label, focal payoff).
    let mut first: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n_dt];
    let mut seen = vec![usize::MAX; n_dt];
    for (e, ep) in log.episodes.iter().enumerate() {
        let mut left = [0u64; 2];
        for d in &ep.decisions {
            left[d.seat.index()] += 1;
        }
        for d in &ep.decisions {
            let i = d.seat.index();
            left[i] -= 1;
            let k = d.dt as usize;
            visits[k] += 1;
            remaining[k] += left[i];
            if seen[k] != e {
                seen[k] = e;
                first[k].push((d.label, ep.payoff[i] as f64));
            }
        }
    }
    (0..n_dt)
        .map(|k| {
            if visits[k] == 0 || n_eps == 0 {
                return (0.0, 0.0, 0.0);
            }
            let f = visits[k] as f64 / n_eps as f64;
            let r = remaining[k] as f64 / visits[k] as f64;
            let seat = log.dts[k].0.index();
            let samples = &first[k];
            let mean = samples.iter().map(|s| s.1).sum::<f64>() / samples.len() as f64;
            let mut groups: HashMap<u32, (f64, f64)> = HashMap::new();
            for (l, u) in samples {
                let g = groups.entry(*l).or_insert((0.0, 0.0));
                g.0 += 1.0;
                g.1 += u;
            }
            let between: f64 = groups.values().map(|(n, s)| n * (s / n - mean).powi(2)).sum();
            // Denominator runs over every logged episode, centred on the dt mean.
            let total: f64 = log.episodes.iter().map(|ep| (ep.payoff[seat] as f64 - mean).powi(2)).sum();
            let eta = if total > 0.0 { between / total } else { 0.0 };
            (f, eta, r)
        })
        .collect()
}

pub fn axis_temporal_depth(log: &EpisodeLog) -> f64 {
    temporal_terms(log).iter().map(|(f, e, r)| f * e * r).sum()
}

/// Weight of each information state: the number of episodes that reached it.
fn episode_reach(log: &EpisodeLog) -> Vec<u64> {
    let mut reach = vec![0u64; log.infos.len()];
    let mut seen = HashSet::new();
    for ep in &log.episodes {
        seen.clear();
        for d in &ep.decisions {
            if seen.insert(d.info) {
                reach[d.info as usize] += 1;
            }
        }
    }
    reach
}

pub fn axis_info_sensitivity(log: &EpisodeLog) -> f64 {
    let info_stats = log.info_action_stats();
    let dt_stats = log.dt_action_stats();
    let reach = episode_reach(log);
    let (mut num, mut den) = (0.0, 0.0);
    for (id, stats) in info_stats.iter().enumerate() {
        let id32 = id as u32;
        let tried: Vec<u32> = log.menus[id].iter().copied().filter(|l| stats.contains_key(l)).collect();
        let rank = |l| log.menu_index(id32, l);
        let Some(local) = argmax_label(stats, tried.iter().copied(), rank) else { continue };
        // The dt-level argmax is taken over the labels available here.
        let pooled = argmax_label(&dt_stats[log.info_dt[id] as usize], tried.iter().copied(), rank);
        let w = reach[id] as f64;
        den += w;
        if pooled != Some(local) {
            num += w;
        }
    }
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

/// Nearest-rank lower decile of a non-empty sample.
pub fn q10(samples: &mut [f64]) -> f64 {
    samples.sort_by(f64::total_cmp);
    let k = ((0.1 * samples.len() as f64).ceil() as usize).max(1) - 1;
    samples[k]
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RiskResult {
    pub value: f64,
    /// Seats with at least one eligible context.
    pub seats: [bool; 2],
}

pub fn axis_risk(log: &EpisodeLog) -> RiskResult {
    let sigma = log.payoff_sd();
    // coarse id -> (seat, label -> (menu index, payoffs))
    let mut contexts: HashMap<u32, (usize, HashMap<u32, (usize, Vec<f64>)>)> = HashMap::new();
    let mut seat_visits = [0u64; 2];
    for ep in &log.episodes {
        for d in &ep.decisions {
            let s = d.seat.index();
            seat_visits[s] += 1;
            let ctx = contexts.entry(d.coarse).or_insert_with(|| (s, HashMap::new()));
            let entry = ctx.1.entry(d.label).or_insert((usize::MAX, Vec::new()));
            entry.0 = entry.0.min(d.action as usize);
            entry.1.push(ep.payoff[s] as f64);
        }
    }
    let mut per_seat = [0.0; 2];
    let mut seats = [false; 2];
    if sigma > 0.0 {
        let mut ids: Vec<&u32> = contexts.keys().collect();
        ids.sort_unstable();
        for id in ids {
            let (s, actions) = &contexts[id];
            let visits: usize = actions.values().map(|a| a.1.len()).sum();
            let tried = actions.values().filter(|a| a.1.len() >= RISK_MIN_TRIES).count();
            if (visits as u64) < RISK_MIN_VISITS || tried < 2 {
                continue;
            }
            seats[*s] = true;
            // (label, menu index, EV, q10) over actions tried often enough.
            let mut rows: Vec<(usize, f64, f64)> = actions
                .values()
                .filter(|a| a.1.len() >= RISK_MIN_TRIES)
                .map(|(idx, us)| {
                    let ev = us.iter().sum::<f64>() / us.len() as f64;
                    (*idx, ev, q10(&mut us.clone()))
                })
                .collect();
            rows.sort_by_key(|r| r.0);
            let best = rows.iter().fold(None::<&(usize, f64, f64)>, |b, r| match b {
                Some(x) if x.1 >= r.1 => Some(x),
                _ => Some(r),
            });
            let safe = rows.iter().fold(None::<&(usize, f64, f64)>, |b, r| match b {
                Some(x) if x.2 > r.2 || (x.2 == r.2 && x.1 >= r.1) => Some(x),
                _ => Some(r),
            });
            let (best, safe) = (best.unwrap(), safe.unwrap());
            let w = visits as f64 / seat_visits[*s] as f64;
            per_seat[*s] += w * (best.1 - safe.1) / sigma;
        }
    }
    let active: Vec<f64> = (0..2).filter(|&s| seats[s]).map(|s| per_seat[s]).collect();
    let value = if active.is_empty() { 0.0 } else { active.iter().sum::<f64>() / active.len() as f64 };
    RiskResult { value: if value < RISK_FLOOR { 0.0 } else { value }, seats }
}
