//! Episode logs from uniform-random play and the greedy policy derived from them.

use std::collections::HashMap;
use std::sync::Arc;

use rayon::prelude::*;

use crate::engine::{DecisionType, EngineError, GameSpec, InformationState, Seat};
use crate::policy::{play_episode, Played, TablePolicy, Uniform};
use crate::seeding;

#[derive(Clone, Copy, Debug)]
pub struct LoggedDecision {
    pub seat: Seat,
    pub info: u32,
    pub coarse: u32,
    /// Seat-qualified decision type id.
    pub dt: u32,
    pub action: u16,
    pub label: u32,
}

#[derive(Clone, Debug)]
pub struct LoggedEpisode {
    pub payoff: [i64; 2],
    pub decisions: Vec<LoggedDecision>,
}

type CoarseKey = (Seat, DecisionType, Vec<String>, Vec<String>, i64);

/// Interned record of uniform-random play.
#[derive(Clone, Debug, Default)]
pub struct EpisodeLog {
    pub infos: Vec<InformationState>,
    /// Menu labels per information state, in menu order.
    pub menus: Vec<Vec<u32>>,
    pub info_dt: Vec<u32>,
    pub coarse_count: usize,
    pub dts: Vec<(Seat, DecisionType)>,
    pub labels: Vec<String>,
    /// Smallest menu index each label takes at each decision type.
    pub dt_label_rank: Vec<HashMap<u32, usize>>,
    pub episodes: Vec<LoggedEpisode>,
    info_ids: HashMap<InformationState, u32>,
    coarse_ids: HashMap<CoarseKey, u32>,
    dt_ids: HashMap<(Seat, DecisionType), u32>,
    label_ids: HashMap<String, u32>,
}

fn intern<K: std::hash::Hash + Eq>(map: &mut HashMap<K, u32>, key: K, on_new: impl FnOnce()) -> u32 {
    let next = map.len() as u32;
    *map.entry(key).or_insert_with(|| {
        on_new();
        next
    })
}

impl EpisodeLog {
    pub fn n_episodes(&self) -> usize {
        self.episodes.len()
    }

    pub fn label(&self, id: u32) -> &str {
        &self.labels[id as usize]
    }

    pub fn label_id(&self, label: &str) -> Option<u32> {
        self.label_ids.get(label).copied()
    }

    pub fn info_id(&self, info: &InformationState) -> Option<u32> {
        self.info_ids.get(info).copied()
    }

    pub fn dt_id(&self, seat: Seat, dt: &DecisionType) -> Option<u32> {
        self.dt_ids.get(&(seat, dt.clone())).copied()
    }

    /// Labels seen at decision type `dt`, ordered by their smallest menu index.
    pub fn dt_labels(&self, dt: u32) -> Vec<u32> {
        let mut v: Vec<(usize, u32)> =
            self.dt_label_rank[dt as usize].iter().map(|(l, r)| (*r, *l)).collect();
        v.sort_unstable();
        v.into_iter().map(|(_, l)| l).collect()
    }

    pub fn add(&mut self, played: &Played) {
        let mut decisions = Vec::with_capacity(played.decisions.len());
        for d in &played.decisions {
            let info = d.info.as_ref().expect("logged play records information states");
            let label = {
                let labels = &mut self.labels;
                intern(&mut self.label_ids, d.label.clone(), || labels.push(d.label.clone()))
            };
            let dt = {
                let dts = &mut self.dts;
                let ranks = &mut self.dt_label_rank;
                intern(&mut self.dt_ids, (d.seat, d.dt.clone()), || {
                    dts.push((d.seat, d.dt.clone()));
                    ranks.push(HashMap::new());
                })
            };
            let rank = self.dt_label_rank[dt as usize].entry(label).or_insert(d.action);
            *rank = (*rank).min(d.action);
            let coarse_key = (d.seat, info.dt.clone(), info.hand.clone(), info.path.clone(), info.chip_bin);
            let coarse = {
                let count = &mut self.coarse_count;
                intern(&mut self.coarse_ids, coarse_key, || *count += 1)
            };
            let id = match self.info_ids.get(info) {
                Some(&id) => id,
                None => {
                    let id = self.infos.len() as u32;
                    self.info_ids.insert(info.clone(), id);
                    self.infos.push(info.clone());
                    self.menus.push(Vec::new());
                    self.info_dt.push(dt);
                    id
                }
            };
            let menu = &mut self.menus[id as usize];
            if menu.len() < d.options && menu.len() == d.action {
                menu.push(label);
            }
            decisions.push(LoggedDecision { seat: d.seat, info: id, coarse, dt, action: d.action as u16, label });
        }
        self.episodes.push(LoggedEpisode { payoff: played.payoff, decisions });
    }

    /// Population standard deviation of Alice's realised payoff.
    pub fn payoff_sd(&self) -> f64 {
        let n = self.episodes.len() as f64;
        if n == 0.0 {
            return 0.0;
        }
        let mean = self.episodes.iter().map(|e| e.payoff[0] as f64).sum::<f64>() / n;
        let var = self.episodes.iter().map(|e| (e.payoff[0] as f64 - mean).powi(2)).sum::<f64>() / n;
        var.sqrt()
    }

    /// Visits and payoff sums per (information state, label), payoff from the actor's seat.
    pub fn info_action_stats(&self) -> Vec<HashMap<u32, (u64, f64)>> {
        let mut stats = vec![HashMap::new(); self.infos.len()];
        for e in &self.episodes {
            for d in &e.decisions {
                let s = stats[d.info as usize].entry(d.label).or_insert((0, 0.0));
                s.0 += 1;
                s.1 += e.payoff[d.seat.index()] as f64;
            }
        }
        stats
    }

    /// Visits and payoff sums per (decision type, label).
    pub fn dt_action_stats(&self) -> Vec<HashMap<u32, (u64, f64)>> {
        let mut stats = vec![HashMap::new(); self.dts.len()];
        for e in &self.episodes {
            for d in &e.decisions {
                let s = stats[d.dt as usize].entry(d.label).or_insert((0, 0.0));
                s.0 += 1;
                s.1 += e.payoff[d.seat.index()] as f64;
            }
        }
        stats
    }

    pub fn dt_visits(&self) -> Vec<u64> {
        let mut n = vec![0; self.dts.len()];
        for e in &self.episodes {
            for d in &e.decisions {
                n[d.dt as usize] += 1;
            }
        }
        n
    }

    pub fn info_visits(&self) -> Vec<u64> {
        let mut n = vec![0; self.infos.len()];
        for e in &self.episodes {
            for d in &e.decisions {
                n[d.info as usize] += 1;
            }
        }
        n
    }

    /// Menu position of `label` at information state `info`, or `usize::MAX`.
    pub fn menu_index(&self, info: u32, label: u32) -> usize {
        self.menus[info as usize].iter().position(|l| *l == label).unwrap_or(usize::MAX)
    }
}

/// Label with the largest mean among `stats`, ties to the smallest `rank`, then the smallest id.
pub(crate) fn argmax_label(
    stats: &HashMap<u32, (u64, f64)>,
    among: impl Iterator<Item = u32>,
    rank: impl Fn(u32) -> usize,
) -> Option<u32> {
    let mut best: Option<(f64, usize, u32)> = None;
    for l in among {
        let Some(&(n, sum)) = stats.get(&l) else { continue };
        if n == 0 {
            continue;
        }
        let mean = sum / n as f64;
        let r = rank(l);
        let better = match best {
            None => true,
            Some((m, br, bl)) => mean > m || (mean == m && (r, l) < (br, bl)),
        };
        if better {
            best = Some((mean, r, l));
        }
    }
    best.map(|(_, _, l)| l)
}

/// Uniform-random self-play; episode `e` uses chance seed and agent streams derived from `(seed, e)`.
pub fn run_l0(spec: &Arc<GameSpec>, episodes: usize, seed: u64) -> Result<EpisodeLog, EngineError> {
    let played: Result<Vec<Played>, EngineError> = (0..episodes as u64)
        .into_par_iter()
        .map(|e| {
            let mut rngs = [seeding::rng("l0-alice", &[seed, e]), seeding::rng("l0-bob", &[seed, e])];
            play_episode(spec, seeding::derive("l0-chance", &[seed, e]), [&Uniform, &Uniform], &mut rngs, [true, true])
        })
        .collect();
    let mut log = EpisodeLog::default();
    for p in played? {
        log.add(&p);
    }
    Ok(log)
}

/// Greedy response to uniform play: the empirical argmax per information state, ties to the lowest menu index.
pub fn l1_best_response(log: &EpisodeLog) -> TablePolicy {
    let stats = log.info_action_stats();
    let mut table = HashMap::new();
    for (id, info) in log.infos.iter().enumerate() {
        let id = id as u32;
        let tried = log.menus[id as usize].iter().copied();
        if let Some(best) = argmax_label(&stats[id as usize], tried, |l| log.menu_index(id, l)) {
            table.insert(info.clone(), log.label(best).to_string());
        }
    }
    TablePolicy { table }
}
