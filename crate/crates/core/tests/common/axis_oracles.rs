//! Brute-force axis oracles over fully enumerated toy games under uniform play.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::sync::Arc;

use genstrat_core::axes::*;
use genstrat_core::engine::fixtures::{kuhn, shared};
use genstrat_core::engine::{DecisionType, GameSpec, GameState, InformationState, Menu, Seat};
use genstrat_core::seeding;
use rand::Rng;
use rand_distr::Exp1;

use super::{enumerate, gamble, pennies, uniform, Leaf};

pub type Key = (Seat, DecisionType);

pub fn key(v: &super::Visit) -> Key {
    (v.seat, v.dt.clone())
}

// ---- population oracles under uniform play -------------------------------

pub fn oracle_state_space(leaves: &[Leaf]) -> f64 {
    let set: HashSet<&InformationState> = leaves.iter().flat_map(|l| l.visits.iter().map(|v| &v.info)).collect();
    (set.len() as f64).log10()
}

pub fn oracle_temporal_depth(leaves: &[Leaf]) -> f64 {
    let mut visits: BTreeMap<Key, f64> = BTreeMap::new();
    let mut remaining: BTreeMap<Key, f64> = BTreeMap::new();
    let mut first: BTreeMap<Key, HashMap<String, (f64, f64)>> = BTreeMap::new();
    for l in leaves {
        let mut seen = HashSet::new();
        for (i, v) in l.visits.iter().enumerate() {
            let later = l.visits[i + 1..].iter().filter(|w| w.seat == v.seat).count() as f64;
            *visits.entry(key(v)).or_default() += l.p;
            *remaining.entry(key(v)).or_default() += l.p * later;
            if seen.insert(key(v)) {
                let g = first.entry(key(v)).or_default().entry(v.label.clone()).or_default();
                g.0 += l.p;
                g.1 += l.p * l.payoff[v.seat.index()] as f64;
            }
        }
    }
    let mut total = 0.0;
    for k in visits.keys() {
        let groups = &first[k];
        let q: f64 = groups.values().map(|g| g.0).sum();
        let mu = groups.values().map(|g| g.1).sum::<f64>() / q;
        let between: f64 = groups.values().map(|g| g.0 * (g.1 / g.0 - mu).powi(2)).sum();
        let spread: f64 = leaves.iter().map(|l| l.p * (l.payoff[k.0.index()] as f64 - mu).powi(2)).sum();
        let eta = if spread > 0.0 { between / spread } else { 0.0 };
        // f_d * r_d is the expected number of remaining decisions per episode.
        total += eta * remaining[k];
    }
    total
}

pub fn argmax_by_index(ev: &BTreeMap<usize, f64>) -> usize {
    let mut best = (f64::NEG_INFINITY, usize::MAX);
    for (i, v) in ev {
        if *v > best.0 {
            best = (*v, *i);
        }
    }
    best.1
}

/// Per-visit conditional means: key -> option index -> E[U].
pub fn conditional_means<K: Ord + Clone>(leaves: &[Leaf], key: impl Fn(&super::Visit) -> K) -> BTreeMap<K, BTreeMap<usize, f64>> {
    let mut acc: BTreeMap<K, BTreeMap<usize, (f64, f64)>> = BTreeMap::new();
    for l in leaves {
        for v in &l.visits {
            let e = acc.entry(key(v)).or_default().entry(v.action).or_default();
            e.0 += l.p;
            e.1 += l.p * l.payoff[v.seat.index()] as f64;
        }
    }
    acc.into_iter().map(|(k, m)| (k, m.into_iter().map(|(a, (p, s))| (a, s / p)).collect())).collect()
}

pub fn info_key(v: &super::Visit) -> String {
    serde_json::to_string(&v.info).unwrap()
}

pub fn oracle_info_sensitivity(leaves: &[Leaf]) -> f64 {
    let by_info = conditional_means(leaves, info_key);
    // Option indices are aligned through labels at the dt level.
    let mut dt_label: BTreeMap<(Key, String), (f64, f64)> = BTreeMap::new();
    let mut reach: BTreeMap<String, f64> = BTreeMap::new();
    let mut menus: BTreeMap<String, (Key, Vec<String>)> = BTreeMap::new();
    for l in leaves {
        let mut seen = HashSet::new();
        for v in &l.visits {
            let e = dt_label.entry((key(v), v.label.clone())).or_default();
            e.0 += l.p;
            e.1 += l.p * l.payoff[v.seat.index()] as f64;
            if seen.insert(info_key(v)) {
                *reach.entry(info_key(v)).or_default() += l.p;
            }
            menus.insert(info_key(v), (key(v), v.options.clone()));
        }
    }
    let (mut num, mut den) = (0.0, 0.0);
    for (info, ev) in &by_info {
        let (k, options) = &menus[info];
        let local = argmax_by_index(ev);
        let pooled: BTreeMap<usize, f64> = options
            .iter()
            .enumerate()
            .map(|(i, l)| {
                let (p, s) = dt_label[&(k.clone(), l.clone())];
                (i, s / p)
            })
            .collect();
        let w = reach[info];
        den += w;
        if argmax_by_index(&pooled) != local {
            num += w;
        }
    }
    num / den
}

pub fn population_sd(leaves: &[Leaf]) -> f64 {
    let mean: f64 = leaves.iter().map(|l| l.p * l.payoff[0] as f64).sum();
    leaves.iter().map(|l| l.p * (l.payoff[0] as f64 - mean).powi(2)).sum::<f64>().sqrt()
}

/// Lower decile of a discrete distribution: the smallest value whose CDF reaches 0.1.
pub fn lower_decile(dist: &BTreeMap<i64, f64>) -> f64 {
    let total: f64 = dist.values().sum();
    let mut acc = 0.0;
    for (v, p) in dist {
        acc += p / total;
        if acc >= 0.1 - 1e-12 {
            return *v as f64;
        }
    }
    unreachable!()
}

pub fn oracle_risk(leaves: &[Leaf], episodes: f64) -> f64 {
    let sigma = population_sd(leaves);
    type Ctx = (Seat, String, Vec<String>, Vec<String>, i64);
    let mut ctx: BTreeMap<Ctx, BTreeMap<usize, BTreeMap<i64, f64>>> = BTreeMap::new();
    let mut seat_mass = [0.0; 2];
    for l in leaves {
        for v in &l.visits {
            let c = (v.seat, v.info.dt.to_string(), v.info.hand.clone(), v.info.path.clone(), v.info.chip_bin);
            *ctx.entry(c).or_default().entry(v.action).or_default().entry(l.payoff[v.seat.index()]).or_default() += l.p;
            seat_mass[v.seat.index()] += l.p;
        }
    }
    let mut per_seat = [0.0; 2];
    let mut active = [false; 2];
    for ((seat, ..), actions) in &ctx {
        let mass: f64 = actions.values().flat_map(|d| d.values()).sum();
        let tried: Vec<(usize, f64, f64)> = actions
            .iter()
            .filter(|(_, d)| d.values().sum::<f64>() * episodes >= 5.0)
            .map(|(a, d)| {
                let p: f64 = d.values().sum();
                let ev = d.iter().map(|(u, q)| *u as f64 * q).sum::<f64>() / p;
                (*a, ev, lower_decile(d))
            })
            .collect();
        if mass * episodes < 20.0 || tried.len() < 2 {
            continue;
        }
        active[seat.index()] = true;
        let best = tried.iter().fold(tried[0], |b, r| if r.1 > b.1 { *r } else { b });
        let safe = tried.iter().fold(tried[0], |b, r| if r.2 > b.2 || (r.2 == b.2 && r.1 > b.1) { *r } else { b });
        per_seat[seat.index()] += mass / seat_mass[seat.index()] * (best.1 - safe.1) / sigma;
    }
    let seats: Vec<f64> = (0..2).filter(|s| active[*s]).map(|s| per_seat[s]).collect();
    let v = if seats.is_empty() { 0.0 } else { seats.iter().sum::<f64>() / seats.len() as f64 };
    if v < 0.01 {
        0.0
    } else {
        v
    }
}

/// Uniform random points on a simplex via normalised exponentials.
pub fn random_simplex(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let x: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let s: f64 = x.iter().sum();
    x.into_iter().map(|v| v / s).collect()
}

/// Labels per decision type of `seat`, ordered by their smallest menu index.
pub fn seat_labels(leaves: &[Leaf], seat: Seat) -> BTreeMap<DecisionType, Vec<String>> {
    let mut rank: BTreeMap<DecisionType, BTreeMap<String, usize>> = BTreeMap::new();
    for l in leaves {
        for v in l.visits.iter().filter(|v| v.seat == seat) {
            for (i, o) in v.options.iter().enumerate() {
                let r = rank.entry(v.dt.clone()).or_default().entry(o.clone()).or_insert(i);
                *r = (*r).min(i);
            }
        }
    }
    rank.into_iter()
        .map(|(dt, m)| {
            let mut v: Vec<(usize, String)> = m.into_iter().map(|(l, r)| (r, l)).collect();
            v.sort();
            (dt, v.into_iter().map(|x| x.1).collect())
        })
        .collect()
}

pub fn mixed(weights: &HashMap<DecisionType, HashMap<String, f64>>, menu: &Menu) -> Vec<f64> {
    let w = &weights[&menu.dt];
    let p: Vec<f64> = menu.options.iter().map(|o| w.get(o).copied().unwrap_or(0.0)).collect();
    let s: f64 = p.iter().sum();
    p.into_iter().map(|x| x / s).collect()
}

pub fn oracle_opponent_modeling(spec: &Arc<GameSpec>, draws: usize) -> f64 {
    let base = enumerate(spec, &uniform);
    let mut visits: BTreeMap<Key, f64> = BTreeMap::new();
    for l in &base {
        for v in &l.visits {
            *visits.entry(key(v)).or_default() += l.p;
        }
    }
    let total: f64 = visits.values().sum();
    let mut rng = seeding::rng("oracle-opponents", &[]);
    let mut value = 0.0;
    for focal in Seat::BOTH {
        let opp_labels = seat_labels(&base, focal.other());
        let focal_labels = seat_labels(&base, focal);
        let mut modes: BTreeMap<DecisionType, HashMap<usize, usize>> = BTreeMap::new();
        for _ in 0..draws {
            let weights: HashMap<DecisionType, HashMap<String, f64>> = opp_labels
                .iter()
                .map(|(dt, labels)| (dt.clone(), labels.iter().cloned().zip(random_simplex(&mut rng, labels.len())).collect()))
                .collect();
            let policy = |state: &GameState, menu: &Menu| {
                if menu.seat == focal {
                    uniform(state, menu)
                } else {
                    mixed(&weights, menu)
                }
            };
            let leaves = enumerate(spec, &policy);
            let mut acc: HashMap<(DecisionType, String), (f64, f64)> = HashMap::new();
            for l in &leaves {
                for v in l.visits.iter().filter(|v| v.seat == focal) {
                    let e = acc.entry((v.dt.clone(), v.label.clone())).or_default();
                    e.0 += l.p;
                    e.1 += l.p * l.payoff[focal.index()] as f64;
                }
            }
            for (dt, labels) in &focal_labels {
                let ev: BTreeMap<usize, f64> = labels
                    .iter()
                    .enumerate()
                    .filter_map(|(i, lab)| acc.get(&(dt.clone(), lab.clone())).map(|(p, s)| (i, s / p)))
                    .collect();
                if !ev.is_empty() {
                    *modes.entry(dt.clone()).or_default().entry(argmax_by_index(&ev)).or_default() += 1;
                }
            }
        }
        for (dt, counts) in modes {
            let share = *counts.values().max().unwrap() as f64 / counts.values().sum::<usize>() as f64;
            value += visits[&(focal, dt)] / total * (1.0 - share);
        }
    }
    value
}

pub fn oracle_l1(leaves: &[Leaf]) -> HashMap<String, usize> {
    conditional_means(leaves, info_key).into_iter().map(|(k, ev)| (k, argmax_by_index(&ev))).collect()
}

pub fn oracle_brittleness(spec: &Arc<GameSpec>, budget: &TierBudget, opponents: usize) -> f64 {
    let base = enumerate(spec, &uniform);
    let sigma = population_sd(&base);
    let l1 = oracle_l1(&base);
    let l1_probs = |state: &GameState, menu: &Menu| {
        let mut p = vec![0.0; menu.options.len()];
        p[l1[&serde_json::to_string(&state.observe(menu.seat)).unwrap()]] = 1.0;
        p
    };
    let mut rng = seeding::rng("oracle-dirichlet", &[]);
    let mut out = 0.0;
    for focal in Seat::BOTH {
        let vs_uniform = |s: &GameState, m: &Menu| if m.seat == focal { l1_probs(s, m) } else { uniform(s, m) };
        let mut w: BTreeMap<DecisionType, f64> = BTreeMap::new();
        let mut n_labels: BTreeMap<DecisionType, usize> = BTreeMap::new();
        for l in enumerate(spec, &vs_uniform) {
            for v in l.visits.iter().filter(|v| v.seat == focal) {
                *w.entry(v.dt.clone()).or_default() += l.p;
            }
        }
        for l in &base {
            for v in l.visits.iter().filter(|v| v.seat == focal) {
                let n = n_labels.entry(v.dt.clone()).or_default();
                *n = (*n).max(v.options.len());
            }
        }
        let total: f64 = w.values().sum();
        let mut dts: Vec<(DecisionType, f64)> =
            w.iter().filter(|(d, _)| n_labels[*d] >= 2).map(|(d, x)| (d.clone(), x / total)).collect();
        dts.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        if dts.is_empty() {
            out += BRITTLENESS_FLOOR.log10() / 2.0;
            continue;
        }
        let opp_labels = seat_labels(&base, focal.other());
        let mut delta: BTreeMap<DecisionType, f64> = BTreeMap::new();
        for _ in 0..opponents {
            let weights: HashMap<DecisionType, HashMap<String, f64>> = opp_labels
                .iter()
                .map(|(dt, labels)| (dt.clone(), labels.iter().cloned().zip(random_simplex(&mut rng, labels.len())).collect()))
                .collect();
            let value = |target: Option<&DecisionType>| {
                let policy = |s: &GameState, m: &Menu| {
                    if m.seat != focal {
                        return mixed(&weights, m);
                    }
                    let mut p = l1_probs(s, m);
                    if Some(&m.dt) == target && p.len() > 1 {
                        let top = p.iter().position(|x| *x == 1.0).unwrap();
                        let n = p.len() as f64;
                        p = (0..p.len()).map(|i| if i == top { 1.0 - PERTURB_MASS } else { PERTURB_MASS / (n - 1.0) }).collect();
                    }
                    p
                };
                enumerate(spec, &policy).iter().map(|l| l.p * l.payoff[focal.index()] as f64).sum::<f64>()
            };
            let u0 = value(None);
            for (d, _) in &dts {
                *delta.entry(d.clone()).or_default() += (value(Some(d)) - u0) / PERTURB_MASS / opponents as f64;
            }
        }
        let trials: Vec<&DecisionType> = (0..budget.brittle_trials).map(|t| &dts[t % dts.len()].0).collect();
        let mut sum = 0.0;
        for (d, wd) in &dts {
            let on: Vec<f64> = trials.iter().filter(|t| **t == d).map(|t| delta[*t]).collect();
            let off: Vec<f64> = trials.iter().filter(|t| **t != d).map(|t| delta[*t]).collect();
            let mean = |v: &[f64]| if v.is_empty() { 0.0 } else { v.iter().sum::<f64>() / v.len() as f64 };
            sum += wd * (mean(&on) - mean(&off)).abs() / sigma;
        }
        out += sum.max(BRITTLENESS_FLOOR).log10() / 2.0;
    }
    out
}

// ---- replicate harness --------------------------------------------------

pub fn oracle_budget() -> TierBudget {
    TierBudget {
        l0_episodes: 3000,
        l1_episodes: 1500,
        sobol_global: 64,
        sobol_refine: 0,
        playouts: 32,
        brittle_trials: 20,
        brittle_opponents: 10,
        brittle_playouts: 15,
    }
}

/// Mean of `values` within 3 replicate standard deviations of `oracle`.
pub fn replicate_check(name: &str, oracle: f64, values: &[f64]) -> Result<String, String> {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let line = format!("{name}: oracle {oracle:.5} mean {mean:.5} sd {sd:.5}");
    if (mean - oracle).abs() <= 3.0 * sd + 1e-9 {
        Ok(line)
    } else {
        Err(line)
    }
}

pub fn replicate(name: &str, oracle: f64, values: &[f64]) {
    match replicate_check(name, oracle, values) {
        Ok(line) => println!("{line}"),
        Err(line) => panic!("outside 3 sd: {line}"),
    }
}

pub fn log_axes(spec: &Arc<GameSpec>, seeds: std::ops::Range<u64>) -> Vec<EpisodeLog> {
    seeds.map(|s| run_l0(spec, 3000, s).unwrap()).collect()
}

pub fn toy_games() -> Vec<(&'static str, Arc<GameSpec>)> {
    vec![("kuhn", shared(kuhn())), ("pennies", shared(pennies())), ("gamble", shared(gamble()))]
}

