//! Solver oracles by full-tree enumeration.

use std::collections::BTreeMap;
use std::sync::Arc;

use genstrat_core::engine::{GameSpec, GameState, Menu, Seat};
use genstrat_core::solver::{AbstractGame, Strategy};

use super::enumerate;

/// Alice's expected payoff when every seat plays from `probs`.
pub fn oracle_value(spec: &Arc<GameSpec>, probs: &dyn Fn(&GameState, &Menu) -> Vec<f64>) -> f64 {
    enumerate(spec, probs).iter().map(|l| l.p * l.payoff[0] as f64).sum()
}

/// Brute force over every pure strategy of `p` on the abstract sets `p` can reach.
pub fn oracle_best_response(game: &AbstractGame, strategy: &Strategy, p: Seat) -> f64 {
    let spec = game.spec.clone();
    let mine: Vec<u32> = (0..game.infoset_count() as u32).filter(|i| game.keys[*i as usize].seat == p).collect();
    let sizes: Vec<usize> = mine.iter().map(|i| game.actions(*i).len()).collect();
    let total: usize = sizes.iter().product();
    if total > 1 << 12 {
        return oracle_backward_induction(game, strategy, p);
    }
    let sign = if p == Seat::Alice { 1.0 } else { -1.0 };
    let mut best = f64::NEG_INFINITY;
    for code in 0..total {
        let mut pure = BTreeMap::new();
        let mut c = code;
        for (i, n) in mine.iter().zip(&sizes) {
            pure.insert(*i, c % n);
            c /= n;
        }
        let play = |state: &GameState, menu: &Menu| {
            let id = game.lookup(state, menu).expect("every decision is abstracted");
            if menu.seat == p {
                let mut v = vec![0.0; menu.options.len()];
                v[pure[&id]] = 1.0;
                v
            } else {
                strategy.rows[id as usize].clone()
            }
        };
        best = best.max(sign * oracle_value(&spec, &play));
    }
    best
}

/// Leaf-based backward induction over `p`'s sets, deepest first; valid under perfect recall.
pub fn oracle_backward_induction(game: &AbstractGame, strategy: &Strategy, p: Seat) -> f64 {
    let spec = game.spec.clone();
    let sign = if p == Seat::Alice { 1.0 } else { -1.0 };
    let play = |state: &GameState, menu: &Menu| {
        let id = game.lookup(state, menu).unwrap();
        if menu.seat == p {
            vec![1.0 / menu.options.len() as f64; menu.options.len()]
        } else {
            strategy.rows[id as usize].clone()
        }
    };
    let leaves = enumerate(&spec, &play);
    // Abstract id of every concrete information state, from a second walk.
    let lookup = {
        let m = std::cell::RefCell::new(std::collections::HashMap::new());
        let record = |state: &GameState, menu: &Menu| {
            m.borrow_mut().insert(state.observe(menu.seat), game.lookup(state, menu).unwrap());
            vec![1.0 / menu.options.len() as f64; menu.options.len()]
        };
        enumerate(&spec, &record);
        m.into_inner()
    };
    // (opponent-and-chance reach, p's visits as (id, action), p's payoff)
    let rows: Vec<(f64, Vec<(u32, usize)>, f64)> = leaves
        .iter()
        .map(|l| {
            let mine: Vec<(u32, usize)> =
                l.visits.iter().filter(|v| v.seat == p).map(|v| (lookup[&v.info], v.action)).collect();
            let own: f64 = l.visits.iter().filter(|v| v.seat == p).map(|v| 1.0 / v.options.len() as f64).product();
            (l.p / own, mine, sign * l.payoff[0] as f64)
        })
        .collect();
    let mut depth: BTreeMap<u32, usize> = BTreeMap::new();
    for (_, mine, _) in &rows {
        for (k, (id, _)) in mine.iter().enumerate() {
            let d = depth.entry(*id).or_insert(k);
            *d = (*d).max(k);
        }
    }
    let mut order: Vec<u32> = depth.keys().copied().collect();
    order.sort_by_key(|id| std::cmp::Reverse(depth[id]));
    let mut choice: BTreeMap<u32, usize> = BTreeMap::new();
    for id in order {
        let mut gain = vec![0.0; game.actions(id).len()];
        for (q, mine, u) in &rows {
            if let Some(k) = mine.iter().position(|(i, _)| *i == id) {
                if mine[k + 1..].iter().all(|(i, a)| choice.get(i) == Some(a)) {
                    gain[mine[k].1] += q * u;
                }
            }
        }
        let best = (0..gain.len()).fold(0, |b, a| if gain[a] > gain[b] + 1e-12 { a } else { b });
        choice.insert(id, best);
    }
    rows.iter().filter(|(_, mine, _)| mine.iter().all(|(i, a)| choice[i] == *a)).map(|(q, _, u)| q * u).sum()
}

