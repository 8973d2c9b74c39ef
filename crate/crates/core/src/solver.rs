//! Tabular CFR+ over an abstraction of the full game tree.
//!
//! The tree is enumerated with explicit chance, so every probability is exact.
//! Concrete information states are lumped into abstract sets keyed on the
//! seat, decision type, legal menu, a hand-strength bucket and the chip bin;
//! the fine level also keys on the visible action path.

use std::collections::HashMap;
use std::fmt;
use std::io::{self, BufRead, Write};
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{showdown_key, DecisionType, EngineError, GameSpec, GameState, Menu, Node, Seat};
use crate::policy::Policy;

/// Size limits beyond which a game counts as intractable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Caps {
    pub nodes: usize,
    pub infosets: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps { nodes: 2_000_000, infosets: 100_000 }
    }
}

/// Hand-strength buckets per (seat, decision type).
pub const HAND_BUCKETS: usize = 8;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("game tree exceeds {cap} nodes")]
    TreeTooLarge { cap: usize },
    #[error("abstraction has {count} information sets, above the cap of {cap}")]
    TooManyInfosets { count: usize, cap: usize },
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("strategy snapshot: {0}")]
    Parse(#[from] serde_json::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Lumping {
    Default,
    Fine,
}

impl fmt::Display for Lumping {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Lumping::Default => "default",
            Lumping::Fine => "fine",
        })
    }
}

impl FromStr for Lumping {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "default" => Ok(Lumping::Default),
            "fine" => Ok(Lumping::Fine),
            _ => Err(format!("unknown lumping level {s:?}")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AbstractKey {
    pub seat: Seat,
    pub dt: DecisionType,
    pub options: Vec<String>,
    pub bucket: u16,
    pub chip_bin: i64,
    /// Present only at the fine level.
    pub path: Option<Vec<String>>,
}

#[derive(Clone, Debug)]
enum TreeNode {
    /// Alice's payoff.
    Terminal(f64),
    Chance(Vec<(f64, u32)>),
    Decision { seat: Seat, infoset: u32, children: Vec<u32> },
}

pub struct AbstractGame {
    pub spec: Arc<GameSpec>,
    pub level: Lumping,
    /// Indexed by abstract id.
    pub keys: Vec<AbstractKey>,
    pub index: HashMap<AbstractKey, u32>,
    /// Sorted distinct showdown keys per (seat, dt); position determines the bucket.
    strengths: HashMap<(Seat, DecisionType), Vec<Vec<i32>>>,
    nodes: Vec<TreeNode>,
}

impl AbstractGame {
    pub fn infoset_count(&self) -> usize {
        self.keys.len()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn actions(&self, id: u32) -> &[String] {
        &self.keys[id as usize].options
    }

    fn strength(state: &GameState, seat: Seat) -> Vec<i32> {
        showdown_key(state.spec().showdown, state.hand(seat), state.board())
    }

    fn bucket_of(&self, seat: Seat, dt: &DecisionType, strength: &[i32]) -> Option<u16> {
        let sorted = self.strengths.get(&(seat, dt.clone()))?;
        let pos = sorted.binary_search_by(|k| k.as_slice().cmp(strength)).ok()?;
        Some(bucket(pos, sorted.len()))
    }

    fn key_parts(state: &GameState, menu: &Menu, level: Lumping) -> (Seat, i64, Option<Vec<String>>) {
        let info = state.observe(menu.seat);
        (menu.seat, info.chip_bin, (level == Lumping::Fine).then_some(info.path))
    }

    /// Abstract id of a live decision, if the abstraction has seen it.
    pub fn lookup(&self, state: &GameState, menu: &Menu) -> Option<u32> {
        let (seat, chip_bin, path) = Self::key_parts(state, menu, self.level);
        let bucket = self.bucket_of(seat, &menu.dt, &Self::strength(state, seat))?;
        let key = AbstractKey { seat, dt: menu.dt.clone(), options: menu.options.clone(), bucket, chip_bin, path };
        self.index.get(&key).copied()
    }
}

fn bucket(pos: usize, n: usize) -> u16 {
    if n <= HAND_BUCKETS {
        pos as u16
    } else {
        (pos * HAND_BUCKETS / n) as u16
    }
}

/// Enumerates the full tree and lumps its information states.
pub fn abstract_game(spec: &Arc<GameSpec>, level: Lumping) -> Result<AbstractGame, SolverError> {
    abstract_game_capped(spec, level, Caps::default())
}

pub fn abstract_game_capped(spec: &Arc<GameSpec>, level: Lumping, caps: Caps) -> Result<AbstractGame, SolverError> {
    // First pass: the tree, with raw keys (strength instead of bucket) on decision nodes.
    struct Raw {
        seat: Seat,
        dt: DecisionType,
        options: Vec<String>,
        strength: Vec<i32>,
        chip_bin: i64,
        path: Option<Vec<String>>,
    }
    let mut nodes: Vec<TreeNode> = Vec::new();
    let mut raws: Vec<Raw> = Vec::new();
    let mut stack: Vec<(GameState, Option<(u32, usize)>)> = vec![(GameState::new_explicit(spec.clone())?, None)];
    while let Some((state, parent)) = stack.pop() {
        if nodes.len() >= caps.nodes {
            return Err(SolverError::TreeTooLarge { cap: caps.nodes });
        }
        let id = nodes.len() as u32;
        let node = match state.node() {
            Node::Terminal => TreeNode::Terminal(state.payoff()?.0 as f64),
            Node::Chance => {
                let outcomes = state.chance_outcomes()?;
                let node = TreeNode::Chance(outcomes.iter().map(|(_, p)| (*p, u32::MAX)).collect());
                for (slot, (o, _)) in outcomes.into_iter().enumerate().rev() {
                    let mut next = state.clone();
                    next.apply_chance(o)?;
                    stack.push((next, Some((id, slot))));
                }
                node
            }
            Node::Decision(seat) => {
                let menu = state.menu()?;
                let (seat_, chip_bin, path) = AbstractGame::key_parts(&state, &menu, level);
                debug_assert_eq!(seat, seat_);
                raws.push(Raw {
                    seat,
                    dt: menu.dt.clone(),
                    options: menu.options.clone(),
                    strength: AbstractGame::strength(&state, seat),
                    chip_bin,
                    path,
                });
                for slot in (0..menu.options.len()).rev() {
                    let mut next = state.clone();
                    next.apply(slot)?;
                    stack.push((next, Some((id, slot))));
                }
                TreeNode::Decision { seat, infoset: (raws.len() - 1) as u32, children: vec![u32::MAX; menu.options.len()] }
            }
        };
        nodes.push(node);
        if let Some((p, slot)) = parent {
            match &mut nodes[p as usize] {
                TreeNode::Chance(c) => c[slot].1 = id,
                TreeNode::Decision { children, .. } => children[slot] = id,
                TreeNode::Terminal(_) => unreachable!("terminals have no children"),
            }
        }
    }

    let mut strengths: HashMap<(Seat, DecisionType), Vec<Vec<i32>>> = HashMap::new();
    for r in &raws {
        strengths.entry((r.seat, r.dt.clone())).or_default().push(r.strength.clone());
    }
    for v in strengths.values_mut() {
        v.sort();
        v.dedup();
    }
    let mut game = AbstractGame { spec: spec.clone(), level, keys: Vec::new(), index: HashMap::new(), strengths, nodes };
    let mut raw_to_id = Vec::with_capacity(raws.len());
    for r in raws {
        let bucket = game.bucket_of(r.seat, &r.dt, &r.strength).expect("strength was recorded");
        let key = AbstractKey { seat: r.seat, dt: r.dt, options: r.options, bucket, chip_bin: r.chip_bin, path: r.path };
        let next = game.keys.len() as u32;
        let id = *game.index.entry(key.clone()).or_insert_with(|| {
            game.keys.push(key);
            next
        });
        raw_to_id.push(id);
        if game.keys.len() > caps.infosets {
            return Err(SolverError::TooManyInfosets { count: game.keys.len(), cap: caps.infosets });
        }
    }
    for n in &mut game.nodes {
        if let TreeNode::Decision { infoset, .. } = n {
            *infoset = raw_to_id[*infoset as usize];
        }
    }
    Ok(game)
}

/// One probability row per abstract information set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Strategy {
    pub rows: Vec<Vec<f64>>,
}

impl Strategy {
    pub fn uniform(game: &AbstractGame) -> Self {
        Strategy { rows: game.keys.iter().map(|k| vec![1.0 / k.options.len() as f64; k.options.len()]).collect() }
    }
}

/// Cumulative regrets (never negative) and linearly weighted strategy sums.
#[derive(Clone, Debug)]
pub struct SolverState {
    pub regrets: Vec<Vec<f64>>,
    pub weights: Vec<Vec<f64>>,
    pub iteration: u64,
}

impl SolverState {
    pub fn new(game: &AbstractGame) -> Self {
        let zeros: Vec<Vec<f64>> = game.keys.iter().map(|k| vec![0.0; k.options.len()]).collect();
        SolverState { regrets: zeros.clone(), weights: zeros, iteration: 0 }
    }

    pub fn current(&self) -> Strategy {
        Strategy { rows: self.regrets.iter().map(|r| normalise_or_uniform(r)).collect() }
    }

    pub fn average(&self) -> Strategy {
        Strategy { rows: self.weights.iter().map(|w| normalise_or_uniform(w)).collect() }
    }

    /// One iteration: Alice's regrets update against the current profile, then Bob's.
    pub fn iterate(&mut self, game: &AbstractGame) {
        self.iteration += 1;
        let t = self.iteration as f64;
        for p in Seat::BOTH {
            let sigma = self.current();
            let mut delta: Vec<Vec<f64>> = self.regrets.iter().map(|r| vec![0.0; r.len()]).collect();
            self.traverse(game, 0, p, 1.0, 1.0, &sigma, &mut delta, t);
            for (r, d) in self.regrets.iter_mut().zip(&delta) {
                for (x, dx) in r.iter_mut().zip(d) {
                    *x = (*x + dx).max(0.0);
                }
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn traverse(
        &mut self,
        game: &AbstractGame,
        node: u32,
        p: Seat,
        reach_p: f64,
        reach_o: f64,
        sigma: &Strategy,
        delta: &mut [Vec<f64>],
        t: f64,
    ) -> f64 {
        let sign = if p == Seat::Alice { 1.0 } else { -1.0 };
        match &game.nodes[node as usize] {
            TreeNode::Terminal(v) => sign * v,
            TreeNode::Chance(children) => children
                .iter()
                .map(|(q, c)| q * self.traverse(game, *c, p, reach_p, reach_o * q, sigma, delta, t))
                .sum(),
            TreeNode::Decision { seat, infoset, children } => {
                let i = *infoset as usize;
                let s = &sigma.rows[i];
                if *seat == p {
                    let vals: Vec<f64> = children
                        .iter()
                        .zip(s)
                        .map(|(c, a)| self.traverse(game, *c, p, reach_p * a, reach_o, sigma, delta, t))
                        .collect();
                    let v: f64 = vals.iter().zip(s).map(|(x, a)| x * a).sum();
                    for a in 0..vals.len() {
                        delta[i][a] += reach_o * (vals[a] - v);
                        self.weights[i][a] += t * reach_p * s[a];
                    }
                    v
                } else {
                    let mut v = 0.0;
                    for (c, a) in children.iter().zip(s) {
                        if *a > 0.0 {
                            v += a * self.traverse(game, *c, p, reach_p, reach_o * a, sigma, delta, t);
                        }
                    }
                    v
                }
            }
        }
    }
}

fn normalise_or_uniform(x: &[f64]) -> Vec<f64> {
    let total: f64 = x.iter().sum();
    if total > 0.0 {
        x.iter().map(|v| v / total).collect()
    } else {
        vec![1.0 / x.len() as f64; x.len()]
    }
}

/// Runs `iterations` CFR+ iterations and returns the normalised average strategy.
pub fn cfr_plus_solve(game: &AbstractGame, iterations: u64) -> Strategy {
    cfr_plus_with_checkpoints(game, iterations, 0).0
}

/// As [`cfr_plus_solve`], also logging exploitability every `every` iterations (0 disables).
pub fn cfr_plus_with_checkpoints(game: &AbstractGame, iterations: u64, every: u64) -> (Strategy, Vec<(u64, f64)>) {
    let mut state = SolverState::new(game);
    let mut log = Vec::new();
    for _ in 0..iterations.max(1) {
        state.iterate(game);
        if every > 0 && state.iteration % every == 0 {
            log.push((state.iteration, exploitability(game, &state.average())));
        }
    }
    (state.average(), log)
}

/// Alice's expected payoff when both seats follow `strategy`.
pub fn expected_value(game: &AbstractGame, strategy: &Strategy) -> f64 {
    fn walk(game: &AbstractGame, s: &Strategy, n: u32) -> f64 {
        match &game.nodes[n as usize] {
            TreeNode::Terminal(v) => *v,
            TreeNode::Chance(c) => c.iter().map(|(q, k)| q * walk(game, s, *k)).sum(),
            TreeNode::Decision { infoset, children, .. } => {
                children.iter().zip(&s.rows[*infoset as usize]).map(|(k, a)| a * walk(game, s, *k)).sum()
            }
        }
    }
    walk(game, strategy, 0)
}

/// Best pure response for `p` against `strategy`, choosing one action per abstract set,
/// found by policy iteration; returns `p`'s value. Exact under perfect recall. When the
/// abstraction forgets, a pure response can trail the strategy itself, so the result is
/// floored at `p`'s on-strategy value and is a lower bound.
pub fn best_response_value(game: &AbstractGame, strategy: &Strategy, p: Seat) -> f64 {
    let sign = if p == Seat::Alice { 1.0 } else { -1.0 };
    let mut choice: Vec<usize> = strategy
        .rows
        .iter()
        .map(|r| r.iter().enumerate().fold(0, |b, (i, x)| if *x > r[b] { i } else { b }))
        .collect();
    // Opponent-and-chance reach of every node; independent of p's choices.
    let mut reach = vec![0.0; game.nodes.len()];
    reach[0] = 1.0;
    let mut order = vec![0u32];
    let mut k = 0;
    while k < order.len() {
        let n = order[k];
        k += 1;
        let r = reach[n as usize];
        match &game.nodes[n as usize] {
            TreeNode::Terminal(_) => {}
            TreeNode::Chance(c) => {
                for (q, c) in c {
                    reach[*c as usize] = r * q;
                    order.push(*c);
                }
            }
            TreeNode::Decision { seat, infoset, children } => {
                for (a, c) in children.iter().enumerate() {
                    reach[*c as usize] = if *seat == p { r } else { r * strategy.rows[*infoset as usize][a] };
                    order.push(*c);
                }
            }
        }
    }
    let mut value = vec![0.0; game.nodes.len()];
    for _ in 0..1000 {
        // Children precede parents in reverse BFS order.
        for &n in order.iter().rev() {
            value[n as usize] = match &game.nodes[n as usize] {
                TreeNode::Terminal(v) => sign * v,
                TreeNode::Chance(c) => c.iter().map(|(q, k)| q * value[*k as usize]).sum(),
                TreeNode::Decision { seat, infoset, children } => {
                    if *seat == p {
                        value[children[choice[*infoset as usize]] as usize]
                    } else {
                        children.iter().zip(&strategy.rows[*infoset as usize]).map(|(k, a)| a * value[*k as usize]).sum()
                    }
                }
            };
        }
        let mut gains: Vec<Vec<f64>> = game.keys.iter().map(|k| vec![0.0; k.options.len()]).collect();
        for (n, node) in game.nodes.iter().enumerate() {
            if let TreeNode::Decision { seat, infoset, children } = node {
                if *seat == p {
                    for (a, c) in children.iter().enumerate() {
                        gains[*infoset as usize][a] += reach[n] * value[*c as usize];
                    }
                }
            }
        }
        let mut changed = false;
        for (i, g) in gains.iter().enumerate() {
            if game.keys[i].seat != p {
                continue;
            }
            let best = g.iter().enumerate().fold(0, |b, (a, x)| if *x > g[b] + 1e-12 { a } else { b });
            if g[best] > g[choice[i]] + 1e-12 {
                choice[i] = best;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    value[0].max(sign * expected_value(game, strategy))
}

/// Sum of both seats' best-response values; zero exactly at an equilibrium of the abstract game.
pub fn exploitability(game: &AbstractGame, strategy: &Strategy) -> f64 {
    (best_response_value(game, strategy, Seat::Alice) + best_response_value(game, strategy, Seat::Bob)).max(0.0)
}

/// Plays the average strategy; unseen decisions fall back to uniform.
pub struct SolvedPolicy {
    pub game: Arc<AbstractGame>,
    pub strategy: Strategy,
}

impl Policy for SolvedPolicy {
    fn probabilities(&self, state: &GameState, menu: &Menu) -> Vec<f64> {
        match self.game.lookup(state, menu) {
            Some(id) => self.strategy.rows[id as usize].clone(),
            None => vec![1.0 / menu.options.len() as f64; menu.options.len()],
        }
    }
}

#[derive(Serialize, Deserialize)]
struct SnapshotRow {
    id: u32,
    key: AbstractKey,
    probabilities: Vec<f64>,
}

/// One JSON line per abstract set: id, key and action probabilities.
pub fn write_strategy<W: Write>(game: &AbstractGame, strategy: &Strategy, mut out: W) -> Result<(), SolverError> {
    for (i, (key, row)) in game.keys.iter().zip(&strategy.rows).enumerate() {
        serde_json::to_writer(&mut out, &SnapshotRow { id: i as u32, key: key.clone(), probabilities: row.clone() })?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Reads a snapshot back against the same abstraction; rows are matched by key.
pub fn read_strategy<R: BufRead>(game: &AbstractGame, input: R) -> Result<Strategy, SolverError> {
    let mut s = Strategy::uniform(game);
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() || line.contains("\"_provenance\"") {
            continue;
        }
        let row: SnapshotRow = serde_json::from_str(&line)?;
        if let Some(id) = game.index.get(&row.key) {
            s.rows[*id as usize] = row.probabilities;
        }
    }
    Ok(s)
}
