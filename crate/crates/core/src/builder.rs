//! Seeded procedural construction of game specifications, the random-play
//! acceptance gates, and pool generation.
//!
//! A single dial `c` in [0, 1] biases every draw: low values give short,
//! single-round wagering games close to Kuhn poker; high values add phases,
//! non-wagering templates, larger decks, and conditional branches.

use std::io::Write;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::engine::{
    chips_var, hand_pile, round_var, standard_piles, standard_variables, ActorRule, Cmp, Condition,
    DeckConfig, EngineError, EventKind, GameSpec, GameState, Operand, Phase, PositionRule, Seat,
    ShowdownMetric, Step, Template, Transition, SHOWDOWN,
};

/// Template tables the builder draws from; hashed into the default version tag.
const TEMPLATE_TABLE: &str = "templates=action,observation,simultaneous,position;\
branches=chips,cards,rounds;metrics=high_card,pairs,rank_sum,low_card;\
phase_count=truncated_geometric(continue=0.15+0.6c);branch_rate=0.1+0.5c;v1";

pub const MAX_AVG_MOVES: f64 = 10.0;
pub const RARE_PHASE_RATE: f64 = 0.05;
pub const MAX_RARE_PHASE_SHARE: f64 = 0.30;
pub const MAX_DEAD_BRANCH_SHARE: f64 = 0.34;
pub const DEFAULT_EPISODES: usize = 2000;

pub fn default_builder_version() -> String {
    let digest = Sha256::digest(TEMPLATE_TABLE.as_bytes());
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BuilderConfig {
    pub dial: f64,
    pub max_phases: u8,
    pub max_deck: u16,
    pub max_hand: u8,
    pub builder_version: String,
}

impl Default for BuilderConfig {
    fn default() -> Self {
        BuilderConfig {
            dial: 0.5,
            max_phases: 6,
            max_deck: 24,
            max_hand: 3,
            builder_version: default_builder_version(),
        }
    }
}

impl BuilderConfig {
    pub fn with_dial(dial: f64) -> Self {
        BuilderConfig { dial, ..Default::default() }
    }

    /// Smallest caps: one phase, one private card, a deck of at most six.
    pub fn minimal(dial: f64) -> Self {
        BuilderConfig { dial, max_phases: 1, max_deck: 6, max_hand: 1, ..Default::default() }
    }
}

#[derive(Debug, Error)]
pub enum BuildError {
    #[error("builder configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Invalid(#[from] EngineError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

fn builder_rng(seed: u64, config: &BuilderConfig) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(config.builder_version.as_bytes());
    h.update(seed.to_le_bytes());
    h.update(config.dial.to_bits().to_le_bytes());
    h.update([config.max_phases, config.max_hand]);
    h.update(config.max_deck.to_le_bytes());
    let digest: [u8; 32] = h.finalize().into();
    ChaCha8Rng::from_seed(digest)
}

fn weighted(rng: &mut ChaCha8Rng, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut x = rng.random::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if x < *w {
            return i;
        }
        x -= w;
    }
    weights.iter().rposition(|w| *w > 0.0).unwrap_or(0)
}

/// Deterministic in (seed, config); a changed `builder_version` changes every draw.
pub fn build_game(seed: u64, config: &BuilderConfig) -> Result<GameSpec, BuildError> {
    let c = config.dial;
    if !(0.0..=1.0).contains(&c) {
        return Err(BuildError::Config(format!("dial {c} outside [0, 1]")));
    }
    if config.max_phases == 0 || config.max_hand == 0 || config.max_deck < 3 {
        return Err(BuildError::Config("caps must allow one phase, one card, and a deck of three".into()));
    }
    let mut rng = builder_rng(seed, config);

    let mut n_phases = 1u8;
    while n_phases < config.max_phases && rng.random::<f64>() < 0.15 + 0.6 * c {
        n_phases += 1;
    }

    let mut ranks = 3 + rng.random_range(0..=(2.0 + 8.0 * c) as u8);
    let mut suits = 1 + rng.random_range(0..=(3.0 * c) as u8);
    let mut copies = if rng.random::<f64>() < 0.2 * c { 2 } else { 1 };
    let hand = (1 + rng.random_range(0..=(2.0 * c) as u8)).min(config.max_hand);
    ranks = ranks.min(13);
    suits = suits.min(4);
    while (ranks as u16) * (suits as u16) * (copies as u16) > config.max_deck {
        if copies > 1 {
            copies -= 1;
        } else if suits > 1 {
            suits -= 1;
        } else {
            ranks -= 1;
        }
    }

    let metric = match weighted(&mut rng, &[1.0, c, c, 0.5 * c]) {
        0 => ShowdownMetric::HighCard,
        1 => ShowdownMetric::Pairs,
        2 => ShowdownMetric::RankSum,
        _ => ShowdownMetric::LowCard,
    };
    let initial_chips = 8 + rng.random_range(0..=(12.0 * c) as i64);

    let mut templates = vec![Template::Action];
    for _ in 1..n_phases {
        let t = weighted(&mut rng, &[1.0, 1.5 * c, c, 0.8 * c]);
        templates.push(Template::ALL[t]);
    }
    let ids: Vec<String> =
        templates.iter().enumerate().map(|(i, t)| format!("{}{}", t.name(), i + 1)).collect();

    let mut has_board = false;
    let mut leader_set = false;
    let mut phases = Vec::with_capacity(templates.len());
    for (i, t) in templates.iter().enumerate() {
        let mut steps = Vec::new();
        if i == 0 {
            steps.push(Step::Shuffle);
            steps.push(Step::Ante { amount: 1 });
            steps.push(Step::DealHands { count: hand });
        }
        match t {
            Template::Action => {
                if i > 0 && rng.random::<f64>() < 0.5 * c {
                    let actor = draw_actor(&mut rng, leader_set);
                    if rng.random::<bool>() {
                        steps.push(Step::Steal { actor, cost: rng.random_range(0..=1) });
                    } else {
                        steps.push(Step::Redraw { actor });
                    }
                }
                let first = if i == 0 { ActorRule::Alice } else { draw_actor(&mut rng, leader_set) };
                let bet = 1 + rng.random_range(0..=(2.0 * c) as i64);
                let max_raises = u8::from(rng.random::<f64>() < c);
                steps.push(Step::Betting { first, bet, max_raises });
            }
            Template::Observation => match rng.random_range(0..3) {
                0 => {
                    steps.push(Step::DealBoard { count: 1 });
                    has_board = true;
                    if rng.random::<bool>() {
                        steps.push(Step::Bonus { amount: 1 });
                    }
                }
                1 => {
                    let actor = draw_actor(&mut rng, leader_set);
                    steps.push(Step::Peek { actor, cost: rng.random_range(0..=1) });
                }
                _ => {
                    let actor = draw_actor(&mut rng, leader_set);
                    steps.push(Step::Declare {
                        actor,
                        options: vec!["strong".into(), "weak".into()],
                    });
                }
            },
            Template::Simultaneous => {
                if rng.random::<bool>() {
                    steps.push(Step::Guess { options: rng.random_range(2..=3), stake: rng.random_range(1..=2) });
                } else {
                    steps.push(Step::Bid { max_bid: rng.random_range(1..=2) });
                }
            }
            Template::Position => {
                let rule = [PositionRule::HighCard, PositionRule::ChipLeader, PositionRule::Coin, PositionRule::Alternate]
                    [rng.random_range(0..4)];
                steps.push(Step::Assign { rule });
                leader_set = true;
            }
        }
        let next = ids.get(i + 1).cloned().unwrap_or_else(|| SHOWDOWN.to_string());
        phases.push(Phase { id: ids[i].clone(), template: *t, start: i == 0, steps, transitions: vec![], next });
    }

    let n = phases.len();
    for i in 0..n {
        if rng.random::<f64>() >= 0.1 + 0.5 * c {
            continue;
        }
        let family = rng.random_range(0..3);
        let forward_target = |rng: &mut ChaCha8Rng| {
            if i + 2 < n {
                ids[rng.random_range(i + 2..n)].clone()
            } else {
                SHOWDOWN.to_string()
            }
        };
        let has_forward = i + 1 < n;
        let transition = match family {
            0 if has_forward => {
                let when = if rng.random::<bool>() {
                    Condition::Compare {
                        lhs: Operand::Var("pot".into()),
                        cmp: Cmp::Ge,
                        rhs: Operand::Const(2 + rng.random_range(1..=4)),
                    }
                } else {
                    let seat = if rng.random::<bool>() { Seat::Alice } else { Seat::Bob };
                    Condition::Compare {
                        lhs: Operand::Var(chips_var(seat)),
                        cmp: Cmp::Gt,
                        rhs: Operand::Var(chips_var(seat.other())),
                    }
                };
                Transition { when, to: forward_target(&mut rng) }
            }
            1 if has_forward => {
                let when = if rng.random::<bool>() {
                    Condition::HandBeats { seat: if rng.random::<bool>() { Seat::Alice } else { Seat::Bob } }
                } else {
                    let pile = if has_board && rng.random::<bool>() {
                        "board".to_string()
                    } else {
                        hand_pile(if rng.random::<bool>() { Seat::Alice } else { Seat::Bob })
                    };
                    Condition::TopRank { pile, cmp: Cmp::Ge, rank: rng.random_range(ranks / 2..ranks) }
                };
                Transition { when, to: forward_target(&mut rng) }
            }
            _ => {
                let lo = usize::from(n > 1 && i >= 1);
                let j = rng.random_range(lo..=i);
                if j == 0 {
                    continue;
                }
                let bound = 2 + rng.random_range(0..=(c * 1.5) as i64);
                Transition {
                    when: Condition::Compare {
                        lhs: Operand::Var(round_var(&ids[j])),
                        cmp: Cmp::Lt,
                        rhs: Operand::Const(bound),
                    },
                    to: ids[j].clone(),
                }
            }
        };
        phases[i].transitions.push(transition);
    }

    let mut spec = GameSpec {
        seed,
        builder_version: config.builder_version.clone(),
        dial: c,
        deck: DeckConfig { ranks, suits, copies },
        piles: standard_piles(has_board),
        variables: Vec::new(),
        phases,
        showdown: metric,
        initial_chips,
    };
    resolve_branches(&mut spec);
    fit_deck(&mut spec, config.max_deck);
    spec.variables = standard_variables(initial_chips, &spec.phases);
    spec.validate()?;
    Ok(spec)
}

fn draw_actor(rng: &mut ChaCha8Rng, leader_set: bool) -> ActorRule {
    let pool: &[ActorRule] = if leader_set {
        &[ActorRule::Alice, ActorRule::Bob, ActorRule::Leader, ActorRule::Follower]
    } else {
        &[ActorRule::Alice, ActorRule::Bob]
    };
    pool[rng.random_range(0..pool.len())]
}

/// Rewrites branches that cannot fire by construction into the phase's unconditional transition.
fn resolve_branches(spec: &mut GameSpec) {
    let max_pot = 2 * spec.initial_chips;
    let mut board_seen = false;
    for phase in spec.phases.iter_mut() {
        board_seen |= phase.steps.iter().any(|s| matches!(s, Step::DealBoard { .. }));
        let mut kept = Vec::new();
        let mut forced: Option<String> = None;
        for t in phase.transitions.drain(..) {
            let impossible = match &t.when {
                Condition::TopRank { pile, .. } => pile == "board" && !board_seen,
                Condition::Compare { lhs: Operand::Var(v), cmp: Cmp::Ge, rhs: Operand::Const(k) } => {
                    v == "pot" && *k > max_pot
                }
                _ => false,
            };
            if impossible && forced.is_none() {
                forced = Some(t.to);
            } else if !impossible {
                kept.push(t);
            }
        }
        phase.transitions = kept;
        if let Some(to) = forced {
            phase.next = to;
        }
    }
}

/// Grows the deck within the cap, then trims loops and card steps, until worst-case demand fits.
fn fit_deck(spec: &mut GameSpec, max_deck: u16) {
    loop {
        spec.variables = standard_variables(spec.initial_chips, &spec.phases);
        if spec.card_demand() <= spec.deck.size() as u64 {
            return;
        }
        let d = &mut spec.deck;
        let grow = |r: u8, s: u8, k: u8| (r as u16) * (s as u16) * (k as u16) <= max_deck;
        if d.ranks < 13 && grow(d.ranks + 1, d.suits, d.copies) {
            d.ranks += 1;
            continue;
        }
        if d.suits < 4 && grow(d.ranks, d.suits + 1, d.copies) {
            d.suits += 1;
            continue;
        }
        let back_edge = spec.phases.iter().enumerate().rev().find_map(|(i, p)| {
            p.transitions
                .iter()
                .position(|t| spec.phase_index(&t.to).is_some_and(|j| j <= i))
                .map(|k| (i, k))
        });
        if let Some((i, k)) = back_edge {
            spec.phases[i].transitions.remove(k);
            continue;
        }
        let card_step = spec.phases.iter().enumerate().rev().find_map(|(i, p)| {
            p.steps
                .iter()
                .rposition(|s| matches!(s, Step::DealBoard { .. } | Step::Redraw { .. } | Step::Bid { .. }))
                .map(|k| (i, k))
        });
        match card_step {
            Some((i, k)) => {
                spec.phases[i].steps.remove(k);
                if spec.phases[i].steps.is_empty() {
                    spec.phases[i].steps.push(Step::Declare {
                        actor: ActorRule::Alice,
                        options: vec!["strong".into(), "weak".into()],
                    });
                }
            }
            None => return,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceReport {
    pub seed: u64,
    pub accepted: bool,
    pub episodes: usize,
    /// Mean decisions per episode for Alice and Bob.
    pub avg_moves: [f64; 2],
    pub phase_fire_fractions: Vec<(String, f64)>,
    pub rare_phase_share: f64,
    /// `None` when the specification has no conditional branches.
    pub dead_branch_fraction: Option<f64>,
    pub reasons: Vec<String>,
}

fn episode_seed(spec_seed: u64, episode: usize) -> u64 {
    use std::hash::Hasher;
    let mut h = fnv::FnvHasher::default();
    h.write(b"acceptance");
    h.write(&spec_seed.to_le_bytes());
    h.write(&(episode as u64).to_le_bytes());
    h.finish()
}

/// Plays `episodes` uniform-random episodes and applies the three gates.
pub fn acceptance_check(spec: &GameSpec, episodes: usize) -> Result<AcceptanceReport, EngineError> {
    let spec = Arc::new(spec.clone());
    spec.validate()?;
    let mut agent = ChaCha8Rng::seed_from_u64(episode_seed(spec.seed, usize::MAX));
    let n_phases = spec.phases.len();
    let mut fired = vec![0usize; n_phases];
    let mut taken: Vec<Vec<bool>> = spec.phases.iter().map(|p| vec![false; p.transitions.len()]).collect();
    let mut moves = [0u64; 2];
    for e in 0..episodes {
        let mut s = GameState::new(spec.clone(), episode_seed(spec.seed, e))?;
        while !s.is_terminal() {
            let n = s.pending_menu().map_or(1, |m| m.options.len());
            s.apply(agent.random_range(0..n))?;
        }
        for (i, f) in fired.iter_mut().enumerate() {
            if s.round(i) > 0 {
                *f += 1;
            }
        }
        for ev in s.events() {
            if let EventKind::Branch { from, index: Some(k), .. } = &ev.kind {
                let i = spec.phase_index(from).expect("known phase");
                taken[i][*k] = true;
            }
        }
        let m = s.moves();
        moves[0] += m[0] as u64;
        moves[1] += m[1] as u64;
    }
    let denom = episodes.max(1) as f64;
    let avg_moves = [moves[0] as f64 / denom, moves[1] as f64 / denom];
    let phase_fire_fractions: Vec<(String, f64)> = spec
        .phases
        .iter()
        .zip(&fired)
        .map(|(p, &f)| (p.id.clone(), f as f64 / denom))
        .collect();
    let rare = phase_fire_fractions.iter().filter(|(_, f)| *f < RARE_PHASE_RATE).count();
    let rare_phase_share = rare as f64 / n_phases as f64;
    let total_branches: usize = taken.iter().map(Vec::len).sum();
    let dead = taken.iter().flatten().filter(|t| !**t).count();
    let dead_branch_fraction = (total_branches > 0).then(|| dead as f64 / total_branches as f64);

    let mut reasons = Vec::new();
    let worst = avg_moves[0].max(avg_moves[1]);
    if worst > MAX_AVG_MOVES {
        reasons.push(format!("average moves per player {worst:.2} exceeds {MAX_AVG_MOVES}"));
    }
    if rare_phase_share > MAX_RARE_PHASE_SHARE {
        let names: Vec<&str> = phase_fire_fractions
            .iter()
            .filter(|(_, f)| *f < RARE_PHASE_RATE)
            .map(|(id, _)| id.as_str())
            .collect();
        reasons.push(format!(
            "{rare} of {n_phases} phases fire in under {:.0}% of episodes ({})",
            RARE_PHASE_RATE * 100.0,
            names.join(", ")
        ));
    }
    if let Some(f) = dead_branch_fraction {
        if f > MAX_DEAD_BRANCH_SHARE {
            reasons.push(format!("{dead} of {total_branches} branches never taken ({:.0}% dead)", f * 100.0));
        }
    }
    Ok(AcceptanceReport {
        seed: spec.seed,
        accepted: reasons.is_empty(),
        episodes,
        avg_moves,
        phase_fire_fractions,
        rare_phase_share,
        dead_branch_fraction,
        reasons,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestRow {
    pub seed: u64,
    pub accepted: bool,
    pub avg_moves: Option<[f64; 2]>,
    pub phase_fire_fractions: Vec<(String, f64)>,
    pub dead_branch_fraction: Option<f64>,
    pub reasons: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoolResult {
    pub accepted: Vec<u64>,
    pub rows: Vec<ManifestRow>,
    /// Set when the scan cap was reached before `target` acceptances.
    pub truncated: bool,
}

pub fn evaluate_seed(seed: u64, config: &BuilderConfig, episodes: usize) -> ManifestRow {
    let outcome = build_game(seed, config)
        .map_err(|e| e.to_string())
        .and_then(|spec| acceptance_check(&spec, episodes).map_err(|e| e.to_string()));
    match outcome {
        Ok(r) => ManifestRow {
            seed,
            accepted: r.accepted,
            avg_moves: Some(r.avg_moves),
            phase_fire_fractions: r.phase_fire_fractions,
            dead_branch_fraction: r.dead_branch_fraction,
            reasons: r.reasons,
        },
        Err(e) => ManifestRow {
            seed,
            accepted: false,
            avg_moves: None,
            phase_fire_fractions: vec![],
            dead_branch_fraction: None,
            reasons: vec![e],
        },
    }
}

/// Scans seeds upward from `seed_start` until `target` are accepted or `max_scan` are tried.
pub fn generate_pool(
    seed_start: u64,
    target: usize,
    config: &BuilderConfig,
    episodes: usize,
    max_scan: u64,
) -> PoolResult {
    const BATCH: u64 = 64;
    let mut rows = Vec::new();
    let mut accepted = Vec::new();
    let mut scanned = 0u64;
    while accepted.len() < target && scanned < max_scan {
        let n = BATCH.min(max_scan - scanned);
        let batch: Vec<ManifestRow> = (0..n)
            .into_par_iter()
            .map(|k| evaluate_seed(seed_start + scanned + k, config, episodes))
            .collect();
        for row in batch {
            scanned += 1;
            if row.accepted {
                accepted.push(row.seed);
            }
            rows.push(row);
            if accepted.len() == target {
                break;
            }
        }
    }
    PoolResult { truncated: accepted.len() < target, accepted, rows }
}

pub fn write_manifest<W: Write>(rows: &[ManifestRow], mut out: W) -> std::io::Result<()> {
    for r in rows {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
