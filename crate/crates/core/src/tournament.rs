//! Paired-seat scheduling, match execution, replay, and the ablation harness.
//!
//! Every run is a pair of slots sharing one play seed with the seats swapped,
//! so both orientations of a matchup see identical chance draws.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::hash::Hasher;
use std::io::{self, BufRead, Write};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::axes::{l1_best_response, run_l0};
use crate::engine::{EngineError, GameSpec, GameState, Menu, Seat};
use crate::policy::{sample, EpsilonGreedy, Policy, TablePolicy, Uniform};
use crate::seeding;
use crate::solver::{abstract_game, cfr_plus_solve, Lumping, SolvedPolicy};
use crate::textio::{parse_reply, render_observation, render_rulebook, ParsePath};

#[derive(Debug, Error)]
pub enum TournamentError {
    #[error("a matchup needs two different models, got {0:?} twice")]
    SameModel(String),
    #[error("matches per matchup must be even and positive, got {0}")]
    OddBudget(usize),
    #[error("need at least two models, got {0}")]
    TooFewModels(usize),
    #[error("duplicate model id {0:?}")]
    DuplicateModel(String),
    #[error("remote binding {model:?}: snapshot tag {tag:?} is not dated (expected YYYY-MM-DD or YYYYMMDD)")]
    UndatedSnapshot { model: String, tag: String },
    #[error("no binding for model {0:?}")]
    UnknownModel(String),
    #[error("no specification for game {0}")]
    UnknownGame(u64),
    #[error("replay of slot diverged: {0}")]
    Replay(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("slot table line {line}: {source}")]
    Parse { line: usize, source: serde_json::Error },
}

/// FNV-1a, 64-bit.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = fnv::FnvHasher::default();
    h.write(bytes);
    h.finish()
}

/// Digest of `genstrat-play|<game>|<run>|<lo>|<hi>` with the model ids sorted.
pub fn derive_play_seed(game_seed: u64, run_id: u32, m1: &str, m2: &str) -> Result<u64, TournamentError> {
    if m1 == m2 {
        return Err(TournamentError::SameModel(m1.to_string()));
    }
    let (lo, hi) = if m1 < m2 { (m1, m2) } else { (m2, m1) };
    Ok(fnv1a64(format!("genstrat-play|{game_seed}|{run_id}|{lo}|{hi}").as_bytes()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coverage {
    /// Every pair of models meets on every game.
    RoundRobin,
    /// Models sit on a per-game shuffled ring and meet their two neighbours.
    Ring,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Matchup {
    pub game_seed: u64,
    /// Sorted so that `m1 < m2`.
    pub m1: String,
    pub m2: String,
    pub run_id: u32,
    pub play_seed: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduledSlot {
    pub matchup: Matchup,
    pub alice: String,
    pub bob: String,
}

/// Pairs of model indices meeting on game `gi`.
fn pairs_for_game(n: usize, coverage: Coverage, schedule_seed: u64, gi: usize) -> Vec<(usize, usize)> {
    match coverage {
        Coverage::RoundRobin => (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect(),
        Coverage::Ring if n <= 3 => (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect(),
        Coverage::Ring => {
            let mut ring: Vec<usize> = (0..n).collect();
            ring.shuffle(&mut seeding::rng("schedule-ring", &[schedule_seed, gi as u64]));
            let mut pairs: Vec<(usize, usize)> =
                (0..n).map(|k| (ring[k], ring[(k + 1) % n])).map(|(a, b)| (a.min(b), a.max(b))).collect();
            pairs.sort();
            pairs
        }
    }
}

/// Slots for every scheduled (pair, game): `matches_per_matchup / 2` runs, each run one slot per seat order.
pub fn schedule(
    models: &[String],
    games: &[u64],
    matches_per_matchup: usize,
    coverage: Coverage,
    schedule_seed: u64,
) -> Result<Vec<ScheduledSlot>, TournamentError> {
    if matches_per_matchup == 0 || matches_per_matchup % 2 == 1 {
        return Err(TournamentError::OddBudget(matches_per_matchup));
    }
    if models.len() < 2 {
        return Err(TournamentError::TooFewModels(models.len()));
    }
    let mut sorted = models.to_vec();
    sorted.sort();
    if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
        return Err(TournamentError::DuplicateModel(w[0].clone()));
    }
    let mut out = Vec::new();
    for (gi, &g) in games.iter().enumerate() {
        for (i, j) in pairs_for_game(sorted.len(), coverage, schedule_seed, gi) {
            let (m1, m2) = (&sorted[i], &sorted[j]);
            for r in 0..(matches_per_matchup / 2) as u32 {
                let play_seed = derive_play_seed(g, r, m1, m2)?;
                let matchup = Matchup { game_seed: g, m1: m1.clone(), m2: m2.clone(), run_id: r, play_seed };
                out.push(ScheduledSlot { matchup: matchup.clone(), alice: m1.clone(), bob: m2.clone() });
                out.push(ScheduledSlot { matchup, alice: m2.clone(), bob: m1.clone() });
            }
        }
    }
    Ok(out)
}

/// Remote text-completion endpoint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RemoteConfig {
    pub url: String,
    /// Name of the environment variable holding the bearer token; never the token itself.
    #[serde(default)]
    pub api_key_env: Option<String>,
    /// Dated model snapshot, e.g. `vendor-model-2025-08-07`.
    pub snapshot: String,
    #[serde(default)]
    pub thinking_tier: Option<String>,
    #[serde(default = "default_attempts")]
    pub attempts: u32,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
    #[serde(default = "default_backoff_ms")]
    pub backoff_ms: u64,
    /// Minimum spacing between requests from this binding.
    #[serde(default)]
    pub min_interval_ms: u64,
    /// Provider-specific fields, merged into the request body untouched.
    #[serde(default)]
    pub extra: BTreeMap<String, Value>,
}

fn default_attempts() -> u32 {
    3
}
fn default_timeout_ms() -> u64 {
    120_000
}
fn default_backoff_ms() -> u64 {
    1_000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AgentKind {
    Random,
    /// Empirical best response to uniform play, trained on `l0_episodes`.
    L1 {
        #[serde(default = "default_l0")]
        l0_episodes: usize,
    },
    /// L1 mixed with uniform play at rate `epsilon`.
    Mixture {
        epsilon: f64,
        #[serde(default = "default_l0")]
        l0_episodes: usize,
    },
    /// CFR+ average strategy where the game is tractable, otherwise L1.
    CfrPlus {
        #[serde(default = "default_iterations")]
        iterations: u64,
        #[serde(default = "default_lumping")]
        lumping: Lumping,
        #[serde(default = "default_l0")]
        l0_episodes: usize,
    },
    Remote(RemoteConfig),
}

fn default_l0() -> usize {
    3000
}
fn default_iterations() -> u64 {
    2000
}
fn default_lumping() -> Lumping {
    Lumping::Default
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentBinding {
    pub model: String,
    #[serde(flatten)]
    pub kind: AgentKind,
}

fn dated() -> &'static Regex {
    static RE: std::sync::OnceLock<Regex> = std::sync::OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(19|20)\d\d-?(0[1-9]|1[0-2])-?(0[1-9]|[12]\d|3[01])").unwrap())
}

impl AgentBinding {
    pub fn validate(&self) -> Result<(), TournamentError> {
        if let AgentKind::Remote(r) = &self.kind {
            if !dated().is_match(&r.snapshot) {
                return Err(TournamentError::UndatedSnapshot { model: self.model.clone(), tag: r.snapshot.clone() });
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Decision {
    pub index: usize,
    pub fallback: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AgentFailure {
    /// Retries exhausted; the slot is discarded.
    Timeout(String),
}

pub trait Agent: Send + Sync {
    fn decide(&self, state: &GameState, menu: &Menu, rng: &mut ChaCha8Rng) -> Result<Decision, AgentFailure>;
    /// Settings recorded with every slot this agent plays.
    fn snapshot(&self) -> Value;
}

/// A scripted agent sampling from a policy.
pub struct PolicyAgent {
    pub policy: Box<dyn Policy>,
    pub config: Value,
}

impl Agent for PolicyAgent {
    fn decide(&self, state: &GameState, menu: &Menu, rng: &mut ChaCha8Rng) -> Result<Decision, AgentFailure> {
        Ok(Decision { index: sample(&self.policy.probabilities(state, menu), rng), fallback: false })
    }

    fn snapshot(&self) -> Value {
        self.config.clone()
    }
}

pub struct RemoteAgent {
    pub model: String,
    pub config: RemoteConfig,
    pub rulebook: String,
    http: ureq::Agent,
    last: Mutex<Option<Instant>>,
}

impl RemoteAgent {
    pub fn new(model: &str, config: RemoteConfig, spec: &GameSpec) -> Self {
        let http: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_millis(config.timeout_ms)))
            .build()
            .into();
        RemoteAgent { model: model.to_string(), rulebook: render_rulebook(spec), config, http, last: Mutex::new(None) }
    }

    fn request_body(&self, prompt: &str) -> Value {
        let mut body = serde_json::Map::new();
        body.insert("model".into(), Value::String(self.config.snapshot.clone()));
        body.insert("system".into(), Value::String(self.rulebook.clone()));
        body.insert("prompt".into(), Value::String(prompt.to_string()));
        if let Some(t) = &self.config.thinking_tier {
            body.insert("capability_tier".into(), Value::String(t.clone()));
        }
        for (k, v) in &self.config.extra {
            body.insert(k.clone(), v.clone());
        }
        Value::Object(body)
    }

    fn pace(&self) {
        if self.config.min_interval_ms == 0 {
            return;
        }
        let mut last = self.last.lock().expect("pacing lock");
        if let Some(t) = *last {
            let gap = Duration::from_millis(self.config.min_interval_ms);
            let since = t.elapsed();
            if since < gap {
                std::thread::sleep(gap - since);
            }
        }
        *last = Some(Instant::now());
    }

    /// Sends one completion request, retrying with doubling backoff.
    pub fn complete(&self, prompt: &str) -> Result<String, AgentFailure> {
        let body = self.request_body(prompt).to_string();
        let token = self.config.api_key_env.as_ref().and_then(|v| std::env::var(v).ok());
        let mut last_err = String::new();
        for attempt in 0..self.config.attempts.max(1) {
            if attempt > 0 {
                std::thread::sleep(Duration::from_millis(self.config.backoff_ms << (attempt - 1).min(10)));
            }
            self.pace();
            let mut req = self.http.post(&self.config.url).header("Content-Type", "application/json");
            if let Some(t) = &token {
                req = req.header("Authorization", &format!("Bearer {t}"));
            }
            match req.send(body.as_str()) {
                Ok(mut resp) => match resp.body_mut().read_to_string() {
                    Ok(text) => return Ok(text),
                    Err(e) => last_err = e.to_string(),
                },
                Err(e) => last_err = e.to_string(),
            }
        }
        Err(AgentFailure::Timeout(format!("{}: {} attempts failed, last error: {last_err}", self.model, self.config.attempts)))
    }
}

impl Agent for RemoteAgent {
    fn decide(&self, state: &GameState, menu: &Menu, rng: &mut ChaCha8Rng) -> Result<Decision, AgentFailure> {
        let reply = self.complete(&render_observation(state, menu.seat))?;
        let parsed = parse_reply(&reply, menu, rng);
        Ok(Decision { index: parsed.index, fallback: parsed.path == ParsePath::Fallback })
    }

    fn snapshot(&self) -> Value {
        serde_json::json!({
            "kind": "remote",
            "snapshot": self.config.snapshot,
            "thinking_tier": self.config.thinking_tier,
            "extra": self.config.extra,
        })
    }
}

fn l1_policy(spec: &Arc<GameSpec>, episodes: usize) -> Result<TablePolicy, EngineError> {
    let log = run_l0(spec, episodes, seeding::derive("agent-l1", &[spec.seed]))?;
    Ok(l1_best_response(&log))
}

/// Builds the agent for one game; L1 and CFR+ training happen here.
pub fn prepare_agent(binding: &AgentBinding, spec: &Arc<GameSpec>) -> Result<Box<dyn Agent>, TournamentError> {
    binding.validate()?;
    let config = serde_json::to_value(&binding.kind).expect("agent kinds serialise");
    Ok(match &binding.kind {
        AgentKind::Random => Box::new(PolicyAgent { policy: Box::new(Uniform), config }),
        AgentKind::L1 { l0_episodes } => {
            Box::new(PolicyAgent { policy: Box::new(l1_policy(spec, *l0_episodes)?), config })
        }
        AgentKind::Mixture { epsilon, l0_episodes } => Box::new(PolicyAgent {
            policy: Box::new(EpsilonGreedy { base: l1_policy(spec, *l0_episodes)?, epsilon: *epsilon }),
            config,
        }),
        AgentKind::CfrPlus { iterations, lumping, l0_episodes } => match abstract_game(spec, *lumping) {
            Ok(game) => {
                let strategy = cfr_plus_solve(&game, *iterations);
                let mut config = config;
                config["solved"] = Value::Bool(true);
                Box::new(PolicyAgent { policy: Box::new(SolvedPolicy { game: Arc::new(game), strategy }), config })
            }
            Err(_) => {
                let mut config = config;
                config["solved"] = Value::Bool(false);
                Box::new(PolicyAgent { policy: Box::new(l1_policy(spec, *l0_episodes)?), config })
            }
        },
        AgentKind::Remote(r) => Box::new(RemoteAgent::new(&binding.model, r.clone(), spec)),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlotStatus {
    Ok,
    DiscardedTimeout,
    Error,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlotRow {
    pub game_seed: u64,
    pub model_alice: String,
    pub model_bob: String,
    pub run_id: u32,
    pub play_seed: u64,
    /// Alice's net chips; Bob's is the negation.
    pub margin: i64,
    pub moves: [u32; 2],
    pub fallbacks: [u32; 2],
    pub agents: [Value; 2],
    pub status: SlotStatus,
    /// Chosen menu indices in play order.
    pub actions: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl SlotRow {
    pub fn is_ok(&self) -> bool {
        self.status == SlotStatus::Ok
    }

    /// Margin from `model`'s point of view, if it played in this slot.
    pub fn margin_for(&self, model: &str) -> Option<i64> {
        if self.model_alice == model {
            Some(self.margin)
        } else if self.model_bob == model {
            Some(-self.margin)
        } else {
            None
        }
    }
}

fn agent_rng(play_seed: u64, seat: Seat) -> ChaCha8Rng {
    seeding::rng("agent", &[play_seed, seat.index() as u64])
}

/// Plays one slot to the end. Agent decisions draw from streams derived from the play seed.
pub fn run_slot(
    spec: &Arc<GameSpec>,
    agents: [&dyn Agent; 2],
    models: [&str; 2],
    run_id: u32,
    play_seed: u64,
) -> SlotRow {
    let mut row = SlotRow {
        game_seed: spec.seed,
        model_alice: models[0].to_string(),
        model_bob: models[1].to_string(),
        run_id,
        play_seed,
        margin: 0,
        moves: [0, 0],
        fallbacks: [0, 0],
        agents: [agents[0].snapshot(), agents[1].snapshot()],
        status: SlotStatus::Ok,
        actions: Vec::new(),
        error: None,
    };
    let mut rngs = [agent_rng(play_seed, Seat::Alice), agent_rng(play_seed, Seat::Bob)];
    let mut state = match GameState::new(spec.clone(), play_seed) {
        Ok(s) => s,
        Err(e) => {
            row.status = SlotStatus::Error;
            row.error = Some(e.to_string());
            return row;
        }
    };
    while let Some(menu) = state.pending_menu().cloned() {
        let i = menu.seat.index();
        match agents[i].decide(&state, &menu, &mut rngs[i]) {
            Ok(d) => {
                row.moves[i] += 1;
                row.fallbacks[i] += d.fallback as u32;
                row.actions.push(d.index);
                if let Err(e) = state.apply(d.index) {
                    row.status = SlotStatus::Error;
                    row.error = Some(e.to_string());
                    return row;
                }
            }
            Err(AgentFailure::Timeout(msg)) => {
                row.status = SlotStatus::DiscardedTimeout;
                row.error = Some(msg);
                return row;
            }
        }
    }
    match state.payoff() {
        Ok((a, _)) => row.margin = a,
        Err(e) => {
            row.status = SlotStatus::Error;
            row.error = Some(e.to_string());
        }
    }
    row
}

/// Re-applies a slot's recorded actions and returns the margin, checking it against the row.
pub fn replay_slot(spec: &Arc<GameSpec>, row: &SlotRow) -> Result<i64, TournamentError> {
    let mut state = GameState::new(spec.clone(), row.play_seed)?;
    for &a in &row.actions {
        state.apply(a)?;
    }
    if !state.is_terminal() {
        return Err(TournamentError::Replay("action log ends before the game does".into()));
    }
    let margin = state.payoff()?.0;
    if margin != row.margin {
        return Err(TournamentError::Replay(format!("recorded margin {} but replay gives {margin}", row.margin)));
    }
    Ok(margin)
}

/// Chance-event log of a play seed: everything except agent choices.
pub fn chance_log(spec: &Arc<GameSpec>, row: &SlotRow) -> Result<Vec<String>, TournamentError> {
    use crate::engine::EventKind;
    let mut state = GameState::new(spec.clone(), row.play_seed)?;
    for &a in &row.actions {
        state.apply(a)?;
    }
    Ok(state
        .events()
        .iter()
        .filter_map(|e| match &e.kind {
            EventKind::Deal { seat, card } => Some(format!("deal {seat:?} {card}")),
            EventKind::Peek { card, .. } => Some(format!("peek {card}")),
            EventKind::Redraw { drawn, .. } => Some(format!("draw {drawn}")),
            EventKind::Steal { taken, .. } => Some(format!("steal {taken}")),
            EventKind::Leader { seat } => Some(format!("leader {seat:?}")),
            _ => None,
        })
        .collect())
}

/// Agents prepared per (model, game), shared across that game's slots.
pub struct AgentPool {
    agents: HashMap<(String, u64), Box<dyn Agent>>,
}

impl AgentPool {
    pub fn prepare(
        bindings: &[AgentBinding],
        specs: &BTreeMap<u64, Arc<GameSpec>>,
        needed: &BTreeSet<(String, u64)>,
    ) -> Result<Self, TournamentError> {
        let by_model: HashMap<&str, &AgentBinding> = bindings.iter().map(|b| (b.model.as_str(), b)).collect();
        let built: Result<Vec<_>, TournamentError> = needed
            .par_iter()
            .map(|(m, g)| {
                let b = by_model.get(m.as_str()).ok_or_else(|| TournamentError::UnknownModel(m.clone()))?;
                let spec = specs.get(g).ok_or(TournamentError::UnknownGame(*g))?;
                Ok(((m.clone(), *g), prepare_agent(b, spec)?))
            })
            .collect();
        Ok(AgentPool { agents: built?.into_iter().collect() })
    }

    pub fn get(&self, model: &str, game: u64) -> Option<&dyn Agent> {
        self.agents.get(&(model.to_string(), game)).map(|b| b.as_ref())
    }
}

/// Runs every scheduled slot in parallel; rows come back in schedule order.
pub fn run_tournament(
    specs: &BTreeMap<u64, Arc<GameSpec>>,
    bindings: &[AgentBinding],
    slots: &[ScheduledSlot],
) -> Result<Vec<SlotRow>, TournamentError> {
    let needed: BTreeSet<(String, u64)> = slots
        .iter()
        .flat_map(|s| [(s.alice.clone(), s.matchup.game_seed), (s.bob.clone(), s.matchup.game_seed)])
        .collect();
    let pool = AgentPool::prepare(bindings, specs, &needed)?;
    Ok(slots
        .par_iter()
        .map(|s| {
            let g = s.matchup.game_seed;
            let spec = &specs[&g];
            let a = pool.get(&s.alice, g).expect("prepared");
            let b = pool.get(&s.bob, g).expect("prepared");
            run_slot(spec, [a, b], [&s.alice, &s.bob], s.matchup.run_id, s.matchup.play_seed)
        })
        .collect())
}

pub fn write_slots<W: Write>(rows: &[SlotRow], mut out: W) -> Result<(), TournamentError> {
    for r in rows {
        serde_json::to_writer(&mut out, r).map_err(|e| TournamentError::Parse { line: 0, source: e })?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Reads a slot table, skipping blank lines and `_provenance` records; errors carry the line number.
pub fn read_slots<R: BufRead>(input: R) -> Result<Vec<SlotRow>, TournamentError> {
    let mut rows = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() || line.contains("\"_provenance\"") {
            continue;
        }
        rows.push(serde_json::from_str(&line).map_err(|e| TournamentError::Parse { line: i + 1, source: e })?);
    }
    Ok(rows)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FallbackStat {
    pub moves: u64,
    pub fallback_moves: u64,
    pub slots: u64,
    pub slots_with_fallback: u64,
    pub move_rate: f64,
    pub slot_rate: f64,
}

/// Per model, over both seats: fallback moves / moves, and slots with any fallback / slots.
pub fn fallback_report(rows: &[SlotRow]) -> BTreeMap<String, FallbackStat> {
    let mut out: BTreeMap<String, FallbackStat> = BTreeMap::new();
    for r in rows {
        for (seat, model) in [&r.model_alice, &r.model_bob].into_iter().enumerate() {
            let s = out.entry(model.clone()).or_default();
            s.moves += r.moves[seat] as u64;
            s.fallback_moves += r.fallbacks[seat] as u64;
            s.slots += 1;
            s.slots_with_fallback += (r.fallbacks[seat] > 0) as u64;
        }
    }
    for s in out.values_mut() {
        s.move_rate = if s.moves > 0 { s.fallback_moves as f64 / s.moves as f64 } else { 0.0 };
        s.slot_rate = if s.slots > 0 { s.slots_with_fallback as f64 / s.slots as f64 } else { 0.0 };
    }
    out
}

/// One low-effort slot and its high-effort sibling against the same anchor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationPair {
    pub family: String,
    pub anchor: String,
    pub game_seed: u64,
    pub run_id: u32,
    pub play_seed: u64,
    /// Seat of the varied family.
    pub seat: Seat,
    pub low: SlotRow,
    pub high: SlotRow,
}

impl AblationPair {
    /// High minus low, from the family's perspective.
    pub fn delta(&self) -> f64 {
        let s = if self.seat == Seat::Alice { 1.0 } else { -1.0 };
        s * (self.high.margin - self.low.margin) as f64
    }
}

/// The two anchors at opposite ends of a leaderboard, ignoring `exclude`.
pub fn pick_anchors(leaderboard: &[(String, f64)], exclude: &[String]) -> Option<(String, String)> {
    let mut rest: Vec<&(String, f64)> = leaderboard.iter().filter(|(m, _)| !exclude.contains(m)).collect();
    if rest.len() < 2 {
        return None;
    }
    rest.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    Some((rest[0].0.clone(), rest[rest.len() - 1].0.clone()))
}

#[derive(Clone, Debug, Default)]
pub struct AblationOutput {
    pub pairs: Vec<AblationPair>,
    /// Pairs dropped because a sibling was not ok.
    pub excluded: Vec<String>,
}

/// Low and high variants of one family each play every anchor on every game with shared play seeds and seats.
pub fn run_ablation(
    family: &str,
    low: &AgentBinding,
    high: &AgentBinding,
    anchors: &[AgentBinding],
    specs: &BTreeMap<u64, Arc<GameSpec>>,
    runs: u32,
) -> Result<AblationOutput, TournamentError> {
    let mut bindings = vec![low.clone(), high.clone()];
    bindings.extend(anchors.iter().cloned());
    let mut needed = BTreeSet::new();
    for g in specs.keys() {
        for b in &bindings {
            needed.insert((b.model.clone(), *g));
        }
    }
    let pool = AgentPool::prepare(&bindings, specs, &needed)?;
    let mut jobs = Vec::new();
    for (g, spec) in specs {
        for anchor in anchors {
            for r in 0..runs {
                let play_seed = derive_play_seed(*g, r, family, &anchor.model)?;
                for seat in Seat::BOTH {
                    jobs.push((spec.clone(), anchor.model.clone(), r, play_seed, seat));
                }
            }
        }
    }
    let results: Vec<(AblationPair, bool)> = jobs
        .par_iter()
        .map(|(spec, anchor, r, play_seed, seat)| {
            let g = spec.seed;
            let a = pool.get(anchor, g).expect("prepared");
            let play = |b: &AgentBinding| {
                let v = pool.get(&b.model, g).expect("prepared");
                match seat {
                    Seat::Alice => run_slot(spec, [v, a], [&b.model, anchor], *r, *play_seed),
                    Seat::Bob => run_slot(spec, [a, v], [anchor, &b.model], *r, *play_seed),
                }
            };
            let (lo, hi) = (play(low), play(high));
            let ok = lo.is_ok() && hi.is_ok();
            let pair = AblationPair {
                family: family.to_string(),
                anchor: anchor.clone(),
                game_seed: g,
                run_id: *r,
                play_seed: *play_seed,
                seat: *seat,
                low: lo,
                high: hi,
            };
            (pair, ok)
        })
        .collect();
    let mut out = AblationOutput::default();
    for (p, ok) in results {
        if ok {
            out.pairs.push(p);
        } else {
            out.excluded.push(format!(
                "game {} anchor {} run {} seat {:?}: sibling not ok",
                p.game_seed, p.anchor, p.run_id, p.seat
            ));
        }
    }
    Ok(out)
}
