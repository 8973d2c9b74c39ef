//! Behaviour policies and the episode runner shared by measurement and play.

use std::collections::HashMap;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::engine::{DecisionType, EngineError, GameSpec, GameState, InformationState, Menu, Seat};

/// A distribution over the current menu.
pub trait Policy: Send + Sync {
    fn probabilities(&self, state: &GameState, menu: &Menu) -> Vec<f64>;
}

pub struct Uniform;

impl Policy for Uniform {
    fn probabilities(&self, _: &GameState, menu: &Menu) -> Vec<f64> {
        vec![1.0 / menu.options.len() as f64; menu.options.len()]
    }
}

/// Deterministic choice per information state; uniform where the table is silent.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct TablePolicy {
    pub table: HashMap<InformationState, String>,
}

impl TablePolicy {
    pub fn action(&self, info: &InformationState) -> Option<&str> {
        self.table.get(info).map(String::as_str)
    }
}

impl Policy for TablePolicy {
    fn probabilities(&self, state: &GameState, menu: &Menu) -> Vec<f64> {
        let info = state.observe(menu.seat);
        one_hot_or_uniform(menu, self.action(&info))
    }
}

pub fn one_hot_or_uniform(menu: &Menu, label: Option<&str>) -> Vec<f64> {
    let n = menu.options.len();
    match label.and_then(|l| menu.options.iter().position(|o| o == l)) {
        Some(i) => {
            let mut p = vec![0.0; n];
            p[i] = 1.0;
            p
        }
        None => vec![1.0 / n as f64; n],
    }
}

/// Mixed behaviour keyed by decision type; renormalised over the legal labels.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DtPolicy {
    pub weights: HashMap<DecisionType, Vec<(String, f64)>>,
}

impl Policy for DtPolicy {
    fn probabilities(&self, _: &GameState, menu: &Menu) -> Vec<f64> {
        let n = menu.options.len();
        let Some(w) = self.weights.get(&menu.dt) else {
            return vec![1.0 / n as f64; n];
        };
        let p: Vec<f64> = menu
            .options
            .iter()
            .map(|o| w.iter().find(|(l, _)| l == o).map_or(0.0, |(_, x)| *x))
            .collect();
        let total: f64 = p.iter().sum();
        if total > 0.0 {
            p.into_iter().map(|x| x / total).collect()
        } else {
            vec![1.0 / n as f64; n]
        }
    }
}

/// With probability `epsilon` play uniformly, otherwise follow `base`.
pub struct EpsilonGreedy<P> {
    pub base: P,
    pub epsilon: f64,
}

impl<P: Policy> Policy for EpsilonGreedy<P> {
    fn probabilities(&self, state: &GameState, menu: &Menu) -> Vec<f64> {
        let n = menu.options.len() as f64;
        self.base
            .probabilities(state, menu)
            .into_iter()
            .map(|p| (1.0 - self.epsilon) * p + self.epsilon / n)
            .collect()
    }
}

/// Index drawn from `probs` with one uniform variate, so streams stay aligned across policies.
pub fn sample(probs: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.iter().rposition(|p| *p > 0.0).unwrap_or(0)
}

#[derive(Clone, Debug)]
pub struct PlayedDecision {
    pub seat: Seat,
    pub info: Option<InformationState>,
    pub dt: DecisionType,
    pub action: usize,
    pub label: String,
    pub options: usize,
}

#[derive(Clone, Debug)]
pub struct Played {
    pub payoff: [i64; 2],
    pub decisions: Vec<PlayedDecision>,
}

/// Plays one episode; each seat samples from its own stream.
pub fn play_episode(
    spec: &Arc<GameSpec>,
    play_seed: u64,
    policies: [&dyn Policy; 2],
    rngs: &mut [ChaCha8Rng; 2],
    record_info: [bool; 2],
) -> Result<Played, EngineError> {
    let mut state = GameState::new(spec.clone(), play_seed)?;
    let mut decisions = Vec::new();
    while let Some(menu) = state.pending_menu() {
        let seat = menu.seat;
        let i = seat.index();
        let probs = policies[i].probabilities(&state, menu);
        let action = sample(&probs, &mut rngs[i]);
        let info = record_info[i].then(|| state.observe(seat));
        decisions.push(PlayedDecision {
            seat,
            info,
            dt: menu.dt.clone(),
            action,
            label: menu.options[action].clone(),
            options: menu.options.len(),
        });
        state.apply(action)?;
    }
    let (a, b) = state.payoff()?;
    Ok(Played { payoff: [a, b], decisions })
}
