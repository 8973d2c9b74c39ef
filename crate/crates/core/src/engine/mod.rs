//! Game specifications, play state, and the rule engine.
//!
//! A [`GameSpec`] is a declarative rule set; a [`GameState`] executes it.
//! States run in one of two chance modes: seeded play, where a per-match
//! counter-based stream fixes the deck order and every coin, or explicit
//! mode, where each chance event stops at a node whose outcomes a tree
//! walker enumerates.

mod cards;
pub mod fixtures;
mod spec;
mod state;

pub use cards::{lowest_card, showdown_key, Card, DeckConfig, ShowdownMetric};
pub use spec::{
    chips_var, hand_pile, round_bound, round_var, standard_piles, standard_variables, ActorRule,
    BranchFamily, Cmp, Condition, GameSpec, Operand, Phase, PileDecl, PositionRule, Seat, Step,
    Template, Transition, VarDecl, Visibility, SHOWDOWN,
};
pub use state::{guess_labels, ChanceKind, Event, EventKind, GameState, InformationState, Menu, Node};

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("invalid specification at phase `{phase}`: {detail}")]
    Validation { phase: String, detail: String },
    #[error("state is terminal; no legal actions")]
    Terminal,
    #[error("state is not terminal")]
    NotTerminal,
    #[error("state is waiting on a chance event")]
    ChanceRequired,
    #[error("no chance event is pending")]
    NoChancePending,
    #[error("illegal action {chosen}; legal menu: [{}]", .legal.join(", "))]
    IllegalAction { chosen: String, legal: Vec<String> },
    #[error("play exceeded the step limit")]
    StepLimit,
    #[error("cannot parse specification: {0}")]
    Parse(String),
}

/// Identifies a kind of decision: which phase, which move family, which move.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DecisionType {
    pub phase: String,
    pub move_type: String,
    pub name: String,
}

impl DecisionType {
    pub fn new(phase: &str, move_type: &str, name: &str) -> Self {
        DecisionType { phase: phase.to_string(), move_type: move_type.to_string(), name: name.to_string() }
    }

    pub fn none() -> Self {
        DecisionType::new("-", "-", "-")
    }
}

impl std::fmt::Display for DecisionType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}/{}", self.phase, self.move_type, self.name)
    }
}

/// Width of the chip bins used in information states: chips 0..=4 share bin 0.
pub const CHIP_BIN_WIDTH: i64 = 5;

pub fn initial_state(spec: &Arc<GameSpec>, play_seed: u64) -> Result<GameState, EngineError> {
    GameState::new(spec.clone(), play_seed)
}

pub fn legal_actions(state: &GameState) -> Result<Menu, EngineError> {
    state.menu()
}

/// Applies option `index` of the current menu to a copy of `state`.
pub fn apply_action(state: &GameState, index: usize) -> Result<GameState, EngineError> {
    let mut next = state.clone();
    next.apply(index)?;
    Ok(next)
}

pub fn observe(state: &GameState, seat: Seat) -> InformationState {
    state.observe(seat)
}

pub fn terminal_payoff(state: &GameState) -> Result<(i64, i64), EngineError> {
    state.payoff()
}
