//! Hand-built specifications with known properties.

use std::sync::Arc;

use super::cards::{DeckConfig, ShowdownMetric};
use super::spec::{
    standard_piles, standard_variables, ActorRule, GameSpec, Phase, Step, Template, SHOWDOWN,
};

/// Version tag carried by hand-built specifications.
pub const FIXTURE_VERSION: &str = "fixture";

/// One betting round over single private cards: `ranks` cards, ante 1, bet `bet`, no raises.
pub fn single_round(ranks: u8, bet: i64, initial_chips: i64) -> GameSpec {
    let phases = vec![Phase {
        id: "bet1".into(),
        template: Template::Action,
        start: true,
        steps: vec![
            Step::Shuffle,
            Step::Ante { amount: 1 },
            Step::DealHands { count: 1 },
            Step::Betting { first: ActorRule::Alice, bet, max_raises: 0 },
        ],
        transitions: vec![],
        next: SHOWDOWN.into(),
    }];
    GameSpec {
        seed: 0,
        builder_version: FIXTURE_VERSION.into(),
        dial: 0.0,
        deck: DeckConfig { ranks, suits: 1, copies: 1 },
        piles: standard_piles(false),
        variables: standard_variables(initial_chips, &phases),
        phases,
        showdown: ShowdownMetric::HighCard,
        initial_chips,
    }
}

/// Three-card Kuhn poker: J, Q, K; ante 1; bet 1.
pub fn kuhn() -> GameSpec {
    single_round(3, 1, 10)
}

/// Five-rank Kuhn variant with a bet of three antes; 20 information states.
pub fn kuhn_like() -> GameSpec {
    single_round(5, 3, 10)
}

pub fn shared(spec: GameSpec) -> Arc<GameSpec> {
    Arc::new(spec)
}
