//! Exhaustive game-tree enumeration for brute-force oracles.
#![allow(dead_code)]

pub mod axis_oracles;
pub mod corpus;
pub mod gates;
pub mod solver_oracles;

use std::sync::Arc;

use genstrat_core::engine::{
    standard_piles, standard_variables, ActorRule, DeckConfig, DecisionType, GameSpec, GameState,
    InformationState, Menu, Node, Phase, Seat, ShowdownMetric, Step, Template, SHOWDOWN,
};

#[derive(Clone, Debug)]
pub struct Visit {
    pub seat: Seat,
    pub info: InformationState,
    pub dt: DecisionType,
    pub label: String,
    pub action: usize,
    pub options: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct Leaf {
    pub p: f64,
    pub visits: Vec<Visit>,
    pub payoff: [i64; 2],
}

pub type Behaviour<'a> = &'a dyn Fn(&GameState, &Menu) -> Vec<f64>;

pub fn uniform(_: &GameState, menu: &Menu) -> Vec<f64> {
    vec![1.0 / menu.options.len() as f64; menu.options.len()]
}

/// Every terminal history with its probability under `policy` and explicit chance.
pub fn enumerate(spec: &Arc<GameSpec>, policy: Behaviour) -> Vec<Leaf> {
    let mut out = Vec::new();
    let root = GameState::new_explicit(spec.clone()).unwrap();
    walk(root, 1.0, Vec::new(), policy, &mut out);
    out
}

fn walk(state: GameState, p: f64, visits: Vec<Visit>, policy: Behaviour, out: &mut Vec<Leaf>) {
    match state.node() {
        Node::Terminal => {
            let (a, b) = state.payoff().unwrap();
            out.push(Leaf { p, visits, payoff: [a, b] });
        }
        Node::Chance => {
            for (o, q) in state.chance_outcomes().unwrap() {
                let mut next = state.clone();
                next.apply_chance(o).unwrap();
                walk(next, p * q, visits.clone(), policy, out);
            }
        }
        Node::Decision(seat) => {
            let menu = state.menu().unwrap();
            let info = state.observe(seat);
            for (i, q) in policy(&state, &menu).into_iter().enumerate() {
                if q == 0.0 {
                    continue;
                }
                let mut next = state.clone();
                next.apply(i).unwrap();
                let mut v = visits.clone();
                v.push(Visit {
                    seat,
                    info: info.clone(),
                    dt: menu.dt.clone(),
                    label: menu.options[i].clone(),
                    action: i,
                    options: menu.options.clone(),
                });
                walk(next, p * q, v, policy, out);
            }
        }
    }
}

fn game(id: &str, deck: DeckConfig, steps: Vec<Step>) -> GameSpec {
    let phases = vec![Phase {
        id: id.into(),
        template: Template::Action,
        start: true,
        steps,
        transitions: vec![],
        next: SHOWDOWN.into(),
    }];
    GameSpec {
        seed: 0,
        builder_version: "fixture".into(),
        dial: 0.0,
        deck,
        piles: standard_piles(false),
        variables: standard_variables(10, &phases),
        phases,
        showdown: ShowdownMetric::HighCard,
        initial_chips: 10,
    }
}

fn opening() -> Vec<Step> {
    vec![Step::Shuffle, Step::Ante { amount: 1 }, Step::DealHands { count: 1 }]
}

/// A matching-pennies guess followed by a betting round over one private card.
pub fn pennies() -> GameSpec {
    let mut steps = opening();
    steps.push(Step::Guess { options: 2, stake: 1 });
    steps.push(Step::Betting { first: ActorRule::Alice, bet: 1, max_raises: 0 });
    game("duel", DeckConfig { ranks: 3, suits: 1, copies: 1 }, steps)
}

/// Alice may swap her card for an unseen one before Bob opens the betting.
pub fn gamble() -> GameSpec {
    let mut steps = opening();
    steps.push(Step::Redraw { actor: ActorRule::Alice });
    steps.push(Step::Betting { first: ActorRule::Bob, bet: 2, max_raises: 0 });
    game("swap", DeckConfig { ranks: 4, suits: 1, copies: 1 }, steps)
}

/// One declaration each; payoffs never depend on it.
pub fn chatter() -> GameSpec {
    let mut steps = opening();
    steps.push(Step::Declare { actor: ActorRule::Alice, options: vec!["one".into(), "two".into()] });
    steps.push(Step::Declare { actor: ActorRule::Bob, options: vec!["one".into(), "two".into()] });
    game("talk", DeckConfig { ranks: 3, suits: 1, copies: 1 }, steps)
}

/// Identical cards, so showdowns always split; peeking costs 2 and never helps.
pub fn toll() -> GameSpec {
    let mut steps = opening();
    steps.push(Step::Peek { actor: ActorRule::Alice, cost: 2 });
    steps.push(Step::Peek { actor: ActorRule::Bob, cost: 2 });
    game("toll", DeckConfig { ranks: 1, suits: 1, copies: 2 }, steps)
}

/// A bare simultaneous guess over identical cards: one context per player.
pub fn blind_pennies() -> GameSpec {
    let mut steps = opening();
    steps.push(Step::Guess { options: 2, stake: 1 });
    game("coin", DeckConfig { ranks: 1, suits: 1, copies: 2 }, steps)
}
