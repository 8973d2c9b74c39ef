//! Constructed games that each break exactly one acceptance gate.

use genstrat_core::engine::{
    hand_pile, standard_piles, standard_variables, ActorRule, Cmp, Condition, DeckConfig, GameSpec, Operand, Phase,
    Seat, ShowdownMetric, Step, Template, Transition, SHOWDOWN,
};

pub fn spec_from(phases: Vec<Phase>, deck: DeckConfig) -> GameSpec {
    GameSpec {
        seed: 99,
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

pub fn opening(extra: Vec<Step>) -> Vec<Step> {
    let mut steps = vec![Step::Shuffle, Step::Ante { amount: 1 }, Step::DealHands { count: 1 }];
    steps.extend(extra);
    steps
}

pub fn phase(id: &str, start: bool, steps: Vec<Step>, transitions: Vec<Transition>, next: &str) -> Phase {
    Phase { id: id.into(), template: Template::Action, start, steps, transitions, next: next.into() }
}

pub fn declare(actor: ActorRule) -> Step {
    Step::Declare { actor, options: vec!["one".into(), "two".into()] }
}

/// Twelve forced declarations per seat: far above the average-moves cap.
pub fn long_forced_sequences() -> GameSpec {
    let mut steps = Vec::new();
    for _ in 0..12 {
        steps.push(declare(ActorRule::Alice));
        steps.push(declare(ActorRule::Bob));
    }
    spec_from(vec![phase("talk", true, opening(steps), vec![], SHOWDOWN)], DeckConfig { ranks: 3, suits: 1, copies: 1 })
}

/// p3 and p4 need both seats holding top ranks, so they fire on well under 5% of deals.
pub fn rare_phases() -> GameSpec {
    let rank_at_least = |seat, rank| Condition::TopRank { pile: hand_pile(seat), cmp: Cmp::Ge, rank };
    let phases = vec![
        phase(
            "p1",
            true,
            opening(vec![declare(ActorRule::Alice)]),
            vec![Transition { when: rank_at_least(Seat::Alice, 12), to: "p2".into() }],
            SHOWDOWN,
        ),
        phase(
            "p2",
            false,
            vec![declare(ActorRule::Bob)],
            vec![Transition { when: rank_at_least(Seat::Bob, 11), to: "p3".into() }],
            SHOWDOWN,
        ),
        phase("p3", false, vec![declare(ActorRule::Alice)], vec![], "p4"),
        phase("p4", false, vec![declare(ActorRule::Bob)], vec![], SHOWDOWN),
    ];
    spec_from(phases, DeckConfig { ranks: 13, suits: 1, copies: 1 })
}

/// A branch on a pot that can never exceed 1000.
pub fn never_taken_branch() -> GameSpec {
    let never = Condition::Compare { lhs: Operand::Var("pot".into()), cmp: Cmp::Gt, rhs: Operand::Const(1000) };
    let phases = vec![
        phase("p1", true, opening(vec![declare(ActorRule::Alice)]), vec![Transition { when: never, to: SHOWDOWN.into() }], "p2"),
        phase("p2", false, vec![declare(ActorRule::Bob)], vec![], SHOWDOWN),
    ];
    spec_from(phases, DeckConfig { ranks: 3, suits: 1, copies: 1 })
}
