//! Declarative game specifications and their structural validation.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::cards::{DeckConfig, ShowdownMetric};
use super::EngineError;

/// Reserved transition target that ends play with a showdown.
pub const SHOWDOWN: &str = "showdown";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Seat {
    Alice,
    Bob,
}

impl Seat {
    pub const BOTH: [Seat; 2] = [Seat::Alice, Seat::Bob];

    pub fn index(self) -> usize {
        match self {
            Seat::Alice => 0,
            Seat::Bob => 1,
        }
    }

    pub fn from_index(i: usize) -> Seat {
        if i == 0 {
            Seat::Alice
        } else {
            Seat::Bob
        }
    }

    pub fn other(self) -> Seat {
        match self {
            Seat::Alice => Seat::Bob,
            Seat::Bob => Seat::Alice,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Seat::Alice => "Alice",
            Seat::Bob => "Bob",
        }
    }

    pub fn tag(self) -> char {
        match self {
            Seat::Alice => 'A',
            Seat::Bob => 'B',
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Visibility {
    Public,
    OwnerOnly,
    Hidden,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PileDecl {
    pub name: String,
    pub visibility: Visibility,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VarDecl {
    pub name: String,
    pub initial: i64,
}

/// Who takes a seat-dependent step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActorRule {
    Alice,
    Bob,
    Leader,
    Follower,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PositionRule {
    /// The seat whose hand ranks higher under the showdown metric leads; Alice on ties.
    HighCard,
    /// The seat with more chips leads; Alice on ties.
    ChipLeader,
    /// A fair coin decides the leader.
    Coin,
    /// The lead passes to the other seat.
    Alternate,
}

/// One element of a phase's ordered action list.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "step", rename_all = "snake_case")]
pub enum Step {
    /// Randomise the deck order.
    Shuffle,
    /// Each seat moves `amount` chips into the pot.
    Ante { amount: i64 },
    /// `count` private cards to each seat, alternating from Alice.
    DealHands { count: u8 },
    /// `count` public cards to the board.
    DealBoard { count: u8 },
    /// A wagering round with a fixed bet size and a cap on raises.
    Betting { first: ActorRule, bet: i64, max_raises: u8 },
    /// The actor may pay `cost` to the opponent to swap their lowest card for a random opponent card.
    Steal { actor: ActorRule, cost: i64 },
    /// The actor may discard their lowest card and draw a replacement.
    Redraw { actor: ActorRule },
    /// The actor may pay `cost` to the opponent to see one random opponent card.
    Peek { actor: ActorRule, cost: i64 },
    /// The actor publicly announces one of `options`; no other effect.
    Declare { actor: ActorRule, options: Vec<String> },
    /// Both seats pick secretly; a match pays Alice `stake`, a mismatch pays Bob.
    Guess { options: u8, stake: i64 },
    /// Both seats bid secretly; the higher bid goes to the pot and buys one extra card.
    Bid { max_bid: i64 },
    /// Reassign the leader role.
    Assign { rule: PositionRule },
    /// A seat holding the top board card's rank collects `amount` from the opponent.
    Bonus { amount: i64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Template {
    Action,
    Observation,
    Simultaneous,
    Position,
}

impl Template {
    pub const ALL: [Template; 4] =
        [Template::Action, Template::Observation, Template::Simultaneous, Template::Position];

    pub fn name(self) -> &'static str {
        match self {
            Template::Action => "action",
            Template::Observation => "observation",
            Template::Simultaneous => "simultaneous",
            Template::Position => "position",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cmp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl Cmp {
    pub fn holds<T: Ord>(self, a: T, b: T) -> bool {
        match self {
            Cmp::Lt => a < b,
            Cmp::Le => a <= b,
            Cmp::Gt => a > b,
            Cmp::Ge => a >= b,
            Cmp::Eq => a == b,
            Cmp::Ne => a != b,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Cmp::Lt => "<",
            Cmp::Le => "<=",
            Cmp::Gt => ">",
            Cmp::Ge => ">=",
            Cmp::Eq => "==",
            Cmp::Ne => "!=",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Operand {
    Var(String),
    Const(i64),
}

/// Branch predicate families: chip counts, card comparisons, round counters.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Condition {
    /// Integer comparison over declared variables and constants.
    Compare { lhs: Operand, cmp: Cmp, rhs: Operand },
    /// `seat`'s hand beats the opponent's under the showdown metric.
    HandBeats { seat: Seat },
    /// The highest rank in `pile` compared with `rank`; false when the pile is empty.
    TopRank { pile: String, cmp: Cmp, rank: u8 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BranchFamily {
    Chips,
    Cards,
    Rounds,
}

impl Condition {
    pub fn family(&self) -> BranchFamily {
        match self {
            Condition::Compare { lhs, rhs, .. } => {
                let is_round = |o: &Operand| matches!(o, Operand::Var(v) if v.starts_with("round:"));
                if is_round(lhs) || is_round(rhs) {
                    BranchFamily::Rounds
                } else {
                    BranchFamily::Chips
                }
            }
            Condition::HandBeats { .. } | Condition::TopRank { .. } => BranchFamily::Cards,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    pub when: Condition,
    pub to: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Phase {
    pub id: String,
    pub template: Template,
    pub start: bool,
    pub steps: Vec<Step>,
    /// Checked in order after the last step; the first that holds is taken.
    pub transitions: Vec<Transition>,
    /// Taken when no transition holds.
    pub next: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameSpec {
    pub seed: u64,
    pub builder_version: String,
    pub dial: f64,
    pub deck: DeckConfig,
    pub piles: Vec<PileDecl>,
    pub variables: Vec<VarDecl>,
    pub phases: Vec<Phase>,
    pub showdown: ShowdownMetric,
    pub initial_chips: i64,
}

pub fn chips_var(seat: Seat) -> String {
    format!("chips:{}", seat.name().to_lowercase())
}

pub fn hand_pile(seat: Seat) -> String {
    format!("hand:{}", seat.name().to_lowercase())
}

pub fn round_var(phase_id: &str) -> String {
    format!("round:{phase_id}")
}

/// Piles every specification declares.
pub fn standard_piles(with_board: bool) -> Vec<PileDecl> {
    let mut piles = vec![
        PileDecl { name: "deck".into(), visibility: Visibility::Hidden },
        PileDecl { name: hand_pile(Seat::Alice), visibility: Visibility::OwnerOnly },
        PileDecl { name: hand_pile(Seat::Bob), visibility: Visibility::OwnerOnly },
        PileDecl { name: "discard".into(), visibility: Visibility::Hidden },
    ];
    if with_board {
        piles.push(PileDecl { name: "board".into(), visibility: Visibility::Public });
    }
    piles
}

/// Chip, pot, and per-phase round-counter declarations.
pub fn standard_variables(initial_chips: i64, phases: &[Phase]) -> Vec<VarDecl> {
    let mut vars = vec![
        VarDecl { name: chips_var(Seat::Alice), initial: initial_chips },
        VarDecl { name: chips_var(Seat::Bob), initial: initial_chips },
        VarDecl { name: "pot".into(), initial: 0 },
    ];
    vars.extend(phases.iter().map(|p| VarDecl { name: round_var(&p.id), initial: 0 }));
    vars
}

impl GameSpec {
    /// Sorted-key JSON text; identical specs serialise to identical bytes.
    pub fn canonical(&self) -> String {
        let value = serde_json::to_value(self).expect("spec serialises");
        serde_json::to_string(&value).expect("value serialises")
    }

    pub fn from_canonical(text: &str) -> Result<GameSpec, EngineError> {
        serde_json::from_str(text).map_err(|e| EngineError::Parse(e.to_string()))
    }

    pub fn phase_index(&self, id: &str) -> Option<usize> {
        self.phases.iter().position(|p| p.id == id)
    }

    pub fn start_index(&self) -> usize {
        self.phases.iter().position(|p| p.start).unwrap_or(0)
    }

    pub fn has_board(&self) -> bool {
        self.piles.iter().any(|p| p.name == "board")
    }

    pub fn hand_size(&self) -> usize {
        self.phases
            .iter()
            .flat_map(|p| &p.steps)
            .map(|s| match s {
                Step::DealHands { count } => *count as usize,
                _ => 0,
            })
            .sum()
    }

    pub fn branch_count(&self) -> usize {
        self.phases.iter().map(|p| p.transitions.len()).sum()
    }

    /// Upper bound on entries into each phase, from round-counter bounds on back edges.
    pub fn entry_bounds(&self) -> Vec<u64> {
        let n = self.phases.len();
        let mut loop_bound = vec![1u64; n];
        for (i, phase) in self.phases.iter().enumerate() {
            for t in &phase.transitions {
                if let Some(j) = self.phase_index(&t.to) {
                    if j <= i {
                        let k = round_bound(&t.when, &self.phases[j].id).unwrap_or(1);
                        loop_bound[j] = loop_bound[j].max(k);
                    }
                }
            }
        }
        let mut out = Vec::with_capacity(n);
        let mut acc = 1u64;
        for b in loop_bound {
            acc = acc.saturating_mul(b);
            out.push(acc);
        }
        out
    }

    /// Worst-case number of cards drawn from the deck in one play.
    pub fn card_demand(&self) -> u64 {
        let bounds = self.entry_bounds();
        self.phases
            .iter()
            .zip(bounds)
            .map(|(p, b)| {
                let per_entry: u64 = p
                    .steps
                    .iter()
                    .map(|s| match s {
                        Step::DealHands { count } => 2 * *count as u64,
                        Step::DealBoard { count } => *count as u64,
                        Step::Redraw { .. } | Step::Bid { .. } => 1,
                        _ => 0,
                    })
                    .sum();
                per_entry.saturating_mul(b)
            })
            .sum()
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        let fail = |phase: &str, detail: String| {
            Err(EngineError::Validation { phase: phase.to_string(), detail })
        };
        if self.phases.is_empty() {
            return fail("-", "specification declares no phases".into());
        }
        let starts: Vec<&str> =
            self.phases.iter().filter(|p| p.start).map(|p| p.id.as_str()).collect();
        if starts.len() != 1 {
            let names = if starts.is_empty() { "none".to_string() } else { starts.join(", ") };
            return fail(
                starts.first().copied().unwrap_or("-"),
                format!("expected exactly one start phase, found {}: {names}", starts.len()),
            );
        }
        let mut ids = BTreeSet::new();
        for p in &self.phases {
            if p.id == SHOWDOWN || !ids.insert(p.id.as_str()) {
                return fail(&p.id, "phase id is duplicated or reserved".into());
            }
        }
        if self.deck.ranks == 0 || self.deck.ranks > 13 || self.deck.suits == 0 || self.deck.suits > 4 {
            return fail("-", format!("deck {:?} is outside 1..=13 ranks and 1..=4 suits", self.deck));
        }
        if self.deck.copies == 0 {
            return fail("-", "deck declares zero copies".into());
        }
        let vars: BTreeMap<&str, i64> =
            self.variables.iter().map(|v| (v.name.as_str(), v.initial)).collect();
        let piles: BTreeSet<&str> = self.piles.iter().map(|p| p.name.as_str()).collect();
        for required in ["deck", "hand:alice", "hand:bob", "discard"] {
            if !piles.contains(required) {
                return fail("-", format!("pile `{required}` is not declared"));
            }
        }
        for seat in Seat::BOTH {
            if vars.get(chips_var(seat).as_str()) != Some(&self.initial_chips) {
                return fail("-", format!("variable `{}` must start at the initial chips", chips_var(seat)));
            }
        }
        if vars.get("pot") != Some(&0) {
            return fail("-", "variable `pot` must be declared with initial value 0".into());
        }
        let pos: BTreeMap<&str, usize> =
            self.phases.iter().enumerate().map(|(i, p)| (p.id.as_str(), i)).collect();
        for (i, p) in self.phases.iter().enumerate() {
            if !vars.contains_key(round_var(&p.id).as_str()) {
                return fail(&p.id, format!("round counter `{}` is not declared", round_var(&p.id)));
            }
            match pos.get(p.next.as_str()) {
                Some(&j) if j <= i => {
                    return fail(&p.id, format!("default transition to `{}` does not move forward", p.next))
                }
                None if p.next != SHOWDOWN => {
                    return fail(&p.id, format!("default transition targets unknown phase `{}`", p.next))
                }
                _ => {}
            }
            for step in &p.steps {
                self.validate_step(p, step, &piles)?;
            }
            for (k, t) in p.transitions.iter().enumerate() {
                let target = match pos.get(t.to.as_str()) {
                    Some(&j) => Some(j),
                    None if t.to == SHOWDOWN => None,
                    None => {
                        return fail(&p.id, format!("branch {k} targets unknown phase `{}`", t.to))
                    }
                };
                self.validate_condition(&p.id, k, &t.when, &vars, &piles)?;
                if let Some(j) = target {
                    if j <= i && round_bound(&t.when, &self.phases[j].id).is_none() {
                        return fail(
                            &p.id,
                            format!(
                                "branch {k} loops back to `{}` without a bound on `{}`",
                                t.to,
                                round_var(&t.to)
                            ),
                        );
                    }
                }
            }
        }
        if self.phases[self.start_index()]
            .steps
            .first()
            .is_some_and(|s| !matches!(s, Step::Shuffle))
        {
            return fail(&self.phases[self.start_index()].id, "start phase must open with a shuffle".into());
        }
        let demand = self.card_demand();
        if demand > self.deck.size() as u64 {
            return fail(
                "-",
                format!("worst-case card demand {demand} exceeds deck size {}", self.deck.size()),
            );
        }
        Ok(())
    }

    fn validate_step(&self, p: &Phase, step: &Step, piles: &BTreeSet<&str>) -> Result<(), EngineError> {
        let fail = |detail: String| Err(EngineError::Validation { phase: p.id.clone(), detail });
        match step {
            Step::Ante { amount } | Step::Bonus { amount } if *amount < 0 => {
                fail(format!("negative amount in {step:?}"))
            }
            Step::Betting { bet, .. } if *bet <= 0 => fail("bet size must be positive".into()),
            Step::Steal { cost, .. } | Step::Peek { cost, .. } if *cost < 0 => {
                fail(format!("negative cost in {step:?}"))
            }
            Step::Declare { options, .. } if options.len() < 2 => {
                fail("declaration needs at least two options".into())
            }
            Step::Guess { options, stake } if *options < 2 || *stake < 0 => {
                fail("guess needs two or more options and a non-negative stake".into())
            }
            Step::Bid { max_bid } if *max_bid < 1 => fail("bid cap must be at least 1".into()),
            Step::DealBoard { .. } | Step::Bonus { .. } if !piles.contains("board") => {
                fail("board step without a declared `board` pile".into())
            }
            _ => Ok(()),
        }
    }

    fn validate_condition(
        &self,
        phase: &str,
        k: usize,
        cond: &Condition,
        vars: &BTreeMap<&str, i64>,
        piles: &BTreeSet<&str>,
    ) -> Result<(), EngineError> {
        let fail = |detail: String| Err(EngineError::Validation { phase: phase.to_string(), detail });
        match cond {
            Condition::Compare { lhs, rhs, .. } => {
                for o in [lhs, rhs] {
                    if let Operand::Var(v) = o {
                        if !vars.contains_key(v.as_str()) {
                            return fail(format!("branch {k} references undeclared variable `{v}`"));
                        }
                    }
                }
                Ok(())
            }
            Condition::TopRank { pile, .. } if !piles.contains(pile.as_str()) => {
                fail(format!("branch {k} references undeclared pile `{pile}`"))
            }
            _ => Ok(()),
        }
    }
}

/// The constant `k` when `cond` reads `round:<target> < k` (or `<= k-1`).
pub fn round_bound(cond: &Condition, target: &str) -> Option<u64> {
    if let Condition::Compare { lhs: Operand::Var(v), cmp, rhs: Operand::Const(k) } = cond {
        if *v == round_var(target) && *k >= 1 {
            return match cmp {
                Cmp::Lt => Some(*k as u64),
                Cmp::Le => Some(*k as u64 + 1),
                _ => None,
            };
        }
    }
    None
}
