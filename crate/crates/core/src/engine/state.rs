//! Executable play state for a [`GameSpec`].

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::cards::{lowest_card, showdown_key, Card};
use super::spec::{
    chips_var, ActorRule, Condition, GameSpec, Operand, PositionRule, Seat, Step, SHOWDOWN,
};
use super::{DecisionType, EngineError, CHIP_BIN_WIDTH};

const STEP_LIMIT: u32 = 100_000;
const STREAM_DECK: &str = "deck";
const STREAM_TABLE: &str = "table";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "payload", rename_all = "snake_case")]
pub enum EventKind {
    PhaseEnter { phase: String, round: u32 },
    Shuffle,
    Ante { seat: Seat, amount: i64 },
    /// `seat` is `None` for a board card.
    Deal { seat: Option<Seat>, card: String },
    Action { seat: Seat, dt: DecisionType, label: String },
    /// Marks that `seat` chose secretly; the choice itself is in a private `Action`.
    Commit { seat: Seat, dt: DecisionType },
    Reveal { dt: DecisionType, alice: String, bob: String },
    Wager { seat: Seat, amount: i64 },
    Transfer { from: Seat, to: Seat, amount: i64 },
    Refund { seat: Seat, amount: i64 },
    Peek { seat: Seat, card: String },
    Steal { seat: Seat, taken: String, given: String },
    Redraw { seat: Seat, discarded: String, drawn: String },
    Leader { seat: Seat },
    /// `index` is `None` for the default transition.
    Branch { from: String, to: String, index: Option<usize> },
    Fold { seat: Seat, pot: i64 },
    Showdown { alice: Vec<String>, bob: Vec<String>, winner: Option<Seat>, pot: i64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Event {
    #[serde(flatten)]
    pub kind: EventKind,
    pub visible: [bool; 2],
}

impl Event {
    pub fn visible_to(&self, seat: Seat) -> bool {
        self.visible[seat.index()]
    }
}

/// What the player sees when deciding.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct InformationState {
    pub seat: Seat,
    pub dt: DecisionType,
    pub hand: Vec<String>,
    pub path: Vec<String>,
    pub chip_bin: i64,
    pub signals: Vec<String>,
    pub roles: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Menu {
    pub seat: Seat,
    pub dt: DecisionType,
    pub options: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChanceKind {
    /// One card from the deck.
    Deck,
    /// A uniform choice among `n`.
    Coin(u32),
    /// One card from `seat`'s hand.
    Hand(Seat),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Node {
    Decision(Seat),
    Chance,
    Terminal,
}

#[derive(Clone, Debug)]
enum Pending {
    Idle,
    Decision(Menu),
    Chance(ChanceKind),
}

#[derive(Clone, Debug)]
enum Sub {
    Fresh,
    Dealing { done: u8 },
    Betting { actor: Seat, facing: i64, raises: u8, acted: u8 },
    Chosen,
    Sim { first: Option<usize> },
    Resolve { winner: Seat },
}

/// `Wait` with no pending node re-enters the same step on the next tick.
enum Flow {
    Done,
    Wait,
}

#[derive(Clone, Debug)]
struct Streams {
    deck: ChaCha8Rng,
    table: ChaCha8Rng,
}

fn label_stream(label: &str) -> u64 {
    use std::hash::Hasher;
    let mut h = fnv::FnvHasher::default();
    h.write(label.as_bytes());
    h.finish()
}

fn stream(play_seed: u64, label: &str) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(play_seed);
    rng.set_stream(label_stream(label));
    rng
}

#[derive(Clone, Debug)]
pub struct GameState {
    spec: Arc<GameSpec>,
    streams: Option<Streams>,
    deck: Vec<Card>,
    hands: [Vec<Card>; 2],
    board: Vec<Card>,
    discard: Vec<Card>,
    chips: [i64; 2],
    contrib: [i64; 2],
    rounds: Vec<u32>,
    phase: usize,
    step: usize,
    sub: Sub,
    leader: Seat,
    events: Vec<Event>,
    terminal: bool,
    pending: Pending,
    choice: Option<usize>,
    outcome: Option<usize>,
    moves: [u32; 2],
    ticks: u32,
}

impl GameState {
    /// Seeded play: the deck order and every coin derive from `play_seed`.
    pub fn new(spec: Arc<GameSpec>, play_seed: u64) -> Result<Self, EngineError> {
        let streams =
            Streams { deck: stream(play_seed, STREAM_DECK), table: stream(play_seed, STREAM_TABLE) };
        Self::build(spec, Some(streams))
    }

    /// Explicit chance: each chance event stops at a [`Node::Chance`].
    pub fn new_explicit(spec: Arc<GameSpec>) -> Result<Self, EngineError> {
        Self::build(spec, None)
    }

    fn build(spec: Arc<GameSpec>, streams: Option<Streams>) -> Result<Self, EngineError> {
        spec.validate()?;
        let start = spec.start_index();
        let mut rounds = vec![0; spec.phases.len()];
        rounds[start] = 1;
        let deck = spec.deck.cards();
        let initial = spec.initial_chips;
        let mut state = GameState {
            events: vec![Event {
                kind: EventKind::PhaseEnter { phase: spec.phases[start].id.clone(), round: 1 },
                visible: [true, true],
            }],
            spec,
            streams,
            deck,
            hands: [Vec::new(), Vec::new()],
            board: Vec::new(),
            discard: Vec::new(),
            chips: [initial, initial],
            contrib: [0, 0],
            rounds,
            phase: start,
            step: 0,
            sub: Sub::Fresh,
            leader: Seat::Alice,
            terminal: false,
            pending: Pending::Idle,
            choice: None,
            outcome: None,
            moves: [0, 0],
            ticks: 0,
        };
        state.run()?;
        Ok(state)
    }

    pub fn spec(&self) -> &Arc<GameSpec> {
        &self.spec
    }

    pub fn is_terminal(&self) -> bool {
        self.terminal
    }

    pub fn node(&self) -> Node {
        match &self.pending {
            _ if self.terminal => Node::Terminal,
            Pending::Decision(m) => Node::Decision(m.seat),
            Pending::Chance(_) => Node::Chance,
            Pending::Idle => Node::Terminal,
        }
    }

    pub fn menu(&self) -> Result<Menu, EngineError> {
        match &self.pending {
            _ if self.terminal => Err(EngineError::Terminal),
            Pending::Decision(m) => Ok(m.clone()),
            Pending::Chance(_) => Err(EngineError::ChanceRequired),
            Pending::Idle => Err(EngineError::Terminal),
        }
    }

    /// Borrowing view of the pending menu, if a decision is pending.
    pub fn pending_menu(&self) -> Option<&Menu> {
        match &self.pending {
            Pending::Decision(m) if !self.terminal => Some(m),
            _ => None,
        }
    }

    pub fn apply(&mut self, index: usize) -> Result<(), EngineError> {
        let menu = match &self.pending {
            _ if self.terminal => return Err(EngineError::Terminal),
            Pending::Decision(m) => m,
            Pending::Chance(_) => return Err(EngineError::ChanceRequired),
            Pending::Idle => return Err(EngineError::Terminal),
        };
        if index >= menu.options.len() {
            return Err(EngineError::IllegalAction {
                chosen: index.to_string(),
                legal: menu.options.clone(),
            });
        }
        self.moves[menu.seat.index()] += 1;
        self.pending = Pending::Idle;
        self.choice = Some(index);
        self.run()
    }

    /// Applies the option whose label matches exactly.
    pub fn apply_label(&mut self, label: &str) -> Result<(), EngineError> {
        let menu = self.menu()?;
        match menu.options.iter().position(|o| o == label) {
            Some(i) => self.apply(i),
            None => Err(EngineError::IllegalAction { chosen: label.to_string(), legal: menu.options }),
        }
    }

    /// Outcomes of the pending chance event as (outcome index, probability).
    pub fn chance_outcomes(&self) -> Result<Vec<(usize, f64)>, EngineError> {
        let kind = match self.pending {
            Pending::Chance(k) => k,
            _ => return Err(EngineError::NoChancePending),
        };
        let group = |cards: &[Card]| {
            let n = cards.len() as f64;
            let mut out: Vec<(usize, f64)> = Vec::new();
            let mut seen: Vec<Card> = Vec::new();
            for (i, c) in cards.iter().enumerate() {
                if let Some(k) = seen.iter().position(|s| s == c) {
                    out[k].1 += 1.0 / n;
                } else {
                    seen.push(*c);
                    out.push((i, 1.0 / n));
                }
            }
            out
        };
        Ok(match kind {
            ChanceKind::Deck => group(&self.deck),
            ChanceKind::Hand(seat) => group(&self.hands[seat.index()]),
            ChanceKind::Coin(n) => (0..n as usize).map(|i| (i, 1.0 / n as f64)).collect(),
        })
    }

    pub fn apply_chance(&mut self, outcome: usize) -> Result<(), EngineError> {
        if !matches!(self.pending, Pending::Chance(_)) || self.terminal {
            return Err(EngineError::NoChancePending);
        }
        self.pending = Pending::Idle;
        self.outcome = Some(outcome);
        self.run()
    }

    pub fn payoff(&self) -> Result<(i64, i64), EngineError> {
        if !self.terminal {
            return Err(EngineError::NotTerminal);
        }
        let init = self.spec.initial_chips;
        Ok((self.chips[0] - init, self.chips[1] - init))
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn moves(&self) -> [u32; 2] {
        self.moves
    }

    pub fn chips(&self) -> [i64; 2] {
        self.chips
    }

    pub fn pot(&self) -> i64 {
        self.contrib[0] + self.contrib[1]
    }

    pub fn leader(&self) -> Seat {
        self.leader
    }

    pub fn current_phase(&self) -> &str {
        &self.spec.phases[self.phase].id
    }

    pub fn hand(&self, seat: Seat) -> &[Card] {
        &self.hands[seat.index()]
    }

    pub fn board(&self) -> &[Card] {
        &self.board
    }

    pub fn round(&self, phase: usize) -> u32 {
        self.rounds[phase]
    }

    /// Checks chip conservation (stacks plus pot) and the card multiset.
    pub fn check_conservation(&self) -> Result<(), String> {
        let total = self.chips[0] + self.chips[1] + self.pot();
        if total != 2 * self.spec.initial_chips {
            return Err(format!("chips plus pot is {total}, expected {}", 2 * self.spec.initial_chips));
        }
        if self.chips.iter().chain(&self.contrib).any(|&c| c < 0) {
            return Err(format!("negative holding: chips {:?}, pot shares {:?}", self.chips, self.contrib));
        }
        let mut cards: Vec<Card> = self
            .deck
            .iter()
            .chain(&self.hands[0])
            .chain(&self.hands[1])
            .chain(&self.board)
            .chain(&self.discard)
            .copied()
            .collect();
        cards.sort_unstable();
        let mut expected = self.spec.deck.cards();
        expected.sort_unstable();
        if cards != expected {
            return Err("card multiset changed".into());
        }
        Ok(())
    }

    /// One JSON event per line: type, payload, visibility flags.
    pub fn match_log(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&serde_json::to_string(e).expect("event serialises"));
            out.push('\n');
        }
        out
    }

    pub fn observe(&self, seat: Seat) -> InformationState {
        let dt = match &self.pending {
            Pending::Decision(m) => m.dt.clone(),
            _ => DecisionType::none(),
        };
        let mut hand: Vec<Card> = self.hands[seat.index()].clone();
        hand.sort_unstable();
        let hand = hand.into_iter().map(|c| self.spec.deck.label(c)).collect();
        let mut path = Vec::new();
        let mut signals = Vec::new();
        for e in self.events.iter().filter(|e| e.visible_to(seat)) {
            match &e.kind {
                EventKind::Action { seat: s, label, .. } => path.push(format!("{}:{}", s.tag(), label)),
                EventKind::Commit { seat: s, .. } => path.push(format!("{}:commit", s.tag())),
                EventKind::Deal { seat: None, card } => signals.push(format!("board:{card}")),
                EventKind::Peek { card, .. } => signals.push(format!("peek:{card}")),
                EventKind::Steal { taken, given, .. } => signals.push(format!("steal:{taken}/{given}")),
                EventKind::Redraw { discarded, drawn, .. } => {
                    signals.push(format!("redraw:{discarded}/{drawn}"))
                }
                EventKind::Reveal { alice, bob, .. } => signals.push(format!("reveal:{alice}/{bob}")),
                EventKind::Branch { from, to, index: Some(_) } => signals.push(format!("branch:{from}>{to}")),
                _ => {}
            }
        }
        InformationState {
            seat,
            dt,
            hand,
            path,
            chip_bin: self.chips[seat.index()] / CHIP_BIN_WIDTH,
            signals,
            roles: vec![format!("leader:{}", self.leader.name())],
        }
    }

    fn push(&mut self, kind: EventKind, visible: [bool; 2]) {
        self.events.push(Event { kind, visible });
    }

    fn public(&mut self, kind: EventKind) {
        self.push(kind, [true, true]);
    }

    fn private(&mut self, seat: Seat, kind: EventKind) {
        let mut v = [false, false];
        v[seat.index()] = true;
        self.push(kind, v);
    }

    fn resolve(&self, rule: ActorRule) -> Seat {
        match rule {
            ActorRule::Alice => Seat::Alice,
            ActorRule::Bob => Seat::Bob,
            ActorRule::Leader => self.leader,
            ActorRule::Follower => self.leader.other(),
        }
    }

    fn dt(&self, move_type: &str, name: &str) -> DecisionType {
        DecisionType::new(&self.spec.phases[self.phase].id, move_type, name)
    }

    fn take_choice(&mut self, seat: Seat, dt: DecisionType, options: Vec<String>) -> Option<usize> {
        if let Some(c) = self.choice.take() {
            return Some(c);
        }
        self.pending = Pending::Decision(Menu { seat, dt, options });
        None
    }

    fn draw(&mut self, kind: ChanceKind) -> Option<usize> {
        match &mut self.streams {
            Some(s) => Some(match kind {
                ChanceKind::Deck => self.deck.len() - 1,
                ChanceKind::Coin(n) => s.table.random_range(0..n as usize),
                ChanceKind::Hand(seat) => s.table.random_range(0..self.hands[seat.index()].len()),
            }),
            None => match self.outcome.take() {
                Some(i) => Some(i),
                None => {
                    self.pending = Pending::Chance(kind);
                    None
                }
            },
        }
    }

    fn take_from_deck(&mut self, index: usize) -> Card {
        if index + 1 == self.deck.len() {
            self.deck.pop().expect("deck is non-empty")
        } else {
            self.deck.remove(index)
        }
    }

    fn pay_to_pot(&mut self, seat: Seat, amount: i64) -> i64 {
        let i = seat.index();
        let paid = amount.min(self.chips[i]).max(0);
        self.chips[i] -= paid;
        self.contrib[i] += paid;
        paid
    }

    fn transfer(&mut self, from: Seat, to: Seat, amount: i64) {
        let paid = amount.min(self.chips[from.index()]).max(0);
        if paid > 0 {
            self.chips[from.index()] -= paid;
            self.chips[to.index()] += paid;
            self.public(EventKind::Transfer { from, to, amount: paid });
        }
    }

    fn run(&mut self) -> Result<(), EngineError> {
        let spec = self.spec.clone();
        loop {
            if self.terminal || !matches!(self.pending, Pending::Idle) {
                return Ok(());
            }
            self.ticks += 1;
            if self.ticks > STEP_LIMIT {
                return Err(EngineError::StepLimit);
            }
            let phase = &spec.phases[self.phase];
            if self.step >= phase.steps.len() {
                self.leave_phase();
                continue;
            }
            match self.exec(&phase.steps[self.step]) {
                Flow::Done => {
                    self.step += 1;
                    self.sub = Sub::Fresh;
                }
                Flow::Wait => {}
            }
        }
    }

    fn exec(&mut self, step: &Step) -> Flow {
        match step {
            Step::Shuffle => {
                if let Some(s) = &mut self.streams {
                    self.deck.shuffle(&mut s.deck);
                }
                self.public(EventKind::Shuffle);
                Flow::Done
            }
            Step::Ante { amount } => {
                for seat in Seat::BOTH {
                    let paid = self.pay_to_pot(seat, *amount);
                    self.public(EventKind::Ante { seat, amount: paid });
                }
                Flow::Done
            }
            Step::DealHands { count } => self.deal(2 * *count, true),
            Step::DealBoard { count } => self.deal(*count, false),
            Step::Betting { first, bet, max_raises } => self.betting(*first, *bet, *max_raises),
            Step::Steal { actor, cost } => self.steal(*actor, *cost),
            Step::Redraw { actor } => self.redraw(*actor),
            Step::Peek { actor, cost } => self.peek(*actor, *cost),
            Step::Declare { actor, options } => {
                let seat = self.resolve(*actor);
                let dt = self.dt("declare", "announce");
                match self.take_choice(seat, dt.clone(), options.clone()) {
                    None => Flow::Wait,
                    Some(i) => {
                        self.public(EventKind::Action { seat, dt, label: options[i].clone() });
                        Flow::Done
                    }
                }
            }
            Step::Guess { options, stake } => self.guess(*options, *stake),
            Step::Bid { max_bid } => self.bid(*max_bid),
            Step::Assign { rule } => {
                let leader = match rule {
                    PositionRule::HighCard => {
                        let a = showdown_key(self.spec.showdown, &self.hands[0], &self.board);
                        let b = showdown_key(self.spec.showdown, &self.hands[1], &self.board);
                        if b > a {
                            Seat::Bob
                        } else {
                            Seat::Alice
                        }
                    }
                    PositionRule::ChipLeader => {
                        if self.chips[1] > self.chips[0] {
                            Seat::Bob
                        } else {
                            Seat::Alice
                        }
                    }
                    PositionRule::Alternate => self.leader.other(),
                    PositionRule::Coin => match self.draw(ChanceKind::Coin(2)) {
                        None => return Flow::Wait,
                        Some(i) => Seat::from_index(i),
                    },
                };
                self.leader = leader;
                self.public(EventKind::Leader { seat: leader });
                Flow::Done
            }
            Step::Bonus { amount } => {
                if let Some(top) = self.board.last().copied() {
                    for seat in Seat::BOTH {
                        if self.hands[seat.index()].iter().any(|c| c.rank == top.rank) {
                            self.transfer(seat.other(), seat, *amount);
                        }
                    }
                }
                Flow::Done
            }
        }
    }

    fn deal(&mut self, total: u8, to_hands: bool) -> Flow {
        let mut done = match self.sub {
            Sub::Dealing { done } => done,
            _ => 0,
        };
        while done < total {
            if self.deck.is_empty() {
                done += 1;
                continue;
            }
            let Some(idx) = self.draw(ChanceKind::Deck) else {
                self.sub = Sub::Dealing { done };
                return Flow::Wait;
            };
            let card = self.take_from_deck(idx);
            let label = self.spec.deck.label(card);
            if to_hands {
                let seat = Seat::from_index(done as usize % 2);
                self.hands[seat.index()].push(card);
                self.private(seat, EventKind::Deal { seat: Some(seat), card: label });
            } else {
                self.board.push(card);
                self.public(EventKind::Deal { seat: None, card: label });
            }
            done += 1;
        }
        Flow::Done
    }

    fn betting(&mut self, first: ActorRule, bet: i64, max_raises: u8) -> Flow {
        let (actor, facing, raises, acted) = match self.sub {
            Sub::Betting { actor, facing, raises, acted } => (actor, facing, raises, acted),
            _ => (self.resolve(first), 0, 0, 0),
        };
        self.sub = Sub::Betting { actor, facing, raises, acted };
        let chips = self.chips[actor.index()];
        let (name, options): (&str, Vec<&str>) = if facing == 0 {
            let mut o = vec!["check"];
            if chips >= bet {
                o.push("bet");
            }
            ("open", o)
        } else {
            let mut o = vec!["fold", "call"];
            if raises < max_raises && chips >= facing + bet {
                o.push("raise");
            }
            ("respond", o)
        };
        let dt = self.dt("wager", name);
        let options: Vec<String> = options.into_iter().map(String::from).collect();
        let Some(i) = self.take_choice(actor, dt.clone(), options.clone()) else {
            return Flow::Wait;
        };
        let label = options[i].clone();
        self.public(EventKind::Action { seat: actor, dt, label: label.clone() });
        let other = actor.other();
        match label.as_str() {
            "check" => {
                if acted + 1 >= 2 {
                    return Flow::Done;
                }
                self.sub = Sub::Betting { actor: other, facing: 0, raises, acted: acted + 1 };
                Flow::Wait
            }
            "bet" => {
                let paid = self.pay_to_pot(actor, bet);
                self.public(EventKind::Wager { seat: actor, amount: paid });
                self.sub = Sub::Betting { actor: other, facing: bet, raises, acted: 1 };
                Flow::Wait
            }
            "raise" => {
                let paid = self.pay_to_pot(actor, facing + bet);
                self.public(EventKind::Wager { seat: actor, amount: paid });
                self.sub = Sub::Betting { actor: other, facing: bet, raises: raises + 1, acted: 1 };
                Flow::Wait
            }
            "call" => {
                let paid = self.pay_to_pot(actor, facing);
                self.public(EventKind::Wager { seat: actor, amount: paid });
                let short = facing - paid;
                if short > 0 {
                    self.contrib[other.index()] -= short;
                    self.chips[other.index()] += short;
                    self.public(EventKind::Refund { seat: other, amount: short });
                }
                Flow::Done
            }
            _ => {
                let pot = self.pot();
                self.chips[other.index()] += pot;
                self.contrib = [0, 0];
                self.public(EventKind::Fold { seat: actor, pot });
                self.terminal = true;
                Flow::Wait
            }
        }
    }

    fn steal(&mut self, rule: ActorRule, cost: i64) -> Flow {
        let actor = self.resolve(rule);
        let opp = actor.other();
        if let Sub::Fresh = self.sub {
            let mut options = vec!["pass".to_string()];
            if self.chips[actor.index()] >= cost
                && !self.hands[opp.index()].is_empty()
                && !self.hands[actor.index()].is_empty()
            {
                options.push("steal".to_string());
            }
            let dt = self.dt("card", "steal");
            let Some(i) = self.take_choice(actor, dt.clone(), options.clone()) else {
                return Flow::Wait;
            };
            self.public(EventKind::Action { seat: actor, dt, label: options[i].clone() });
            if i == 0 {
                return Flow::Done;
            }
            self.transfer(actor, opp, cost);
            self.sub = Sub::Chosen;
        }
        let Some(j) = self.draw(ChanceKind::Hand(opp)) else {
            return Flow::Wait;
        };
        let mine = lowest_card(&self.hands[actor.index()]).expect("actor holds a card");
        let given = self.hands[actor.index()].remove(mine);
        let taken = self.hands[opp.index()].remove(j);
        self.hands[actor.index()].push(taken);
        self.hands[opp.index()].push(given);
        let (taken, given) = (self.spec.deck.label(taken), self.spec.deck.label(given));
        self.public(EventKind::Steal { seat: actor, taken, given });
        Flow::Done
    }

    fn redraw(&mut self, rule: ActorRule) -> Flow {
        let actor = self.resolve(rule);
        if let Sub::Fresh = self.sub {
            let mut options = vec!["keep".to_string()];
            if !self.deck.is_empty() && !self.hands[actor.index()].is_empty() {
                options.push("redraw".to_string());
            }
            let dt = self.dt("card", "redraw");
            let Some(i) = self.take_choice(actor, dt.clone(), options.clone()) else {
                return Flow::Wait;
            };
            self.public(EventKind::Action { seat: actor, dt, label: options[i].clone() });
            if i == 0 {
                return Flow::Done;
            }
            self.sub = Sub::Chosen;
        }
        let Some(j) = self.draw(ChanceKind::Deck) else {
            return Flow::Wait;
        };
        let drawn = self.take_from_deck(j);
        let low = lowest_card(&self.hands[actor.index()]).expect("actor holds a card");
        let discarded = self.hands[actor.index()].remove(low);
        self.discard.push(discarded);
        self.hands[actor.index()].push(drawn);
        let (discarded, drawn) = (self.spec.deck.label(discarded), self.spec.deck.label(drawn));
        self.private(actor, EventKind::Redraw { seat: actor, discarded, drawn });
        Flow::Done
    }

    fn peek(&mut self, rule: ActorRule, cost: i64) -> Flow {
        let actor = self.resolve(rule);
        let opp = actor.other();
        if let Sub::Fresh = self.sub {
            let mut options = vec!["pass".to_string()];
            if self.chips[actor.index()] >= cost && !self.hands[opp.index()].is_empty() {
                options.push("peek".to_string());
            }
            let dt = self.dt("observe", "peek");
            let Some(i) = self.take_choice(actor, dt.clone(), options.clone()) else {
                return Flow::Wait;
            };
            self.public(EventKind::Action { seat: actor, dt, label: options[i].clone() });
            if i == 0 {
                return Flow::Done;
            }
            self.transfer(actor, opp, cost);
            self.sub = Sub::Chosen;
        }
        let Some(j) = self.draw(ChanceKind::Hand(opp)) else {
            return Flow::Wait;
        };
        let card = self.spec.deck.label(self.hands[opp.index()][j]);
        self.private(actor, EventKind::Peek { seat: actor, card });
        Flow::Done
    }

    fn simultaneous(&mut self, name: &str, options: [Vec<String>; 2]) -> Option<[usize; 2]> {
        let dt = self.dt("simultaneous", name);
        let first = match self.sub {
            Sub::Sim { first } => first,
            _ => None,
        };
        let a = match first {
            Some(a) => a,
            None => {
                let a = self.take_choice(Seat::Alice, dt.clone(), options[0].clone())?;
                self.private(
                    Seat::Alice,
                    EventKind::Action { seat: Seat::Alice, dt: dt.clone(), label: options[0][a].clone() },
                );
                self.private(Seat::Bob, EventKind::Commit { seat: Seat::Alice, dt: dt.clone() });
                self.sub = Sub::Sim { first: Some(a) };
                a
            }
        };
        let b = self.take_choice(Seat::Bob, dt.clone(), options[1].clone())?;
        self.private(Seat::Bob, EventKind::Action { seat: Seat::Bob, dt: dt.clone(), label: options[1][b].clone() });
        self.private(Seat::Alice, EventKind::Commit { seat: Seat::Bob, dt: dt.clone() });
        self.public(EventKind::Reveal { dt, alice: options[0][a].clone(), bob: options[1][b].clone() });
        Some([a, b])
    }

    fn guess(&mut self, n: u8, stake: i64) -> Flow {
        let labels = guess_labels(n);
        let Some([a, b]) = self.simultaneous("guess", [labels.clone(), labels]) else {
            return Flow::Wait;
        };
        if a == b {
            self.transfer(Seat::Bob, Seat::Alice, stake);
        } else {
            self.transfer(Seat::Alice, Seat::Bob, stake);
        }
        Flow::Done
    }

    fn bid(&mut self, max_bid: i64) -> Flow {
        if let Sub::Resolve { winner } = self.sub {
            return self.award_card(winner);
        }
        let opts = |chips: i64| (0..=max_bid.min(chips).max(0)).map(|k| format!("bid {k}")).collect();
        let options = [opts(self.chips[0]), opts(self.chips[1])];
        let Some([a, b]) = self.simultaneous("bid", options) else {
            return Flow::Wait;
        };
        if a == b {
            return Flow::Done;
        }
        let (winner, amount) = if a > b { (Seat::Alice, a) } else { (Seat::Bob, b) };
        let paid = self.pay_to_pot(winner, amount as i64);
        self.public(EventKind::Wager { seat: winner, amount: paid });
        self.sub = Sub::Resolve { winner };
        self.award_card(winner)
    }

    fn award_card(&mut self, winner: Seat) -> Flow {
        if self.deck.is_empty() {
            return Flow::Done;
        }
        let Some(j) = self.draw(ChanceKind::Deck) else {
            return Flow::Wait;
        };
        let card = self.take_from_deck(j);
        self.hands[winner.index()].push(card);
        let label = self.spec.deck.label(card);
        self.private(winner, EventKind::Deal { seat: Some(winner), card: label });
        Flow::Done
    }

    fn var(&self, name: &str) -> i64 {
        if name == "pot" {
            return self.pot();
        }
        for seat in Seat::BOTH {
            if name == chips_var(seat) {
                return self.chips[seat.index()];
            }
        }
        if let Some(id) = name.strip_prefix("round:") {
            if let Some(i) = self.spec.phase_index(id) {
                return self.rounds[i] as i64;
            }
        }
        self.spec.variables.iter().find(|v| v.name == name).map_or(0, |v| v.initial)
    }

    fn operand(&self, o: &Operand) -> i64 {
        match o {
            Operand::Var(v) => self.var(v),
            Operand::Const(c) => *c,
        }
    }

    fn holds(&self, cond: &Condition) -> bool {
        match cond {
            Condition::Compare { lhs, cmp, rhs } => cmp.holds(self.operand(lhs), self.operand(rhs)),
            Condition::HandBeats { seat } => {
                let mine = showdown_key(self.spec.showdown, &self.hands[seat.index()], &self.board);
                let theirs = showdown_key(self.spec.showdown, &self.hands[seat.other().index()], &self.board);
                mine > theirs
            }
            Condition::TopRank { pile, cmp, rank } => {
                let cards: &[Card] = match pile.as_str() {
                    "board" => &self.board,
                    "hand:alice" => &self.hands[0],
                    "hand:bob" => &self.hands[1],
                    "discard" => &self.discard,
                    _ => &self.deck,
                };
                cards.iter().map(|c| c.rank).max().is_some_and(|top| cmp.holds(top, *rank))
            }
        }
    }

    fn leave_phase(&mut self) {
        let spec = self.spec.clone();
        let phase = &spec.phases[self.phase];
        let taken = phase.transitions.iter().position(|t| self.holds(&t.when));
        let to = match taken {
            Some(k) => phase.transitions[k].to.clone(),
            None => phase.next.clone(),
        };
        self.public(EventKind::Branch { from: phase.id.clone(), to: to.clone(), index: taken });
        if to == SHOWDOWN {
            self.showdown();
            return;
        }
        let j = spec.phase_index(&to).expect("validated target");
        self.rounds[j] += 1;
        self.phase = j;
        self.step = 0;
        self.sub = Sub::Fresh;
        self.public(EventKind::PhaseEnter { phase: to, round: self.rounds[j] });
    }

    fn showdown(&mut self) {
        let a = showdown_key(self.spec.showdown, &self.hands[0], &self.board);
        let b = showdown_key(self.spec.showdown, &self.hands[1], &self.board);
        let pot = self.pot();
        let winner = match a.cmp(&b) {
            std::cmp::Ordering::Greater => Some(Seat::Alice),
            std::cmp::Ordering::Less => Some(Seat::Bob),
            std::cmp::Ordering::Equal => None,
        };
        match winner {
            Some(w) => self.chips[w.index()] += pot,
            None => {
                self.chips[0] += self.contrib[0];
                self.chips[1] += self.contrib[1];
            }
        }
        self.contrib = [0, 0];
        let label = |cards: &[Card]| cards.iter().map(|c| self.spec.deck.label(*c)).collect();
        let (alice, bob) = (label(&self.hands[0]), label(&self.hands[1]));
        self.public(EventKind::Showdown { alice, bob, winner, pot });
        self.terminal = true;
    }
}

pub fn guess_labels(n: u8) -> Vec<String> {
    match n {
        2 => vec!["heads".into(), "tails".into()],
        3 => vec!["left".into(), "middle".into(), "right".into()],
        _ => (1..=n).map(|k| format!("pick {k}")).collect(),
    }
}
