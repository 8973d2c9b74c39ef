//! Natural-language rulebooks, per-turn prompts, and the reply parser.

use std::fmt::Write as _;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::engine::{
    hand_pile, ActorRule, Cmp, Condition, Event, EventKind, GameSpec, GameState, Menu, Operand, PositionRule,
    Seat, Step, Template, Visibility, SHOWDOWN,
};

fn actor(rule: ActorRule) -> &'static str {
    match rule {
        ActorRule::Alice => "Alice",
        ActorRule::Bob => "Bob",
        ActorRule::Leader => "the current leader",
        ActorRule::Follower => "the player who is not the leader",
    }
}

fn cmp_words(cmp: Cmp) -> &'static str {
    match cmp {
        Cmp::Lt => "is less than",
        Cmp::Le => "is at most",
        Cmp::Gt => "is greater than",
        Cmp::Ge => "is at least",
        Cmp::Eq => "equals",
        Cmp::Ne => "differs from",
    }
}

fn pile_words(pile: &str) -> String {
    match pile {
        "deck" => "the deck".into(),
        "discard" => "the discard pile".into(),
        "board" => "the board".into(),
        p if p == hand_pile(Seat::Alice) => "Alice's hand".into(),
        p if p == hand_pile(Seat::Bob) => "Bob's hand".into(),
        p => format!("pile {p}"),
    }
}

fn operand_words(op: &Operand) -> String {
    match op {
        Operand::Const(c) => c.to_string(),
        Operand::Var(v) if v == "pot" => "the pot".into(),
        Operand::Var(v) if v == "chips:alice" => "Alice's chip count".into(),
        Operand::Var(v) if v == "chips:bob" => "Bob's chip count".into(),
        Operand::Var(v) => match v.strip_prefix("round:") {
            Some(p) => format!("the number of times phase {p} has been entered"),
            None => format!("variable {v}"),
        },
    }
}

fn condition_words(spec: &GameSpec, c: &Condition) -> String {
    match c {
        Condition::Compare { lhs, cmp, rhs } => {
            format!("{} {} {}", operand_words(lhs), cmp_words(*cmp), operand_words(rhs))
        }
        Condition::HandBeats { seat } => {
            format!("{}'s cards would beat {}'s under the showdown rule", seat.name(), seat.other().name())
        }
        Condition::TopRank { pile, cmp, rank } => format!(
            "the highest rank in {} {} {} (never true while that pile is empty)",
            pile_words(pile),
            cmp_words(*cmp),
            spec.deck.rank_label(*rank)
        ),
    }
}

fn target_words(to: &str) -> String {
    if to == SHOWDOWN {
        "the showdown".into()
    } else {
        format!("phase {to}")
    }
}

fn step_words(spec: &GameSpec, step: &Step) -> String {
    match step {
        Step::Shuffle => "The dealer shuffles every card still in the deck.".into(),
        Step::Ante { amount } => format!(
            "Each player puts {amount} chip{} into the pot. A player with fewer chips puts in everything they have.",
            if *amount == 1 { "" } else { "s" }
        ),
        Step::DealHands { count } => format!(
            "The dealer deals {count} private card{} to each player, alternating and starting with Alice. Only the owner sees these cards. If the deck runs out, the remaining deals are skipped.",
            if *count == 1 { "" } else { "s" }
        ),
        Step::DealBoard { count } => format!(
            "The dealer turns {count} card{} face up on the board, where both players see them.",
            if *count == 1 { "" } else { "s" }
        ),
        Step::Betting { first, bet, max_raises } => format!(
            "A betting round begins with {}. A player facing no bet may check or, holding at least {bet} chips, bet {bet}. \
             A player facing a bet may fold, call, or{} raise by a further {bet}. Raises are capped at {max_raises} per round. \
             Folding ends the game at once and the opponent takes the whole pot. Two checks in a row, or a call, close the round. \
             A player who cannot cover a call puts in all remaining chips, and the unmatched part of the bet is returned to the bettor.",
            actor(*first),
            if *max_raises == 0 { " (never, in this round)" } else { "" },
        ),
        Step::Steal { actor: a, cost } => format!(
            "{} may pass or steal. Stealing costs {cost} chips, paid to the opponent, and is only offered when both players hold cards and the stealer can pay. \
             The stealer gives up their lowest card and takes a random card from the opponent's hand. Both players see which cards changed hands.",
            actor(*a)
        ),
        Step::Redraw { actor: a } => format!(
            "{} may keep their hand or redraw. Redrawing discards their lowest card face down and draws a replacement from the deck; \
             only the redrawing player sees the cards involved. The option is withdrawn when the deck is empty.",
            actor(*a)
        ),
        Step::Peek { actor: a, cost } => format!(
            "{} may pass or peek. Peeking costs {cost} chips, paid to the opponent, and privately shows the peeking player one random card from the opponent's hand.",
            actor(*a)
        ),
        Step::Declare { actor: a, options } => format!(
            "{} publicly announces one of: {}. The announcement has no direct effect on chips or cards.",
            actor(*a),
            options.join(", ")
        ),
        Step::Guess { options, stake } => format!(
            "Both players secretly choose one of {} options ({}). Alice commits first, Bob then commits without seeing her choice, and both choices are revealed together. \
             If the choices match, Bob pays Alice {stake} chips; otherwise Alice pays Bob {stake} chips. A player can only pay what they hold.",
            options,
            crate::engine::guess_labels(*options).join(", ")
        ),
        Step::Bid { max_bid } => format!(
            "Both players secretly bid between 0 and {max_bid} chips (never more than they hold); the bids are revealed together. \
             On equal bids nothing happens. Otherwise the higher bidder puts their bid into the pot and receives one extra private card from the deck, if any remain."
        ),
        Step::Assign { rule } => match rule {
            PositionRule::HighCard => format!(
                "The leader role passes to the player whose cards rank higher under the showdown rule ({}); Alice leads on a tie.",
                spec.showdown.describe()
            ),
            PositionRule::ChipLeader => "The leader role passes to the player with more chips; Alice leads on a tie.".into(),
            PositionRule::Alternate => "The leader role passes to the other player.".into(),
            PositionRule::Coin => "A fair coin decides which player becomes the leader.".into(),
        },
        Step::Bonus { amount } => format!(
            "If the board is not empty, each player holding a card of the same rank as the most recent board card collects {amount} chips from the opponent."
        ),
    }
}

fn template_words(t: Template) -> &'static str {
    match t {
        Template::Action => "an action phase",
        Template::Observation => "an observation phase",
        Template::Simultaneous => "a simultaneous-move phase",
        Template::Position => "a position phase",
    }
}

/// Deterministic rulebook covering every phase, step, visibility rule and branch.
pub fn render_rulebook(spec: &GameSpec) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "RULEBOOK FOR GAME {}", spec.seed);
    let _ = writeln!(s);
    let _ = writeln!(s, "OVERVIEW");
    let _ = writeln!(
        s,
        "This is a two-player card game between Alice and Bob. Each player starts with {} chips. \
         Whatever one player wins, the other loses. Your score is your final chip count minus your starting chips.",
        spec.initial_chips
    );
    let _ = writeln!(s);
    let _ = writeln!(s, "CARDS");
    let ranks: Vec<String> = (0..spec.deck.ranks).map(|r| spec.deck.rank_label(r).to_string()).collect();
    let _ = writeln!(
        s,
        "The deck holds {} cards: ranks {} from lowest to highest, in {} suit{}, with {} cop{} of each card. \
         Suits never matter for ranking.",
        spec.deck.size(),
        ranks.join(", "),
        spec.deck.suits,
        if spec.deck.suits == 1 { "" } else { "s" },
        spec.deck.copies,
        if spec.deck.copies == 1 { "y" } else { "ies" }
    );
    let _ = writeln!(s);
    let _ = writeln!(s, "VISIBILITY");
    for pile in &spec.piles {
        let rule = match pile.visibility {
            Visibility::Public => "is face up and visible to both players",
            Visibility::OwnerOnly => "is visible only to its owner",
            Visibility::Hidden => "is face down and visible to nobody",
        };
        let _ = writeln!(s, "- {} {}.", capitalise(&pile_words(&pile.name)), rule);
    }
    let _ = writeln!(
        s,
        "- Every bet, call, fold, announcement and chip transfer is public. Secret choices are shown to the opponent only as a commitment until they are revealed."
    );
    let _ = writeln!(s);
    let _ = writeln!(s, "CHIPS");
    let _ = writeln!(
        s,
        "Chips move only through antes, bets, calls, raises, bids, the costs and penalties described below, and the final settlement. \
         No player can pay more chips than they hold; a player with no chips simply pays nothing."
    );
    let _ = writeln!(s);
    let _ = writeln!(s, "PHASES");
    let starts: Vec<&str> = spec.phases.iter().filter(|p| p.start).map(|p| p.id.as_str()).collect();
    let _ = writeln!(s, "Play begins in phase {}. Phases run their steps in order.", starts.join(", "));
    for phase in &spec.phases {
        let _ = writeln!(s);
        let _ = writeln!(s, "Phase {} ({}).", phase.id, template_words(phase.template));
        for (i, step) in phase.steps.iter().enumerate() {
            let _ = writeln!(s, "  {}. {}", i + 1, step_words(spec, step));
        }
        if phase.steps.is_empty() {
            let _ = writeln!(s, "  This phase has no steps.");
        }
        for (i, t) in phase.transitions.iter().enumerate() {
            let lead = if i == 0 { "When the steps are done, if" } else { "Otherwise, if" };
            let _ = writeln!(s, "  {lead} {}, play moves to {}.", condition_words(spec, &t.when), target_words(&t.to));
        }
        let lead = if phase.transitions.is_empty() { "When the steps are done" } else { "If no condition above holds" };
        let _ = writeln!(s, "  {lead}, play moves to {}.", target_words(&phase.next));
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "SHOWDOWN");
    let _ = writeln!(
        s,
        "At the showdown both players reveal their cards and {}. The winner takes the whole pot. \
         On an exact tie each player takes back what they put into the pot.",
        spec.showdown.describe()
    );
    let _ = writeln!(s);
    let _ = writeln!(s, "HOW TO REPLY");
    let _ = writeln!(
        s,
        "Whenever it is your turn you will see the current state, the events you have witnessed so far, and a numbered list of legal options. \
         Reply with a single line of JSON of the form {{\"action\": <option number>}}."
    );
    s
}

fn capitalise(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().collect::<String>() + c.as_str(),
        None => String::new(),
    }
}

fn who(seat: Seat, viewer: Seat) -> String {
    if seat == viewer {
        format!("You ({})", seat.name())
    } else {
        seat.name().to_string()
    }
}

/// One line per event, as seen by `viewer`.
pub fn describe_event(e: &Event, viewer: Seat) -> String {
    match &e.kind {
        EventKind::PhaseEnter { phase, round } => format!("Phase {phase} begins (entry {round})."),
        EventKind::Shuffle => "The deck is shuffled.".into(),
        EventKind::Ante { seat, amount } => format!("{} antes {amount}.", who(*seat, viewer)),
        EventKind::Deal { seat: Some(s), card } => format!("{} receive{} {card}.", who(*s, viewer), if *s == viewer { "" } else { "s" }),
        EventKind::Deal { seat: None, card } => format!("Board card: {card}."),
        EventKind::Action { seat, dt, label } => format!("{} chose {label} ({dt}).", who(*seat, viewer)),
        EventKind::Commit { seat, dt } => format!("{} committed a secret choice ({dt}).", who(*seat, viewer)),
        EventKind::Reveal { dt, alice, bob } => format!("Reveal ({dt}): Alice {alice}, Bob {bob}."),
        EventKind::Wager { seat, amount } => format!("{} put {amount} into the pot.", who(*seat, viewer)),
        EventKind::Transfer { from, to, amount } => format!("{} paid {amount} to {}.", who(*from, viewer), who(*to, viewer)),
        EventKind::Refund { seat, amount } => format!("{} got {amount} back from the pot.", who(*seat, viewer)),
        EventKind::Peek { seat, card } => format!("{} peeked and saw {card}.", who(*seat, viewer)),
        EventKind::Steal { seat, taken, given } => format!("{} stole {taken} and gave {given}.", who(*seat, viewer)),
        EventKind::Redraw { seat, discarded, drawn } => {
            format!("{} discarded {discarded} and drew {drawn}.", who(*seat, viewer))
        }
        EventKind::Leader { seat } => format!("{} now leads.", who(*seat, viewer)),
        EventKind::Branch { from, to, index } => match index {
            Some(i) => format!("Condition {} of phase {from} held; moving to {}.", i + 1, target_words(to)),
            None => format!("Phase {from} is over; moving to {}.", target_words(to)),
        },
        EventKind::Fold { seat, pot } => format!("{} folded; the pot of {pot} goes to the opponent.", who(*seat, viewer)),
        EventKind::Showdown { alice, bob, winner, pot } => format!(
            "Showdown: Alice {}, Bob {}; {} (pot {pot}).",
            alice.join(" "),
            bob.join(" "),
            winner.map_or("tie".to_string(), |w| format!("{} wins", w.name()))
        ),
    }
}

/// The per-turn prompt for the seat to act: state block, visible log, decision block.
pub fn render_observation(state: &GameState, seat: Seat) -> String {
    let spec = state.spec();
    let mut s = String::new();
    let label = |cards: &[crate::engine::Card]| {
        if cards.is_empty() {
            "(none)".to_string()
        } else {
            cards.iter().map(|c| spec.deck.label(*c)).collect::<Vec<_>>().join(" ")
        }
    };
    let phase = state.current_phase().to_string();
    let round = spec.phase_index(&phase).map_or(0, |i| state.round(i));
    let chips = state.chips();
    let _ = writeln!(s, "CURRENT STATE");
    let _ = writeln!(s, "You are {}. Game {}.", seat.name(), spec.seed);
    let _ = writeln!(s, "Phase: {phase} (entry {round})");
    let _ = writeln!(s, "Your hand: {}", label(state.hand(seat)));
    if spec.has_board() {
        let _ = writeln!(s, "Board: {}", label(state.board()));
    }
    let _ = writeln!(
        s,
        "Chips: you {}, {} {}; pot {}",
        chips[seat.index()],
        seat.other().name(),
        chips[seat.other().index()],
        state.pot()
    );
    let _ = writeln!(s, "Leader: {}", state.leader().name());
    let _ = writeln!(s);
    let _ = writeln!(s, "EVENTS SO FAR");
    for (i, e) in state.events().iter().filter(|e| e.visible_to(seat)).enumerate() {
        let _ = writeln!(s, "{}. {}", i + 1, describe_event(e, seat));
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "YOUR DECISION");
    match state.pending_menu().filter(|m| m.seat == seat) {
        Some(menu) => {
            let _ = writeln!(s, "Decision type: {}", menu.dt);
            for (i, o) in menu.options.iter().enumerate() {
                let _ = writeln!(s, "  {i}: {o}");
            }
            let _ = writeln!(
                s,
                "Reply with a single line of JSON and nothing else, for example {{\"action\": 0}}, using one of the option numbers above."
            );
        }
        None => {
            let _ = writeln!(s, "It is not your turn.");
        }
    }
    s
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParsePath {
    Strict,
    Lenient,
    Fallback,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseResult {
    pub index: usize,
    pub path: ParsePath,
    /// The lenient pass matched an option label rather than a number.
    pub by_label: bool,
    pub raw: String,
}

fn resolve_value(v: &Value, menu: &Menu) -> Option<(usize, bool)> {
    match v {
        Value::Number(n) => n.as_u64().map(|i| i as usize).filter(|i| *i < menu.options.len()).map(|i| (i, false)),
        Value::String(s) => resolve_token(s, menu),
        _ => None,
    }
}

/// A bare token: an option number or a label, case-insensitive after trimming.
fn resolve_token(tok: &str, menu: &Menu) -> Option<(usize, bool)> {
    let t = tok.trim().trim_matches(|c| c == '"' || c == '\'' || c == '`').trim();
    if let Ok(i) = t.parse::<usize>() {
        return (i < menu.options.len()).then_some((i, false));
    }
    let lower = t.to_lowercase();
    menu.options.iter().position(|o| o.to_lowercase() == lower).map(|i| (i, true))
}

/// Balanced `{...}` spans, last first.
fn objects_from_end(text: &str) -> Vec<&str> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut end = bytes.len();
    while let Some(close) = text[..end].rfind('}') {
        let mut depth = 0i32;
        let mut open = None;
        for i in (0..=close).rev() {
            match bytes[i] {
                b'}' => depth += 1,
                b'{' => {
                    depth -= 1;
                    if depth == 0 {
                        open = Some(i);
                        break;
                    }
                }
                _ => {}
            }
        }
        match open {
            Some(o) => {
                out.push(&text[o..=close]);
                end = o;
            }
            None => end = close,
        }
    }
    out
}

fn action_regex() -> &'static Regex {
    static RE: std::sync::OnceLock<Regex> = std::sync::OnceLock::new();
    RE.get_or_init(|| Regex::new(r#"(?i)["']?action["']?\s*[:=]\s*("[^"\n]*"?|'[^'\n]*'?|[^,}\s]+)"#).unwrap())
}

fn lenient(text: &str, menu: &Menu) -> Option<(usize, bool)> {
    for obj in objects_from_end(text) {
        if let Ok(Value::Object(map)) = serde_json::from_str::<Value>(obj) {
            let found = map.iter().find(|(k, _)| k.trim().eq_ignore_ascii_case("action")).map(|(_, v)| v);
            if let Some(hit) = found.and_then(|v| resolve_value(v, menu)) {
                return Some(hit);
            }
        }
    }
    // Partial or malformed JSON: the last `action: value` fragment.
    if let Some(hit) = action_regex().captures_iter(text).last().and_then(|c| resolve_token(&c[1], menu)) {
        return Some(hit);
    }
    let line = text.trim().lines().last().unwrap_or("").trim().trim_end_matches(['.', '!']);
    resolve_token(line, menu)
}

/// Strict, then lenient, then a uniform draw from `rng`. Always returns a legal index.
pub fn parse_reply(text: &str, menu: &Menu, rng: &mut ChaCha8Rng) -> ParseResult {
    let raw = text.to_string();
    if let Ok(Value::Object(map)) = serde_json::from_str::<Value>(text.trim()) {
        if map.len() == 1 {
            if let Some(i) = map.get("action").and_then(Value::as_u64).map(|i| i as usize) {
                if i < menu.options.len() {
                    return ParseResult { index: i, path: ParsePath::Strict, by_label: false, raw };
                }
            }
        }
    }
    if let Some((index, by_label)) = lenient(text, menu) {
        return ParseResult { index, path: ParsePath::Lenient, by_label, raw };
    }
    let index = rng.random_range(0..menu.options.len());
    ParseResult { index, path: ParsePath::Fallback, by_label: false, raw }
}
