//! Cards, deck configuration, and showdown ordering.

use serde::{Deserialize, Serialize};

const RANK_CHARS: &[u8; 13] = b"23456789TJQKA";
const SUIT_CHARS: &[u8; 4] = b"shdc";

/// A single card. `rank` 0 is the lowest rank of the configured deck.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Card {
    pub rank: u8,
    pub suit: u8,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeckConfig {
    /// Number of ranks, at most 13. Labels run up to K, so three ranks read J, Q, K; all 13 end at A.
    pub ranks: u8,
    /// Number of suits, at most 4.
    pub suits: u8,
    /// Copies of every (rank, suit) card.
    pub copies: u8,
}

impl DeckConfig {
    pub fn size(&self) -> usize {
        self.ranks as usize * self.suits as usize * self.copies as usize
    }

    /// Cards in canonical order: copies outermost, then suit, then rank.
    pub fn cards(&self) -> Vec<Card> {
        let mut out = Vec::with_capacity(self.size());
        for _ in 0..self.copies {
            for suit in 0..self.suits {
                for rank in 0..self.ranks {
                    out.push(Card { rank, suit });
                }
            }
        }
        out
    }

    fn offset(&self) -> usize {
        match self.ranks.min(13) {
            13 => 0,
            n => 12 - n as usize,
        }
    }

    pub fn label(&self, card: Card) -> String {
        let r = self.rank_label(card.rank);
        if self.suits > 1 {
            format!("{}{}", r, SUIT_CHARS[card.suit as usize % 4] as char)
        } else {
            r.to_string()
        }
    }

    pub fn rank_label(&self, rank: u8) -> char {
        RANK_CHARS[self.offset() + rank as usize] as char
    }
}

/// How hands are compared at showdown. Larger keys win.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShowdownMetric {
    /// Highest card wins, then next highest, over hand plus board.
    HighCard,
    /// Largest group of equal ranks wins, then its rank, then kickers.
    Pairs,
    /// Largest sum of ranks over hand plus board wins.
    RankSum,
    /// Lowest private card wins, then next lowest.
    LowCard,
}

impl ShowdownMetric {
    pub fn describe(self) -> &'static str {
        match self {
            ShowdownMetric::HighCard => {
                "the highest card among hand and board wins; ties compare the next highest card"
            }
            ShowdownMetric::Pairs => {
                "the largest group of equal ranks among hand and board wins, then the higher group rank, then the highest remaining cards"
            }
            ShowdownMetric::RankSum => "the larger sum of rank values over hand and board wins",
            ShowdownMetric::LowCard => {
                "the lowest private card wins; ties compare the next lowest private card"
            }
        }
    }
}

/// Ordering key for a hand under `metric`; equal keys split the pot.
pub fn showdown_key(metric: ShowdownMetric, hand: &[Card], board: &[Card]) -> Vec<i32> {
    match metric {
        ShowdownMetric::HighCard => {
            let mut ranks: Vec<i32> = hand.iter().chain(board).map(|c| c.rank as i32).collect();
            ranks.sort_unstable_by(|a, b| b.cmp(a));
            ranks
        }
        ShowdownMetric::Pairs => {
            let mut counts = [0i32; 13];
            for c in hand.iter().chain(board) {
                counts[c.rank as usize] += 1;
            }
            let mut groups: Vec<(i32, i32)> = counts
                .iter()
                .enumerate()
                .filter(|(_, &n)| n > 0)
                .map(|(r, &n)| (n, r as i32))
                .collect();
            groups.sort_unstable_by(|a, b| b.cmp(a));
            groups.into_iter().flat_map(|(n, r)| [n, r]).collect()
        }
        ShowdownMetric::RankSum => {
            vec![hand.iter().chain(board).map(|c| c.rank as i32 + 1).sum()]
        }
        ShowdownMetric::LowCard => {
            let mut ranks: Vec<i32> = hand.iter().map(|c| -(c.rank as i32)).collect();
            ranks.sort_unstable_by(|a, b| b.cmp(a));
            ranks
        }
    }
}

/// Index of the lowest-ranked card in `hand`, first occurrence on ties.
pub fn lowest_card(hand: &[Card]) -> Option<usize> {
    hand.iter()
        .enumerate()
        .min_by_key(|(i, c)| (c.rank, c.suit, *i))
        .map(|(i, _)| i)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(rank: u8) -> Card {
        Card { rank, suit: 0 }
    }

    #[test]
    fn kuhn_labels() {
        let deck = DeckConfig { ranks: 3, suits: 1, copies: 1 };
        let labels: Vec<String> = deck.cards().into_iter().map(|x| deck.label(x)).collect();
        assert_eq!(labels, ["J", "Q", "K"]);
    }

    #[test]
    fn suited_labels() {
        let deck = DeckConfig { ranks: 2, suits: 2, copies: 1 };
        let labels: Vec<String> = deck.cards().into_iter().map(|x| deck.label(x)).collect();
        assert_eq!(labels, ["Qs", "Ks", "Qh", "Kh"]);
    }

    #[test]
    fn pairs_beat_high_card() {
        let pair = showdown_key(ShowdownMetric::Pairs, &[c(1)], &[c(1)]);
        let high = showdown_key(ShowdownMetric::Pairs, &[c(4)], &[c(1)]);
        assert!(pair > high);
    }

    #[test]
    fn low_card_prefers_low() {
        let low = showdown_key(ShowdownMetric::LowCard, &[c(0), c(5)], &[]);
        let high = showdown_key(ShowdownMetric::LowCard, &[c(1), c(2)], &[]);
        assert!(low > high);
    }

    #[test]
    fn rank_sum_counts_board() {
        assert_eq!(showdown_key(ShowdownMetric::RankSum, &[c(0)], &[c(2)]), vec![4]);
    }
}
