//! Reference nine-model leaderboard, kept as a format and convention fixture.

use serde::{Deserialize, Serialize};

pub const LEADERBOARD_CSV: &str = include_str!("../fixtures/reference_leaderboard.csv");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceRow {
    pub model: String,
    pub alpha: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

pub fn reference_leaderboard() -> Vec<ReferenceRow> {
    csv::Reader::from_reader(LEADERBOARD_CSV.as_bytes())
        .deserialize()
        .collect::<Result<_, _>>()
        .expect("bundled fixture parses")
}
