//! Estimation and inference over tournament slot tables.
//!
//! Every fit is a pure function of the slot rows. Bootstraps draw each
//! replicate from its own seeded stream, so a full set of intervals is
//! reproducible from one seed regardless of thread scheduling.

pub mod ablation;
pub mod bootstrap;
pub mod data;
pub mod decomposition;
pub mod diagnostics;
pub mod fit;
pub mod h2h;
pub mod jagged;
pub mod linalg;
pub mod multiple;
pub mod profile;
pub mod rank;
pub mod reference;
pub mod report;
pub mod stability;

pub use data::{ClusterKey, Observations};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("no usable slot rows")]
    Empty,
    #[error("comparison graph is disconnected; components: {}", fmt_components(.0))]
    Disconnected(Vec<Vec<String>>),
    #[error("axis design is rank deficient; VIFs: {0}")]
    RankDeficient(String),
    #[error("need at least {need} games, got {got}")]
    TooFewGames { need: usize, got: usize },
    #[error("missing axis vector for game {0}")]
    MissingAxes(u64),
    #[error("{0}")]
    Invalid(String),
}

fn fmt_components(c: &[Vec<String>]) -> String {
    c.iter().map(|m| format!("{{{}}}", m.join(", "))).collect::<Vec<_>>().join(" ")
}
