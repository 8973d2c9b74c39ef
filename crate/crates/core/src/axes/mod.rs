//! Monte-Carlo estimates of six strategic-complexity axes.
//!
//! Everything starts from an L0 log of uniform self-play. Decision types are
//! qualified by seat, so a menu both seats can face yields two separate entries.
//! Every random draw is keyed by the measurement seed, so a (spec, tier, seed)
//! triple always yields the same vector.

mod estimators;
mod log;
mod opponent;

use std::fmt;
use std::io::{self, BufRead, Write};
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{EngineError, GameSpec};

pub use estimators::{
    axis_info_sensitivity, axis_risk, axis_state_space, axis_temporal_depth, q10, temporal_terms, RiskResult,
    RISK_FLOOR, RISK_MIN_TRIES, RISK_MIN_VISITS,
};
pub use log::{l1_best_response, run_l0, EpisodeLog, LoggedDecision, LoggedEpisode};
pub use opponent::{
    axis_brittleness, axis_opponent_modeling, brittleness_for_seat, indicator_slope, opponent_shares, sobol_blocks,
    sobol_points, sobol_simplex, to_blocks, BrittlenessTerms, Perturbed, RefineHint, BRITTLENESS_FLOOR,
    PERTURB_MASS, REFINE_RADIUS, UNSTABLE_SHARE,
};

#[derive(Debug, Error)]
pub enum AxisError {
    #[error("episode log is empty")]
    EmptyLog,
    #[error("sobol sequence supports {max} dimensions, {dims} requested")]
    SobolDims { dims: usize, max: usize },
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("axis table: {0}")]
    Table(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tier {
    Fast,
    Precise,
}

impl Tier {
    pub fn budget(self) -> TierBudget {
        match self {
            Tier::Precise => TierBudget {
                l0_episodes: 3000,
                l1_episodes: 1500,
                sobol_global: 64,
                sobol_refine: 256,
                playouts: 32,
                brittle_trials: 20,
                brittle_opponents: 10,
                brittle_playouts: 15,
            },
            Tier::Fast => TierBudget {
                l0_episodes: 1000,
                l1_episodes: 0,
                sobol_global: 64,
                sobol_refine: 0,
                playouts: 32,
                brittle_trials: 10,
                brittle_opponents: 5,
                brittle_playouts: 8,
            },
        }
    }
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Tier::Fast => "fast",
            Tier::Precise => "precise",
        })
    }
}

impl FromStr for Tier {
    type Err = AxisError;
    fn from_str(s: &str) -> Result<Self, AxisError> {
        match s {
            "fast" => Ok(Tier::Fast),
            "precise" => Ok(Tier::Precise),
            _ => Err(AxisError::Table(format!("unknown tier {s:?}"))),
        }
    }
}

/// Episode and policy counts for one measurement. `l1_episodes = 0` weights
/// brittleness by L0 visits instead of L1 play.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TierBudget {
    pub l0_episodes: usize,
    pub l1_episodes: usize,
    pub sobol_global: usize,
    pub sobol_refine: usize,
    pub playouts: usize,
    pub brittle_trials: usize,
    pub brittle_opponents: usize,
    pub brittle_playouts: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisVector {
    pub state_space: f64,
    pub temporal_depth: f64,
    pub info_sensitivity: f64,
    pub opponent_modeling: f64,
    pub risk: f64,
    pub brittleness: f64,
    pub tier: Tier,
}

impl AxisVector {
    pub const NAMES: [&'static str; 6] =
        ["state_space", "temporal_depth", "info_sensitivity", "opponent_modeling", "risk", "brittleness"];

    pub fn values(&self) -> [f64; 6] {
        [
            self.state_space,
            self.temporal_depth,
            self.info_sensitivity,
            self.opponent_modeling,
            self.risk,
            self.brittleness,
        ]
    }
}

/// One row of the axis table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisRecord {
    pub seed: u64,
    pub axes: AxisVector,
    pub measurement_seed: u64,
    /// Seats that had at least one risk-eligible context.
    pub risk_seats: [bool; 2],
}

pub fn measure_axes(spec: &Arc<GameSpec>, tier: Tier, measurement_seed: u64) -> Result<AxisRecord, AxisError> {
    measure_with_budget(spec, tier, &tier.budget(), measurement_seed)
}

pub fn measure_with_budget(
    spec: &Arc<GameSpec>,
    tier: Tier,
    budget: &TierBudget,
    measurement_seed: u64,
) -> Result<AxisRecord, AxisError> {
    let log = run_l0(spec, budget.l0_episodes, measurement_seed)?;
    let l1 = l1_best_response(&log);
    let risk = axis_risk(&log);
    let axes = AxisVector {
        state_space: axis_state_space(&log)?,
        temporal_depth: axis_temporal_depth(&log),
        info_sensitivity: axis_info_sensitivity(&log),
        opponent_modeling: axis_opponent_modeling(spec, &log, budget, measurement_seed)?,
        risk: risk.value,
        brittleness: axis_brittleness(spec, &log, &l1, budget, measurement_seed)?,
        tier,
    };
    Ok(AxisRecord { seed: spec.seed, axes, measurement_seed, risk_seats: risk.seats })
}

pub const TABLE_HEADER: &str =
    "seed,state_space,temporal_depth,info_sensitivity,opponent_modeling,risk,brittleness,tier,measurement_seed,risk_seats";

fn mask(seats: [bool; 2]) -> String {
    seats.iter().map(|s| if *s { '1' } else { '0' }).collect()
}

/// Writes the table with shortest round-trip float formatting, so output bytes are reproducible.
pub fn write_axis_table<W: Write>(rows: &[AxisRecord], mut out: W) -> io::Result<()> {
    writeln!(out, "{TABLE_HEADER}")?;
    for r in rows {
        let v = r.axes.values();
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.seed,
            v[0],
            v[1],
            v[2],
            v[3],
            v[4],
            v[5],
            r.axes.tier,
            r.measurement_seed,
            mask(r.risk_seats)
        )?;
    }
    Ok(())
}

/// Reads a table written by [`write_axis_table`]; `#` lines are skipped. Errors carry the line number.
pub fn read_axis_table<R: BufRead>(input: R) -> Result<Vec<AxisRecord>, AxisError> {
    let mut rows = Vec::new();
    let mut header_seen = false;
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        if !header_seen {
            if line.trim() != TABLE_HEADER {
                return Err(AxisError::Table(format!("line {}: unexpected header {line:?}", i + 1)));
            }
            header_seen = true;
            continue;
        }
        rows.push(parse_row(&line).map_err(|e| AxisError::Table(format!("line {}: {e}", i + 1)))?);
    }
    Ok(rows)
}

fn parse_row(line: &str) -> Result<AxisRecord, String> {
    let f: Vec<&str> = line.split(',').collect();
    if f.len() != 10 {
        return Err(format!("expected 10 fields, got {}", f.len()));
    }
    let num = |s: &str| s.parse::<f64>().map_err(|e| format!("{s:?}: {e}"));
    let int = |s: &str| s.parse::<u64>().map_err(|e| format!("{s:?}: {e}"));
    let m = f[9].as_bytes();
    if m.len() != 2 || m.iter().any(|b| *b != b'0' && *b != b'1') {
        return Err(format!("bad seat mask {:?}", f[9]));
    }
    Ok(AxisRecord {
        seed: int(f[0])?,
        axes: AxisVector {
            state_space: num(f[1])?,
            temporal_depth: num(f[2])?,
            info_sensitivity: num(f[3])?,
            opponent_modeling: num(f[4])?,
            risk: num(f[5])?,
            brittleness: num(f[6])?,
            tier: f[7].parse::<Tier>().map_err(|_| format!("unknown tier {:?}", f[7]))?,
        },
        measurement_seed: int(f[8])?,
        risk_seats: [m[0] == b'1', m[1] == b'1'],
    })
}
