//! Axis correlations and variance inflation.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::linalg::{ols, rank};
use crate::rank::pearson;
use crate::StatsError;

pub const MIN_GAMES: usize = 8;

/// Perfect collinearity is reported as `Infinite`, never as a huge float.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Vif {
    Finite(f64),
    Infinite,
}

impl std::fmt::Display for Vif {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Vif::Finite(v) => write!(f, "{v:.4}"),
            Vif::Infinite => write!(f, "inf"),
        }
    }
}

/// `1/(1 − R²)` from regressing each column on the others plus an intercept.
/// A column that is constant, or exactly spanned by the rest, is `Infinite`.
pub fn vif(columns: &[Vec<f64>]) -> Vec<Vif> {
    let p = columns.len();
    let n = columns.first().map_or(0, |c| c.len());
    (0..p)
        .map(|a| {
            let y = DVector::from_column_slice(&columns[a]);
            let mean = y.mean();
            let sst: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
            if sst == 0.0 {
                return Vif::Infinite;
            }
            let mut x = DMatrix::<f64>::from_element(n, p, 1.0);
            let mut k = 1;
            for (b, col) in columns.iter().enumerate() {
                if b != a {
                    x.set_column(k, &DVector::from_column_slice(col));
                    k += 1;
                }
            }
            let beta = ols(&x, &y);
            let sse: f64 = (&y - &x * beta).iter().map(|e| e * e).sum();
            let r2 = 1.0 - sse / sst;
            if 1.0 - r2 <= 1e-10 {
                Vif::Infinite
            } else {
                Vif::Finite(1.0 / (1.0 - r2))
            }
        })
        .collect()
}

/// Full-rank check on `[1, columns]`.
pub fn design_full_rank(columns: &[Vec<f64>]) -> bool {
    let n = columns.first().map_or(0, |c| c.len());
    let mut x = DMatrix::<f64>::from_element(n, columns.len() + 1, 1.0);
    for (k, c) in columns.iter().enumerate() {
        x.set_column(k + 1, &DVector::from_column_slice(c));
    }
    rank(&x) == columns.len() + 1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisDiagnostics {
    pub names: Vec<String>,
    /// `None` where a column has zero variance.
    pub correlation: Vec<Vec<Option<f64>>>,
    pub vif: Vec<Vif>,
    pub games: usize,
}

pub fn axis_diagnostics(names: &[&str], columns: &[Vec<f64>]) -> Result<AxisDiagnostics, StatsError> {
    let n = columns.first().map_or(0, |c| c.len());
    if n < MIN_GAMES {
        return Err(StatsError::TooFewGames { need: MIN_GAMES, got: n });
    }
    let correlation = columns
        .iter()
        .map(|a| columns.iter().map(|b| pearson(a, b)).collect())
        .collect();
    Ok(AxisDiagnostics {
        names: names.iter().map(|s| s.to_string()).collect(),
        correlation,
        vif: vif(columns),
        games: n,
    })
}
