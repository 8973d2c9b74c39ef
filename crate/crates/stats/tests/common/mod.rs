#![allow(dead_code)]

pub mod oracles;

use genstrat_core::seeding;
use genstrat_stats::data::Record;
use rand::Rng;
use rand_distr::{Distribution, Normal};

pub fn names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("m{i}")).collect()
}

/// Every pair on every game, `runs` seat-swapped sibling pairs each.
/// `alpha[m][g]` is the planted per-game strength.
pub fn planted(alpha: &[Vec<f64>], runs: u32, sigma: f64, seed: u64) -> Vec<Record> {
    let models = names(alpha.len());
    let games = alpha[0].len();
    let mut rng = seeding::rng("test-synth", &[seed]);
    let noise = Normal::new(0.0, sigma.max(f64::MIN_POSITIVE)).unwrap();
    let eps = |rng: &mut rand_chacha::ChaCha8Rng| if sigma > 0.0 { noise.sample(rng) } else { 0.0 };
    let mut out = Vec::new();
    for g in 0..games {
        for i in 0..alpha.len() {
            for j in (i + 1)..alpha.len() {
                let d = alpha[i][g] - alpha[j][g];
                for r in 0..runs {
                    out.push(Record { game: 100 + g as u64, alice: models[i].clone(), bob: models[j].clone(), run: r, margin: d + eps(&mut rng) });
                    out.push(Record { game: 100 + g as u64, alice: models[j].clone(), bob: models[i].clone(), run: r, margin: -d + eps(&mut rng) });
                }
            }
        }
    }
    out
}

/// Same strength on every game.
pub fn constant(alpha: &[f64], games: usize, runs: u32, sigma: f64, seed: u64) -> Vec<Record> {
    let a: Vec<Vec<f64>> = alpha.iter().map(|x| vec![*x; games]).collect();
    planted(&a, runs, sigma, seed)
}

pub fn random_unit(rng: &mut impl Rng) -> f64 {
    rng.random_range(-1.0..1.0)
}
