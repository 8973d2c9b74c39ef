//! Brute-force and closed-form oracles shared by the statistics suites.

use genstrat_stats::data::Record;

/// Direct search for the largest passing rank.
pub fn bh_oracle(p: &[f64], q: f64) -> Vec<bool> {
    let m = p.len();
    let mut best = None;
    for i in 1..=m {
        let kth = {
            let mut s = p.to_vec();
            s.sort_by(f64::total_cmp);
            s[i - 1]
        };
        if kth <= i as f64 * q / m as f64 {
            best = Some(kth);
        }
    }
    p.iter().map(|x| best.is_some_and(|b| *x <= b)).collect()
}

/// τ-b from the sign-product definition.
pub fn tau_b_oracle(a: &[f64], b: &[f64]) -> Option<f64> {
    let sgn = |x: f64| if x > 0.0 { 1.0 } else if x < 0.0 { -1.0 } else { 0.0 };
    let (mut s, mut na, mut nb) = (0.0f64, 0.0f64, 0.0f64);
    for i in 0..a.len() {
        for j in 0..a.len() {
            if i < j {
                let (x, y) = (sgn(a[i] - a[j]), sgn(b[i] - b[j]));
                s += x * y;
                na += x * x;
                nb += y * y;
            }
        }
    }
    (na > 0.0 && nb > 0.0).then(|| s / (na * nb).sqrt())
}

/// Spearman ρ by the d² formula; valid only without ties.
pub fn spearman_d2_oracle(a: &[f64], b: &[f64]) -> f64 {
    let rank = |x: &[f64]| -> Vec<f64> {
        x.iter().map(|v| 1.0 + x.iter().filter(|w| *w < v).count() as f64).collect()
    };
    let (ra, rb) = (rank(a), rank(b));
    let n = a.len() as f64;
    let d2: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - y).powi(2)).sum();
    1.0 - 6.0 * d2 / (n * (n * n - 1.0))
}

/// Sylvester construction; columns are orthogonal ±1 vectors.
pub fn hadamard8() -> Vec<Vec<f64>> {
    let mut h = vec![vec![1.0]];
    for _ in 0..3 {
        let n = h.len();
        let mut next = vec![vec![0.0; 2 * n]; 2 * n];
        for i in 0..n {
            for j in 0..n {
                next[i][j] = h[i][j];
                next[i][j + n] = h[i][j];
                next[i + n][j] = h[i][j];
                next[i + n][j + n] = -h[i][j];
            }
        }
        h = next;
    }
    h
}

/// Complete balanced design: the normal equations reduce to
/// `α_i = (1/M) Σ_j ȳ_ij`, with `ȳ_ij` the mean margin of i over j.
pub fn row_mean_oracle(records: &[Record], models: &[String]) -> Vec<f64> {
    let m = models.len();
    let idx = |s: &str| models.iter().position(|x| x == s).unwrap();
    let mut sum = vec![vec![0.0; m]; m];
    let mut cnt = vec![vec![0.0; m]; m];
    for r in records {
        let (a, b) = (idx(&r.alice), idx(&r.bob));
        sum[a][b] += r.margin;
        cnt[a][b] += 1.0;
        sum[b][a] -= r.margin;
        cnt[b][a] += 1.0;
    }
    (0..m)
        .map(|i| (0..m).filter(|&j| j != i).map(|j| sum[i][j] / cnt[i][j]).sum::<f64>() / m as f64)
        .collect()
}
