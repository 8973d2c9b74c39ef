//! Benjamini–Hochberg step-up procedure.

/// Rejects every hypothesis with p at or below the largest `p_(i) ≤ i·q/m`.
pub fn bh_fdr(p: &[f64], q: f64) -> Vec<bool> {
    let m = p.len();
    let mut idx: Vec<usize> = (0..m).collect();
    idx.sort_by(|&a, &b| p[a].total_cmp(&p[b]));
    let cut = (1..=m).rev().find(|&i| p[idx[i - 1]] <= i as f64 * q / m as f64);
    let mut out = vec![false; m];
    if let Some(k) = cut {
        for &i in &idx[..k] {
            out[i] = true;
        }
    }
    out
}

/// Adjusted q-values: `min_{j ≥ i} m·p_(j)/j`, capped at 1.
pub fn bh_qvalues(p: &[f64]) -> Vec<f64> {
    let m = p.len();
    let mut idx: Vec<usize> = (0..m).collect();
    idx.sort_by(|&a, &b| p[a].total_cmp(&p[b]));
    let mut out = vec![1.0; m];
    let mut running = 1.0f64;
    for r in (0..m).rev() {
        running = running.min(p[idx[r]] * m as f64 / (r + 1) as f64);
        out[idx[r]] = running.min(1.0);
    }
    out
}
