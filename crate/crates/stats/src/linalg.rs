//! Small dense solves. Everything goes through a thin SVD so rank-deficient
//! systems get the minimum-norm solution instead of a panic.

use nalgebra::{DMatrix, DVector};

/// Relative singular-value cutoff used for rank and pseudo-inversion.
pub const RANK_TOL: f64 = 1e-10;

pub fn rank(a: &DMatrix<f64>) -> usize {
    let sv = a.clone().svd(false, false).singular_values;
    let top = sv.iter().cloned().fold(0.0, f64::max);
    sv.iter().filter(|s| **s > RANK_TOL * top.max(1.0)).count()
}

/// Minimum-norm solution of `a x = b`.
pub fn pinv_solve(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let svd = a.clone().svd(true, true);
    let top = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let eps = RANK_TOL * top.max(1.0);
    svd.solve(b, eps).expect("both factors were requested")
}

/// Least squares `argmin |X β − y|` via the pseudo-inverse. Rows of `x` are observations.
pub fn ols(x: &DMatrix<f64>, y: &DVector<f64>) -> DVector<f64> {
    let xt = x.transpose();
    pinv_solve(&(&xt * x), &(&xt * y))
}

/// Connected components among `nodes` under undirected `edges`. Components are
/// sorted internally and ordered by their smallest member.
pub fn components(nodes: &[usize], edges: impl IntoIterator<Item = (usize, usize)>) -> Vec<Vec<usize>> {
    let n = nodes.iter().map(|x| x + 1).max().unwrap_or(0);
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for (a, b) in edges {
        if a < n && b < n {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    let mut sorted = nodes.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    for x in sorted {
        let r = find(&mut parent, x);
        groups.entry(r).or_default().push(x);
    }
    let mut out: Vec<Vec<usize>> = groups.into_values().collect();
    out.sort_by_key(|c| c[0]);
    out
}
