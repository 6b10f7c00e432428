//! Integer points in an ellipsoidal shell `lo² ≤ mᵀ G m ≤ hi²`.
//!
//! Fincke–Pohst enumeration on the Cholesky factor of the Gram matrix `G`,
//! with the inner shell cut applied on the innermost coordinate so the cost
//! scales with the number of returned points plus one row per outer prefix.

use nalgebra::DMatrix;

/// Enumerates every `m ∈ ℤⁿ` with `lo² ≤ mᵀ G m ≤ hi²`.
///
/// `gram` must be symmetric positive definite. `slack` widens both bounds
/// multiplicatively so boundary points are never lost to rounding; callers
/// filter on the exact frequency afterwards.
pub fn shell_points(gram: &DMatrix<f64>, lo: f64, hi: f64, slack: f64) -> Vec<Vec<i64>> {
    let n = gram.nrows();
    let chol = gram
        .clone()
        .cholesky()
        .expect("shell_points: Gram matrix must be positive definite");
    // upper-triangular R with G = Rᵀ R
    let r = chol.l().transpose();
    let hi2 = (hi * (1.0 + slack)).powi(2);
    let lo2 = if lo > 0.0 {
        (lo * (1.0 - slack)).max(0.0).powi(2)
    } else {
        0.0
    };
    let mut out = Vec::new();
    let mut m = vec![0i64; n];
    recurse(&r, n - 1, 0.0, lo2, hi2, &mut m, &mut out);
    out
}

fn recurse(
    r: &DMatrix<f64>,
    level: usize,
    partial: f64,
    lo2: f64,
    hi2: f64,
    m: &mut Vec<i64>,
    out: &mut Vec<Vec<i64>>,
) {
    let n = r.nrows();
    let rii = r[(level, level)];
    let center = -(level + 1..n)
        .map(|j| r[(level, j)] * m[j] as f64)
        .sum::<f64>()
        / rii;
    let budget = hi2 - partial;
    if budget < 0.0 {
        return;
    }
    let half = budget.sqrt() / rii.abs();
    let lo_i = (center - half).ceil() as i64;
    let hi_i = (center + half).floor() as i64;
    if level == 0 {
        // inner cut: exclude |m0 - center| < inner
        let inner_budget = lo2 - partial;
        let inner = if inner_budget > 0.0 {
            inner_budget.sqrt() / rii.abs()
        } else {
            -1.0
        };
        for v in lo_i..=hi_i {
            if inner >= 0.0 && ((v as f64) - center).abs() < inner {
                continue;
            }
            m[0] = v;
            out.push(m.clone());
        }
        return;
    }
    for v in lo_i..=hi_i {
        m[level] = v;
        let d = rii * (v as f64 - center);
        recurse(r, level - 1, partial + d * d, lo2, hi2, m, out);
    }
    m[level] = 0;
}
