//! Small numerical kernels shared by the measurement modules.

use rayon::join;

const SERIAL_BLOCK: usize = 256;
const PARALLEL_BLOCK: usize = 1 << 15;

/// Pairwise (tree) summation.
///
/// The split points depend only on the slice length, so the result is
/// bit-identical whether or not rayon schedules the halves on different
/// threads.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= SERIAL_BLOCK {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    let (lo, hi) = values.split_at(mid);
    if values.len() >= PARALLEL_BLOCK {
        let (a, b) = join(|| pairwise_sum(lo), || pairwise_sum(hi));
        a + b
    } else {
        pairwise_sum(lo) + pairwise_sum(hi)
    }
}

/// Pairwise sum of `f(i)` for `i in 0..len`, with the same fixed tree as [`pairwise_sum`].
pub fn pairwise_sum_by<F>(len: usize, f: &F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    fn rec<F: Fn(usize) -> f64 + Sync>(start: usize, end: usize, f: &F) -> f64 {
        let len = end - start;
        if len <= SERIAL_BLOCK {
            return (start..end).map(f).sum();
        }
        let mid = start + len / 2;
        if len >= PARALLEL_BLOCK {
            let (a, b) = join(|| rec(start, mid, f), || rec(mid, end, f));
            a + b
        } else {
            rec(start, mid, f) + rec(mid, end, f)
        }
    }
    rec(0, len, f)
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, ascending nodes.
///
/// Newton iteration on the three-term recurrence; nodes and weights are
/// accurate to a few ulps for the orders used here (up to a few thousand).
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 1, "gauss_legendre: order must be positive");
    let n = order;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                let (_, d) = legendre_with_derivative(n, x);
                dp = d;
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// `(P_n(x), P_n'(x))` for the Legendre polynomial of degree `n`.
pub fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let d = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Legendre polynomial `P_l(x)` by the three-term recurrence.
pub fn legendre(l: usize, x: f64) -> f64 {
    let mut p0 = 1.0;
    if l == 0 {
        return p0;
    }
    let mut p1 = x;
    for k in 2..=l {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// Maximize a unimodal function on `[lo, hi]` by golden-section search.
/// Returns `(argmax, max)`; endpoints are compared too, so boundary maxima
/// are not missed.
pub fn golden_section_max<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, iters: usize) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..iters {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let mut best = if fc >= fd { (c, fc) } else { (d, fd) };
    for x in [lo, hi] {
        let fx = f(x);
        if fx > best.1 {
            best = (x, fx);
        }
    }
    best
}

/// `ln Γ(h)` for positive integers and half-integers.
pub fn ln_gamma_half_integer(h: f64) -> f64 {
    let twice = (2.0 * h).round();
    assert!(
        (twice - 2.0 * h).abs() < 1e-12 && twice >= 1.0,
        "ln_gamma_half_integer: {h} is not a positive half-integer"
    );
    let twice = twice as u64;
    let (mut acc, mut x) = if twice % 2 == 0 {
        (0.0, 1.0)
    } else {
        (0.5 * std::f64::consts::PI.ln(), 0.5)
    };
    while x < h - 1e-12 {
        acc += x.ln();
        x += 1.0;
    }
    acc
}

/// Scientific notation with 17 significant digits (round-trips every `f64`).
pub fn format_sig17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "NaN".to_string()
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_sum_matches_exact_integers() {
        let v: Vec<f64> = (0..100_000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&v), 4_999_950_000.0);
        assert_eq!(pairwise_sum_by(v.len(), &|i| v[i]), 4_999_950_000.0);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for order in [1usize, 2, 5, 16, 64, 400] {
            let (x, w) = gauss_legendre(order);
            let total: f64 = w.iter().sum();
            assert!((total - 2.0).abs() < 1e-13, "order {order}: {total}");
            // exact for x^{2order-2}
            let p = 2 * order - 2;
            let integral: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(p as i32)).sum();
            let exact = 2.0 / (p as f64 + 1.0);
            assert!((integral - exact).abs() < 1e-12, "order {order}");
        }
    }

    #[test]
    fn golden_section_finds_boundary_and_interior_maxima() {
        let (x, fx) = golden_section_max(|x| -(x - 0.3) * (x - 0.3), 0.0, 1.0, 80);
        assert!((x - 0.3).abs() < 1e-8 && fx.abs() < 1e-15);
        let (x, _) = golden_section_max(|x| -x, 0.0, 1.0, 80);
        assert_eq!(x, 0.0);
    }

    #[test]
    fn ln_gamma_values() {
        assert!((ln_gamma_half_integer(0.5) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-15);
        assert!((ln_gamma_half_integer(5.0) - 24f64.ln()).abs() < 1e-14);
        assert!((ln_gamma_half_integer(2.5) - (0.75 * std::f64::consts::PI.sqrt()).ln()).abs() < 1e-14);
    }
}
