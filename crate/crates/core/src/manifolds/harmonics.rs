//! Real orthonormal spherical harmonics on S² via fully normalized
//! associated-Legendre recurrences (stable to degree 200 and beyond).

use std::f64::consts::PI;

/// Fully normalized `P̄_l^m(x)` with `∫_{-1}^{1} P̄² dx = 1`, `0 ≤ m ≤ l`.
/// The Condon–Shortley phase is omitted.
pub fn normalized_legendre(l: usize, m: usize, x: f64) -> f64 {
    assert!(m <= l, "normalized_legendre: m > l");
    let s = (1.0 - x * x).max(0.0).sqrt();
    let mut pmm = std::f64::consts::FRAC_1_SQRT_2;
    for k in 1..=m {
        let kf = k as f64;
        pmm *= ((2.0 * kf + 1.0) / (2.0 * kf)).sqrt() * s;
    }
    if l == m {
        return pmm;
    }
    let mf = m as f64;
    let mut p_prev = pmm;
    let mut p = (2.0 * mf + 3.0).sqrt() * x * pmm;
    for k in m + 2..=l {
        let kf = k as f64;
        let a = ((4.0 * kf * kf - 1.0) / (kf * kf - mf * mf)).sqrt();
        let km1 = kf - 1.0;
        let b = ((km1 * km1 - mf * mf) / (4.0 * km1 * km1 - 1.0)).sqrt();
        let next = a * (x * p - b * p_prev);
        p_prev = p;
        p = next;
    }
    p
}

/// Polar angle and azimuth of a unit vector in ℝ³.
pub fn angles(point: &[f64]) -> (f64, f64) {
    let r = (point[0] * point[0] + point[1] * point[1] + point[2] * point[2]).sqrt();
    let theta = (point[2] / r).clamp(-1.0, 1.0).acos();
    let phi = point[1].atan2(point[0]);
    (theta, phi)
}

fn azimuthal(m: i64, phi: f64) -> f64 {
    match m.cmp(&0) {
        std::cmp::Ordering::Equal => 1.0 / (2.0 * PI).sqrt(),
        std::cmp::Ordering::Greater => (m as f64 * phi).cos() / PI.sqrt(),
        std::cmp::Ordering::Less => ((-m) as f64 * phi).sin() / PI.sqrt(),
    }
}

/// Real orthonormal `Y_l^m` at polar angle `theta`, azimuth `phi`; `-l ≤ m ≤ l`.
pub fn real_harmonic(l: usize, m: i64, theta: f64, phi: f64) -> f64 {
    normalized_legendre(l, m.unsigned_abs() as usize, theta.cos()) * azimuthal(m, phi)
}

/// All `2l+1` real harmonics of degree `l` at one point, ordered `m = -l..=l`.
/// One pass of the `m`-diagonal recurrence feeds every order.
pub fn degree_values(l: usize, theta: f64, phi: f64) -> Vec<f64> {
    let x = theta.cos();
    let s = theta.sin().abs();
    let mut out = vec![0.0; 2 * l + 1];
    let mut pmm = std::f64::consts::FRAC_1_SQRT_2;
    for m in 0..=l {
        if m > 0 {
            let mf = m as f64;
            pmm *= ((2.0 * mf + 1.0) / (2.0 * mf)).sqrt() * s;
        }
        let plm = if l == m {
            pmm
        } else {
            let mf = m as f64;
            let mut p_prev = pmm;
            let mut p = (2.0 * mf + 3.0).sqrt() * x * pmm;
            for k in m + 2..=l {
                let kf = k as f64;
                let a = ((4.0 * kf * kf - 1.0) / (kf * kf - mf * mf)).sqrt();
                let km1 = kf - 1.0;
                let b = ((km1 * km1 - mf * mf) / (4.0 * km1 * km1 - 1.0)).sqrt();
                let next = a * (x * p - b * p_prev);
                p_prev = p;
                p = next;
            }
            p
        };
        let mi = m as i64;
        out[l + m] = plm * azimuthal(mi, phi);
        if m > 0 {
            out[l - m] = plm * azimuthal(-mi, phi);
        }
    }
    out
}

/// Dimension of the degree-`l` eigenspace on `Sⁿ`: `C(l+n, n) − C(l+n−2, n)`.
pub fn sphere_multiplicity(n: usize, l: usize) -> usize {
    fn binom(a: usize, b: usize) -> usize {
        if b > a {
            return 0;
        }
        let b = b.min(a - b);
        let mut acc: u128 = 1;
        for i in 0..b {
            acc = acc * (a - i) as u128 / (i + 1) as u128;
        }
        acc as usize
    }
    let top = binom(l + n, n);
    let low = if l >= 2 { binom(l + n - 2, n) } else { 0 };
    top - low
}
