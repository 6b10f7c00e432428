//! The universal exponent law `μ(q)`, log-power growth fits
//! `N(λ) ≈ C λ^a (log λ)^b` and the curvature classifier built on them.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// `q_c = 2(n+1)/(n−1)`.
pub fn critical_exponent(n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::Domain(format!("dimension must be ≥ 2, got {n}")));
    }
    Ok(2.0 * (n as f64 + 1.0) / (n as f64 - 1.0))
}

/// `μ(q) = (n−1)/2 (1/2 − 1/q)` for `2 < q ≤ q_c`, `n(1/2 − 1/q) − 1/2` for `q ≥ q_c`.
pub fn mu(q: f64, n: usize) -> Result<f64> {
    let qc = critical_exponent(n)?;
    if !(q > 2.0) {
        return Err(Error::Domain(format!("μ(q) needs q > 2, got {q}")));
    }
    let nf = n as f64;
    let inv = if q.is_infinite() { 0.0 } else { 1.0 / q };
    Ok(if q <= qc {
        (nf - 1.0) / 2.0 * (0.5 - inv)
    } else {
        nf * (0.5 - inv) - 0.5
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurvatureSign {
    Positive,
    Zero,
    Negative,
}

impl CurvatureSign {
    pub const ALL: [CurvatureSign; 3] = [CurvatureSign::Positive, CurvatureSign::Zero, CurvatureSign::Negative];
}

/// Exponent `b` of `(log λ)^b` in the growth law of constant-curvature space forms.
pub fn theoretical_log_exponent(q: f64, n: usize, sign: CurvatureSign) -> Result<f64> {
    let qc = critical_exponent(n)?;
    if !(q > 2.0) {
        return Err(Error::Domain(format!("q must exceed 2, got {q}")));
    }
    if q > qc {
        return Err(Error::Range(format!(
            "q = {q} exceeds q_c = {qc}: supercritical exponents do not distinguish between the two geometries"
        )));
    }
    Ok(match sign {
        CurvatureSign::Positive => 0.0,
        CurvatureSign::Zero => -mu(q, n)?,
        CurvatureSign::Negative => -0.5,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum FitMode {
    Free,
    AFixed { a: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    pub mode: FitMode,
    pub a: f64,
    pub b: f64,
    pub log_c: f64,
    pub b_stderr: f64,
    /// RMS residual of `log N`.
    pub residual: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// Condition number of the design matrix.
    pub condition_number: f64,
    pub conditioning_warning: bool,
}

const CONDITION_LIMIT: f64 = 1e6;

fn check_points(points: &[(f64, f64)], min_points: usize, min_span: f64) -> Result<(f64, f64)> {
    if points.len() < min_points {
        return Err(Error::Contract(format!(
            "fit needs at least {min_points} points, got {}",
            points.len()
        )));
    }
    let e2 = std::f64::consts::E.powi(2);
    for &(l, v) in points {
        if !(l.is_finite() && l > e2) {
            return Err(Error::Contract(format!("fit needs λ > e², got {l}")));
        }
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::Contract(format!("fit needs N > 0, got {v}")));
        }
    }
    let lo = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = points.iter().map(|p| p.0).fold(0.0, f64::max);
    if hi == lo {
        return Err(Error::Conditioning("all λ values coincide; log log λ is not identifiable".into()));
    }
    if hi / lo < min_span {
        return Err(Error::Contract(format!(
            "λ values span a factor {:.3}, at least {min_span} is required",
            hi / lo
        )));
    }
    Ok((lo, hi))
}

fn condition_number(x: &DMatrix<f64>) -> f64 {
    let sv = x.clone().svd(false, false).singular_values;
    let max = sv.iter().copied().fold(0.0, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Least squares of `log N − a log λ` against `{1, log log λ}`.
pub fn fit_log_exponent(points: &[(f64, f64)], a_fixed: f64) -> Result<GrowthFit> {
    let (lo, hi) = check_points(points, 4, 8.0)?;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln().ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln() - a_fixed * p.0.ln()).collect();
    let m = xs.len() as f64;
    let xbar = xs.iter().sum::<f64>() / m;
    let ybar = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - xbar).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xbar) * (y - ybar)).sum();
    if sxx <= 1e-300 {
        return Err(Error::Conditioning("log log λ has no spread".into()));
    }
    let b = sxy / sxx;
    let log_c = ybar - b * xbar;
    let ssr: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - log_c - b * x).powi(2)).sum();
    let b_stderr = (ssr / (m - 2.0) / sxx).sqrt();
    let design = DMatrix::from_fn(xs.len(), 2, |i, j| if j == 0 { 1.0 } else { xs[i] });
    let cond = condition_number(&design);
    Ok(GrowthFit {
        mode: FitMode::AFixed { a: a_fixed },
        a: a_fixed,
        b,
        log_c,
        b_stderr,
        residual: (ssr / m).sqrt(),
        lambda_min: lo,
        lambda_max: hi,
        condition_number: cond,
        conditioning_warning: cond > CONDITION_LIMIT,
    })
}

/// Joint least squares over `{1, log λ, log log λ}` (diagnostic).
pub fn fit_free(points: &[(f64, f64)]) -> Result<GrowthFit> {
    let (lo, hi) = check_points(points, 6, 64.0)?;
    let m = points.len();
    let x = DMatrix::from_fn(m, 3, |i, j| match j {
        0 => 1.0,
        1 => points[i].0.ln(),
        _ => points[i].0.ln().ln(),
    });
    let y = DVector::from_iterator(m, points.iter().map(|p| p.1.ln()));
    let cond = condition_number(&x);
    let svd = x.clone().svd(true, true);
    let beta = svd
        .solve(&y, 1e-14)
        .map_err(|e| Error::Conditioning(format!("least-squares solve failed: {e}")))?;
    let resid = &y - &x * &beta;
    let ssr = resid.norm_squared();
    let sigma2 = ssr / (m as f64 - 3.0);
    let xtx_inv = (x.transpose() * &x)
        .try_inverse()
        .ok_or_else(|| Error::Conditioning("normal matrix is singular".into()))?;
    let b_stderr = (sigma2 * xtx_inv[(2, 2)]).max(0.0).sqrt();
    if cond > CONDITION_LIMIT && !(b_stderr <= 1e-2) {
        return Err(Error::Conditioning(format!(
            "design condition number {cond:.3e} leaves b undetermined (stderr {b_stderr:.3e})"
        )));
    }
    Ok(GrowthFit {
        mode: FitMode::Free,
        a: beta[1],
        b: beta[2],
        log_c: beta[0],
        b_stderr,
        residual: (ssr / m as f64).sqrt(),
        lambda_min: lo,
        lambda_max: hi,
        condition_number: cond,
        conditioning_warning: cond > CONDITION_LIMIT,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Positive,
    Zero,
    Negative,
    Ambiguous,
}

impl From<CurvatureSign> for Verdict {
    fn from(s: CurvatureSign) -> Self {
        match s {
            CurvatureSign::Positive => Verdict::Positive,
            CurvatureSign::Zero => Verdict::Zero,
            CurvatureSign::Negative => Verdict::Negative,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureVerdict {
    pub verdict: Verdict,
    /// Branch whose theoretical `b` is nearest to the fit.
    pub nearest: CurvatureSign,
    pub fit: GrowthFit,
    /// `(branch, theoretical b, |b_fit − b_branch|)` for every branch.
    pub distances: Vec<(CurvatureSign, f64, f64)>,
    /// Second-nearest minus nearest distance.
    pub confidence: f64,
}

/// Fits with `a = μ(q)` and picks the nearest of `{0, −μ(q), −1/2}`.
/// The verdict is ambiguous when the second-nearest value also lies within
/// `2·stderr(b)` of the fitted `b`.
pub fn classify(q: f64, n: usize, points: &[(f64, f64)]) -> Result<CurvatureVerdict> {
    // validates 2 < q ≤ q_c
    theoretical_log_exponent(q, n, CurvatureSign::Positive)?;
    let a = mu(q, n)?;
    let fit = fit_log_exponent(points, a)?;
    let mut distances: Vec<(CurvatureSign, f64, f64)> = CurvatureSign::ALL
        .iter()
        .map(|&s| {
            let b = theoretical_log_exponent(q, n, s).expect("validated");
            (s, b, (fit.b - b).abs())
        })
        .collect();
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&i, &j| distances[i].2.total_cmp(&distances[j].2));
    let nearest = distances[order[0]];
    let second = distances[order[1]];
    let confidence = second.2 - nearest.2;
    let verdict = if second.2 <= 2.0 * fit.b_stderr {
        Verdict::Ambiguous
    } else {
        nearest.0.into()
    };
    distances.sort_by_key(|d| CurvatureSign::ALL.iter().position(|s| *s == d.0));
    Ok(CurvatureVerdict {
        verdict,
        nearest: nearest.0,
        fit,
        distances,
        confidence,
    })
}

/// Fit report exported as JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub q: f64,
    pub n: usize,
    pub a_fixed: f64,
    pub b: f64,
    pub b_stderr: f64,
    pub residual: f64,
    pub verdict: Verdict,
    pub confidence: f64,
    pub points: Vec<(f64, f64)>,
}

impl FitReport {
    pub fn new(q: f64, n: usize, verdict: &CurvatureVerdict, points: &[(f64, f64)]) -> Self {
        Self {
            q,
            n,
            a_fixed: verdict.fit.a,
            b: verdict.fit.b,
            b_stderr: verdict.fit.b_stderr,
            residual: verdict.fit.residual,
            verdict: verdict.verdict,
            confidence: verdict.confidence,
            points: points.to_vec(),
        }
    }
}
