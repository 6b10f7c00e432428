//! Explicit quasimodes: Knapp plates periodized over flat deck groups,
//! Gaussian beams and zonal harmonics on spheres, together with the
//! measurements (defect, budget, tube mass, deck invariance, `L¹` ratios)
//! that certify them.

mod evaluator;
mod kernel;
mod tubes;

use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::manifolds::{GeodesicSpec, Label, ManifoldDescriptor, ManifoldKind, ManifoldModel, QuadratureGrid};
use crate::numerics::pairwise_sum_by;
use crate::profiles::{a_profile, beta_profile, bump_ft, bump_ft_tail};
use crate::spectral::synthesis::WaveExpansion;
use crate::spectral::CoefficientVector;
use crate::{Error, Result};

pub use evaluator::{BeamMode, QuasimodeEvaluator, ZonalMode};
pub use kernel::{knapp_kernel_rn, KernelQuadrature};
pub use tubes::{tube_mass, tube_volume, TubeSpec};

/// Radial profile `η` of the Knapp plate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EtaProfile {
    /// `η(τ) = B(c₀τ)/B(0)`: transform of the bump supported in `(−c₀, c₀)`.
    Bump,
    /// `η̂ ≡ 0`, the `c₀ → 0` limit; produces the zero quasimode.
    Vanishing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KnappParams {
    /// Support radius of `η̂`, in `(0, 1)`.
    pub c0: f64,
    /// Mode number; `λ_k = 2πk/ℓ₀`.
    pub k: u64,
    /// Deck-sum truncation radius in units of `T` (kernel decay region `|z| ≥ mT`).
    pub truncation_multiplier: f64,
    pub eta: EtaProfile,
    /// Arclength half-window of the tube around the geodesic.
    pub c_bar: f64,
}

/// `λ_k`, `δ_k = 1/log λ_k` and `T_k = log λ_k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KnappScales {
    pub lambda: f64,
    pub delta: f64,
    pub t: f64,
}

impl KnappScales {
    pub fn at(lambda: f64) -> Result<Self> {
        if !(lambda > std::f64::consts::E.powi(2)) {
            return Err(Error::Domain(format!("Knapp frequency λ = {lambda} must exceed e²")));
        }
        let t = lambda.ln();
        Ok(Self {
            lambda,
            delta: 1.0 / t,
            t,
        })
    }

    /// Tube radius `(λδ)^{-1/2}`.
    pub fn tube_radius(&self) -> f64 {
        (self.lambda * self.delta).powf(-0.5)
    }
}

impl KnappParams {
    pub const DEFAULT_C0: f64 = 0.75;
    pub const DEFAULT_C_BAR: f64 = 0.25;

    pub fn new(k: u64) -> Self {
        Self {
            c0: Self::DEFAULT_C0,
            k,
            truncation_multiplier: 2.0,
            eta: EtaProfile::Bump,
            c_bar: Self::DEFAULT_C_BAR,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c0 > 0.0 && self.c0 < 1.0) {
            return Err(Error::Validation(format!("c₀ must lie in (0,1), got {}", self.c0)));
        }
        if self.k < 2 {
            return Err(Error::Validation(format!("mode number k must be ≥ 2, got {}", self.k)));
        }
        if !(self.truncation_multiplier > 0.0) {
            return Err(Error::Validation("truncation multiplier must be positive".into()));
        }
        if !(self.c_bar > 0.0 && self.c_bar < 1.0) {
            return Err(Error::Validation(format!("c̄ must lie in (0,1), got {}", self.c_bar)));
        }
        Ok(())
    }

    /// Scales for a geodesic of length `ℓ₀`.
    pub fn scales(&self, length: f64) -> Result<KnappScales> {
        self.validate()?;
        KnappScales::at(2.0 * PI * self.k as f64 / length)
    }

    pub fn eta(&self, tau: f64) -> f64 {
        match self.eta {
            EtaProfile::Bump => bump_ft(self.c0 * tau),
            EtaProfile::Vanishing => 0.0,
        }
    }
}

const DROP_THRESHOLD: f64 = 1e-14;

/// `ω` beyond which `|η|` is below `1e-16`.
fn eta_tail() -> f64 {
    static TAIL: OnceLock<f64> = OnceLock::new();
    *TAIL.get_or_init(|| bump_ft_tail(1e-16))
}

/// Plate amplitude `a(λ^{1/2}δ^{-1/2}|u − ξ̂|) β(|ξ|/λ) η(T(λ − |ξ|))`.
pub(crate) fn plate_amplitude(xi: &[f64], u: &[f64], s: &KnappScales, params: &KnappParams) -> f64 {
    let r = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
    if r == 0.0 {
        return 0.0;
    }
    let ang = xi
        .iter()
        .zip(u)
        .map(|(x, v)| (v - x / r).powi(2))
        .sum::<f64>()
        .sqrt();
    let a = a_profile(ang * (s.lambda / s.delta).sqrt());
    if a == 0.0 {
        return 0.0;
    }
    let b = beta_profile(r / s.lambda);
    if b == 0.0 {
        return 0.0;
    }
    a * b * params.eta(s.t * (s.lambda - r))
}

/// Integer labels whose wavevector can carry plate mass.
fn plate_candidates(model: &ManifoldModel, geodesic: &GeodesicSpec, s: &KnappScales, params: &KnappParams) -> Vec<Vec<i64>> {
    let n = model.dim();
    let radial = eta_tail() / (params.c0 * s.t);
    let r_lo = (s.lambda - radial).max(s.lambda / 4.0);
    let r_hi = (s.lambda + radial).min(4.0 * s.lambda);
    let eps = (s.delta / s.lambda).sqrt();
    let theta = 2.0 * (eps / 2.0).min(1.0).asin();
    let along = (r_lo * theta.cos(), r_hi);
    let across = r_hi * theta.sin();
    let mut lo = vec![f64::INFINITY; n];
    let mut hi = vec![f64::NEG_INFINITY; n];
    for corner in 0..(1usize << n) {
        let mut frame_coords = vec![0.0; n];
        frame_coords[0] = if corner & 1 == 0 { along.0 } else { along.1 };
        for (d, c) in frame_coords.iter_mut().enumerate().skip(1) {
            *c = if corner >> d & 1 == 0 { -across } else { across };
        }
        let xi: Vec<f64> = (0..n)
            .map(|i| (0..n).map(|j| geodesic.frame[i][j] * frame_coords[j]).sum())
            .collect();
        let m = model.label_coordinates(&xi);
        for d in 0..n {
            lo[d] = lo[d].min(m[d]);
            hi[d] = hi[d].max(m[d]);
        }
    }
    let lo: Vec<i64> = lo.iter().map(|x| x.floor() as i64 - 1).collect();
    let hi: Vec<i64> = hi.iter().map(|x| x.ceil() as i64 + 1).collect();
    let mut out = Vec::new();
    let mut cur = lo.clone();
    loop {
        out.push(cur.clone());
        let mut d = n;
        loop {
            if d == 0 {
                return out;
            }
            d -= 1;
            cur[d] += 1;
            if cur[d] <= hi[d] {
                break;
            }
            cur[d] = lo[d];
        }
    }
}

fn check_flat(model: &ManifoldModel, geodesic: &GeodesicSpec) -> Result<()> {
    if !model.is_flat() {
        return Err(Error::Capability(format!("Knapp plates are built on flat models, not {model}")));
    }
    if geodesic.dim() != model.dim() {
        return Err(Error::Contract("geodesic dimension does not match the model".into()));
    }
    Ok(())
}

/// Deck-group sum of the plate kernel as plane waves on the cover, by Poisson
/// summation: torus waves `e^{2πi m·s}`, Klein double-cover waves with the
/// glide coset folded in. Returns the scales and the raw wave weights.
fn periodized_waves(
    model: &ManifoldModel,
    geodesic: &GeodesicSpec,
    params: &KnappParams,
) -> Result<(KnappScales, Vec<(Vec<i64>, Complex64)>)> {
    check_flat(model, geodesic)?;
    let s = params.scales(geodesic.length)?;
    let n = model.dim();
    let pref = (s.lambda * s.delta).powf(-(n as f64 - 1.0) / 4.0) * (2.0 * PI).powi(n as i32);
    let u = &geodesic.direction;
    let amp = |m: &[i64]| plate_amplitude(&model.wavevector(m), u, &s, params);
    let waves: Vec<(Vec<i64>, Complex64)> = match model.kind() {
        ManifoldKind::Torus => plate_candidates(model, geodesic, &s, params)
            .into_iter()
            .map(|m| {
                let w = pref / model.volume() * amp(&m);
                (m, Complex64::new(w, 0.0))
            })
            .collect(),
        ManifoldKind::KleinBottle => plate_candidates(model, geodesic, &s, params)
            .into_iter()
            .map(|m| {
                let parity = if m[0].rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                let g = pref / 2.0 * (amp(&m) + parity * amp(&[m[0], -m[1]]));
                (m, Complex64::new(g, 0.0))
            })
            .collect(),
        ManifoldKind::Sphere => unreachable!(),
    };
    let max = waves.iter().map(|w| w.1.norm()).fold(0.0, f64::max);
    let waves = waves
        .into_iter()
        .filter(|w| max > 0.0 && w.1.norm() >= DROP_THRESHOLD * max)
        .collect();
    Ok((s, waves))
}

/// Eigenbasis expansion of the Knapp log-quasimode `ψ_{λ_k} = Σ_{γ∈Γ} K_λ(γ·)`.
///
/// On the torus the deck sum is evaluated by Poisson summation, giving the
/// coefficient `(λδ)^{-(n-1)/4} (2π)ⁿ vol^{-1/2} A(2π B^{-T} m)` on `e_m`.
/// On the Klein bottle the plate is periodized over the double cover and
/// averaged over the glide coset. Coefficients below `1e-14` of the largest
/// are dropped.
pub fn knapp_flat(model: &Arc<ManifoldModel>, geodesic: &GeodesicSpec, params: &KnappParams) -> Result<CoefficientVector> {
    let (_, waves) = periodized_waves(model, geodesic, params)?;
    let mut out = CoefficientVector::new(model.clone());
    let norm = model.volume().sqrt();
    let mut entries = Vec::new();
    for (m, g) in waves {
        match model.kind() {
            ManifoldKind::Torus => entries.push((Label::Lattice(m), g * norm)),
            ManifoldKind::KleinBottle => {
                if m[1] > 0 {
                    entries.push((Label::Klein { m1: m[0], m2: m[1] }, g * std::f64::consts::SQRT_2));
                } else if m[1] == 0 && m[0].rem_euclid(2) == 0 {
                    entries.push((Label::Klein { m1: m[0], m2: 0 }, g));
                }
            }
            ManifoldKind::Sphere => unreachable!(),
        }
    }
    let max = entries.iter().map(|e| e.1.norm()).fold(0.0, f64::max);
    for (label, c) in entries {
        if max > 0.0 && c.norm() >= DROP_THRESHOLD * max {
            out.add(label, c)?;
        }
    }
    Ok(out)
}

/// The same deck sum kept as raw cover waves (before projection onto the
/// quotient's eigenbasis); deck invariance of this function is a property
/// of the construction, not of the representation.
pub fn knapp_cover_waves(model: &Arc<ManifoldModel>, geodesic: &GeodesicSpec, params: &KnappParams) -> Result<QuasimodeEvaluator> {
    let (s, waves) = periodized_waves(model, geodesic, params)?;
    Ok(QuasimodeEvaluator::Waves {
        model: model.clone(),
        expansion: WaveExpansion::from_waves(model, waves)?,
        lambda: s.lambda,
    })
}

fn check_model(model: &ManifoldModel, coeffs: &CoefficientVector) -> Result<()> {
    if coeffs.model().as_ref() != model {
        return Err(Error::Contract("coefficients belong to a different model".into()));
    }
    Ok(())
}

/// `‖(Δ + λ²) f‖₂ = (Σ_j |(λ² − λ_j²) c_j|²)^{1/2}`.
pub fn defect(model: &ManifoldModel, lambda: f64, coeffs: &CoefficientVector) -> Result<f64> {
    check_model(model, coeffs)?;
    let terms: Vec<f64> = coeffs
        .iter()
        .map(|(_, c)| ((lambda * lambda - c.freq * c.freq) * c.value.norm()).powi(2))
        .collect();
    Ok(crate::numerics::pairwise_sum(&terms).sqrt())
}

/// `‖f‖₂ + (λδ)^{-1} ‖(Δ + λ²) f‖₂`.
pub fn quasimode_budget(model: &ManifoldModel, lambda: f64, coeffs: &CoefficientVector, delta: f64) -> Result<f64> {
    if !(lambda > 0.0 && delta > 0.0) {
        return Err(Error::Domain(format!("budget needs λ, δ > 0, got λ = {lambda}, δ = {delta}")));
    }
    Ok(coeffs.l2_norm() + defect(model, lambda, coeffs)? / (lambda * delta))
}

/// Fraction of `ℓ²` mass with `|λ_j − λ| ≤ half_width`.
pub fn spectral_mass_fraction(coeffs: &CoefficientVector, lambda: f64, half_width: f64) -> f64 {
    let total = coeffs.l2_norm().powi(2);
    if total == 0.0 {
        return 0.0;
    }
    let inside: f64 = coeffs
        .iter()
        .filter(|(_, c)| (c.freq - lambda).abs() <= half_width)
        .map(|(_, c)| c.value.norm_sqr())
        .sum();
    inside / total
}

/// Gaussian beam `(x₁ + i x₂)^l / ‖·‖₂` on `Sⁿ`, frequency `√(l(l+n−1))`.
pub fn gaussian_beam(n: usize, l: u32) -> Result<QuasimodeEvaluator> {
    if n < 2 || l < 1 {
        return Err(Error::Contract(format!("Gaussian beam needs n ≥ 2 and l ≥ 1, got n = {n}, l = {l}")));
    }
    QuasimodeEvaluator::beam(n, l)
}

/// L²-normalized zonal harmonic of degree `l` about `pole` on S².
pub fn zonal(n: usize, l: u32, pole: [f64; 3]) -> Result<QuasimodeEvaluator> {
    if n != 2 {
        return Err(Error::Capability(format!("zonal harmonics are implemented on S² only, not S^{n}")));
    }
    if l < 1 {
        return Err(Error::Contract("zonal harmonic degree must be ≥ 1".into()));
    }
    QuasimodeEvaluator::zonal(l, pole)
}

/// `max |ψ(g(y)) − ψ(y)| / ‖ψ‖_∞-estimate` over seeded random `y` and the deck
/// generators `g`; the estimate is the largest `|ψ|` seen at the samples and
/// the origin.
pub fn deck_invariance_check(model: &ManifoldModel, evaluator: &QuasimodeEvaluator, samples: usize, seed: u64) -> Result<f64> {
    if !model.is_flat() {
        return Err(Error::Capability("deck invariance is checked on flat models".into()));
    }
    if evaluator.model().as_ref() != model {
        return Err(Error::Contract("evaluator belongs to a different model".into()));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let gens = model.deck_generators();
    let n = model.dim();
    let mut scale = evaluator.eval(&vec![0.0; n])?.norm();
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let y: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
        let v = evaluator.eval(&y)?;
        scale = scale.max(v.norm());
        for g in &gens {
            worst = worst.max((evaluator.eval(&g.apply(&y))? - v).norm());
        }
    }
    if scale == 0.0 {
        return Ok(0.0);
    }
    Ok(worst / scale)
}

/// `‖ψ‖₁ λ^{(n−1)/4} / ‖ψ‖₂`, both norms by grid quadrature.
pub fn l1_lower_ratio(evaluator: &QuasimodeEvaluator, lambda: f64, n: usize, grid: &QuadratureGrid) -> Result<f64> {
    let m = evaluator.grid_moduli(grid)?;
    let l1 = pairwise_sum_by(m.len(), &|i| grid.weight(i) * m[i]);
    let l2 = pairwise_sum_by(m.len(), &|i| grid.weight(i) * m[i] * m[i]).sqrt();
    if l2 == 0.0 {
        return Err(Error::Contract("L¹ ratio of the zero function".into()));
    }
    Ok(l1 * lambda.powf((n as f64 - 1.0) / 4.0) / l2)
}

fn lattice_point(model: &ManifoldModel, physical: &[f64]) -> Vec<f64> {
    model.to_lattice(physical)
}

/// `|ψ(γ(t))|` at `samples` equally spaced `t ∈ [−c̄, c̄]` on the geodesic.
pub fn on_axis_values(evaluator: &QuasimodeEvaluator, geodesic: &GeodesicSpec, c_bar: f64, samples: usize) -> Result<Vec<f64>> {
    let model = evaluator.model();
    (0..samples)
        .map(|j| {
            let t = if samples == 1 {
                0.0
            } else {
                -c_bar + 2.0 * c_bar * j as f64 / (samples - 1) as f64
            };
            evaluator
                .eval(&lattice_point(model, &geodesic.point_at(t)))
                .map(|z| z.norm())
        })
        .collect()
}

/// Largest transverse gradient `|∇_{y'} ψ|` over a `t × offset` sample
/// lattice of the tube, by central differences with step `10⁻²/λ`.
pub fn transverse_gradient_max(
    evaluator: &QuasimodeEvaluator,
    geodesic: &GeodesicSpec,
    c_bar: f64,
    radius: f64,
    samples: (usize, usize),
) -> Result<f64> {
    let model = evaluator.model();
    let n = geodesic.dim();
    let h = 1e-2 / evaluator.lambda();
    let mut worst: f64 = 0.0;
    for i in 0..samples.0 {
        let t = -c_bar + 2.0 * c_bar * i as f64 / (samples.0.max(2) - 1) as f64;
        for j in 0..samples.1 {
            let off = -radius + 2.0 * radius * j as f64 / (samples.1.max(2) - 1) as f64;
            let mut base = geodesic.point_at(t);
            for (b, f) in base.iter_mut().zip(&geodesic.frame) {
                *b += off * f[1];
            }
            let mut g2 = 0.0;
            for d in 1..n {
                let shifted = |sign: f64| -> Vec<f64> {
                    base.iter()
                        .zip(&geodesic.frame)
                        .map(|(b, f)| b + sign * h * f[d])
                        .collect()
                };
                let plus = evaluator.eval(&lattice_point(model, &shifted(1.0)))?;
                let minus = evaluator.eval(&lattice_point(model, &shifted(-1.0)))?;
                g2 += ((plus - minus) / (2.0 * h)).norm_sqr();
            }
            worst = worst.max(g2.sqrt());
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientRecord {
    pub label: Label,
    pub re: f64,
    pub im: f64,
}

/// Reproducibility record of a quasimode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuasimodeExport {
    pub manifold: ManifoldDescriptor,
    #[serde(rename = "type")]
    pub kind: String,
    pub params: serde_json::Value,
    pub lambda: f64,
    pub coeffs: Vec<CoefficientRecord>,
}

pub fn export_quasimode(evaluator: &QuasimodeEvaluator, params: serde_json::Value) -> QuasimodeExport {
    let coeffs = match evaluator {
        QuasimodeEvaluator::Coefficients { coeffs, .. } => coeffs
            .iter()
            .map(|(l, c)| CoefficientRecord {
                label: l.clone(),
                re: c.value.re,
                im: c.value.im,
            })
            .collect(),
        _ => Vec::new(),
    };
    QuasimodeExport {
        manifold: evaluator.model().descriptor().clone(),
        kind: evaluator.kind_name().to_string(),
        params,
        lambda: evaluator.lambda(),
        coeffs,
    }
}

/// Rebuilds a coefficient-backed evaluator from its export.
pub fn import_quasimode(record: &QuasimodeExport) -> Result<QuasimodeEvaluator> {
    let model = Arc::new(ManifoldModel::from_descriptor(&record.manifold)?);
    let mut v = CoefficientVector::new(model);
    for c in &record.coeffs {
        v.add(c.label.clone(), Complex64::new(c.re, c.im))?;
    }
    Ok(QuasimodeEvaluator::from_coefficients(v, record.lambda))
}
