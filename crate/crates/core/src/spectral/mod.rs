//! Spectral windows, coefficient vectors, sharp and smoothed spectral
//! projectors, `L^q` norm measurement and `2 → ∞` operator norms.

mod norms;
pub mod synthesis;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::manifolds::{in_interval, EigenIndex, Label, ManifoldModel};
use crate::profiles::{bump_ft, ProfileTable};
use crate::{Error, Result};

pub use norms::{
    coherent_candidate, diagonal_kernel, lq_norm, opnorm_2_to_inf, opnorm_lower_bound,
    NormRecord, WindowNorm,
};

/// User supplied width function for [`WidthPolicy::Custom`].
#[derive(Clone)]
pub struct CustomWidth {
    name: String,
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    samples: Vec<f64>,
}

impl CustomWidth {
    pub fn new<F>(name: impl Into<String>, f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            f: Arc::new(f),
            samples: Vec::new(),
        }
    }

    /// λ values of the run on which the shape conditions are validated.
    pub fn with_samples(mut self, samples: Vec<f64>) -> Self {
        self.samples = samples;
        self
    }

    pub fn eval(&self, lambda: f64) -> f64 {
        (self.f)(lambda)
    }

    pub fn name(&self) -> &str {
        &self.name
    }
}

impl fmt::Debug for CustomWidth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomWidth")
            .field("name", &self.name)
            .field("samples", &self.samples)
            .finish()
    }
}

#[derive(Debug, Clone)]
pub enum WidthPolicy {
    /// `δ(λ) = 1`.
    Unit,
    /// `δ(λ) = 1 / log λ`, for `λ > e`.
    Log,
    /// `δ(λ) ≤ 1` with `λ δ(λ)` non-decreasing.
    Custom(CustomWidth),
}

impl WidthPolicy {
    pub fn name(&self) -> &str {
        match self {
            WidthPolicy::Unit => "unit",
            WidthPolicy::Log => "log",
            WidthPolicy::Custom(c) => c.name(),
        }
    }
}

/// Realized width `δ(λ)` of a window starting at `λ`.
pub fn window_width(lambda: f64, policy: &WidthPolicy) -> Result<f64> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::Domain(format!("window centre must be positive and finite, got {lambda}")));
    }
    match policy {
        WidthPolicy::Unit => Ok(1.0),
        WidthPolicy::Log => {
            if lambda <= std::f64::consts::E {
                return Err(Error::Domain(format!("log width policy needs λ > e, got {lambda}")));
            }
            Ok(1.0 / lambda.ln())
        }
        WidthPolicy::Custom(c) => {
            let mut pts: Vec<f64> = c.samples.iter().copied().filter(|x| *x > 0.0).collect();
            pts.push(lambda);
            pts.sort_by(f64::total_cmp);
            pts.dedup();
            let mut prev_product = f64::NEG_INFINITY;
            for &x in &pts {
                let d = c.eval(x);
                if !(d.is_finite() && d > 0.0 && d <= 1.0) {
                    return Err(Error::Validation(format!(
                        "custom width '{}' gives δ({x}) = {d}, outside (0, 1]",
                        c.name
                    )));
                }
                let product = x * d;
                if product < prev_product {
                    return Err(Error::Validation(format!(
                        "custom width '{}': λδ(λ) decreases at λ = {x}",
                        c.name
                    )));
                }
                prev_product = product;
            }
            Ok(c.eval(lambda))
        }
    }
}

/// The interval `[λ, λ + δ(λ)]`.
#[derive(Debug, Clone)]
pub struct SpectralWindow {
    lower: f64,
    width: f64,
    policy: Option<WidthPolicy>,
}

impl SpectralWindow {
    pub fn new(lambda: f64, policy: WidthPolicy) -> Result<Self> {
        let width = window_width(lambda, &policy)?;
        Ok(Self {
            lower: lambda,
            width,
            policy: Some(policy),
        })
    }

    /// Arbitrary closed interval; no width policy is attached.
    pub fn interval(lower: f64, upper: f64) -> Result<Self> {
        if !(lower.is_finite() && upper.is_finite() && lower >= 0.0) {
            return Err(Error::Contract(format!("invalid interval [{lower}, {upper}]")));
        }
        Ok(Self {
            lower,
            width: upper - lower,
            policy: None,
        })
    }

    pub fn center(&self) -> f64 {
        self.lower
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.lower + self.width
    }

    pub fn contains(&self, freq: f64) -> bool {
        in_interval(freq, self.lower(), self.upper())
    }

    pub fn policy_name(&self) -> &str {
        self.policy.as_ref().map_or("interval", |p| p.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficient {
    pub freq: f64,
    pub value: Complex64,
}

/// Sparse expansion `Σ c_j e_j` over a model's eigenbasis.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientVector {
    model: Arc<ManifoldModel>,
    entries: BTreeMap<Label, Coefficient>,
}

impl CoefficientVector {
    pub fn new(model: Arc<ManifoldModel>) -> Self {
        Self {
            model,
            entries: BTreeMap::new(),
        }
    }

    /// Single eigenfunction with coefficient 1.
    pub fn basis(model: Arc<ManifoldModel>, label: Label) -> Result<Self> {
        let mut v = Self::new(model);
        v.add(label, Complex64::new(1.0, 0.0))?;
        Ok(v)
    }

    pub fn model(&self) -> &Arc<ManifoldModel> {
        &self.model
    }

    /// Adds `value` to the coefficient of `label`.
    pub fn add(&mut self, label: Label, value: Complex64) -> Result<()> {
        let freq = self.model.frequency(&label)?;
        self.entries
            .entry(label)
            .and_modify(|c| c.value += value)
            .or_insert(Coefficient { freq, value });
        Ok(())
    }

    /// Inserts a coefficient whose frequency is already known (from an enumeration).
    pub fn insert_indexed(&mut self, index: &EigenIndex, value: Complex64) -> Result<()> {
        self.model.check_label(&index.label)?;
        self.entries.insert(
            index.label.clone(),
            Coefficient {
                freq: index.freq,
                value,
            },
        );
        Ok(())
    }

    pub fn get(&self, label: &Label) -> Option<&Coefficient> {
        self.entries.get(label)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Label, &Coefficient)> {
        self.entries.iter()
    }

    /// `ℓ²` norm of the coefficients (equal to the `L²` norm by Parseval).
    pub fn l2_norm(&self) -> f64 {
        let sq: Vec<f64> = self.entries.values().map(|c| c.value.norm_sqr()).collect();
        crate::numerics::pairwise_sum(&sq).sqrt()
    }

    /// `⟨self, other⟩ = Σ a_j conj(b_j)`.
    pub fn inner(&self, other: &CoefficientVector) -> Complex64 {
        self.entries
            .iter()
            .filter_map(|(l, a)| other.entries.get(l).map(|b| a.value * b.value.conj()))
            .sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.values().map(|c| c.value.norm()).fold(0.0, f64::max)
    }

    pub fn max_freq(&self) -> f64 {
        self.entries.values().map(|c| c.freq).fold(0.0, f64::max)
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        for c in out.entries.values_mut() {
            c.value *= s;
        }
        out
    }

    /// Keeps the entries for which `keep(label, coefficient)` holds.
    pub fn retain<F: FnMut(&Label, &Coefficient) -> bool>(&mut self, mut keep: F) {
        self.entries.retain(|l, c| keep(l, c));
    }

    fn map_values<F: Fn(&Coefficient) -> Complex64>(&self, f: F) -> Self {
        let entries = self
            .entries
            .iter()
            .map(|(l, c)| {
                (
                    l.clone(),
                    Coefficient {
                        freq: c.freq,
                        value: f(c),
                    },
                )
            })
            .collect();
        Self {
            model: self.model.clone(),
            entries,
        }
    }
}

fn check_model(model: &ManifoldModel, coeffs: &CoefficientVector) -> Result<()> {
    if coeffs.model().as_ref() != model {
        return Err(Error::Contract(format!(
            "coefficients belong to {}, not {model}",
            coeffs.model()
        )));
    }
    Ok(())
}

/// Sharp spectral projector `χ_[λ, λ+δ]`: entries outside the window are zeroed (removed).
pub fn project(model: &ManifoldModel, window: &SpectralWindow, coeffs: &CoefficientVector) -> Result<CoefficientVector> {
    check_model(model, coeffs)?;
    let mut out = coeffs.clone();
    out.retain(|_, c| window.contains(c.freq));
    Ok(out)
}

/// Smooth window profile `ρ(s) = e^{iδs} B(δδ₀ s)/B(0)`, the inverse Fourier
/// transform of a bump supported in `δ·[1−δ₀, 1+δ₀]`, normalized to `ρ(0) = 1`.
///
/// `|ρ|` is even and decays faster than any power of `s`.
#[derive(Debug, Clone)]
pub struct WindowProfile {
    delta: f64,
    delta0: f64,
    table: Option<Arc<ProfileTable>>,
}

impl WindowProfile {
    pub const DEFAULT_DELTA: f64 = 1.0 / 16.0;
    pub const DEFAULT_DELTA0: f64 = 1.0 / 16.0;

    pub fn new(delta: f64, delta0: f64) -> Result<Self> {
        if !(delta > 0.0 && delta0 > 0.0 && delta0 < 1.0 && delta.is_finite()) {
            return Err(Error::Validation(format!(
                "window profile needs δ > 0 and δ₀ ∈ (0,1), got δ = {delta}, δ₀ = {delta0}"
            )));
        }
        Ok(Self {
            delta,
            delta0,
            table: None,
        })
    }

    /// Scale at which the envelope is tabulated: `δ·δ₀`.
    pub fn envelope_scale(&self) -> f64 {
        self.delta * self.delta0
    }

    /// Uses a precomputed envelope table (key must match [`Self::envelope_scale`]).
    pub fn with_table(mut self, table: Arc<ProfileTable>) -> Result<Self> {
        if table.scale().to_bits() != self.envelope_scale().to_bits() {
            return Err(Error::Contract("profile table scale does not match δ·δ₀".into()));
        }
        self.table = Some(table);
        Ok(self)
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn delta0(&self) -> f64 {
        self.delta0
    }

    pub fn envelope(&self, s: f64) -> f64 {
        match &self.table {
            Some(t) => t.eval(s),
            None => bump_ft(self.envelope_scale() * s),
        }
    }

    pub fn eval(&self, s: f64) -> Complex64 {
        if s == 0.0 {
            return Complex64::new(1.0, 0.0);
        }
        Complex64::from_polar(self.envelope(s), self.delta * s)
    }

    /// `sup |ρ(s)| (1+|s|)^N` over `|s| ≤ s_max`, sampled at unit steps/8.
    pub fn decay_constant(&self, order: i32, s_max: f64) -> f64 {
        let steps = (s_max * 8.0).ceil() as usize;
        (0..=steps)
            .map(|i| {
                let s = i as f64 / 8.0;
                self.eval(s).norm() * (1.0 + s).powi(order)
            })
            .fold(0.0, f64::max)
    }
}

impl Default for WindowProfile {
    fn default() -> Self {
        Self::new(Self::DEFAULT_DELTA, Self::DEFAULT_DELTA0).expect("valid defaults")
    }
}

/// Default smoothing time `T = c₀ log λ`.
pub fn default_smoothing_time(lambda: f64, c0: f64) -> f64 {
    c0 * lambda.ln()
}

/// `ρ(T(λ − P))`: multiplies the coefficient at `λ_j` by `ρ(T(λ − λ_j))`.
pub fn smooth_project(
    model: &ManifoldModel,
    profile: &WindowProfile,
    t: f64,
    lambda: f64,
    coeffs: &CoefficientVector,
) -> Result<CoefficientVector> {
    check_model(model, coeffs)?;
    if !(t >= 1.0 && t.is_finite()) {
        return Err(Error::Contract(format!("smoothing time T must be ≥ 1, got {t}")));
    }
    Ok(coeffs.map_values(|c| c.value * profile.eval(t * (lambda - c.freq))))
}
