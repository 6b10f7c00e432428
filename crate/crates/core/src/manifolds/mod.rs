//! Model compact manifolds with exactly known Laplace spectra: flat tori
//! `ℝⁿ/Bℤⁿ`, the Klein bottle and round spheres.
//!
//! Flat points are written in lattice coordinates `s ∈ [0,1)ⁿ` (physical
//! point `x = B s`); sphere points are unit vectors in `ℝ^{n+1}`.

pub mod geodesic;
pub mod harmonics;
pub mod lattice;
pub mod quadrature;
pub mod spectrum;

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::spectral::SpectralWindow;
use crate::{Error, Result};

pub use geodesic::{periodic_geodesic, GeodesicSpec};
pub use quadrature::{quadrature_grid, GridLayout, QuadratureGrid};

/// Serializable description of a model manifold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ManifoldDescriptor {
    /// `ℝⁿ / Bℤⁿ`; each entry of `basis` is one lattice basis vector.
    Torus { basis: Vec<Vec<f64>> },
    /// `ℝ² / ⟨α, β⟩`, `α(y) = (y₁+1, −y₂)`, `β(y) = (y₁, y₂+1)`.
    KleinBottle,
    /// Unit sphere `Sⁿ ⊂ ℝ^{n+1}`.
    Sphere { dim: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ManifoldKind {
    Torus,
    KleinBottle,
    Sphere,
}

#[derive(Debug, Clone, PartialEq)]
struct FlatData {
    basis: DMatrix<f64>,
    basis_inv: DMatrix<f64>,
    /// Columns map an integer label to its wavevector: `k = dual · m`.
    dual: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifoldModel {
    descriptor: ManifoldDescriptor,
    dim: usize,
    volume: f64,
    flat: Option<FlatData>,
}

impl ManifoldModel {
    pub fn torus(basis: Vec<Vec<f64>>) -> Result<Self> {
        let n = basis.len();
        if n < 2 || basis.iter().any(|v| v.len() != n) {
            return Err(Error::Contract(format!(
                "torus basis must be n ≥ 2 vectors of length n, got {n} vectors"
            )));
        }
        let b = DMatrix::from_fn(n, n, |i, j| basis[j][i]);
        let det = b.determinant();
        if !det.is_finite() || det.abs() < 1e-12 {
            return Err(Error::Contract(format!("torus lattice basis is singular (det = {det})")));
        }
        let basis_inv = b.clone().try_inverse().expect("nonsingular basis");
        let dual = basis_inv.transpose() * (2.0 * PI);
        Ok(Self {
            descriptor: ManifoldDescriptor::Torus { basis },
            dim: n,
            volume: det.abs(),
            flat: Some(FlatData {
                basis: b,
                basis_inv,
                dual,
            }),
        })
    }

    /// `ℝⁿ/ℤⁿ`.
    pub fn unit_torus(n: usize) -> Self {
        let basis = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        Self::torus(basis).expect("identity basis")
    }

    /// Klein bottle on the fundamental domain `[0,1)²`. Eigenfunctions are
    /// lifted to the translation double cover `ℝ²/(2ℤ×ℤ)`, whose dual
    /// lattice `πℤ × 2πℤ` is stored as `dual`.
    pub fn klein_bottle() -> Self {
        Self {
            descriptor: ManifoldDescriptor::KleinBottle,
            dim: 2,
            volume: 1.0,
            flat: Some(FlatData {
                basis: DMatrix::identity(2, 2),
                basis_inv: DMatrix::identity(2, 2),
                dual: DMatrix::from_row_slice(2, 2, &[PI, 0.0, 0.0, 2.0 * PI]),
            }),
        }
    }

    pub fn sphere(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Contract(format!("sphere dimension must be ≥ 2, got {n}")));
        }
        Ok(Self {
            descriptor: ManifoldDescriptor::Sphere { dim: n },
            dim: n,
            volume: sphere_area(n),
            flat: None,
        })
    }

    pub fn from_descriptor(desc: &ManifoldDescriptor) -> Result<Self> {
        match desc {
            ManifoldDescriptor::Torus { basis } => Self::torus(basis.clone()),
            ManifoldDescriptor::KleinBottle => Ok(Self::klein_bottle()),
            ManifoldDescriptor::Sphere { dim } => Self::sphere(*dim),
        }
    }

    pub fn descriptor(&self) -> &ManifoldDescriptor {
        &self.descriptor
    }

    pub fn kind(&self) -> ManifoldKind {
        match self.descriptor {
            ManifoldDescriptor::Torus { .. } => ManifoldKind::Torus,
            ManifoldDescriptor::KleinBottle => ManifoldKind::KleinBottle,
            ManifoldDescriptor::Sphere { .. } => ManifoldKind::Sphere,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn volume(&self) -> f64 {
        self.volume
    }

    pub fn is_flat(&self) -> bool {
        self.flat.is_some()
    }

    /// Length of a point's coordinate tuple.
    pub fn coord_dim(&self) -> usize {
        if self.is_flat() {
            self.dim
        } else {
            self.dim + 1
        }
    }

    fn flat(&self) -> &FlatData {
        self.flat.as_ref().expect("flat model")
    }

    /// `x = B s`.
    pub fn to_physical(&self, s: &[f64]) -> Vec<f64> {
        let f = self.flat();
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| f.basis[(i, j)] * s[j]).sum())
            .collect()
    }

    /// `s = B⁻¹ x`.
    pub fn to_lattice(&self, x: &[f64]) -> Vec<f64> {
        let f = self.flat();
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| f.basis_inv[(i, j)] * x[j]).sum())
            .collect()
    }

    /// Wavevector `k` of the integer label `m` (dual lattice of the torus, or
    /// of the Klein bottle's double cover).
    pub fn wavevector(&self, m: &[i64]) -> Vec<f64> {
        let f = self.flat();
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| f.dual[(i, j)] * m[j] as f64).sum())
            .collect()
    }

    /// Real coordinates `m = dualᵀ⁻¹…` of a wavevector: inverse of [`Self::wavevector`].
    pub fn label_coordinates(&self, k: &[f64]) -> Vec<f64> {
        let f = self.flat();
        let inv = f.dual.clone().try_inverse().expect("dual basis invertible");
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| inv[(i, j)] * k[j]).sum())
            .collect()
    }

    /// Longest lattice basis vector (physical length).
    pub fn max_basis_length(&self) -> f64 {
        let f = self.flat();
        (0..self.dim)
            .map(|j| f.basis.column(j).norm())
            .fold(0.0, f64::max)
    }

    /// Phase convention of flat eigenfunctions: `e^{i k·x} = e^{2πi θ·s}`
    /// with `θ = m` on tori and `θ = (m₁/2, m₂)` on the Klein double cover.
    pub fn phase_frequency(&self, m: &[i64]) -> Vec<f64> {
        match self.kind() {
            ManifoldKind::KleinBottle => vec![m[0] as f64 / 2.0, m[1] as f64],
            _ => m.iter().map(|&x| x as f64).collect(),
        }
    }

    fn gram(&self) -> DMatrix<f64> {
        let f = self.flat();
        f.dual.transpose() * &f.dual
    }

    /// Frequency of `P = sqrt(-Δ)` for a label of this model.
    pub fn frequency(&self, label: &Label) -> Result<f64> {
        self.check_label(label)?;
        Ok(match label {
            Label::Lattice(m) => norm(&self.wavevector(m)),
            Label::Klein { m1, m2 } => norm(&self.wavevector(&[*m1, *m2])),
            Label::Harmonic { degree, .. } => {
                let l = *degree as f64;
                (l * (l + self.dim as f64 - 1.0)).sqrt()
            }
        })
    }

    /// Checks that a label belongs to this model's eigenbasis.
    pub fn check_label(&self, label: &Label) -> Result<()> {
        let ok = match (self.kind(), label) {
            (ManifoldKind::Torus, Label::Lattice(m)) => m.len() == self.dim,
            (ManifoldKind::KleinBottle, Label::Klein { m1, m2 }) => {
                *m2 > 0 || (*m2 == 0 && m1 % 2 == 0)
            }
            (ManifoldKind::Sphere, Label::Harmonic { degree, order }) => {
                if self.dim == 2 {
                    order.unsigned_abs() <= *degree as u64
                } else {
                    *order >= 0
                        && (*order as usize)
                            < harmonics::sphere_multiplicity(self.dim, *degree as usize)
                }
            }
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Contract(format!("label {label:?} does not index an eigenfunction of {self}")))
        }
    }

    /// Double-cover plane waves `(m, weight)` whose sum is the Klein eigenfunction
    /// `(m1, m2)`: the α-average of `e^{i(π m₁ y₁ + 2π m₂ y₂)}`, normalized.
    pub fn klein_waves(m1: i64, m2: i64) -> Vec<([i64; 2], f64)> {
        if m2 == 0 {
            vec![([m1, 0], 1.0)]
        } else {
            let parity = if m1.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            vec![([m1, m2], FRAC_1_SQRT_2), ([m1, -m2], parity * FRAC_1_SQRT_2)]
        }
    }

    /// Generators of the deck group acting on lattice coordinates.
    pub fn deck_generators(&self) -> Vec<DeckMap> {
        match self.kind() {
            ManifoldKind::Torus => (0..self.dim)
                .map(|d| {
                    let mut shift = vec![0.0; self.dim];
                    shift[d] = 1.0;
                    DeckMap {
                        flip: vec![false; self.dim],
                        shift,
                    }
                })
                .collect(),
            ManifoldKind::KleinBottle => vec![
                DeckMap {
                    flip: vec![false, true],
                    shift: vec![1.0, 0.0],
                },
                DeckMap {
                    flip: vec![false, false],
                    shift: vec![0.0, 1.0],
                },
            ],
            ManifoldKind::Sphere => Vec::new(),
        }
    }

    /// Lattice-coordinate images of `s` under the deck transformations whose
    /// translation parts lie in `{-2..2}ⁿ` (`{-3..3} × {-2..2}` on the Klein
    /// bottle, where odd shifts along `y₁` come with the flip `y₂ ↦ −y₂`).
    pub fn nearby_images(&self, s: &[f64]) -> Vec<Vec<f64>> {
        let n = self.dim;
        let klein = self.kind() == ManifoldKind::KleinBottle;
        let mut shifts: Vec<Vec<i64>> = vec![vec![]];
        for d in 0..n {
            let reach = if klein && d == 0 { 3 } else { 2 };
            shifts = shifts
                .into_iter()
                .flat_map(|v| {
                    (-reach..=reach).map(move |k| {
                        let mut w = v.clone();
                        w.push(k);
                        w
                    })
                })
                .collect();
        }
        shifts
            .iter()
            .map(|t| {
                let flip = klein && t[0].rem_euclid(2) == 1;
                s.iter()
                    .zip(t)
                    .enumerate()
                    .map(|(d, (x, k))| if flip && d == 1 { -x + *k as f64 } else { x + *k as f64 })
                    .collect()
            })
            .collect()
    }
}

impl fmt::Display for ManifoldModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.descriptor {
            ManifoldDescriptor::Torus { basis } => {
                let rows: Vec<String> = basis
                    .iter()
                    .map(|v| v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(","))
                    .collect();
                write!(f, "torus{}[{}]", self.dim, rows.join(";"))
            }
            ManifoldDescriptor::KleinBottle => write!(f, "klein_bottle"),
            ManifoldDescriptor::Sphere { dim } => write!(f, "sphere{dim}"),
        }
    }
}

/// Affine deck map on lattice coordinates: coordinate `d` is negated when
/// `flip[d]`, then `shift` is added.
#[derive(Debug, Clone, PartialEq)]
pub struct DeckMap {
    pub flip: Vec<bool>,
    pub shift: Vec<f64>,
}

impl DeckMap {
    pub fn apply(&self, s: &[f64]) -> Vec<f64> {
        s.iter()
            .zip(&self.flip)
            .zip(&self.shift)
            .map(|((x, f), t)| if *f { -x + t } else { x + t })
            .collect()
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Area of the unit `Sⁿ`: `2π^{(n+1)/2} / Γ((n+1)/2)`.
pub fn sphere_area(n: usize) -> f64 {
    let h = (n as f64 + 1.0) / 2.0;
    2.0 * PI.powf(h) / crate::numerics::ln_gamma_half_integer(h).exp()
}

/// Eigenbasis label.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    /// Torus: `e_m(x) = vol^{-1/2} e^{2πi m·s}`.
    Lattice(Vec<i64>),
    /// Klein bottle: α-orbit `{(m₁, m₂), (m₁, −m₂)}` with `m₂ ≥ 0`; for
    /// `m₂ = 0` only even `m₁` survive the average.
    Klein { m1: i64, m2: i64 },
    /// Sphere: degree `l` and order index (`-l..=l` on S², `0..dim` on Sⁿ).
    Harmonic { degree: u32, order: i64 },
}

impl Label {
    /// `(−1)^{m₁}`, the sign pairing the two waves of a Klein orbit.
    pub fn parity(&self) -> Option<i8> {
        match self {
            Label::Klein { m1, .. } => Some(if m1.rem_euclid(2) == 0 { 1 } else { -1 }),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenIndex {
    pub label: Label,
    pub freq: f64,
}

const WINDOW_RTOL: f64 = 1e-12;
const MAX_ENUMERATION: f64 = 5e7;

/// Membership of a frequency in `[lower, upper]`, with a `1e-12` relative
/// allowance so analytically equal frequencies are not lost to rounding.
pub fn in_interval(freq: f64, lower: f64, upper: f64) -> bool {
    lower <= upper && freq >= lower * (1.0 - WINDOW_RTOL) && freq <= upper * (1.0 + WINDOW_RTOL)
}

/// Eigenbasis indices with frequency in the window, sorted by frequency then label.
pub fn enumerate_window(model: &ManifoldModel, window: &SpectralWindow) -> Result<Vec<EigenIndex>> {
    enumerate_interval(model, window.lower(), window.upper())
}

pub fn enumerate_interval(model: &ManifoldModel, lower: f64, upper: f64) -> Result<Vec<EigenIndex>> {
    if !(lower.is_finite() && upper.is_finite()) || lower < 0.0 {
        return Err(Error::Contract(format!(
            "window bounds must be finite with 0 ≤ lower, got [{lower}, {upper}]"
        )));
    }
    if lower > upper {
        return Ok(Vec::new());
    }
    let weyl = weyl_estimate(model, upper);
    if weyl > MAX_ENUMERATION {
        return Err(Error::Contract(format!(
            "window up to {upper} holds ~{weyl:.2e} eigenfunctions, beyond the enumeration limit"
        )));
    }
    let mut out: Vec<EigenIndex> = match model.kind() {
        ManifoldKind::Torus => lattice::shell_points(&model.gram(), lower, upper, 1e-9)
            .into_iter()
            .map(|m| {
                let freq = norm(&model.wavevector(&m));
                EigenIndex {
                    label: Label::Lattice(m),
                    freq,
                }
            })
            .collect(),
        ManifoldKind::KleinBottle => lattice::shell_points(&model.gram(), lower, upper, 1e-9)
            .into_iter()
            .filter(|m| m[1] > 0 || (m[1] == 0 && m[0] % 2 == 0))
            .map(|m| EigenIndex {
                freq: norm(&model.wavevector(&m)),
                label: Label::Klein { m1: m[0], m2: m[1] },
            })
            .collect(),
        ManifoldKind::Sphere => {
            let n = model.dim() as f64;
            let mut v = Vec::new();
            // l(l+n-1) = f² ⇒ l = (-(n-1) + sqrt((n-1)² + 4f²)) / 2
            let root = |f: f64| (-(n - 1.0) + ((n - 1.0).powi(2) + 4.0 * f * f).sqrt()) / 2.0;
            let l_lo = (root(lower).floor() as i64 - 1).max(0) as u32;
            let l_hi = root(upper).ceil() as u32 + 1;
            for l in l_lo..=l_hi {
                let lf = l as f64;
                let freq = (lf * (lf + n - 1.0)).sqrt();
                if !in_interval(freq, lower, upper) {
                    continue;
                }
                let orders: Vec<i64> = if model.dim() == 2 {
                    (-(l as i64)..=l as i64).collect()
                } else {
                    (0..harmonics::sphere_multiplicity(model.dim(), l as usize) as i64).collect()
                };
                v.extend(orders.into_iter().map(|order| EigenIndex {
                    label: Label::Harmonic { degree: l, order },
                    freq,
                }));
            }
            v
        }
    };
    out.retain(|e| in_interval(e.freq, lower, upper));
    out.sort_by(|a, b| a.freq.total_cmp(&b.freq).then_with(|| a.label.cmp(&b.label)));
    Ok(out)
}

/// Weyl-law estimate of the number of eigenfunctions with frequency ≤ `r`.
pub fn weyl_estimate(model: &ManifoldModel, r: f64) -> f64 {
    let n = model.dim() as i32;
    let ball = PI.powf(n as f64 / 2.0) / crate::numerics::ln_gamma_half_integer(n as f64 / 2.0 + 1.0).exp();
    ball * model.volume() * r.powi(n) / (2.0 * PI).powi(n) + 1.0
}

/// Value of the L²-normalized eigenfunction at a point.
pub fn eval_eigenfunction(model: &ManifoldModel, index: &EigenIndex, point: &[f64]) -> Result<Complex64> {
    eval_label(model, &index.label, point)
}

pub fn eval_label(model: &ManifoldModel, label: &Label, point: &[f64]) -> Result<Complex64> {
    model.check_label(label)?;
    if point.len() != model.coord_dim() {
        return Err(Error::Contract(format!(
            "point has {} coordinates, {} expected",
            point.len(),
            model.coord_dim()
        )));
    }
    match label {
        Label::Lattice(m) => {
            let phase: f64 = m.iter().zip(point).map(|(k, s)| *k as f64 * s).sum();
            Ok(Complex64::from_polar(model.volume().powf(-0.5), 2.0 * PI * phase))
        }
        Label::Klein { m1, m2 } => Ok(ManifoldModel::klein_waves(*m1, *m2)
            .into_iter()
            .map(|([a, b], w)| {
                Complex64::from_polar(w, PI * a as f64 * point[0] + 2.0 * PI * b as f64 * point[1])
            })
            .sum()),
        Label::Harmonic { degree, order } => {
            if model.dim() != 2 {
                return Err(Error::Capability(format!(
                    "spherical harmonic evaluation is implemented on S² only, not S^{}",
                    model.dim()
                )));
            }
            let (theta, phi) = harmonics::angles(point);
            Ok(Complex64::new(
                harmonics::real_harmonic(*degree as usize, *order, theta, phi),
                0.0,
            ))
        }
    }
}
