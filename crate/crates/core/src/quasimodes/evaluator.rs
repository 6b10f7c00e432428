use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::manifolds::{harmonics, eval_label, GridLayout, Label, ManifoldKind, ManifoldModel, QuadratureGrid};
use crate::numerics::{legendre, ln_gamma_half_integer};
use crate::spectral::synthesis::WaveExpansion;
use crate::spectral::CoefficientVector;
use crate::{Error, Result};

/// Highest-weight harmonic `(x₁ + i x₂)^l` restricted to `Sⁿ`, L²-normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamMode {
    model: Arc<ManifoldModel>,
    degree: u32,
    /// `-½ log ∫_{Sⁿ} |x₁ + i x₂|^{2l}`.
    log_scale: f64,
}

/// `√((2l+1)/4π) P_l(x·pole)` on S².
#[derive(Debug, Clone, PartialEq)]
pub struct ZonalMode {
    model: Arc<ManifoldModel>,
    degree: u32,
    pole: [f64; 3],
}

/// A pointwise-evaluable mode with a nominal frequency.
#[derive(Debug, Clone, PartialEq)]
pub enum QuasimodeEvaluator {
    Coefficients { coeffs: CoefficientVector, lambda: f64 },
    /// Plane-wave sum on a flat model's cover, not necessarily deck invariant.
    Waves {
        model: Arc<ManifoldModel>,
        expansion: WaveExpansion,
        lambda: f64,
    },
    Beam(BeamMode),
    Zonal(ZonalMode),
}

fn sphere_frequency(n: usize, l: u32) -> f64 {
    let l = l as f64;
    (l * (l + n as f64 - 1.0)).sqrt()
}

impl QuasimodeEvaluator {
    pub fn from_coefficients(coeffs: CoefficientVector, lambda: f64) -> Self {
        Self::Coefficients { coeffs, lambda }
    }

    pub(crate) fn beam(n: usize, degree: u32) -> Result<Self> {
        let model = Arc::new(ManifoldModel::sphere(n)?);
        // ∫_{Sⁿ} |x₁+ix₂|^{2l} = 2π^{(n+1)/2} l! / Γ(l + (n+1)/2)
        let h = (n as f64 + 1.0) / 2.0;
        let log_mass = 2f64.ln() + h * PI.ln() + ln_gamma_half_integer(degree as f64 + 1.0)
            - ln_gamma_half_integer(degree as f64 + h);
        Ok(Self::Beam(BeamMode {
            model,
            degree,
            log_scale: -0.5 * log_mass,
        }))
    }

    pub(crate) fn zonal(degree: u32, pole: [f64; 3]) -> Result<Self> {
        let r = (pole[0] * pole[0] + pole[1] * pole[1] + pole[2] * pole[2]).sqrt();
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::Contract("zonal pole must be a nonzero vector".into()));
        }
        Ok(Self::Zonal(ZonalMode {
            model: Arc::new(ManifoldModel::sphere(2)?),
            degree,
            pole: [pole[0] / r, pole[1] / r, pole[2] / r],
        }))
    }

    pub fn model(&self) -> &Arc<ManifoldModel> {
        match self {
            Self::Coefficients { coeffs, .. } => coeffs.model(),
            Self::Waves { model, .. } => model,
            Self::Beam(b) => &b.model,
            Self::Zonal(z) => &z.model,
        }
    }

    /// Nominal frequency `λ`.
    pub fn lambda(&self) -> f64 {
        match self {
            Self::Coefficients { lambda, .. } | Self::Waves { lambda, .. } => *lambda,
            Self::Beam(b) => sphere_frequency(b.model.dim(), b.degree),
            Self::Zonal(z) => sphere_frequency(2, z.degree),
        }
    }

    pub fn coefficients(&self) -> Option<&CoefficientVector> {
        match self {
            Self::Coefficients { coeffs, .. } => Some(coeffs),
            _ => None,
        }
    }

    pub fn degree(&self) -> Option<u32> {
        match self {
            Self::Beam(b) => Some(b.degree),
            Self::Zonal(z) => Some(z.degree),
            Self::Coefficients { .. } | Self::Waves { .. } => None,
        }
    }

    /// Kind tag used in exports.
    pub fn kind_name(&self) -> &'static str {
        match self {
            Self::Coefficients { .. } => "coefficients",
            Self::Waves { .. } => "cover_waves",
            Self::Beam(_) => "gaussian_beam",
            Self::Zonal(_) => "zonal",
        }
    }

    /// Value at a point (lattice coordinates on flat models, unit vector on spheres).
    pub fn eval(&self, point: &[f64]) -> Result<Complex64> {
        match self {
            Self::Coefficients { coeffs, .. } => {
                let model = coeffs.model();
                if model.is_flat() {
                    if point.len() != model.dim() {
                        return Err(Error::Contract("point dimension mismatch".into()));
                    }
                    Ok(WaveExpansion::new(coeffs)?.eval(point))
                } else {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (label, c) in coeffs.iter() {
                        acc += c.value * eval_label(model, label, point)?;
                    }
                    Ok(acc)
                }
            }
            Self::Waves { model, expansion, .. } => {
                if point.len() != model.dim() {
                    return Err(Error::Contract("point dimension mismatch".into()));
                }
                Ok(expansion.eval(point))
            }
            Self::Beam(b) => {
                if point.len() != b.model.dim() + 1 {
                    return Err(Error::Contract("point dimension mismatch".into()));
                }
                let r = point.iter().map(|x| x * x).sum::<f64>().sqrt();
                let (x1, x2) = (point[0] / r, point[1] / r);
                let rho = (x1 * x1 + x2 * x2).sqrt();
                if rho == 0.0 {
                    return Ok(Complex64::new(0.0, 0.0));
                }
                let modulus = (b.degree as f64 * rho.ln() + b.log_scale).exp();
                Ok(Complex64::from_polar(modulus, b.degree as f64 * x2.atan2(x1)))
            }
            Self::Zonal(z) => {
                if point.len() != 3 {
                    return Err(Error::Contract("point dimension mismatch".into()));
                }
                let r = point.iter().map(|x| x * x).sum::<f64>().sqrt();
                let c: f64 = point.iter().zip(&z.pole).map(|(a, b)| a * b).sum::<f64>() / r;
                let l = z.degree as usize;
                Ok(Complex64::new(
                    ((2.0 * l as f64 + 1.0) / (4.0 * PI)).sqrt() * legendre(l, c.clamp(-1.0, 1.0)),
                    0.0,
                ))
            }
        }
    }

    /// Minimum grid resolution for a faithful measurement.
    pub fn required_resolution(&self) -> Result<usize> {
        let min = crate::manifolds::quadrature::MIN_RESOLUTION;
        match self {
            Self::Coefficients { coeffs, .. } => {
                if coeffs.model().is_flat() {
                    Ok(WaveExpansion::new(coeffs)?.required_resolution())
                } else {
                    let max_deg = coeffs
                        .iter()
                        .map(|(l, _)| match l {
                            Label::Harmonic { degree, .. } => *degree as usize,
                            _ => 0,
                        })
                        .max()
                        .unwrap_or(0);
                    let by_freq = (4.0 * coeffs.max_freq() / (2.0 * PI)).ceil() as usize;
                    Ok(by_freq.max(max_deg + 1).max(min))
                }
            }
            Self::Waves { expansion, .. } => Ok(expansion.required_resolution()),
            // |ψ|² has degree 2l in cos θ
            Self::Beam(b) => Ok((b.degree as usize + 1).max(min)),
            Self::Zonal(z) => Ok((z.degree as usize + 1).max(min)),
        }
    }

    fn check_grid(&self, grid: &QuadratureGrid) -> Result<()> {
        let model = self.model();
        let compatible = match grid.layout() {
            GridLayout::Flat { dim, .. } => model.is_flat() && *dim == model.dim(),
            GridLayout::Sphere { .. } => model.kind() == ManifoldKind::Sphere && model.dim() == 2,
        };
        if !compatible {
            return Err(Error::Contract(format!("quadrature grid does not belong to {model}")));
        }
        let required = self.required_resolution()?;
        if grid.resolution() < required {
            return Err(Error::Resolution {
                required,
                actual: grid.resolution(),
            });
        }
        Ok(())
    }

    /// `|ψ|` at every grid node, in grid order.
    pub fn grid_moduli(&self, grid: &QuadratureGrid) -> Result<Vec<f64>> {
        self.check_grid(grid)?;
        if let Self::Coefficients { coeffs, .. } = self {
            if coeffs.model().is_flat() {
                let exp = WaveExpansion::new(coeffs)?;
                return Ok(exp
                    .synthesize(grid.resolution())
                    .into_par_iter()
                    .map(|z| z.norm())
                    .collect());
            }
            return sphere_coefficient_moduli(coeffs, grid);
        }
        if let Self::Waves { expansion, .. } = self {
            return Ok(expansion
                .synthesize(grid.resolution())
                .into_par_iter()
                .map(|z| z.norm())
                .collect());
        }
        let dim = grid.coord_dim();
        (0..grid.len())
            .into_par_iter()
            .map_init(
                || vec![0.0; dim],
                |p, i| {
                    grid.point_into(i, p);
                    self.eval(p).map(|z| z.norm())
                },
            )
            .collect()
    }
}

fn sphere_coefficient_moduli(coeffs: &CoefficientVector, grid: &QuadratureGrid) -> Result<Vec<f64>> {
    let mut by_degree: std::collections::BTreeMap<usize, Vec<Complex64>> = Default::default();
    for (label, c) in coeffs.iter() {
        if let Label::Harmonic { degree, order } = label {
            let l = *degree as usize;
            let slot = by_degree.entry(l).or_insert_with(|| vec![Complex64::new(0.0, 0.0); 2 * l + 1]);
            slot[(order + l as i64) as usize] += c.value;
        }
    }
    Ok((0..grid.len())
        .into_par_iter()
        .map_init(
            || vec![0.0; 3],
            |p, i| {
                grid.point_into(i, p);
                let (theta, phi) = harmonics::angles(p);
                let mut acc = Complex64::new(0.0, 0.0);
                for (l, cs) in &by_degree {
                    let ys = harmonics::degree_values(*l, theta, phi);
                    for (y, c) in ys.iter().zip(cs) {
                        acc += c * y;
                    }
                }
                acc.norm()
            },
        )
        .collect())
}
