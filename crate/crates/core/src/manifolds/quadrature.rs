use std::f64::consts::PI;

use super::{ManifoldKind, ManifoldModel};
use crate::numerics::gauss_legendre;
use crate::{Error, Result};

pub const MIN_RESOLUTION: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub enum GridLayout {
    /// `per_axis^dim` points `s = j / per_axis` in lattice coordinates.
    Flat { per_axis: usize, dim: usize },
    /// Gauss–Legendre in `cos θ` times a uniform azimuth grid.
    Sphere {
        cos_theta: Vec<f64>,
        theta_weights: Vec<f64>,
        n_phi: usize,
    },
}

/// Product quadrature rule on a fundamental domain or on S².
///
/// Points are generated on demand from the layout, so fine grids cost no
/// coordinate storage. Flat points are in lattice coordinates; sphere points
/// are unit vectors in ℝ³.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid {
    layout: GridLayout,
    resolution: usize,
    volume: f64,
}

impl QuadratureGrid {
    pub fn layout(&self) -> &GridLayout {
        &self.layout
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn len(&self) -> usize {
        match &self.layout {
            GridLayout::Flat { per_axis, dim } => per_axis.pow(*dim as u32),
            GridLayout::Sphere { cos_theta, n_phi, .. } => cos_theta.len() * n_phi,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Length of a point's coordinate tuple.
    pub fn coord_dim(&self) -> usize {
        match &self.layout {
            GridLayout::Flat { dim, .. } => *dim,
            GridLayout::Sphere { .. } => 3,
        }
    }

    pub fn weight(&self, i: usize) -> f64 {
        match &self.layout {
            GridLayout::Flat { .. } => self.volume / self.len() as f64,
            GridLayout::Sphere {
                theta_weights,
                n_phi,
                ..
            } => theta_weights[i / n_phi] * 2.0 * PI / *n_phi as f64,
        }
    }

    pub fn point_into(&self, i: usize, out: &mut [f64]) {
        match &self.layout {
            GridLayout::Flat { per_axis, dim } => {
                let mut rest = i;
                for d in (0..*dim).rev() {
                    out[d] = (rest % per_axis) as f64 / *per_axis as f64;
                    rest /= per_axis;
                }
            }
            GridLayout::Sphere {
                cos_theta, n_phi, ..
            } => {
                let x = cos_theta[i / n_phi];
                let phi = 2.0 * PI * (i % n_phi) as f64 / *n_phi as f64;
                let s = (1.0 - x * x).max(0.0).sqrt();
                out[0] = s * phi.cos();
                out[1] = s * phi.sin();
                out[2] = x;
            }
        }
    }

    pub fn point(&self, i: usize) -> Vec<f64> {
        let mut p = vec![0.0; self.coord_dim()];
        self.point_into(i, &mut p);
        p
    }

    /// Physical distance between neighbouring nodes (largest spacing of the rule).
    pub fn spacing(&self, model: &ManifoldModel) -> f64 {
        match &self.layout {
            GridLayout::Flat { per_axis, .. } => model.max_basis_length() / *per_axis as f64,
            GridLayout::Sphere { cos_theta, n_phi, .. } => {
                let thetas: Vec<f64> = cos_theta.iter().map(|x| x.acos()).collect();
                let mut gap = PI - thetas[0];
                for w in thetas.windows(2) {
                    gap = gap.max((w[0] - w[1]).abs());
                }
                gap.max(thetas[thetas.len() - 1]).max(2.0 * PI / *n_phi as f64)
            }
        }
    }
}

/// Builds the standard product rule for `model`.
///
/// Flat models: uniform `resolution^n` trapezoid grid on `[0,1)^n` in lattice
/// coordinates with equal weights `vol / resolution^n` (exact for
/// trigonometric polynomials below the Nyquist degree). S²: `resolution`
/// Gauss–Legendre nodes in `cos θ` times `2·resolution` azimuths.
pub fn quadrature_grid(model: &ManifoldModel, resolution: usize) -> Result<QuadratureGrid> {
    if resolution < MIN_RESOLUTION {
        return Err(Error::Contract(format!(
            "quadrature resolution {resolution} is below the minimum {MIN_RESOLUTION}"
        )));
    }
    let layout = match model.kind() {
        ManifoldKind::Torus | ManifoldKind::KleinBottle => {
            let dim = model.dim();
            if (resolution as f64).powi(dim as i32) > 2f64.powi(31) {
                return Err(Error::Contract(format!(
                    "{resolution}^{dim} grid points exceed the supported grid size"
                )));
            }
            GridLayout::Flat {
                per_axis: resolution,
                dim,
            }
        }
        ManifoldKind::Sphere => {
            if model.dim() != 2 {
                return Err(Error::Capability(format!(
                    "product quadrature is implemented on S² only, not S^{}",
                    model.dim()
                )));
            }
            let (x, w) = gauss_legendre(resolution);
            GridLayout::Sphere {
                cos_theta: x,
                theta_weights: w,
                n_phi: 2 * resolution,
            }
        }
    };
    Ok(QuadratureGrid {
        layout,
        resolution,
        volume: model.volume(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn integrate<F: Fn(&[f64]) -> f64>(grid: &QuadratureGrid, f: F) -> f64 {
        let mut p = vec![0.0; grid.coord_dim()];
        (0..grid.len())
            .map(|i| {
                grid.point_into(i, &mut p);
                grid.weight(i) * f(&p)
            })
            .sum()
    }

    #[test]
    fn unit_torus_grid_has_equal_weights() {
        let g = quadrature_grid(&ManifoldModel::unit_torus(2), 64).unwrap();
        assert_eq!(g.len(), 4096);
        assert_eq!(g.weight(17), 1.0 / 4096.0);
        assert!((integrate(&g, |_| 1.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sphere_weights_sum_to_area() {
        let g = quadrature_grid(&ManifoldModel::sphere(2).unwrap(), 32).unwrap();
        assert!((integrate(&g, |_| 1.0) - 4.0 * PI).abs() < 1e-10 * 4.0 * PI);
    }

    #[test]
    fn klein_bottle_fundamental_domain_has_unit_area() {
        let g = quadrature_grid(&ManifoldModel::klein_bottle(), 64).unwrap();
        assert!((integrate(&g, |_| 1.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn skewed_torus_volume() {
        let m = ManifoldModel::torus(vec![vec![2.0, 0.0], vec![0.5, 1.5]]).unwrap();
        let g = quadrature_grid(&m, 16).unwrap();
        assert!((integrate(&g, |_| 1.0) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn refinement_reduces_error_on_smooth_integrand() {
        // ∫_{S²} 1/(1.5 - z) = 2π log 5
        let sphere = ManifoldModel::sphere(2).unwrap();
        let exact = 2.0 * PI * 5f64.ln();
        let mut prev = f64::INFINITY;
        for r in [8usize, 9, 10, 11, 12] {
            let g = quadrature_grid(&sphere, r).unwrap();
            let err = (integrate(&g, |p| 1.0 / (1.5 - p[2])) - exact).abs();
            assert!(err <= prev, "r = {r}: {err} > {prev}");
            prev = err;
        }
        // ∫_{T²} exp(4 cos 2πx + 4 cos 2πy), reference from a fine grid
        let torus = ManifoldModel::unit_torus(2);
        let f = |p: &[f64]| (4.0 * (2.0 * PI * p[0]).cos() + 4.0 * (2.0 * PI * p[1]).cos()).exp();
        let reference = integrate(&quadrature_grid(&torus, 64).unwrap(), f);
        let mut prev = f64::INFINITY;
        for r in [8usize, 12, 16, 20, 24] {
            let err = (integrate(&quadrature_grid(&torus, r).unwrap(), f) - reference).abs();
            assert!(err <= prev.max(1e-13), "r = {r}: {err} > {prev}");
            prev = err;
        }
    }

    #[test]
    fn low_resolution_is_rejected() {
        let err = quadrature_grid(&ManifoldModel::unit_torus(2), 7).unwrap_err();
        assert!(matches!(err, Error::Contract(_)));
    }
}
