use serde::{Deserialize, Serialize};

use super::QuasimodeEvaluator;
use crate::manifolds::{GeodesicSpec, GridLayout, ManifoldModel, QuadratureGrid};
use crate::numerics::pairwise_sum_by;
use crate::{Error, Result};

/// Points across the tube diameter that a grid must provide.
const POINTS_ACROSS: f64 = 8.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TubeSpec {
    /// `{x : |t| ≤ c̄, dist(x, γ(t)) ≤ radius}` around a geodesic segment of a flat model.
    Segment {
        geodesic: GeodesicSpec,
        half_length: f64,
        radius: f64,
    },
    /// Geodesic `radius`-neighbourhood of the great circle `{x · normal = 0}` on S².
    GreatCircle { normal: [f64; 3], radius: f64 },
}

impl TubeSpec {
    /// Segment tube with the default radius `λ^{-1/2}(log λ)^{1/2}`.
    pub fn segment(geodesic: GeodesicSpec, half_length: f64, lambda: f64) -> Result<Self> {
        if !(lambda > std::f64::consts::E) {
            return Err(Error::Domain(format!("default tube radius needs λ > e, got {lambda}")));
        }
        Self::Segment {
            geodesic,
            half_length,
            radius: (lambda.ln() / lambda).sqrt(),
        }
        .validated()
    }

    pub fn validated(self) -> Result<Self> {
        let ok = match &self {
            TubeSpec::Segment {
                half_length,
                radius,
                ..
            } => *radius > 0.0 && *half_length > 0.0 && *half_length < 1.0,
            TubeSpec::GreatCircle { normal, radius } => {
                *radius > 0.0 && normal.iter().map(|x| x * x).sum::<f64>() > 0.0
            }
        };
        if ok {
            Ok(self)
        } else {
            Err(Error::Contract(format!("invalid tube {self:?}")))
        }
    }

    pub fn radius(&self) -> f64 {
        match self {
            TubeSpec::Segment { radius, .. } | TubeSpec::GreatCircle { radius, .. } => *radius,
        }
    }

    /// Membership of a grid point (lattice coordinates or unit vector).
    pub fn contains(&self, model: &ManifoldModel, point: &[f64]) -> bool {
        match self {
            TubeSpec::Segment {
                geodesic,
                half_length,
                radius,
            } => model.nearby_images(point).iter().any(|img| {
                let x = model.to_physical(img);
                let rel: Vec<f64> = x.iter().zip(&geodesic.base_point).map(|(a, b)| a - b).collect();
                let t: f64 = rel.iter().zip(&geodesic.direction).map(|(a, b)| a * b).sum();
                if t.abs() > *half_length {
                    return false;
                }
                let perp2: f64 = rel
                    .iter()
                    .zip(&geodesic.direction)
                    .map(|(a, u)| (a - t * u).powi(2))
                    .sum();
                perp2 <= radius * radius
            }),
            TubeSpec::GreatCircle { normal, radius } => {
                let nn = normal.iter().map(|x| x * x).sum::<f64>().sqrt();
                let r = point.iter().map(|x| x * x).sum::<f64>().sqrt();
                let c: f64 = point.iter().zip(normal).map(|(a, b)| a * b).sum::<f64>() / (nn * r);
                c.abs() <= radius.sin()
            }
        }
    }
}

fn check_resolution(model: &ManifoldModel, tube: &TubeSpec, grid: &QuadratureGrid) -> Result<()> {
    let spacing = grid.spacing(model);
    let across = 2.0 * tube.radius() / spacing;
    if across < POINTS_ACROSS {
        let required = (grid.resolution() as f64 * POINTS_ACROSS / across).ceil() as usize;
        return Err(Error::Resolution {
            required,
            actual: grid.resolution(),
        });
    }
    match (tube, grid.layout()) {
        (TubeSpec::Segment { .. }, GridLayout::Flat { .. }) | (TubeSpec::GreatCircle { .. }, GridLayout::Sphere { .. }) => Ok(()),
        _ => Err(Error::Contract("tube and grid belong to different geometries".into())),
    }
}

/// `(Σ_{x_i ∈ tube} w_i |ψ(x_i)|²)^{1/2}`.
pub fn tube_mass(evaluator: &QuasimodeEvaluator, tube: &TubeSpec, grid: &QuadratureGrid) -> Result<f64> {
    let model = evaluator.model();
    check_resolution(model, tube, grid)?;
    let moduli = evaluator.grid_moduli(grid)?;
    let inside = membership(model, tube, grid);
    Ok(pairwise_sum_by(moduli.len(), &|i| {
        if inside[i] {
            grid.weight(i) * moduli[i] * moduli[i]
        } else {
            0.0
        }
    })
    .sqrt())
}

/// Tube volume by grid counting.
pub fn tube_volume(model: &ManifoldModel, tube: &TubeSpec, grid: &QuadratureGrid) -> Result<f64> {
    check_resolution(model, tube, grid)?;
    let inside = membership(model, tube, grid);
    Ok(pairwise_sum_by(inside.len(), &|i| if inside[i] { grid.weight(i) } else { 0.0 }))
}

fn membership(model: &ManifoldModel, tube: &TubeSpec, grid: &QuadratureGrid) -> Vec<bool> {
    use rayon::prelude::*;
    let dim = grid.coord_dim();
    (0..grid.len())
        .into_par_iter()
        .map_init(
            || vec![0.0; dim],
            |p, i| {
                grid.point_into(i, p);
                tube.contains(model, p)
            },
        )
        .collect()
}
