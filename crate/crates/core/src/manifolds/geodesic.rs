use serde::{Deserialize, Serialize};

use super::{ManifoldKind, ManifoldModel};
use crate::{Error, Result};

/// A closed geodesic of a flat model together with the generator of its
/// stabilizer, `α(y) = M (y − x₀) + x₀ + ℓ₀ u` where `M = R m₀ Rᵀ` and `R`
/// is an orthonormal frame whose first column is the direction `u`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeodesicSpec {
    /// Base point `x₀` in physical coordinates.
    pub base_point: Vec<f64>,
    /// Unit direction `u`.
    pub direction: Vec<f64>,
    /// Length `ℓ₀` of the closed geodesic.
    pub length: f64,
    /// `m₀` written in the frame `R` (block form `diag(1, m̄)`).
    pub orthogonal: Vec<Vec<f64>>,
    /// Columns of `R`, first column equal to `direction`.
    pub frame: Vec<Vec<f64>>,
}

impl GeodesicSpec {
    pub fn dim(&self) -> usize {
        self.direction.len()
    }

    /// Point `x₀ + t u` on the lifted geodesic.
    pub fn point_at(&self, t: f64) -> Vec<f64> {
        self.base_point
            .iter()
            .zip(&self.direction)
            .map(|(x, u)| x + t * u)
            .collect()
    }

    /// Translation part of the stabilizer generator.
    pub fn translation(&self) -> Vec<f64> {
        self.direction.iter().map(|u| self.length * u).collect()
    }

    /// `M = R m₀ Rᵀ` in physical coordinates.
    pub fn linear_part(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        let mut out = vec![vec![0.0; n]; n];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                let mut acc = 0.0;
                for a in 0..n {
                    for b in 0..n {
                        acc += self.frame[i][a] * self.orthogonal[a][b] * self.frame[j][b];
                    }
                }
                *cell = acc;
            }
        }
        out
    }

    /// Applies the stabilizer generator to a physical point.
    pub fn stabilizer(&self, y: &[f64]) -> Vec<f64> {
        let m = self.linear_part();
        let n = self.dim();
        (0..n)
            .map(|i| {
                let rotated: f64 = (0..n)
                    .map(|j| m[i][j] * (y[j] - self.base_point[j]))
                    .sum();
                rotated + self.base_point[i] + self.length * self.direction[i]
            })
            .collect()
    }
}

fn complete_frame(u: &[f64]) -> Vec<Vec<f64>> {
    let n = u.len();
    let mut cols: Vec<Vec<f64>> = vec![u.to_vec()];
    for e in 0..n {
        if cols.len() == n {
            break;
        }
        let mut v = vec![0.0; n];
        v[e] = 1.0;
        for c in &cols {
            let dot: f64 = v.iter().zip(c).map(|(a, b)| a * b).sum();
            for (vi, ci) in v.iter_mut().zip(c) {
                *vi -= dot * ci;
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            cols.push(v.into_iter().map(|x| x / norm).collect());
        }
    }
    if n == 2 {
        // keep the frame positively oriented in the plane
        cols[1] = vec![-u[1], u[0]];
    }
    // stored as frame[row][col]
    (0..n).map(|i| (0..n).map(|j| cols[j][i]).collect()).collect()
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

const MAX_DENOMINATOR: i64 = 64;

/// Closed geodesic through the origin in the given physical direction.
///
/// Torus: the direction must be parallel to a lattice vector (rational in
/// lattice coordinates with denominator ≤ 64); `ℓ₀` is the length of the
/// primitive lattice vector and `m₀ = I`. Klein bottle: `±e₁` is the glide
/// axis (`ℓ₀ = 1`, `m₀ = diag(1, −1)`), `±e₂` the fibre (`ℓ₀ = 1`, `m₀ = I`).
pub fn periodic_geodesic(model: &ManifoldModel, direction: &[f64]) -> Result<GeodesicSpec> {
    let n = model.dim();
    if !model.is_flat() {
        return Err(Error::Capability(
            "periodic geodesics are constructed on flat models only".into(),
        ));
    }
    if direction.len() != n {
        return Err(Error::Contract(format!(
            "direction has {} components, model dimension is {n}",
            direction.len()
        )));
    }
    let norm = direction.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(norm.is_finite() && norm > 0.0) {
        return Err(Error::Contract("direction must be a nonzero finite vector".into()));
    }
    let u: Vec<f64> = direction.iter().map(|x| x / norm).collect();
    let origin = vec![0.0; n];
    match model.kind() {
        ManifoldKind::KleinBottle => {
            let (length, orthogonal) = if (u[0].abs() - 1.0).abs() < 1e-12 {
                (1.0, vec![vec![1.0, 0.0], vec![0.0, -1.0]])
            } else if (u[1].abs() - 1.0).abs() < 1e-12 {
                (1.0, vec![vec![1.0, 0.0], vec![0.0, 1.0]])
            } else {
                return Err(Error::Contract(
                    "Klein bottle geodesics are supported along the glide axis e₁ or the fibre e₂"
                        .into(),
                ));
            };
            Ok(GeodesicSpec {
                base_point: origin,
                frame: complete_frame(&u),
                direction: u,
                length,
                orthogonal,
            })
        }
        ManifoldKind::Torus => {
            let p = model.to_lattice(&u);
            let scale = p.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let p: Vec<f64> = p.iter().map(|x| x / scale).collect();
            let mut found = None;
            for q in 1..=MAX_DENOMINATOR {
                let scaled: Vec<f64> = p.iter().map(|x| x * q as f64).collect();
                if scaled.iter().all(|x| (x - x.round()).abs() < 1e-9) {
                    let ints: Vec<i64> = scaled.iter().map(|x| x.round() as i64).collect();
                    let g = ints.iter().fold(0, |g, &x| gcd(g, x));
                    found = Some(ints.into_iter().map(|x| x / g).collect::<Vec<_>>());
                    break;
                }
            }
            let lattice_vec = found.ok_or_else(|| {
                Error::Contract(format!(
                    "direction {direction:?} is not parallel to a lattice vector (not closed)"
                ))
            })?;
            let phys = model.to_physical(&lattice_vec.iter().map(|&x| x as f64).collect::<Vec<_>>());
            let length = phys.iter().map(|x| x * x).sum::<f64>().sqrt();
            let orthogonal = (0..n)
                .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
                .collect();
            Ok(GeodesicSpec {
                base_point: origin,
                frame: complete_frame(&u),
                direction: u,
                length,
                orthogonal,
            })
        }
        ManifoldKind::Sphere => unreachable!(),
    }
}
