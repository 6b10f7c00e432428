//! Fast Fourier synthesis of flat coefficient vectors on uniform grids.
//!
//! A coefficient vector is first expanded into plane waves
//! `e^{2πi θ·s}` (on the Klein bottle, waves of the double cover with
//! `θ = (m₁/2, m₂)`). The common carrier `e^{2πi c·s}` at the centre of the
//! wave support is factored out; this leaves `|ψ|` unchanged and lets a
//! narrow-band mode at high frequency be synthesized on a grid sized by its
//! bandwidth, not its frequency.

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::CoefficientVector;
use crate::manifolds::{Label, ManifoldKind, ManifoldModel};
use crate::{Error, Result};

/// Plane-wave content of a flat coefficient vector.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveExpansion {
    /// Integer wave labels: `m` on tori, double-cover `(m₁, m₂)` on the Klein bottle.
    pub waves: Vec<(Vec<i64>, Complex64)>,
    /// Integer carrier removed before synthesis.
    pub centre: Vec<i64>,
    /// Per-axis FFT period multiplier (2 on the Klein bottle's first axis).
    pub period: Vec<usize>,
}

impl WaveExpansion {
    pub fn new(coeffs: &CoefficientVector) -> Result<Self> {
        let model = coeffs.model();
        if !model.is_flat() {
            return Err(Error::Capability("plane-wave synthesis needs a flat model".into()));
        }
        let norm = model.volume().powf(-0.5);
        let mut waves = Vec::with_capacity(coeffs.len() * 2);
        for (label, c) in coeffs.iter() {
            match label {
                Label::Lattice(m) => waves.push((m.clone(), c.value * norm)),
                Label::Klein { m1, m2 } => {
                    for ([a, b], w) in ManifoldModel::klein_waves(*m1, *m2) {
                        waves.push((vec![a, b], c.value * w));
                    }
                }
                Label::Harmonic { .. } => unreachable!("flat model"),
            }
        }
        Ok(Self::with_centre(model, waves))
    }

    /// Waves given directly: integer labels in the model's wave convention.
    pub fn from_waves(model: &ManifoldModel, waves: Vec<(Vec<i64>, Complex64)>) -> Result<Self> {
        if !model.is_flat() {
            return Err(Error::Capability("plane-wave synthesis needs a flat model".into()));
        }
        let n = model.dim();
        if waves.iter().any(|(m, _)| m.len() != n) {
            return Err(Error::Contract("wave label dimension mismatch".into()));
        }
        Ok(Self::with_centre(model, waves))
    }

    fn with_centre(model: &ManifoldModel, waves: Vec<(Vec<i64>, Complex64)>) -> Self {
        let n = model.dim();
        let centre = (0..n)
            .map(|d| {
                let lo = waves.iter().map(|w| w.0[d]).min().unwrap_or(0);
                let hi = waves.iter().map(|w| w.0[d]).max().unwrap_or(0);
                lo + (hi - lo) / 2
            })
            .collect();
        let period = (0..n)
            .map(|d| if d == 0 && model.kind() == ManifoldKind::KleinBottle { 2 } else { 1 })
            .collect();
        Self {
            waves,
            centre,
            period,
        }
    }

    /// Largest demodulated phase frequency `|θ − θ_c|∞` in cycles per unit lattice length.
    pub fn bandwidth(&self) -> f64 {
        self.waves
            .iter()
            .flat_map(|(m, _)| {
                m.iter()
                    .zip(&self.centre)
                    .zip(&self.period)
                    .map(|((a, c), p)| (a - c).unsigned_abs() as f64 / *p as f64)
            })
            .fold(0.0, f64::max)
    }

    /// Smallest grid resolution satisfying the anti-aliasing rule `N ≥ 4·bandwidth`.
    pub fn required_resolution(&self) -> usize {
        ((4.0 * self.bandwidth()).ceil() as usize).max(crate::manifolds::quadrature::MIN_RESOLUTION)
    }

    /// Demodulated values `ψ(s) e^{-2πi θ_c·s}` at `s = j/N`, row-major with the
    /// last axis fastest (the [`crate::QuadratureGrid`] order).
    pub fn synthesize(&self, per_axis: usize) -> Vec<Complex64> {
        let n = self.centre.len();
        let lens: Vec<usize> = self.period.iter().map(|p| p * per_axis).collect();
        let total: usize = lens.iter().product();
        let mut data = vec![Complex64::new(0.0, 0.0); total];
        for (m, c) in &self.waves {
            let mut idx = 0usize;
            for d in 0..n {
                let len = lens[d] as i64;
                idx = idx * lens[d] + (m[d] - self.centre[d]).rem_euclid(len) as usize;
            }
            data[idx] += c;
        }
        let mut planner = FftPlanner::<f64>::new();
        let mut stride = 1usize;
        for d in (0..n).rev() {
            let len = lens[d];
            let fft = planner.plan_fft_inverse(len);
            if stride == 1 {
                for line in data.chunks_exact_mut(len) {
                    fft.process(line);
                }
            } else {
                let block = len * stride;
                let mut buf = vec![Complex64::new(0.0, 0.0); len];
                for chunk in data.chunks_exact_mut(block) {
                    for offset in 0..stride {
                        for (k, b) in buf.iter_mut().enumerate() {
                            *b = chunk[k * stride + offset];
                        }
                        fft.process(&mut buf);
                        for (k, b) in buf.iter().enumerate() {
                            chunk[k * stride + offset] = *b;
                        }
                    }
                }
            }
            stride *= len;
        }
        if self.period.iter().all(|p| *p == 1) {
            return data;
        }
        // keep the fundamental domain j_d < N
        let out_total = per_axis.pow(n as u32);
        let mut out = Vec::with_capacity(out_total);
        let mut jj = vec![0usize; n];
        for _ in 0..out_total {
            let mut idx = 0usize;
            for d in 0..n {
                idx = idx * lens[d] + jj[d];
            }
            out.push(data[idx]);
            for d in (0..n).rev() {
                jj[d] += 1;
                if jj[d] < per_axis {
                    break;
                }
                jj[d] = 0;
            }
        }
        out
    }

    /// Direct evaluation at a lattice-coordinate point (demodulation not applied).
    pub fn eval(&self, s: &[f64]) -> Complex64 {
        self.waves
            .iter()
            .map(|(m, c)| {
                let phase: f64 = m
                    .iter()
                    .zip(s)
                    .zip(&self.period)
                    .map(|((k, x), p)| *k as f64 * x / *p as f64)
                    .sum();
                c * Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * phase)
            })
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifolds::eval_label;
    use std::sync::Arc;

    fn check_against_direct(coeffs: &CoefficientVector, per_axis: usize) {
        let exp = WaveExpansion::new(coeffs).unwrap();
        let vals = exp.synthesize(per_axis);
        let model = coeffs.model();
        let n = model.dim();
        assert_eq!(vals.len(), per_axis.pow(n as u32));
        for i in (0..vals.len()).step_by(37) {
            let mut s = vec![0.0; n];
            let mut rest = i;
            for d in (0..n).rev() {
                s[d] = (rest % per_axis) as f64 / per_axis as f64;
                rest /= per_axis;
            }
            let direct: Complex64 = coeffs
                .iter()
                .map(|(l, c)| c.value * eval_label(model, l, &s).unwrap())
                .sum();
            assert!(
                (vals[i].norm() - direct.norm()).abs() < 1e-10,
                "point {s:?}: {} vs {}",
                vals[i].norm(),
                direct.norm()
            );
            assert!((exp.eval(&s) - direct).norm() < 1e-10);
        }
    }

    #[test]
    fn torus_synthesis_matches_direct_sum() {
        let model = Arc::new(ManifoldModel::torus(vec![vec![1.0, 0.0], vec![0.3, 1.5]]).unwrap());
        let mut v = CoefficientVector::new(model);
        for (i, m) in [[100, 3], [101, -2], [99, 0], [100, 0]].iter().enumerate() {
            v.add(Label::Lattice(m.to_vec()), Complex64::new(1.0 + i as f64, -0.5)).unwrap();
        }
        check_against_direct(&v, 16);
    }

    #[test]
    fn klein_synthesis_matches_direct_sum() {
        let model = Arc::new(ManifoldModel::klein_bottle());
        let mut v = CoefficientVector::new(model);
        for (i, (m1, m2)) in [(40, 1), (41, 2), (42, 0), (39, 3)].iter().enumerate() {
            v.add(Label::Klein { m1: *m1, m2: *m2 }, Complex64::new(0.5, i as f64)).unwrap();
        }
        check_against_direct(&v, 16);
    }

    #[test]
    fn three_torus_synthesis() {
        let model = Arc::new(ManifoldModel::unit_torus(3));
        let mut v = CoefficientVector::new(model);
        v.add(Label::Lattice(vec![5, -1, 2]), Complex64::new(1.0, 0.0)).unwrap();
        v.add(Label::Lattice(vec![4, 0, 2]), Complex64::new(0.0, 1.0)).unwrap();
        check_against_direct(&v, 8);
    }

    #[test]
    fn demodulated_bandwidth() {
        let model = Arc::new(ManifoldModel::klein_bottle());
        let mut v = CoefficientVector::new(model);
        v.add(Label::Klein { m1: 1000, m2: 3 }, Complex64::new(1.0, 0.0)).unwrap();
        let exp = WaveExpansion::new(&v).unwrap();
        // waves (1000, ±3): centre (1000, 0), bandwidth 3
        assert_eq!(exp.centre, vec![1000, 0]);
        assert_eq!(exp.bandwidth(), 3.0);
        assert_eq!(exp.required_resolution(), 12);
    }
}
