use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use super::{eta_tail, KnappParams};
use crate::numerics::{gauss_legendre, pairwise_sum};
use crate::profiles::{a_profile, beta_profile};
use crate::{Error, Result};

const PANEL_ORDER: usize = 20;
const WAVELENGTHS_PER_PANEL: f64 = 3.0;
const REFINEMENT_RTOL: f64 = 1e-6;

/// Result of a kernel evaluation with its refinement diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelQuadrature {
    pub value: Complex64,
    /// `|K_fine − K_coarse|`.
    pub refinement_error: f64,
    /// `∫ |integrand|`, the scale against which the error is judged.
    pub absolute_mass: f64,
    pub nodes: usize,
}

fn panel_rule(lo: f64, hi: f64, panels: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(PANEL_ORDER);
    let h = (hi - lo) / panels as f64;
    let mut nodes = Vec::with_capacity(panels * PANEL_ORDER);
    let mut weights = Vec::with_capacity(panels * PANEL_ORDER);
    for p in 0..panels {
        let a = lo + p as f64 * h;
        for (xi, wi) in x.iter().zip(&w) {
            nodes.push(a + 0.5 * h * (xi + 1.0));
            weights.push(0.5 * h * wi);
        }
    }
    (nodes, weights)
}

fn integrate(z: &[f64], lambda: f64, delta: f64, params: &KnappParams, refine: usize) -> (Complex64, f64, usize) {
    let t = lambda.ln();
    let zn = (z[0] * z[0] + z[1] * z[1]).sqrt();
    let reach = eta_tail() / (params.c0 * t);
    let r_lo = (lambda - reach).max(lambda / 4.0);
    let r_hi = (lambda + reach).min(4.0 * lambda);
    let eps = (delta / lambda).sqrt();
    let theta = 2.0 * (eps / 2.0).min(1.0).asin();

    let radial_wavelength = 2.0 * PI / (params.c0 * t).max(zn).max(1.0);
    let radial_panels = ((r_hi - r_lo) / (WAVELENGTHS_PER_PANEL * radial_wavelength)).ceil().max(8.0) as usize * refine;
    let angular_wavelength = 2.0 * PI / (r_hi * zn).max(1.0);
    let angular_panels = (2.0 * theta / (WAVELENGTHS_PER_PANEL * angular_wavelength)).ceil().max(8.0) as usize * refine;

    let (r, wr) = panel_rule(r_lo, r_hi, radial_panels);
    let radial: Vec<f64> = r
        .iter()
        .zip(&wr)
        .map(|(&ri, &wi)| wi * ri * beta_profile(ri / lambda) * params.eta(t * (lambda - ri)))
        .collect();
    let (phi, wphi) = panel_rule(-theta, theta, angular_panels);
    let scale = (lambda / delta).sqrt();

    let rows: Vec<(f64, f64, f64)> = phi
        .par_iter()
        .zip(wphi.par_iter())
        .map(|(&p, &wp)| {
            let a = a_profile(scale * 2.0 * (p.abs() / 2.0).sin());
            if a == 0.0 {
                return (0.0, 0.0, 0.0);
            }
            let s = z[0] * p.cos() + z[1] * p.sin();
            let mut re = Vec::with_capacity(r.len());
            let mut im = Vec::with_capacity(r.len());
            let mut ab = Vec::with_capacity(r.len());
            for (ri, gi) in r.iter().zip(&radial) {
                let (sn, cs) = (ri * s).sin_cos();
                re.push(gi * cs);
                im.push(gi * sn);
                ab.push(gi.abs());
            }
            let f = wp * a;
            (f * pairwise_sum(&re), f * pairwise_sum(&im), f * pairwise_sum(&ab))
        })
        .collect();
    let re: Vec<f64> = rows.iter().map(|x| x.0).collect();
    let im: Vec<f64> = rows.iter().map(|x| x.1).collect();
    let ab: Vec<f64> = rows.iter().map(|x| x.2).collect();
    (
        Complex64::new(pairwise_sum(&re), pairwise_sum(&im)),
        pairwise_sum(&ab),
        r.len() * phi.len(),
    )
}

/// `K_λ(z) = ∫_{ℝ²} e^{iz·ξ} a(λ^{1/2}δ^{-1/2}|e₁ − ξ̂|) β(|ξ|/λ) η(T(λ − |ξ|)) dξ`,
/// `T = log λ`, by a polar Gauss–Legendre tensor rule sized to the plate.
///
/// The rule is evaluated twice (second pass with doubled panel counts); a
/// disagreement above `1e-6` of `∫|integrand|` is an accuracy error.
pub fn knapp_kernel_rn(z: &[f64], lambda: f64, delta: f64, params: &KnappParams) -> Result<KernelQuadrature> {
    params.validate()?;
    if z.len() != 2 {
        return Err(Error::Capability(format!(
            "the Euclidean kernel is implemented for n = 2, got n = {}",
            z.len()
        )));
    }
    if !(lambda > std::f64::consts::E) {
        return Err(Error::Domain(format!("kernel needs λ > e, got {lambda}")));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::Domain(format!("kernel needs δ ∈ (0, 1], got {delta}")));
    }
    let (coarse, _, _) = integrate(z, lambda, delta, params, 1);
    let (fine, mass, nodes) = integrate(z, lambda, delta, params, 2);
    let err = (fine - coarse).norm();
    if err > REFINEMENT_RTOL * mass {
        return Err(Error::Accuracy(format!(
            "kernel quadrature at z = {z:?}, λ = {lambda}: refinement changed the value by {err:.3e} (scale {mass:.3e})"
        )));
    }
    Ok(KernelQuadrature {
        value: fine,
        refinement_error: err,
        absolute_mass: mass,
        nodes,
    })
}
