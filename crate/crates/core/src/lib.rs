//! Numerical laboratory for spectral clusters on model compact manifolds.
//!
//! The crate enumerates exact Laplace eigenbases on flat tori, the Klein
//! bottle and round spheres, builds explicit quasimodes (Knapp plates about
//! periodic geodesics, Gaussian beams, zonal harmonics), measures their
//! `L^q` norms and fits the resulting growth laws against the three
//! curvature branches `λ^{μ(q)}`, `λ^{μ(q)}(log λ)^{-μ(q)}` and
//! `λ^{μ(q)}(log λ)^{-1/2}`.
//!
//! Frequencies are always eigenvalues of `P = sqrt(-Δ_g)`.

pub mod error;
pub mod growth;
pub mod manifolds;
pub mod numerics;
pub mod profiles;
pub mod quasimodes;
pub mod spectral;

pub use error::{Error, Result};
pub use growth::{
    classify, critical_exponent, fit_free, fit_log_exponent, mu, theoretical_log_exponent,
    CurvatureSign, CurvatureVerdict, FitMode, GrowthFit, Verdict,
};
pub use manifolds::{
    enumerate_window, eval_eigenfunction, periodic_geodesic, quadrature_grid, EigenIndex,
    GeodesicSpec, Label, ManifoldDescriptor, ManifoldModel, QuadratureGrid,
};
pub use quasimodes::{
    deck_invariance_check, defect, gaussian_beam, knapp_flat, knapp_kernel_rn, l1_lower_ratio,
    quasimode_budget, tube_mass, zonal, KnappParams, QuasimodeEvaluator, TubeSpec,
};
pub use spectral::{
    lq_norm, opnorm_2_to_inf, opnorm_lower_bound, project, smooth_project, window_width,
    CoefficientVector, SpectralWindow, WidthPolicy, WindowProfile,
};
