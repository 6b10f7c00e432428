use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{project, CoefficientVector, SpectralWindow};
use crate::manifolds::{
    enumerate_window, eval_label, harmonics, EigenIndex, GridLayout, Label, ManifoldKind, ManifoldModel,
    QuadratureGrid,
};
use crate::numerics::{format_sig17, golden_section_max, pairwise_sum_by};
use crate::quasimodes::QuasimodeEvaluator;
use crate::{Error, Result};

const REFINE_ITERS: usize = 48;

/// `‖ψ‖_q` by grid quadrature; `q = f64::INFINITY` gives the grid maximum
/// followed by one golden-section pass per coordinate around the argmax.
pub fn lq_norm(evaluator: &QuasimodeEvaluator, q: f64, grid: &QuadratureGrid) -> Result<f64> {
    if !(q > 1.0) {
        return Err(Error::Domain(format!("q must lie in (1, ∞], got {q}")));
    }
    let moduli = evaluator.grid_moduli(grid)?;
    let (argmax, max) = moduli
        .iter()
        .enumerate()
        .fold((0usize, 0.0f64), |best, (i, &m)| if m > best.1 { (i, m) } else { best });
    if q.is_infinite() {
        return refine_max(evaluator, grid, argmax, max);
    }
    if max == 0.0 {
        return Ok(0.0);
    }
    let sum = pairwise_sum_by(moduli.len(), &|i| grid.weight(i) * (moduli[i] / max).powf(q));
    Ok(max * sum.powf(1.0 / q))
}

fn refine_max(evaluator: &QuasimodeEvaluator, grid: &QuadratureGrid, argmax: usize, grid_max: f64) -> Result<f64> {
    if grid_max == 0.0 {
        return Ok(0.0);
    }
    let mut best = grid_max;
    match grid.layout() {
        GridLayout::Flat { per_axis, dim } => {
            let h = 1.0 / *per_axis as f64;
            let mut s = grid.point(argmax);
            for d in 0..*dim {
                let centre = s[d];
                let probe = |x: f64| {
                    let mut p = s.clone();
                    p[d] = x;
                    evaluator.eval(&p).map(|z| z.norm()).unwrap_or(0.0)
                };
                let (x, v) = golden_section_max(probe, centre - h, centre + h, REFINE_ITERS);
                if v > best {
                    best = v;
                    s[d] = x;
                }
            }
        }
        GridLayout::Sphere { .. } => {
            let (mut theta, phi) = harmonics::angles(&grid.point(argmax));
            let h = grid.spacing(evaluator.model());
            let at = |t: f64, p: f64| vec![t.sin() * p.cos(), t.sin() * p.sin(), t.cos()];
            let (t, v) = golden_section_max(
                |t| evaluator.eval(&at(t, phi)).map(|z| z.norm()).unwrap_or(0.0),
                (theta - h).max(0.0),
                (theta + h).min(PI),
                REFINE_ITERS,
            );
            if v > best {
                best = v;
                theta = t;
            }
            let (_, v) = golden_section_max(
                |p| evaluator.eval(&at(theta, p)).map(|z| z.norm()).unwrap_or(0.0),
                phi - h,
                phi + h,
                REFINE_ITERS,
            );
            best = best.max(v);
        }
    }
    Ok(best)
}

/// `Σ_j |e_j(x)|²` over the given indices.
pub fn diagonal_kernel(model: &ManifoldModel, indices: &[EigenIndex], point: &[f64]) -> Result<f64> {
    let mut acc = 0.0;
    for e in indices {
        acc += eval_label(model, &e.label, point)?.norm_sqr();
    }
    Ok(acc)
}

/// Value of a window's operator norm together with an empty-window flag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowNorm {
    pub value: f64,
    pub empty: bool,
    /// Number of eigenfunctions in the window.
    pub count: usize,
}

/// Exact `‖χ_window‖_{2→∞} = sup_x (Σ_{λ_j ∈ window} |e_j(x)|²)^{1/2}`.
///
/// Tori and spheres are homogeneous, so the diagonal kernel is constant and
/// is evaluated at one point (summed degree by degree on spheres). On the
/// Klein bottle the kernel depends on `y₂` only and is maximized over a grid
/// in `y₂` refined by golden-section search.
pub fn opnorm_2_to_inf(model: &ManifoldModel, window: &SpectralWindow) -> Result<WindowNorm> {
    let indices = enumerate_window(model, window)?;
    if indices.is_empty() {
        return Ok(WindowNorm {
            value: 0.0,
            empty: true,
            count: 0,
        });
    }
    let kernel = match model.kind() {
        ManifoldKind::Torus => indices.len() as f64 / model.volume(),
        ManifoldKind::Sphere => {
            if model.dim() == 2 {
                diagonal_kernel(model, &indices, &[0.0, 0.0, 1.0])?
            } else {
                indices.len() as f64 / model.volume()
            }
        }
        ManifoldKind::KleinBottle => {
            let max_m2 = indices
                .iter()
                .map(|e| match e.label {
                    Label::Klein { m2, .. } => m2,
                    _ => 0,
                })
                .max()
                .unwrap_or(0);
            let samples = 16 * (max_m2 as usize + 1);
            let k = |y2: f64| diagonal_kernel(model, &indices, &[0.0, y2]).unwrap_or(0.0);
            let h = 0.5 / samples as f64;
            let (arg, val) = (0..=samples)
                .map(|j| {
                    let y = j as f64 * h;
                    (y, k(y))
                })
                .fold((0.0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
            let (_, refined) = golden_section_max(k, (arg - h).max(0.0), (arg + h).min(0.5), REFINE_ITERS);
            val.max(refined)
        }
    };
    Ok(WindowNorm {
        value: kernel.sqrt(),
        empty: false,
        count: indices.len(),
    })
}

/// Coefficients `conj(e_j(x))` over the window: the extremal function for the
/// `2 → ∞` norm at `x`.
pub fn coherent_candidate(model: &Arc<ManifoldModel>, window: &SpectralWindow, point: &[f64]) -> Result<CoefficientVector> {
    let mut v = CoefficientVector::new(model.clone());
    for e in enumerate_window(model, window)? {
        let value = eval_label(model, &e.label, point)?.conj();
        v.insert_indexed(&e, value)?;
    }
    Ok(v)
}

/// `max_Φ ‖χ Φ‖_q / ‖χ Φ‖_2` over candidates, a lower bound for `‖χ‖_{2→q}`.
///
/// Candidates whose projection vanishes (relative `1e-14`) are skipped; if
/// all vanish the result is [`Error::EmptyWindow`].
pub fn opnorm_lower_bound(
    model: &ManifoldModel,
    window: &SpectralWindow,
    q: f64,
    candidates: &[CoefficientVector],
    grid: &QuadratureGrid,
) -> Result<f64> {
    if candidates.is_empty() {
        return Err(Error::Contract("no candidates supplied".into()));
    }
    let mut best: Option<f64> = None;
    for cand in candidates {
        let full = cand.l2_norm();
        if full == 0.0 {
            return Err(Error::Contract("candidate is the zero vector".into()));
        }
        let p = project(model, window, cand)?;
        let l2 = p.l2_norm();
        if l2 <= 1e-14 * full {
            continue;
        }
        let ev = QuasimodeEvaluator::from_coefficients(p, window.center());
        let ratio = lq_norm(&ev, q, grid)? / l2;
        best = Some(best.map_or(ratio, |b: f64| b.max(ratio)));
    }
    best.ok_or(Error::EmptyWindow)
}

/// One CSV row of a norm measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct NormRecord {
    pub manifold: String,
    pub lambda: f64,
    pub delta_policy: String,
    pub q: f64,
    pub norm: f64,
    pub grid_resolution: usize,
    pub runtime_ms: f64,
}

impl NormRecord {
    pub const HEADER: &'static str = "manifold,lambda,delta_policy,q,norm,grid_resolution,runtime_ms";

    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.manifold,
            format_sig17(self.lambda),
            self.delta_policy,
            format_sig17(self.q),
            format_sig17(self.norm),
            self.grid_resolution,
            format_sig17(self.runtime_ms)
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifolds::quadrature_grid;
    use num_complex::Complex64;

    fn torus() -> Arc<ManifoldModel> {
        Arc::new(ManifoldModel::unit_torus(2))
    }

    #[test]
    fn constant_and_plane_wave_norms() {
        let t = torus();
        let g = quadrature_grid(&t, 16).unwrap();
        let one = CoefficientVector::basis(t.clone(), Label::Lattice(vec![0, 0])).unwrap();
        let wave = CoefficientVector::basis(t.clone(), Label::Lattice(vec![1, 0])).unwrap();
        for q in [1.5, 2.0, 4.0, 6.0, f64::INFINITY] {
            let ev = QuasimodeEvaluator::from_coefficients(one.clone(), 0.0);
            assert!((lq_norm(&ev, q, &g).unwrap() - 1.0).abs() < 1e-12);
        }
        let ev = QuasimodeEvaluator::from_coefficients(wave, 2.0 * PI);
        assert!((lq_norm(&ev, 4.0, &g).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cosine_norms() {
        // √2 cos(2πx₁) = (e₁ + e₋₁)/√2: sup √2, L² norm 1
        let t = torus();
        let mut v = CoefficientVector::new(t.clone());
        let h = std::f64::consts::FRAC_1_SQRT_2;
        v.add(Label::Lattice(vec![1, 0]), Complex64::new(h, 0.0)).unwrap();
        v.add(Label::Lattice(vec![-1, 0]), Complex64::new(h, 0.0)).unwrap();
        let g = quadrature_grid(&t, 16).unwrap();
        let ev = QuasimodeEvaluator::from_coefficients(v, 2.0 * PI);
        assert!((lq_norm(&ev, f64::INFINITY, &g).unwrap() - 2f64.sqrt()).abs() < 1e-12);
        assert!((lq_norm(&ev, 2.0, &g).unwrap() - 1.0).abs() < 1e-12);
        // ∫ (√2 cos)^4 = 4·3/8 = 3/2
        assert!((lq_norm(&ev, 4.0, &g).unwrap() - 1.5f64.powf(0.25)).abs() < 1e-12);
    }

    #[test]
    fn aliasing_guard() {
        let t = torus();
        let v = CoefficientVector::basis(t.clone(), Label::Lattice(vec![3, 5])).unwrap();
        let mut w = v.clone();
        w.add(Label::Lattice(vec![0, 0]), Complex64::new(1.0, 0.0)).unwrap();
        let ev = QuasimodeEvaluator::from_coefficients(w, 1.0);
        let g = quadrature_grid(&t, 8).unwrap();
        match lq_norm(&ev, 2.0, &g) {
            Err(Error::Resolution { required, actual }) => {
                assert_eq!(actual, 8);
                assert!(required > 8);
            }
            other => panic!("expected resolution error, got {other:?}"),
        }
    }

    #[test]
    fn sup_refinement_finds_off_grid_peak() {
        // |cos(2π(x - 0.06))| peaks between grid nodes
        let t = torus();
        let mut v = CoefficientVector::new(t.clone());
        let shift = Complex64::from_polar(0.5, -2.0 * PI * 0.06);
        v.add(Label::Lattice(vec![1, 0]), shift).unwrap();
        v.add(Label::Lattice(vec![-1, 0]), shift.conj()).unwrap();
        let ev = QuasimodeEvaluator::from_coefficients(v, 2.0 * PI);
        let g = quadrature_grid(&t, 8).unwrap();
        let grid_only = ev.grid_moduli(&g).unwrap().into_iter().fold(0.0, f64::max);
        let refined = lq_norm(&ev, f64::INFINITY, &g).unwrap();
        assert!(grid_only < 0.99);
        assert!((refined - 1.0).abs() < 1e-9);
    }

    #[test]
    fn torus_opnorm_counts_modes() {
        let t = torus();
        let w = SpectralWindow::interval(0.0, 2.0 * PI * 2f64.sqrt()).unwrap();
        let r = opnorm_2_to_inf(&t, &w).unwrap();
        assert_eq!(r.count, 9);
        assert!((r.value - 3.0).abs() < 1e-12);
        let empty = opnorm_2_to_inf(&t, &SpectralWindow::interval(1.0, 2.0).unwrap()).unwrap();
        assert!(empty.empty && empty.value == 0.0);
    }

    #[test]
    fn sphere_opnorm_addition_identity() {
        let s = Arc::new(ManifoldModel::sphere(2).unwrap());
        for l in [1u32, 5, 30] {
            let f = ((l * (l + 1)) as f64).sqrt();
            let w = SpectralWindow::interval(f - 0.01, f + 0.01).unwrap();
            let r = opnorm_2_to_inf(&s, &w).unwrap();
            let expect = ((2.0 * l as f64 + 1.0) / (4.0 * PI)).sqrt();
            assert!((r.value - expect).abs() < 1e-10 * expect);
        }
    }

    #[test]
    fn klein_opnorm_matches_grid_scan() {
        let k = Arc::new(ManifoldModel::klein_bottle());
        let w = SpectralWindow::interval(0.0, 25.0).unwrap();
        let r = opnorm_2_to_inf(&k, &w).unwrap();
        let idx = enumerate_window(&k, &w).unwrap();
        let g = quadrature_grid(&k, 64).unwrap();
        let scan = (0..g.len())
            .map(|i| diagonal_kernel(&k, &idx, &g.point(i)).unwrap())
            .fold(0.0, f64::max)
            .sqrt();
        assert!(r.value >= scan - 1e-12);
        assert!(r.value <= scan * 1.01);
    }

    #[test]
    fn lower_bound_of_single_eigenfunction_and_empty_window() {
        let t = torus();
        let g = quadrature_grid(&t, 16).unwrap();
        let e = CoefficientVector::basis(t.clone(), Label::Lattice(vec![1, 1])).unwrap();
        let f = 2.0 * PI * 2f64.sqrt();
        let w = SpectralWindow::interval(f - 0.1, f + 0.1).unwrap();
        assert!((opnorm_lower_bound(&t, &w, 6.0, &[e.clone()], &g).unwrap() - 1.0).abs() < 1e-12);
        let miss = SpectralWindow::interval(1.0, 2.0).unwrap();
        assert_eq!(opnorm_lower_bound(&t, &miss, 6.0, &[e], &g), Err(Error::EmptyWindow));
    }

    #[test]
    fn csv_row() {
        let r = NormRecord {
            manifold: "torus2".into(),
            lambda: 0.1,
            delta_policy: "log".into(),
            q: 6.0,
            norm: 1.0 / 3.0,
            grid_resolution: 64,
            runtime_ms: 2.5,
        };
        assert_eq!(
            r.to_csv(),
            "torus2,1.0000000000000001e-1,log,6.0000000000000000e0,3.3333333333333331e-1,64,2.5000000000000000e0"
        );
    }
}
