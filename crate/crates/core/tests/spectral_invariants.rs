use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use proptest::prelude::*;
use sclab_core::manifolds::{enumerate_interval, quadrature_grid, EigenIndex, ManifoldModel};
use sclab_core::spectral::{
    coherent_candidate, lq_norm, opnorm_2_to_inf, opnorm_lower_bound, project, smooth_project, CoefficientVector,
    SpectralWindow, WidthPolicy, WindowProfile,
};
use sclab_core::QuasimodeEvaluator;

fn random_vector(model: &Arc<ManifoldModel>, upper: f64, seed: &[f64]) -> CoefficientVector {
    let mut v = CoefficientVector::new(model.clone());
    for (i, e) in enumerate_interval(model, 0.0, upper).unwrap().iter().enumerate() {
        let a = seed[i % seed.len()];
        let b = seed[(i * 7 + 3) % seed.len()];
        v.insert_indexed(e, Complex64::new(a * (i as f64 + 1.3).sin(), b * (i as f64 * 0.7).cos()))
            .unwrap();
    }
    v
}

fn models() -> Vec<Arc<ManifoldModel>> {
    vec![
        Arc::new(ManifoldModel::unit_torus(2)),
        Arc::new(ManifoldModel::torus(vec![vec![1.3, 0.0], vec![0.4, 0.9]]).unwrap()),
        Arc::new(ManifoldModel::klein_bottle()),
        Arc::new(ManifoldModel::sphere(2).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn projector_is_idempotent_and_self_adjoint(
        seed in prop::collection::vec(-1.0f64..1.0, 5..12),
        lo in 3.0f64..20.0,
        width in 0.1f64..6.0,
    ) {
        for model in models() {
            let f = random_vector(&model, 30.0, &seed);
            let g = random_vector(&model, 30.0, &seed[1..]);
            let w = SpectralWindow::interval(lo, lo + width).unwrap();
            let pf = project(&model, &w, &f).unwrap();
            prop_assert_eq!(&project(&model, &w, &pf).unwrap(), &pf);
            let lhs = pf.inner(&g);
            let rhs = f.inner(&project(&model, &w, &g).unwrap());
            prop_assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + lhs.norm()));
        }
    }

    #[test]
    fn smoothing_commutes_with_projection(
        seed in prop::collection::vec(-1.0f64..1.0, 5..12),
        lo in 3.0f64..20.0,
        lambda in 5.0f64..25.0,
        t in 1.0f64..6.0,
    ) {
        let profile = WindowProfile::default();
        for model in models() {
            let f = random_vector(&model, 30.0, &seed);
            let w = SpectralWindow::interval(lo, lo + 2.0).unwrap();
            let a = smooth_project(&model, &profile, t, lambda, &project(&model, &w, &f).unwrap()).unwrap();
            let b = project(&model, &w, &smooth_project(&model, &profile, t, lambda, &f).unwrap()).unwrap();
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn lq_norms_increase_with_q(seed in prop::collection::vec(-1.0f64..1.0, 4..10)) {
        for model in [Arc::new(ManifoldModel::unit_torus(2)), Arc::new(ManifoldModel::klein_bottle())] {
            let f = random_vector(&model, 25.0, &seed);
            prop_assume!(f.l2_norm() > 1e-3);
            let ev = QuasimodeEvaluator::from_coefficients(f, 20.0);
            let grid = quadrature_grid(&model, ev.required_resolution().unwrap()).unwrap();
            let mut prev = 0.0;
            for q in [2.0, 3.0, 4.0, 6.0, f64::INFINITY] {
                let v = lq_norm(&ev, q, &grid).unwrap();
                prop_assert!(v >= prev * (1.0 - 1e-12), "q = {}: {} < {}", q, v, prev);
                prev = v;
            }
        }
    }

    #[test]
    fn torus_opnorm_counts_modes(lo in 1.0f64..200.0, width in 0.05f64..10.0) {
        let model = ManifoldModel::unit_torus(2);
        let w = SpectralWindow::interval(lo, lo + width).unwrap();
        let count = enumerate_interval(&model, lo, lo + width).unwrap().len();
        let norm = opnorm_2_to_inf(&model, &w).unwrap();
        prop_assert_eq!(norm.empty, count == 0);
        prop_assert!((norm.value - (count as f64).sqrt()).abs() <= 1e-10);
    }
}

fn single_candidates(model: &Arc<ManifoldModel>, w: &SpectralWindow) -> Vec<CoefficientVector> {
    enumerate_interval(model, w.lower(), w.upper())
        .unwrap()
        .iter()
        .map(|e: &EigenIndex| {
            let mut v = CoefficientVector::new(model.clone());
            v.insert_indexed(e, Complex64::new(1.0, 0.0)).unwrap();
            v
        })
        .collect()
}

#[test]
fn lower_bound_never_exceeds_exact_norm_and_coherent_candidate_attains_it() {
    let cases: Vec<(Arc<ManifoldModel>, SpectralWindow, Vec<f64>)> = vec![
        (
            Arc::new(ManifoldModel::unit_torus(2)),
            SpectralWindow::new(40.0, WidthPolicy::Unit).unwrap(),
            vec![0.0, 0.0],
        ),
        (
            Arc::new(ManifoldModel::sphere(2).unwrap()),
            SpectralWindow::interval(12.0, 13.0).unwrap(),
            vec![0.0, 0.0, 1.0],
        ),
        (
            Arc::new(ManifoldModel::klein_bottle()),
            SpectralWindow::interval(30.0, 34.0).unwrap(),
            vec![0.0, 0.0],
        ),
    ];
    for (model, w, point) in cases {
        let exact = opnorm_2_to_inf(&model, &w).unwrap().value;
        let singles = single_candidates(&model, &w);
        let probe = QuasimodeEvaluator::from_coefficients(singles[0].clone(), w.center());
        let grid = quadrature_grid(&model, probe.required_resolution().unwrap().max(64)).unwrap();
        let single = opnorm_lower_bound(&model, &w, f64::INFINITY, &singles, &grid).unwrap();
        assert!(single <= exact * (1.0 + 1e-9), "{model}: {single} > {exact}");

        // the kernel maximizer: on the Klein bottle scan y₂
        let point = if model.kind() == sclab_core::manifolds::ManifoldKind::KleinBottle {
            let indices = enumerate_interval(&model, w.lower(), w.upper()).unwrap();
            let best = (0..=2000)
                .map(|j| j as f64 / 4000.0)
                .map(|y| (y, sclab_core::spectral::diagonal_kernel(&model, &indices, &[0.0, y]).unwrap()))
                .fold((0.0, 0.0), |a, b| if b.1 > a.1 { b } else { a });
            vec![0.0, best.0]
        } else {
            point
        };
        let coherent = coherent_candidate(&model, &w, &point).unwrap();
        let bound = opnorm_lower_bound(&model, &w, f64::INFINITY, &[coherent], &grid).unwrap();
        assert!((bound - exact).abs() <= 1e-6 * exact, "{model}: {bound} vs {exact}");
    }
}

#[test]
fn unit_window_is_covered_by_log_windows() {
    let model = ManifoldModel::unit_torus(2);
    for lambda in [20.0f64, 57.3, 150.0, 400.0, 1000.0, 2500.0] {
        let whole = opnorm_2_to_inf(&model, &SpectralWindow::interval(lambda, lambda + 1.0).unwrap())
            .unwrap()
            .value;
        let pieces = lambda.ln().ceil() as usize + 1;
        let h = 1.0 / pieces as f64;
        let best = (0..pieces)
            .map(|j| {
                let lo = lambda + j as f64 * h;
                opnorm_2_to_inf(&model, &SpectralWindow::interval(lo, lo + h).unwrap())
                    .unwrap()
                    .value
            })
            .fold(0.0, f64::max);
        assert!(whole <= (pieces as f64).sqrt() * best + 1e-12, "λ = {lambda}");
    }
}

#[test]
fn sphere_single_degree_windows() {
    let model = ManifoldModel::sphere(2).unwrap();
    for l in [1u32, 4, 10, 33, 100] {
        let f = ((l * (l + 1)) as f64).sqrt();
        let w = SpectralWindow::interval(f - 0.25, f + 0.25).unwrap();
        let v = opnorm_2_to_inf(&model, &w).unwrap().value;
        let expect = ((2 * l + 1) as f64 / (4.0 * PI)).sqrt();
        assert!((v - expect).abs() <= 1e-8 * expect, "l = {l}");
    }
}
