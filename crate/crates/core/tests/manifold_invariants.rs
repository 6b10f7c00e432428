use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use sclab_core::manifolds::{enumerate_interval, eval_label, quadrature_grid, EigenIndex, Label, ManifoldModel};

fn gram_defect(model: &ManifoldModel, indices: &[EigenIndex], resolution: usize) -> f64 {
    let grid = quadrature_grid(model, resolution).unwrap();
    let values: Vec<Vec<Complex64>> = indices
        .iter()
        .map(|e| {
            (0..grid.len())
                .map(|i| eval_label(model, &e.label, &grid.point(i)).unwrap())
                .collect()
        })
        .collect();
    let mut worst: f64 = 0.0;
    for a in 0..indices.len() {
        for b in a..indices.len() {
            let g: Complex64 = (0..grid.len())
                .map(|i| grid.weight(i) * values[a][i] * values[b][i].conj())
                .sum();
            let target = if a == b { 1.0 } else { 0.0 };
            worst = worst.max((g - target).norm());
        }
    }
    worst
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn torus_eigenfunctions_are_orthonormal(a in 0.7f64..1.5, b in -0.5f64..0.5, c in 0.7f64..1.5) {
        let model = ManifoldModel::torus(vec![vec![a, 0.0], vec![b, c]]).unwrap();
        let indices = enumerate_interval(&model, 0.0, 14.0).unwrap();
        prop_assert!(indices.len() > 5);
        prop_assert!(gram_defect(&model, &indices, 24) <= 1e-8);
    }

    #[test]
    fn unit_torus_count_matches_lattice_points(r in 1.0f64..300.0) {
        let model = ManifoldModel::unit_torus(2);
        let count = enumerate_interval(&model, 0.0, r).unwrap().len();
        let rho = r / (2.0 * PI);
        let m = rho.ceil() as i64;
        let mut brute = 0;
        for i in -m..=m {
            for j in -m..=m {
                if (((i * i + j * j) as f64).sqrt() * 2.0 * PI) <= r * (1.0 + 1e-12) {
                    brute += 1;
                }
            }
        }
        prop_assert_eq!(count, brute);
    }

    #[test]
    fn frequency_matches_laplacian(m1 in -6i64..6, m2 in -6i64..6, a in 0.8f64..1.3, b in -0.3f64..0.3) {
        let model = ManifoldModel::torus(vec![vec![a, 0.0], vec![b, 1.0]]).unwrap();
        let label = Label::Lattice(vec![m1, m2]);
        let freq = model.frequency(&label).unwrap();
        // −Δ by central differences in physical coordinates
        let x = [0.31, 0.57];
        let h = 1e-4;
        let f = |x: [f64; 2]| eval_label(&model, &label, &model.to_lattice(&x)).unwrap();
        let mut lap = -4.0 * f(x);
        for d in 0..2 {
            let mut p = x;
            p[d] += h;
            lap += f(p);
            p[d] -= 2.0 * h;
            lap += f(p);
        }
        lap /= h * h;
        let ratio = -lap / f(x);
        prop_assert!((ratio.re - freq * freq).abs() <= 1e-4 * (1.0 + freq * freq));
        prop_assert!(ratio.im.abs() <= 1e-4 * (1.0 + freq * freq));
    }
}

#[test]
fn klein_eigenfunctions_are_orthonormal() {
    let model = ManifoldModel::klein_bottle();
    let indices = enumerate_interval(&model, 0.0, 20.0).unwrap();
    assert!(indices.len() > 10);
    assert!(gram_defect(&model, &indices, 32) <= 1e-8);
}

#[test]
fn sphere_harmonics_are_orthonormal() {
    let model = ManifoldModel::sphere(2).unwrap();
    let indices = enumerate_interval(&model, 0.0, (8.0f64 * 9.0).sqrt() + 1e-9).unwrap();
    assert_eq!(indices.len(), 81);
    assert!(gram_defect(&model, &indices, 12) <= 1e-8);
}

#[test]
fn sphere_frequencies_are_exact() {
    let model = ManifoldModel::sphere(2).unwrap();
    for e in enumerate_interval(&model, 0.0, 40.0).unwrap() {
        let Label::Harmonic { degree, .. } = e.label else { panic!() };
        let l = degree as f64;
        assert_eq!(e.freq * e.freq, (l * (l + 1.0)).sqrt().powi(2));
    }
}

#[test]
fn sphere_addition_identity() {
    let model = ManifoldModel::sphere(2).unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(11);
    for l in [1u32, 5, 17, 60, 200] {
        let labels: Vec<Label> = (-(l as i64)..=l as i64)
            .map(|order| Label::Harmonic { degree: l, order })
            .collect();
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for _ in 0..50 {
            let z: f64 = rng.gen_range(-1.0..1.0);
            let phi: f64 = rng.gen_range(0.0..2.0 * PI);
            let s = (1.0 - z * z).sqrt();
            let p = [s * phi.cos(), s * phi.sin(), z];
            let sum: f64 = labels
                .iter()
                .map(|lab| eval_label(&model, lab, &p).unwrap().norm_sqr())
                .sum();
            lo = lo.min(sum);
            hi = hi.max(sum);
        }
        assert!(hi / lo - 1.0 <= 1e-8, "l = {l}: {lo} .. {hi}");
        assert!((hi - (2.0 * l as f64 + 1.0) / (4.0 * PI)).abs() <= 1e-8 * hi);
    }
}

#[test]
fn klein_eigenfunctions_are_deck_invariant() {
    let model = ManifoldModel::klein_bottle();
    let gens = model.deck_generators();
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    let points: Vec<[f64; 2]> = (0..100).map(|_| [rng.gen(), rng.gen()]).collect();
    for e in enumerate_interval(&model, 0.0, 40.0).unwrap() {
        for p in &points {
            let v = eval_label(&model, &e.label, p).unwrap();
            for g in &gens {
                let w = eval_label(&model, &e.label, &g.apply(p)).unwrap();
                assert!((v - w).norm() <= 1e-10, "{:?} at {p:?}", e.label);
            }
        }
    }
}
