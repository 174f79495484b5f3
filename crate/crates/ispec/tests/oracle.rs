use ispec::oracle::{self, Boundary, CylinderPhase, TransferMatrix};
use ispec::PeriodicIsingModel;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_model(m: usize, n: usize, seed: u64) -> PeriodicIsingModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut grid = || (0..m).map(|_| (0..n).map(|_| rng.random_range(0.2..3.0)).collect()).collect();
    let jh = grid();
    let jv = grid();
    PeriodicIsingModel::new(m, n, jh, jv).unwrap()
}

#[test]
fn transfer_torus_matches_spin_enumeration() {
    for (m, n, seed) in [(1, 1, 1), (2, 1, 2), (1, 2, 3), (2, 2, 4)] {
        let model = random_model(m, n, seed);
        let (t, layers) = (4 / m, 4 / n);
        for beta in [0.15, 0.4] {
            let tm = TransferMatrix::new(&model, beta, t).unwrap();
            let en = oracle::enumerate_spin(&model, beta, t, layers, Boundary::Torus, 0.0).unwrap();
            for i in 0..=layers {
                for dx in 0..t * m {
                    let got = tm.torus_corr(layers, i, dx).unwrap();
                    let want = en.corr_from_origin(dx, i * n);
                    assert!((got - want).abs() < 1e-10, "{m}x{n} beta {beta} i {i} dx {dx}: {got} vs {want}");
                }
            }
        }
    }
}

#[test]
fn long_torus_approaches_cylinder() {
    let model = random_model(2, 1, 7);
    let tm = TransferMatrix::new(&model, 0.2, 3).unwrap();
    for i in 1..=3 {
        let torus = tm.torus_corr(400, i, 1).unwrap();
        let cyl = tm.cylinder_corr(i, 1, CylinderPhase::Symmetric).unwrap();
        assert!((torus - cyl).abs() < 1e-10, "i {i}");
    }
}

#[test]
fn transverse_correlations_are_dominated() {
    // Cauchy-Schwarz on the reflection-positive cylinder: shifting one spin
    // sideways never increases the correlation.
    let model = random_model(1, 2, 11);
    for t in [2, 3, 4] {
        for beta in [0.2, 0.5] {
            let tm = TransferMatrix::new(&model, beta, t).unwrap();
            for i in [2, 4] {
                let straight = tm.cylinder_corr(i, 0, CylinderPhase::Symmetric).unwrap();
                for dx in 1..t {
                    let shifted = tm.cylinder_corr(i, dx, CylinderPhase::Symmetric).unwrap();
                    assert!(shifted <= straight + 1e-12, "t {t} beta {beta} i {i} dx {dx}");
                }
            }
        }
    }
}

#[test]
fn polygon_sum_matches_partition_function() {
    for boundary in [Boundary::Torus, Boundary::Free] {
        let model = random_model(3, 2, 13);
        for beta in [0.1, 0.6] {
            let en = oracle::enumerate_spin(&model, beta, 1, 2, boundary, 0.0).unwrap();
            let poly = oracle::high_temp_polygon_sum(&model, beta, 1, 2, boundary).unwrap();
            assert!((poly - en.z).abs() < 1e-10 * en.z, "{boundary:?} beta {beta}");
        }
    }
}

#[test]
fn lee_yang_zeros_on_unit_circle() {
    for (m, n, seed) in [(1, 1, 1), (2, 2, 5), (1, 3, 6)] {
        let model = random_model(m, n, seed);
        for boundary in [Boundary::Torus, Boundary::Free] {
            let r = oracle::lee_yang_check(&model, 0.5, 3 / m.min(3), 3 / n.min(3), boundary).unwrap();
            assert!(r.max_deviation < 1e-8, "{m}x{n} {boundary:?}: {}", r.max_deviation);
        }
    }
}

#[test]
fn polynomial_roots_recover_known_roots() {
    // (x - 1)(x + 2)(x^2 + 1) = x^4 + x^3 - x^2 + x - 2
    let mut roots = oracle::polynomial_roots(&[-2.0, 1.0, -1.0, 1.0, 1.0]);
    roots.sort_by(|a, b| (a.re + 3.0 * a.im).total_cmp(&(b.re + 3.0 * b.im)));
    let want = [(0.0, -1.0), (-2.0, 0.0), (1.0, 0.0), (0.0, 1.0)];
    for (r, (re, im)) in roots.iter().zip(want) {
        assert!((r.re - re).abs() < 1e-12 && (r.im - im).abs() < 1e-12, "{r}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn correlations_increase_with_beta(seed in any::<u64>(), beta in 0.05f64..1.0, dx in 0usize..3, dy in 0usize..3) {
        // Griffiths: every ferromagnetic correlation is nondecreasing in beta.
        let model = random_model(3, 3, seed);
        let lo = oracle::enumerate_spin(&model, beta, 1, 1, Boundary::Torus, 0.0).unwrap();
        let hi = oracle::enumerate_spin(&model, beta * 1.1, 1, 1, Boundary::Torus, 0.0).unwrap();
        let (a, b) = (lo.corr_from_origin(dx, dy), hi.corr_from_origin(dx, dy));
        prop_assert!(a >= 0.0 && b >= a - 1e-12, "{a} {b}");
    }

    #[test]
    fn compensated_sum_is_order_independent(xs in proptest::collection::vec(-1e6f64..1e6, 1..200)) {
        let mut fwd = oracle::CompensatedSum::default();
        let mut rev = oracle::CompensatedSum::default();
        xs.iter().for_each(|&x| fwd.add(x));
        xs.iter().rev().for_each(|&x| rev.add(x));
        prop_assert!((fwd.value() - rev.value()).abs() <= 1e-9);
    }
}
