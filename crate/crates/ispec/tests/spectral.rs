use ispec::linalg::{self, C64};
use ispec::spectral::{self, assemble, eval_p, node_hessian, scan_torus, HESSIAN_STEP};
use ispec::{PeriodicIsingModel, WeightKind};
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
fn critical_point_is_invariant_under_replication() {
    for (m, n, seed) in [(1, 1, 1), (1, 2, 2), (2, 1, 3), (2, 2, 4)] {
        let model = random_model(m, n, seed);
        let bc = spectral::critical_beta(&model, 1e-12).unwrap().beta_c;
        for (a, b) in [(2, 1), (1, 3), (2, 2)] {
            let rep = spectral::critical_beta(&model.replicate(a, b).unwrap(), 1e-12).unwrap().beta_c;
            assert!((rep - bc).abs() < 1e-10, "{m}x{n} replicated {a}x{b}: {rep} vs {bc}");
        }
    }
}

#[test]
fn corner_pfaffians_square_to_determinants() {
    let model = random_model(2, 2, 8);
    let op = assemble(&model, 0.3, WeightKind::HighTemp).unwrap();
    let report = spectral::corner_pfaffians(&op).unwrap();
    for a in 0..2 {
        for b in 0..2 {
            let d = linalg::det(&op.corner(a, b));
            let pf = report.pf[a][b];
            assert!((pf * pf - d).abs() < 1e-10 * d.abs().max(1.0), "corner ({a},{b})");
            let z = C64::new(if a == 0 { 1.0 } else { -1.0 }, 0.0);
            let w = C64::new(if b == 0 { 1.0 } else { -1.0 }, 0.0);
            assert!((eval_p(&op, z, w) - d).norm() < 1e-10 * d.abs().max(1.0));
        }
    }
}

#[test]
fn curve_avoids_torus_off_criticality() {
    let model = random_model(1, 2, 12);
    let bc = spectral::critical_beta(&model, 1e-12).unwrap().beta_c;
    for f in [0.5, 1.5] {
        let scan = scan_torus(&assemble(&model, f * bc, WeightKind::HighTemp).unwrap(), 32).unwrap();
        assert!(scan.min_abs > 1e-6, "{f} beta_c: {}", scan.min_abs);
    }
}

#[test]
fn critical_curve_has_a_real_node() {
    let model = random_model(2, 2, 14);
    let cp = spectral::critical_beta(&model, 1e-13).unwrap();
    let op = assemble(&model, cp.beta_c, WeightKind::HighTemp).unwrap();
    let node = node_hessian(&op, HESSIAN_STEP).unwrap();
    assert_eq!(node.corner, cp.report.argmin);
    assert!(node.nondegenerate, "{node:?}");
}

#[test]
fn symmetric_model_crosses_at_known_point() {
    // Homogeneous square lattice: sinh(2 beta_c J) = 1.
    for j in [0.5, 1.0, 2.0] {
        let bc = spectral::critical_beta(&PeriodicIsingModel::homogeneous(j).unwrap(), 1e-13).unwrap().beta_c;
        assert!(((2.0 * bc * j).sinh() - 1.0).abs() < 1e-10, "J {j}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn characteristic_polynomial_is_real_on_torus(
        seed in any::<u64>(),
        beta in 0.05f64..1.5,
        theta in 0.0f64..std::f64::consts::TAU,
        phi in 0.0f64..std::f64::consts::TAU,
    ) {
        let model = random_model(1, 2, seed);
        let op = assemble(&model, beta, WeightKind::HighTemp).unwrap();
        let (z, w) = (C64::from_polar(1.0, theta), C64::from_polar(1.0, phi));
        let p = eval_p(&op, z, w);
        prop_assert!(p.im.abs() < 1e-10 * p.norm().max(1.0));
        prop_assert!(p.re > -1e-12);
        let q = eval_p(&op, z.conj(), w.conj());
        prop_assert!((p - q).norm() < 1e-10 * p.norm().max(1.0));
    }
}
