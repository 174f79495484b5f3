use std::collections::HashSet;

use ispec::fishergraph::{build_fisher, polygon_to_dimer, FisherGraph};
use ispec::oracle::{self, lattice_bonds, Boundary};
use ispec::spectral::{graph_corner_pfaffians, partition_function, sector_signs};
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

fn matching_weight(g: &FisherGraph, m: &[usize]) -> f64 {
    m.iter().map(|&e| g.edges()[e].weight).product()
}

#[test]
fn each_corner_pfaffian_is_a_signed_sector_sum() {
    // s0 Pf K^{ab} = sum_h eps[h] (-1)^{a hx + b hy} Z_h, checked against
    // sector sums from exhaustive enumeration.
    for (m, n, seed) in [(1, 1, 1), (2, 1, 2), (1, 3, 3), (2, 2, 4), (3, 2, 5)] {
        let model = random_model(m, n, seed);
        let g = build_fisher(&model.weights(0.45, WeightKind::HighTemp).unwrap(), 1, 1).unwrap();
        let signs = sector_signs(&g).unwrap();
        let pf = graph_corner_pfaffians(&g, &signs).unwrap();
        let en = oracle::enumerate_dimer(&g).unwrap();
        for a in 0..2 {
            for b in 0..2 {
                let mut want = 0.0;
                for hx in 0..2 {
                    for hy in 0..2 {
                        let chi = if (a * hx + b * hy) % 2 == 0 { 1.0 } else { -1.0 };
                        want += signs.eps[hx][hy] * chi * en.sector_z[hx][hy];
                    }
                }
                assert!((pf[a][b] - want).abs() < 1e-12 * en.z, "{m}x{n} corner ({a},{b})");
            }
        }
    }
}

#[test]
fn replicated_tori_match_enumeration() {
    let model = random_model(1, 2, 9);
    for (s, t) in [(1, 1), (2, 1), (3, 1), (1, 2)] {
        for beta in [0.1, 0.5, 2.0] {
            let g = build_fisher(&model.weights(beta, WeightKind::HighTemp).unwrap(), s, t).unwrap();
            let z = partition_function(&g).unwrap();
            let en = oracle::enumerate_dimer(&g).unwrap();
            assert!((z - en.z).abs() < 1e-10 * en.z, "{s}x{t} beta {beta}");
        }
    }
}

#[test]
fn polygon_expansion_matches_dimer_partition_function() {
    let model = random_model(2, 3, 17);
    for beta in [0.2, 0.7] {
        let g = build_fisher(&model.weights(beta, WeightKind::HighTemp).unwrap(), 1, 1).unwrap();
        let poly = oracle::high_temp_polygon_sum(&model, beta, 1, 1, Boundary::Torus).unwrap();
        let bonds = lattice_bonds(&model, 1, 1, Boundary::Torus);
        let pre = 2f64.powi(6) * bonds.iter().map(|b| (beta * b.coupling).cosh()).product::<f64>();
        assert!((pre * partition_function(&g).unwrap() - poly).abs() < 1e-10 * poly);
    }
}

#[test]
fn domain_walls_biject_onto_trivial_class() {
    // Spin configurations modulo global flip map onto the matchings of the
    // dual Fisher graph with even winding, with weights exp(-2 beta J) per
    // disagreeing bond.
    for (w, h, seed) in [(2, 2, 21), (3, 2, 22), (2, 3, 23), (3, 3, 24)] {
        let model = random_model(w, h, seed);
        let beta = 0.6;
        let dual = model.weights(beta, WeightKind::LowTemp).unwrap().on_dual_lattice();
        let g = build_fisher(&dual, 1, 1).unwrap();
        let bonds = lattice_bonds(&model, 1, 1, Boundary::Torus);
        let sites = w * h;
        let mut seen = HashSet::new();
        let mut total = 0.0;
        for mask in 0..(1u32 << sites) {
            let spins: Vec<i8> = (0..sites).map(|k| if mask >> k & 1 == 1 { -1 } else { 1 }).collect();
            let matching = polygon_to_dimer(&g, &spins).unwrap();
            assert_eq!(g.homology_class(&matching), (0, 0));
            let wall: f64 = bonds
                .iter()
                .filter(|b| spins[b.a] != spins[b.b])
                .map(|b| (-2.0 * beta * b.coupling).exp())
                .product();
            assert!((matching_weight(&g, &matching) - wall).abs() < 1e-14);
            let mut key = matching.clone();
            key.sort_unstable();
            seen.insert(key);
            total += wall;
        }
        assert_eq!(seen.len(), 1 << (sites - 1));
        if sites * 6 <= oracle::MAX_DIMER_VERTICES {
            let en = oracle::enumerate_dimer(&g).unwrap();
            assert!((total - 2.0 * en.sector_z[0][0]).abs() < 1e-12 * total);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn pfaffian_partition_function_is_exact(
        m in 1usize..=3,
        n in 1usize..=2,
        seed in any::<u64>(),
        beta in 0.05f64..2.0,
    ) {
        let model = random_model(m, n, seed);
        let g = build_fisher(&model.weights(beta, WeightKind::HighTemp).unwrap(), 1, 1).unwrap();
        let z = partition_function(&g).unwrap();
        let en = oracle::enumerate_dimer(&g).unwrap();
        prop_assert!((z - en.z).abs() < 1e-10 * en.z);
        prop_assert!(en.edge_probabilities.iter().all(|&p| (0.0..=1.0 + 1e-12).contains(&p)));
    }
}
