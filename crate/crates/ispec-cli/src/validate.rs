//! Oracle cross-checks run by the `validate` command.

use ispec::correlation;
use ispec::fishergraph::build_fisher;
use ispec::linalg::{self, C64};
use ispec::oracle::{self, Boundary, CylinderPhase};
use ispec::spectral;
use ispec::{PeriodicIsingModel, Result, WeightKind};

use crate::output::num;

pub struct Check {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &'static str, pass: bool, detail: String) -> Self {
        Check { name, pass, detail }
    }

    fn skipped(name: &'static str, why: &str) -> Self {
        Check::new(name, true, format!("skipped, {why}"))
    }
}

/// Replication `(s, t)` with the most sites not exceeding `max_sites`,
/// preferring the squarest lattice among ties.
pub fn largest_replication(model: &PeriodicIsingModel, max_sites: usize) -> Option<(usize, usize)> {
    let per = model.sites();
    let mut best: Option<(usize, usize)> = None;
    let key = |(s, t): (usize, usize)| {
        let (w, h) = (s * model.m(), t * model.n());
        (w * h, std::cmp::Reverse(w.abs_diff(h)))
    };
    for s in 1..=max_sites {
        for t in 1..=max_sites {
            if s * t * per <= max_sites && best.is_none_or(|b| key((s, t)) > key(b)) {
                best = Some((s, t));
            }
        }
    }
    best
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

pub fn run_checks(model: &PeriodicIsingModel, max_sites: usize, tol: f64) -> Result<Vec<Check>> {
    let bc = spectral::critical_beta(model, tol)?.beta_c;
    let mut checks = vec![Check::new("critical_point", bc > 0.0, format!("beta_c = {}", num(bc)))];

    // Four-Pfaffian partition function against perfect-matching enumeration.
    checks.push(match largest_replication(model, oracle::MAX_DIMER_VERTICES / 6) {
        Some((s, t)) => {
            let mut worst = 0.0f64;
            for f in [0.5, 1.0, 1.5] {
                let g = build_fisher(&model.weights(f * bc, WeightKind::HighTemp)?, s, t)?;
                worst = worst.max(rel(spectral::partition_function(&g)?, oracle::enumerate_dimer(&g)?.z));
            }
            Check::new("pfaffian_partition_function", worst < 1e-10, format!("{s}x{t} torus, max rel err {}", num(worst)))
        }
        None => Check::skipped("pfaffian_partition_function", "period exceeds the dimer enumeration limit"),
    });

    // Dimer partition function against the spin partition function.
    let spin_cap = max_sites.min(oracle::MAX_SPIN_SITES);
    checks.push(match largest_replication(model, spin_cap) {
        Some((s, t)) => {
            let beta = 0.7 * bc;
            let g = build_fisher(&model.weights(beta, WeightKind::HighTemp)?, s, t)?;
            let bonds = oracle::lattice_bonds(model, s, t, Boundary::Torus);
            let sites = s * t * model.sites();
            let prefactor = 2f64.powi(sites as i32) * bonds.iter().map(|b| (beta * b.coupling).cosh()).product::<f64>();
            let spin = oracle::enumerate_spin(model, beta, s, t, Boundary::Torus, 0.0)?.z;
            let err = rel(prefactor * spectral::partition_function(&g)?, spin);
            Check::new("high_temperature_identity", err < 1e-10, format!("{sites} sites, rel err {}", num(err)))
        }
        None => Check::skipped("high_temperature_identity", "period exceeds --max-sites"),
    });

    // Lee-Yang circle theorem.
    checks.push(match largest_replication(model, max_sites.min(oracle::MAX_LEE_YANG_SITES)) {
        Some((s, t)) => {
            let mut worst = 0.0f64;
            for boundary in [Boundary::Torus, Boundary::Free] {
                worst = worst.max(oracle::lee_yang_check(model, bc, s, t, boundary)?.max_deviation);
            }
            Check::new("lee_yang", worst < 1e-8, format!("{} sites, max ||z| - 1| {}", s * t * model.sites(), num(worst)))
        }
        None => Check::skipped("lee_yang", "period exceeds --max-sites"),
    });

    // Single sign change of Pf K(1,1) along a log grid.
    let (a, b) = model.even_factors();
    let even = model.replicate(a, b)?;
    let pts = 512;
    let mut changes = 0;
    let mut prev = spectral::pf11(&even, 1e-3)?;
    for k in 1..pts {
        let beta = 1e-3 * 1e4f64.powf(k as f64 / (pts - 1) as f64);
        let v = spectral::pf11(&even, beta)?;
        if v.signum() != prev.signum() {
            changes += 1;
        }
        prev = v;
    }
    checks.push(Check::new("unique_crossing", changes == 1, format!("{changes} sign changes on {pts} points")));

    // Duality: corner zero sets of the two weight systems.
    let mut agree = true;
    let mut detail = Vec::new();
    for f in [1.0, 0.5] {
        let d = spectral::duality_check(model, f * bc, tol)?;
        let zeros = d.high_zeros.iter().flatten().filter(|&&z| z).count();
        agree &= d.high_zeros == d.low_zeros && (zeros > 0) == (f == 1.0);
        detail.push(format!("{f} beta_c: {zeros} zero corners"));
    }
    checks.push(Check::new("duality", agree, detail.join(", ")));

    // prod (1 - tau^2)^2 det psi = 1 on the circle.
    let mut worst = 0.0f64;
    for f in [0.5, 1.5] {
        let sym = correlation::build_symbol(model, f * bc, 128, 32)?;
        for j in 0..16 {
            let zeta = C64::from_polar(1.0, 0.1 + j as f64 * std::f64::consts::TAU / 16.0);
            let d = linalg::det(&sym.eval(zeta)?) * sym.weight_factor();
            worst = worst.max((d - 1.0).norm());
        }
    }
    checks.push(Check::new("symbol_determinant", worst < 1e-6, format!("max deviation {}", num(worst))));

    // Toeplitz correlations against the transfer matrix, and monotonicity.
    let t = (oracle::MAX_DENSE_TRANSFER_WIDTH + 4) / model.m();
    if t == 0 {
        checks.push(Check::skipped("transfer_matrix_correlation", "period too wide for the transfer matrix"));
    } else {
        let beta = 0.4 * bc;
        let sym = correlation::build_symbol(model, beta, 256, 64)?;
        let mut worst = 0.0f64;
        for i in 1..=2 {
            let c = correlation::spin_corr_sq(&sym, i * model.n())?.corr_sq;
            let tm = oracle::transfer_corr(model, beta, t, i, CylinderPhase::Symmetric)?;
            worst = worst.max((c - tm * tm).abs());
        }
        checks.push(Check::new(
            "transfer_matrix_correlation",
            worst < 1e-5,
            format!("cylinder width {}, max abs err {}", t * model.m(), num(worst)),
        ));
    }
    let mut prev = 0.0;
    let mut monotone = true;
    for f in [0.25, 0.5, 0.75, 1.25, 1.5] {
        let c = correlation::spin_corr_sq(&correlation::build_symbol(model, f * bc, 128, 32)?, model.n())?.corr_sq;
        monotone &= c >= prev;
        prev = c;
    }
    checks.push(Check::new("monotone_in_beta", monotone, format!("corr_sq at N = {} over 5 temperatures", model.n())));
    Ok(checks)
}
