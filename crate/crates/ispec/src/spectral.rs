//! The Kasteleyn operator `K(z, w)` of one fundamental domain, its
//! characteristic polynomial `P(z, w) = det K(z, w)`, corner Pfaffians,
//! torus scans and the critical inverse temperature.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fishergraph::{build_fisher, FisherGraph, HORIZONTAL, VERTICAL};
use crate::linalg::{self, DenseMatrix, C64};
use crate::model::{EdgeWeightMap, PeriodicIsingModel, WeightKind};

/// A matrix entry multiplied by `z^ex w^ey` when the operator is evaluated.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseEntry {
    pub row: usize,
    pub col: usize,
    pub value: f64,
    pub ex: i32,
    pub ey: i32,
}

/// Bloch form of the Kasteleyn matrix over one fundamental domain.
#[derive(Clone, Debug)]
pub struct KasteleynOperator {
    graph: FisherGraph,
    fixed: DenseMatrix<f64>,
    phased: Vec<PhaseEntry>,
}

/// Operator for `model` at inverse temperature `beta`.
pub fn assemble(model: &PeriodicIsingModel, beta: f64, kind: WeightKind) -> Result<KasteleynOperator> {
    operator_from_weights(&model.weights(beta, kind)?)
}

/// Operator for explicit weights (which may include zeros).
pub fn operator_from_weights(weights: &EdgeWeightMap) -> Result<KasteleynOperator> {
    let graph = build_fisher(weights, 1, 1)?;
    let dim = graph.vertices().len();
    let mut fixed = DenseMatrix::zeros(dim);
    let mut phased = Vec::new();
    for (i, e) in graph.edges().iter().enumerate() {
        let value = graph.edge_entry(i, 0, 0);
        if e.crosses_x || e.crosses_y {
            let (ex, ey) = (i32::from(e.crosses_x), i32::from(e.crosses_y));
            phased.push(PhaseEntry { row: e.u, col: e.v, value, ex, ey });
            phased.push(PhaseEntry { row: e.v, col: e.u, value: -value, ex: -ex, ey: -ey });
        } else {
            fixed[(e.u, e.v)] += value;
            fixed[(e.v, e.u)] -= value;
        }
    }
    Ok(KasteleynOperator { graph, fixed, phased })
}

impl KasteleynOperator {
    pub fn dim(&self) -> usize {
        self.fixed.dim()
    }

    pub fn graph(&self) -> &FisherGraph {
        &self.graph
    }

    pub fn phased_entries(&self) -> &[PhaseEntry] {
        &self.phased
    }

    /// `K(1, 1)`, a real skew matrix.
    pub fn base(&self) -> DenseMatrix<f64> {
        self.corner(0, 0)
    }

    /// `K((-1)^theta, (-1)^tau)`.
    pub fn corner(&self, theta: usize, tau: usize) -> DenseMatrix<f64> {
        let mut k = self.fixed.clone();
        for p in &self.phased {
            let flip = (theta * p.ex.unsigned_abs() as usize + tau * p.ey.unsigned_abs() as usize) % 2;
            k[(p.row, p.col)] += if flip == 1 { -p.value } else { p.value };
        }
        k
    }

    pub fn eval(&self, z: C64, w: C64) -> DenseMatrix<C64> {
        let mut k = self.fixed.to_complex();
        for p in &self.phased {
            k[(p.row, p.col)] += z.powi(p.ex) * w.powi(p.ey) * p.value;
        }
        k
    }
}

/// `P(z, w) = det K(z, w)`.
pub fn eval_p(op: &KasteleynOperator, z: C64, w: C64) -> C64 {
    linalg::det(&op.eval(z, w))
}

/// Sign of a perfect matching's term in `Pf K^{00}`: the sign of the
/// permutation listing each edge as `(u, v)`, times the orientation signs.
pub fn matching_sign(graph: &FisherGraph, matching: &[usize]) -> i8 {
    let n = graph.vertices().len();
    let mut perm = Vec::with_capacity(n);
    let mut sign = 1i8;
    for &e in matching {
        let edge = &graph.edges()[e];
        perm.push(edge.u);
        perm.push(edge.v);
        sign *= edge.sign;
    }
    assert_eq!(perm.len(), n, "matching is not perfect");
    let mut seen = vec![false; n];
    for start in 0..n {
        if seen[start] {
            continue;
        }
        let mut len = 0;
        let mut j = start;
        while !seen[j] {
            seen[j] = true;
            j = perm[j];
            len += 1;
        }
        if len % 2 == 0 {
            sign = -sign;
        }
    }
    sign
}

/// Signs with which the four homology classes of matchings enter the
/// Pfaffians, `Pf K^{ab} = s0 * sum_h eps[h] (-1)^{a hx + b hy} Z_h`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SectorSigns {
    /// Sign of the all-internal matching.
    pub s0: f64,
    /// `eps[hx][hy]`, with `eps[0][0] = 1`.
    pub eps: [[f64; 2]; 2],
}

impl SectorSigns {
    /// Coefficients `c_ab` with `Z = sum_ab c_ab s0 Pf K^{ab}`.
    pub fn coefficients(&self) -> [[f64; 2]; 2] {
        let mut c = [[0.0; 2]; 2];
        for (a, row) in c.iter_mut().enumerate() {
            for (b, cab) in row.iter_mut().enumerate() {
                *cab = 0.25
                    * (0..2)
                        .flat_map(|hx| (0..2).map(move |hy| (hx, hy)))
                        .map(|(hx, hy)| self.eps[hx][hy] * chi(a, b, hx, hy))
                        .sum::<f64>();
            }
        }
        c
    }
}

fn chi(a: usize, b: usize, hx: usize, hy: usize) -> f64 {
    if (a * hx + b * hy) % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Calibrates [`SectorSigns`] from one explicit matching per homology
/// class: the all-internal matching, a horizontal loop along row 0, a
/// vertical loop along column 0, and both loops together.
pub fn sector_signs(graph: &FisherGraph) -> Result<SectorSigns> {
    let (w, h) = (graph.width(), graph.height());
    let row: Vec<usize> = (0..w).map(|x| graph.edge_id(x, 0, HORIZONTAL)).collect();
    let col: Vec<usize> = (0..h).map(|y| graph.edge_id(0, y, VERTICAL)).collect();
    let both: Vec<usize> = row.iter().chain(&col).copied().collect();
    let sign_of = |ext: &[usize]| -> Result<(f64, (usize, usize))> {
        let m = graph.complete_matching(ext)?;
        Ok((f64::from(matching_sign(graph, &m)), graph.homology_class(&m)))
    };
    let (s0, _) = sign_of(&[])?;
    let mut eps = [[1.0; 2]; 2];
    for ext in [&row, &col, &both] {
        let (s, (hx, hy)) = sign_of(ext)?;
        eps[hx][hy] = s * s0;
    }
    Ok(SectorSigns { s0, eps })
}

/// The four normalized corner Pfaffians `s0 Pf K^{theta tau}` of a torus graph.
pub fn graph_corner_pfaffians(graph: &FisherGraph, signs: &SectorSigns) -> Result<[[f64; 2]; 2]> {
    let mut pf = [[0.0; 2]; 2];
    for (a, row) in pf.iter_mut().enumerate() {
        for (b, v) in row.iter_mut().enumerate() {
            *v = signs.s0 * linalg::pfaffian(&graph.kasteleyn_matrix(a, b))?;
        }
    }
    Ok(pf)
}

/// Dimer partition function of a torus graph from its four Pfaffians.
pub fn partition_function(graph: &FisherGraph) -> Result<f64> {
    let signs = sector_signs(graph)?;
    let pf = graph_corner_pfaffians(graph, &signs)?;
    let c = signs.coefficients();
    Ok((0..2)
        .flat_map(|a| (0..2).map(move |b| (a, b)))
        .map(|(a, b)| c[a][b] * pf[a][b])
        .sum())
}

/// Pfaffians at the four real points `((-1)^theta, (-1)^tau)` of the torus.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CornerReport {
    /// `pf[theta][tau]`, normalized so that every entry is `1` at zero weight.
    pub pf: [[f64; 2]; 2],
    pub min_abs: f64,
    pub argmin: (usize, usize),
}

impl CornerReport {
    fn from_pf(pf: [[f64; 2]; 2]) -> Self {
        let mut argmin = (0, 0);
        for (a, b) in [(0, 1), (1, 0), (1, 1)] {
            if pf[a][b].abs() < pf[argmin.0][argmin.1].abs() {
                argmin = (a, b);
            }
        }
        CornerReport {
            pf,
            min_abs: pf[argmin.0][argmin.1].abs(),
            argmin,
        }
    }

    /// Entries in the order `(0,0), (0,1), (1,0), (1,1)`.
    pub fn flat(&self) -> [f64; 4] {
        [self.pf[0][0], self.pf[0][1], self.pf[1][0], self.pf[1][1]]
    }
}

pub fn corner_pfaffians(op: &KasteleynOperator) -> Result<CornerReport> {
    let signs = sector_signs(&op.graph)?;
    let mut pf = [[0.0; 2]; 2];
    for (a, row) in pf.iter_mut().enumerate() {
        for (b, v) in row.iter_mut().enumerate() {
            *v = signs.s0 * linalg::pfaffian(&op.corner(a, b))?;
        }
    }
    Ok(CornerReport::from_pf(pf))
}

/// `s0 Pf K(1, 1)` with high-temperature weights.
pub fn pf11(model: &PeriodicIsingModel, beta: f64) -> Result<f64> {
    let op = assemble(model, beta, WeightKind::HighTemp)?;
    let s0 = sector_signs(&op.graph)?.s0;
    Ok(s0 * linalg::pfaffian(&op.base())?)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CriticalPoint {
    pub beta_c: f64,
    /// Corner Pfaffians of the model's own fundamental domain at `beta_c`.
    pub report: CornerReport,
    pub iterations: usize,
    /// Replication factors used to reach an even x even period.
    pub replication: (usize, usize),
}

/// Largest `beta` tried before giving up on finding a sign change.
pub const BETA_CEILING: f64 = 1e3;

/// Critical inverse temperature, bisecting `Pf K(1,1)` with `tanh(beta J)`
/// weights on the even x even replication of the model.
///
/// `Pf K(1,1)` is `1` at `beta = 0+` and negative for large `beta`, with a
/// single sign change; the upper bracket doubles from `1` until negative.
pub fn critical_beta(model: &PeriodicIsingModel, tol: f64) -> Result<CriticalPoint> {
    if !(tol >= 1e-13) {
        return Err(Error::InvalidArgument(format!("tolerance {tol} below 1e-13")));
    }
    let (a, b) = model.even_factors();
    let even = model.replicate(a, b)?;
    let g = |beta: f64| pf11(&even, beta);
    let mut lo = 0.0;
    let mut hi = 1.0;
    while g(hi)? > 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > BETA_CEILING {
            return Err(Error::NoSignChange(BETA_CEILING));
        }
    }
    let mut iterations = 0;
    while hi - lo > tol && iterations < 200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    let beta_c = 0.5 * (lo + hi);
    let report = corner_pfaffians(&assemble(model, beta_c, WeightKind::HighTemp)?)?;
    Ok(CriticalPoint {
        beta_c,
        report,
        iterations,
        replication: (a, b),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct TorusScan {
    pub grid: usize,
    /// `|P(e^{2 pi i a/grid}, e^{2 pi i b/grid})|` at index `a * grid + b`.
    pub values: Vec<f64>,
    pub min_abs: f64,
    pub argmin: (usize, usize),
    /// The corner `(theta, tau)` when the minimum sits at a real point.
    pub corner: Option<(usize, usize)>,
}

/// Scans `|P|` on a `grid x grid` lattice of the unit torus.
pub fn scan_torus(op: &KasteleynOperator, grid: usize) -> Result<TorusScan> {
    if grid < 4 {
        return Err(Error::InvalidArgument(format!("grid {grid} below 4")));
    }
    let values: Vec<f64> = (0..grid * grid)
        .into_par_iter()
        .map(|k| {
            let z = linalg::circle_point(k / grid, grid);
            let w = linalg::circle_point(k % grid, grid);
            eval_p(op, z, w).norm()
        })
        .collect();
    let mut best = 0;
    for (k, &v) in values.iter().enumerate() {
        if v < values[best] {
            best = k;
        }
    }
    let argmin = (best / grid, best % grid);
    let as_corner = |i: usize| {
        if i == 0 {
            Some(0)
        } else if 2 * i == grid {
            Some(1)
        } else {
            None
        }
    };
    let corner = as_corner(argmin.0).zip(as_corner(argmin.1));
    Ok(TorusScan {
        grid,
        min_abs: values[best],
        values,
        argmin,
        corner,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NodeHessian {
    pub corner: (usize, usize),
    /// Second derivatives of `P(e^{i theta}, e^{i phi})` at the node.
    pub hessian: [[f64; 2]; 2],
    /// Coefficients of `P ~ a theta^2 + b theta phi + c phi^2`.
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// `a > 0`, `c > 0` and `b^2 - 4ac < 0`.
    pub nondegenerate: bool,
}

/// Default finite-difference step for [`node_hessian`].
pub const HESSIAN_STEP: f64 = 1e-4;
/// `|P|` at a corner below which the corner counts as a node.
pub const NODE_TOLERANCE: f64 = 1e-8;

/// Hessian of `P` on the torus at the corner where it vanishes, by central
/// differences with step `step`.
pub fn node_hessian(op: &KasteleynOperator, step: f64) -> Result<NodeHessian> {
    let report = corner_pfaffians(op)?;
    let p_min = report.min_abs * report.min_abs;
    if !(p_min < NODE_TOLERANCE) {
        return Err(Error::NodeNotFound(p_min));
    }
    let corner = report.argmin;
    let t0 = std::f64::consts::PI * corner.0 as f64;
    let p0 = std::f64::consts::PI * corner.1 as f64;
    let f = |dt: f64, dp: f64| eval_p(op, C64::from_polar(1.0, t0 + dt), C64::from_polar(1.0, p0 + dp)).re;
    let h = step;
    let f00 = f(0.0, 0.0);
    let ftt = (f(h, 0.0) - 2.0 * f00 + f(-h, 0.0)) / (h * h);
    let fpp = (f(0.0, h) - 2.0 * f00 + f(0.0, -h)) / (h * h);
    let ftp = (f(h, h) - f(h, -h) - f(-h, h) + f(-h, -h)) / (4.0 * h * h);
    let (a, b, c) = (0.5 * ftt, ftp, 0.5 * fpp);
    Ok(NodeHessian {
        corner,
        hessian: [[ftt, ftp], [ftp, fpp]],
        a,
        b,
        c,
        nondegenerate: a > 0.0 && c > 0.0 && b * b - 4.0 * a * c < 0.0,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct DualityReport {
    /// Corners with `tanh(beta J)` weights on the lattice.
    pub high: CornerReport,
    /// Corners with `exp(-2 beta J)` weights on the dual lattice.
    pub low: CornerReport,
    /// `high.pf / low.pf` per corner.
    pub ratio: [[f64; 2]; 2],
    /// Largest relative deviation of `|ratio|` from its mean over corners
    /// where neither system vanishes.
    pub ratio_spread: f64,
    /// Corners where each system vanishes (`|pf| < sqrt(tol)`).
    pub high_zeros: [[bool; 2]; 2],
    pub low_zeros: [[bool; 2]; 2],
}

/// Compares corner zero sets of the high-temperature spectral curve and
/// the low-temperature curve on the dual lattice.
pub fn duality_check(model: &PeriodicIsingModel, beta: f64, tol: f64) -> Result<DualityReport> {
    let hi_w = model.weights(beta, WeightKind::HighTemp)?;
    let lo_w = model.weights(beta, WeightKind::LowTemp)?.on_dual_lattice();
    let high = corner_pfaffians(&operator_from_weights(&hi_w)?)?;
    let low = corner_pfaffians(&operator_from_weights(&lo_w)?)?;
    let thr = tol.sqrt();
    let mut ratio = [[0.0; 2]; 2];
    let mut high_zeros = [[false; 2]; 2];
    let mut low_zeros = [[false; 2]; 2];
    let mut mags = Vec::new();
    for a in 0..2 {
        for b in 0..2 {
            ratio[a][b] = high.pf[a][b] / low.pf[a][b];
            high_zeros[a][b] = high.pf[a][b].abs() < thr;
            low_zeros[a][b] = low.pf[a][b].abs() < thr;
            if high_zeros[a][b] != low_zeros[a][b] {
                return Err(Error::DualityViolation {
                    theta: a,
                    tau: b,
                    primal: high.pf[a][b].abs(),
                    dual: low.pf[a][b].abs(),
                });
            }
            if !high_zeros[a][b] {
                mags.push(ratio[a][b].abs());
            }
        }
    }
    let mean = mags.iter().sum::<f64>() / mags.len().max(1) as f64;
    let ratio_spread = mags.iter().fold(0.0f64, |s, r| s.max((r - mean).abs() / mean));
    Ok(DualityReport {
        high,
        low,
        ratio,
        ratio_spread,
        high_zeros,
        low_zeros,
    })
}
