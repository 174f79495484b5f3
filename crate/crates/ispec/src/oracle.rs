//! Independent ground truth at small scale: exhaustive spin and dimer
//! enumeration, the Lee-Yang circle property, and transfer matrices on
//! cylinders and tori.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fishergraph::FisherGraph;
use crate::linalg::{DenseMatrix, C64};
use crate::model::PeriodicIsingModel;

/// Neumaier-compensated running sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: &CompensatedSum) {
        self.add(other.sum);
        self.add(other.carry);
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Boundary {
    Torus,
    Free,
}

/// A nearest-neighbor bond between sites `a` and `b` (indices `y W + x`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bond {
    pub a: usize,
    pub b: usize,
    pub coupling: f64,
}

/// Bonds of the `(s m) x (t n)` lattice. On a torus of width 1 or 2 the
/// wrap-around bonds are kept as separate bonds (self-loops or doubled
/// bonds), matching the edges of the Fisher graph.
pub fn lattice_bonds(model: &PeriodicIsingModel, s: usize, t: usize, boundary: Boundary) -> Vec<Bond> {
    let (w, h) = (s * model.m(), t * model.n());
    let mut bonds = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let a = y * w + x;
            if boundary == Boundary::Torus || x + 1 < w {
                bonds.push(Bond { a, b: y * w + (x + 1) % w, coupling: model.jh_at(x, y) });
            }
            if boundary == Boundary::Torus || y + 1 < h {
                bonds.push(Bond { a, b: ((y + 1) % h) * w + x, coupling: model.jv_at(x, y) });
            }
        }
    }
    bonds
}

pub const MAX_SPIN_SITES: usize = 20;

#[derive(Clone, Debug, PartialEq)]
pub struct SpinEnumeration {
    pub width: usize,
    pub height: usize,
    /// Partition function `sum exp(beta sum J s s + h sum s)`.
    pub z: f64,
    /// `<s_a s_b>` at index `a * sites + b`.
    pub correlations: Vec<f64>,
    /// `Q_k`: summed `prod exp(-2 beta J)` over disagreeing bonds for
    /// configurations with `k` minus spins.
    pub q_coefficients: Vec<f64>,
}

impl SpinEnumeration {
    pub fn sites(&self) -> usize {
        self.width * self.height
    }

    /// `<s_(0,0) s_(x,y)>`.
    pub fn corr_from_origin(&self, x: usize, y: usize) -> f64 {
        self.correlations[(y % self.height) * self.width + (x % self.width)]
    }
}

/// Sums over all `2^sites` spin configurations of the `(s m) x (t n)` lattice.
pub fn enumerate_spin(
    model: &PeriodicIsingModel,
    beta: f64,
    s: usize,
    t: usize,
    boundary: Boundary,
    h: f64,
) -> Result<SpinEnumeration> {
    let (w, ht) = (s * model.m(), t * model.n());
    let sites = w * ht;
    if sites > MAX_SPIN_SITES {
        return Err(Error::TooLarge(format!("{sites} sites exceed {MAX_SPIN_SITES}")));
    }
    if !(beta >= 0.0) {
        return Err(Error::InvalidArgument(format!("beta must be nonnegative, got {beta}")));
    }
    let bonds = lattice_bonds(model, s, t, boundary);
    let bond_factor: Vec<f64> = bonds.iter().map(|b| (-2.0 * beta * b.coupling).exp()).collect();
    let ground: f64 = bonds.iter().map(|b| beta * b.coupling).sum::<f64>() + h * sites as f64;
    let field = (-2.0 * h).exp();
    let pairs = sites * sites;

    struct Acc {
        q: Vec<CompensatedSum>,
        z: CompensatedSum,
        corr: Vec<CompensatedSum>,
    }
    let prefix_bits = sites.min(8);
    let chunk_bits = sites - prefix_bits;
    let partials: Vec<Acc> = (0u64..1 << prefix_bits)
        .into_par_iter()
        .map(|prefix| {
            let mut acc = Acc {
                q: vec![CompensatedSum::default(); sites + 1],
                z: CompensatedSum::default(),
                corr: vec![CompensatedSum::default(); pairs],
            };
            for low in 0u64..1 << chunk_bits {
                let cfg = (prefix << chunk_bits) | low;
                let mut wgt = 1.0;
                for (b, f) in bonds.iter().zip(&bond_factor) {
                    if (cfg >> b.a ^ cfg >> b.b) & 1 == 1 {
                        wgt *= f;
                    }
                }
                let minus = cfg.count_ones() as usize;
                acc.q[minus].add(wgt);
                let full = wgt * field.powi(minus as i32);
                acc.z.add(full);
                for a in 0..sites {
                    for b in a + 1..sites {
                        let agree = (cfg >> a ^ cfg >> b) & 1 == 0;
                        acc.corr[a * sites + b].add(if agree { full } else { -full });
                    }
                }
            }
            acc
        })
        .collect();
    let mut q = vec![CompensatedSum::default(); sites + 1];
    let mut z = CompensatedSum::default();
    let mut corr = vec![CompensatedSum::default(); pairs];
    for p in &partials {
        for (d, s) in q.iter_mut().zip(&p.q) {
            d.merge(s);
        }
        z.merge(&p.z);
        for (d, s) in corr.iter_mut().zip(&p.corr) {
            d.merge(s);
        }
    }
    let zr = z.value();
    let mut correlations = vec![0.0; pairs];
    for a in 0..sites {
        correlations[a * sites + a] = 1.0;
        for b in a + 1..sites {
            let c = corr[a * sites + b].value() / zr;
            correlations[a * sites + b] = c;
            correlations[b * sites + a] = c;
        }
    }
    Ok(SpinEnumeration {
        width: w,
        height: ht,
        z: zr * ground.exp(),
        correlations,
        q_coefficients: q.iter().map(CompensatedSum::value).collect(),
    })
}

/// Ising partition function through the high-temperature expansion,
/// `2^sites prod cosh(beta J) sum_{even subgraphs} prod tanh(beta J)`,
/// enumerating every bond subset.
pub fn high_temp_polygon_sum(
    model: &PeriodicIsingModel,
    beta: f64,
    s: usize,
    t: usize,
    boundary: Boundary,
) -> Result<f64> {
    let bonds = lattice_bonds(model, s, t, boundary);
    if bonds.len() > 26 {
        return Err(Error::TooLarge(format!("{} bonds exceed 26", bonds.len())));
    }
    let sites = s * model.m() * t * model.n();
    let tanh: Vec<f64> = bonds.iter().map(|b| (beta * b.coupling).tanh()).collect();
    let sum = (0u64..1 << bonds.len())
        .into_par_iter()
        .map(|set| {
            let mut parity = 0u64;
            let mut wgt = 1.0;
            for (k, b) in bonds.iter().enumerate() {
                if set >> k & 1 == 1 {
                    parity ^= 1 << b.a;
                    parity ^= 1 << b.b;
                    wgt *= tanh[k];
                }
            }
            if parity == 0 {
                wgt
            } else {
                0.0
            }
        })
        .collect::<Vec<f64>>()
        .iter()
        .fold(CompensatedSum::default(), |mut acc, &x| {
            acc.add(x);
            acc
        })
        .value();
    let cosh: f64 = bonds.iter().map(|b| (beta * b.coupling).cosh()).product();
    Ok(2f64.powi(sites as i32) * cosh * sum)
}

pub const MAX_LEE_YANG_SITES: usize = 16;

#[derive(Clone, Debug, PartialEq)]
pub struct LeeYangReport {
    pub coefficients: Vec<f64>,
    pub roots: Vec<C64>,
    /// `max | |root| - 1 |`.
    pub max_deviation: f64,
}

/// Roots of the fugacity polynomial `Q(z) = sum_k Q_k z^k`.
pub fn lee_yang_check(
    model: &PeriodicIsingModel,
    beta: f64,
    s: usize,
    t: usize,
    boundary: Boundary,
) -> Result<LeeYangReport> {
    let sites = s * t * model.sites();
    if sites > MAX_LEE_YANG_SITES {
        return Err(Error::TooLarge(format!("{sites} sites exceed {MAX_LEE_YANG_SITES}")));
    }
    let coefficients = enumerate_spin(model, beta, s, t, boundary, 0.0)?.q_coefficients;
    let roots = polynomial_roots(&coefficients);
    let max_deviation = roots.iter().fold(0.0f64, |m, r| m.max((r.norm() - 1.0).abs()));
    Ok(LeeYangReport {
        coefficients,
        roots,
        max_deviation,
    })
}

/// Roots of `sum_k c_k z^k` (`c` in ascending order, nonzero leading
/// coefficient) by simultaneous Aberth-Ehrlich iteration.
pub fn polynomial_roots(c: &[f64]) -> Vec<C64> {
    let deg = c.len() - 1;
    if deg == 0 {
        return Vec::new();
    }
    let eval = |z: C64| -> (C64, C64) {
        let mut p = C64::new(c[deg], 0.0);
        let mut dp = C64::new(0.0, 0.0);
        for k in (0..deg).rev() {
            dp = dp * z + p;
            p = p * z + c[k];
        }
        (p, dp)
    };
    // Start on a circle of the geometric-mean root radius, rotated off the
    // real axis so that symmetric root sets are not hit exactly.
    let radius = (c[0].abs() / c[deg].abs()).powf(1.0 / deg as f64).max(1e-3);
    let mut roots: Vec<C64> = (0..deg)
        .map(|k| C64::from_polar(radius, 2.0 * std::f64::consts::PI * k as f64 / deg as f64 + 0.4))
        .collect();
    for _ in 0..500 {
        let mut moved = 0.0f64;
        for i in 0..deg {
            let (p, dp) = eval(roots[i]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let repulsion: C64 = (0..deg)
                .filter(|&j| j != i)
                .map(|j| (roots[i] - roots[j]).inv())
                .sum();
            let step = ratio / (C64::new(1.0, 0.0) - ratio * repulsion);
            if step.is_finite() {
                roots[i] -= step;
                moved = moved.max(step.norm() / roots[i].norm().max(1.0));
            }
        }
        if moved < 1e-15 {
            break;
        }
    }
    roots
}

pub const MAX_DIMER_VERTICES: usize = 36;

#[derive(Clone, Debug, PartialEq)]
pub struct DimerEnumeration {
    pub z: f64,
    /// `sector_z[hx][hy]`: weight of matchings in each homology class.
    pub sector_z: [[f64; 2]; 2],
    /// Occupation probability of every edge.
    pub edge_probabilities: Vec<f64>,
    pub matchings: usize,
}

/// Calls `f` on every perfect matching (as a list of edge ids).
pub fn for_each_matching(graph: &FisherGraph, mut f: impl FnMut(&[usize])) -> Result<()> {
    let nv = graph.vertices().len();
    if nv > MAX_DIMER_VERTICES {
        return Err(Error::TooLarge(format!("{nv} vertices exceed {MAX_DIMER_VERTICES}")));
    }
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); nv];
    for (k, e) in graph.edges().iter().enumerate() {
        incident[e.u].push(k);
        incident[e.v].push(k);
    }
    fn rec(
        graph: &FisherGraph,
        incident: &[Vec<usize>],
        used: &mut [bool],
        chosen: &mut Vec<usize>,
        f: &mut dyn FnMut(&[usize]),
    ) {
        let Some(v) = used.iter().position(|&u| !u) else {
            f(chosen);
            return;
        };
        for &k in &incident[v] {
            let e = &graph.edges()[k];
            let other = if e.u == v { e.v } else { e.u };
            if !used[other] {
                used[v] = true;
                used[other] = true;
                chosen.push(k);
                rec(graph, incident, used, chosen, f);
                chosen.pop();
                used[v] = false;
                used[other] = false;
            }
        }
    }
    rec(graph, &incident, &mut vec![false; nv], &mut Vec::new(), &mut f);
    Ok(())
}

/// Exhaustive perfect-matching sums with homology-class counters.
pub fn enumerate_dimer(graph: &FisherGraph) -> Result<DimerEnumeration> {
    let mut sector = [[CompensatedSum::default(); 2]; 2];
    let mut per_edge = vec![CompensatedSum::default(); graph.edges().len()];
    let mut count = 0;
    for_each_matching(graph, |m| {
        let w: f64 = m.iter().map(|&e| graph.edges()[e].weight).product();
        let (hx, hy) = graph.homology_class(m);
        sector[hx][hy].add(w);
        for &e in m {
            per_edge[e].add(w);
        }
        count += 1;
    })?;
    let sector_z = sector.map(|row| row.map(|s| s.value()));
    let z = sector_z.iter().flatten().sum::<f64>();
    Ok(DimerEnumeration {
        z,
        sector_z,
        edge_probabilities: per_edge.iter().map(|s| s.value() / z).collect(),
        matchings: count,
    })
}

/// Probability that all of `edges` are occupied, by enumeration.
pub fn dimer_joint_probability(graph: &FisherGraph, edges: &[usize]) -> Result<f64> {
    let mut hit = CompensatedSum::default();
    let mut all = CompensatedSum::default();
    for_each_matching(graph, |m| {
        let w: f64 = m.iter().map(|&e| graph.edges()[e].weight).product();
        all.add(w);
        if edges.iter().all(|e| m.contains(e)) {
            hit.add(w);
        }
    })?;
    Ok(hit.value() / all.value())
}

/// Largest number of spins in a transfer-matrix row.
pub const MAX_TRANSFER_WIDTH: usize = 16;
/// Largest row width for which dense transfer matrices are formed.
pub const MAX_DENSE_TRANSFER_WIDTH: usize = 10;

/// Transfer matrix carrying a row of `W = t m` spins (periodic
/// horizontally) up through one period of `n` rows:
/// `Q = D_0^{1/2} H_0 D_1 H_1 ... D_{n-1} H_{n-1} D_0^{1/2}`, with `D_r`
/// the horizontal Boltzmann factors inside row `r` and `H_r` the vertical
/// ones between rows `r` and `r + 1`. Bit `x` of a state is set when spin
/// `x` is `-1`.
#[derive(Clone, Debug)]
pub struct TransferMatrix {
    width: usize,
    rows: usize,
    /// `exp(beta sum_x Jh s_x s_{x+1})` per row and state (square root for row 0).
    row_factor: Vec<Vec<f64>>,
    /// `(exp(beta Jv), exp(-beta Jv))` per row and column.
    vertical: Vec<Vec<(f64, f64)>>,
}

/// Which infinite-cylinder limit [`TransferMatrix::cylinder_corr`] returns.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CylinderPhase {
    /// The spin-flip symmetric limit of the cylinder itself.
    Symmetric,
    /// The symmetric limit with the odd top eigenvector treated as
    /// degenerate with the even one, i.e. with the finite-width tunneling
    /// between the two ordered states removed. Meaningful below the
    /// critical temperature, where that gap closes as the width grows.
    Ordered,
}

impl TransferMatrix {
    pub fn new(model: &PeriodicIsingModel, beta: f64, t: usize) -> Result<Self> {
        let width = t * model.m();
        if width == 0 || width > MAX_TRANSFER_WIDTH {
            return Err(Error::TooLarge(format!(
                "row of {width} spins outside 1..={MAX_TRANSFER_WIDTH}"
            )));
        }
        let rows = model.n();
        let states = 1usize << width;
        let row_factor = (0..rows)
            .map(|r| {
                let scale = if r == 0 { 0.5 } else { 1.0 };
                (0..states)
                    .map(|st| {
                        let e: f64 = (0..width)
                            .map(|x| {
                                let agree = (st >> x ^ st >> ((x + 1) % width)) & 1 == 0;
                                let s = if agree { 1.0 } else { -1.0 };
                                model.jh_at(x, r) * s
                            })
                            .sum();
                        (scale * beta * e).exp()
                    })
                    .collect()
            })
            .collect();
        let vertical = (0..rows)
            .map(|r| {
                (0..width)
                    .map(|x| {
                        let j = model.jv_at(x, r);
                        ((beta * j).exp(), (-beta * j).exp())
                    })
                    .collect()
            })
            .collect();
        Ok(TransferMatrix {
            width,
            rows,
            row_factor,
            vertical,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn states(&self) -> usize {
        1 << self.width
    }

    fn apply_vertical(&self, r: usize, v: &mut [f64]) {
        for x in 0..self.width {
            let (same, diff) = self.vertical[r][x];
            let bit = 1 << x;
            for st in 0..v.len() {
                if st & bit == 0 {
                    let (a, b) = (v[st], v[st | bit]);
                    v[st] = same * a + diff * b;
                    v[st | bit] = diff * a + same * b;
                }
            }
        }
    }

    fn apply_diag(&self, r: usize, v: &mut [f64]) {
        for (x, f) in v.iter_mut().zip(&self.row_factor[r]) {
            *x *= f;
        }
    }

    /// `Q v`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let mut out = v.to_vec();
        self.apply_diag(0, &mut out);
        for r in (0..self.rows).rev() {
            self.apply_vertical(r, &mut out);
            if r > 0 {
                self.apply_diag(r, &mut out);
            }
        }
        self.apply_diag(0, &mut out);
        out
    }

    /// `Q^T v`.
    pub fn apply_transpose(&self, v: &[f64]) -> Vec<f64> {
        let mut out = v.to_vec();
        self.apply_diag(0, &mut out);
        for r in 0..self.rows {
            if r > 0 {
                self.apply_diag(r, &mut out);
            }
            self.apply_vertical(r, &mut out);
        }
        self.apply_diag(0, &mut out);
        out
    }

    /// Dense `Q`, for rows of at most [`MAX_DENSE_TRANSFER_WIDTH`] spins.
    pub fn dense(&self) -> Result<DenseMatrix<f64>> {
        if self.width > MAX_DENSE_TRANSFER_WIDTH {
            return Err(Error::TooLarge(format!("dense transfer matrix of width {}", self.width)));
        }
        let n = self.states();
        let mut q = DenseMatrix::zeros(n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            let col = self.apply(&e);
            e[j] = 0.0;
            for (i, c) in col.into_iter().enumerate() {
                q[(i, j)] = c;
            }
        }
        Ok(q)
    }

    /// `+1`/`-1` value of spin `x` in each state.
    fn spin(&self, x: usize) -> Vec<f64> {
        (0..self.states())
            .map(|st| if st >> x & 1 == 0 { 1.0 } else { -1.0 })
            .collect()
    }

    /// Top eigenpair of `Q` (or `Q^T`) restricted to the spin-flip even
    /// (`parity = +1`) or odd (`parity = -1`) sector, by power iteration.
    fn top_eigenpair(&self, parity: f64, transpose: bool) -> Result<(f64, Vec<f64>)> {
        let n = self.states();
        let flip = n - 1;
        let project = |v: &mut Vec<f64>| {
            let p: Vec<f64> = (0..n).map(|s| 0.5 * (v[s] + parity * v[s ^ flip])).collect();
            *v = p;
        };
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let mut v: Vec<f64> = (0..n)
            .map(|s| 1.0 + 0.5 * ((s as f64 * 0.618_033_988_749_895).fract() - 0.5))
            .collect();
        project(&mut v);
        let nv = norm(&v);
        v.iter_mut().for_each(|x| *x /= nv);
        let mut lambda = 0.0;
        for _ in 0..200_000 {
            let mut next = if transpose {
                self.apply_transpose(&v)
            } else {
                self.apply(&v)
            };
            project(&mut next);
            let l = norm(&next);
            next.iter_mut().for_each(|x| *x /= l);
            let diff = next
                .iter()
                .zip(&v)
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            v = next;
            lambda = l;
            if diff < 1e-14 {
                return Ok((lambda, v));
            }
        }
        Err(Error::NotConverged(format!(
            "power iteration on width {} (last eigenvalue {lambda})",
            self.width
        )))
    }

    /// `<s_(0,0) s_(dx, i n)>` on the infinite cylinder.
    pub fn cylinder_corr(&self, i: usize, dx: usize, phase: CylinderPhase) -> Result<f64> {
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let (l1, r1) = self.top_eigenpair(1.0, false)?;
        let (_, left1) = self.top_eigenpair(1.0, true)?;
        let sa = self.spin(0);
        let sb = self.spin(dx % self.width);
        let mut x: Vec<f64> = sb.iter().zip(&r1).map(|(s, v)| s * v).collect();
        for _ in 0..i {
            x = self.apply(&x);
            x.iter_mut().for_each(|v| *v /= l1);
        }
        let la: Vec<f64> = sa.iter().zip(&left1).map(|(s, v)| s * v).collect();
        let mut corr = dot(&la, &x) / dot(&left1, &r1);
        if phase == CylinderPhase::Ordered && i > 0 {
            let (l2, r2) = self.top_eigenpair(-1.0, false)?;
            let (_, left2) = self.top_eigenpair(-1.0, true)?;
            let lb: Vec<f64> = sb.iter().zip(&left2).map(|(s, v)| s * v).collect();
            let c12 = dot(&la, &r2) * dot(&lb, &r1) / (dot(&left1, &r1) * dot(&left2, &r2));
            corr += c12 * (1.0 - (l2 / l1).powi(i as i32));
        }
        Ok(corr)
    }

    /// `<s_(0,0) s_(dx, i n)>` on the torus of `layers` periods vertically,
    /// `tr(S_0 Q^i S_dx Q^{layers - i}) / tr(Q^layers)`.
    pub fn torus_corr(&self, layers: usize, i: usize, dx: usize) -> Result<f64> {
        if i > layers || layers == 0 {
            return Err(Error::InvalidArgument(format!("separation {i} on {layers} layers")));
        }
        let q = self.dense()?;
        let n = q.dim();
        let pow = |k: usize| -> DenseMatrix<f64> {
            let mut acc = DenseMatrix::identity(n);
            let mut base = q.scale(1.0 / q.max_abs());
            let mut k = k;
            // Scalar factors cancel in the ratio below, so both factors
            // are rescaled freely to stay in floating-point range.
            while k > 0 {
                if k & 1 == 1 {
                    acc = acc.matmul(&base);
                    acc = acc.scale(1.0 / acc.max_abs());
                }
                base = base.matmul(&base);
                base = base.scale(1.0 / base.max_abs());
                k >>= 1;
            }
            acc
        };
        let (qa, qb) = (pow(i), pow(layers - i));
        let (sa, sb) = (self.spin(0), self.spin(dx % self.width));
        let mut num = 0.0;
        let mut den = 0.0;
        for a in 0..n {
            for b in 0..n {
                let term = qa[(a, b)] * qb[(b, a)];
                num += sa[a] * sb[b] * term;
                den += term;
            }
        }
        Ok(num / den)
    }
}

/// `<s_(0,0) s_(0, i n)>` on the infinite cylinder of circumference `t`
/// fundamental domains.
pub fn transfer_corr(
    model: &PeriodicIsingModel,
    beta: f64,
    t: usize,
    i: usize,
    phase: CylinderPhase,
) -> Result<f64> {
    TransferMatrix::new(model, beta, t)?.cylinder_corr(i, 0, phase)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut s = CompensatedSum::default();
        s.add(1e16);
        for _ in 0..1000 {
            s.add(1.0);
        }
        s.add(-1e16);
        assert_eq!(s.value(), 1000.0);
    }

    #[test]
    fn single_site_enumeration() {
        let m = PeriodicIsingModel::homogeneous(1.0).unwrap();
        let e = enumerate_spin(&m, 0.7, 1, 1, Boundary::Torus, 0.0).unwrap();
        assert_eq!(e.correlations, vec![1.0]);
        assert!((e.z - 2.0 * (1.4f64).exp()).abs() < 1e-12);
        assert_eq!(e.q_coefficients, vec![1.0, 1.0]);
        let r = lee_yang_check(&m, 0.7, 1, 1, Boundary::Torus).unwrap();
        assert_eq!(r.roots.len(), 1);
        assert!((r.roots[0] - C64::new(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn infinite_temperature() {
        let m = PeriodicIsingModel::homogeneous(1.0).unwrap();
        let e = enumerate_spin(&m, 0.0, 3, 2, Boundary::Torus, 0.0).unwrap();
        assert_eq!(e.z, 64.0);
        for a in 0..6 {
            for b in 0..6 {
                let expect = if a == b { 1.0 } else { 0.0 };
                assert!((e.correlations[a * 6 + b] - expect).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn free_two_by_two_matches_polygon_sum() {
        let m = PeriodicIsingModel::homogeneous(1.0).unwrap();
        let e = enumerate_spin(&m, 0.3, 2, 2, Boundary::Free, 0.0).unwrap();
        let p = high_temp_polygon_sum(&m, 0.3, 2, 2, Boundary::Free).unwrap();
        assert!((e.z - p).abs() < 1e-12 * p);
        let t = 0.3f64.tanh();
        let closed = 16.0 * 0.3f64.cosh().powi(4) * (1.0 + t.powi(4));
        assert!((p - closed).abs() < 1e-12 * p);
    }

    #[test]
    fn field_enters_through_fugacity() {
        let m = PeriodicIsingModel::new(2, 1, vec![vec![1.0], vec![0.6]], vec![vec![0.8], vec![1.1]]).unwrap();
        let (beta, h) = (0.4, 0.25);
        let e = enumerate_spin(&m, beta, 1, 2, Boundary::Torus, h).unwrap();
        let e0 = enumerate_spin(&m, beta, 1, 2, Boundary::Torus, 0.0).unwrap();
        let bonds = lattice_bonds(&m, 1, 2, Boundary::Torus);
        let sites = 4.0;
        let ground = bonds.iter().map(|b| beta * b.coupling).sum::<f64>() + h * sites;
        let zf = (-2.0 * h).exp();
        let q: f64 = e0
            .q_coefficients
            .iter()
            .enumerate()
            .map(|(k, c)| c * zf.powi(k as i32))
            .sum();
        assert!((e.z - ground.exp() * q).abs() < 1e-12 * e.z);
    }

    #[test]
    fn polynomial_roots_of_known_polynomials() {
        let r = polynomial_roots(&[2.0, -3.0, 1.0]);
        let mut re: Vec<f64> = r.iter().map(|z| z.re).collect();
        re.sort_by(f64::total_cmp);
        assert!((re[0] - 1.0).abs() < 1e-14 && (re[1] - 2.0).abs() < 1e-14);
        let r = polynomial_roots(&[1.0, 0.0, 0.0, 0.0, 1.0]);
        assert!(r.iter().all(|z| (z.norm() - 1.0).abs() < 1e-14));
    }

    #[test]
    fn transfer_vertical_single_row_closed_form() {
        // A 1 x 1 period on a width-1 cylinder is a chain of spins each with
        // a self-bond; the vertical correlation is tanh(beta J)^i.
        let m = PeriodicIsingModel::anisotropic(0.7, 1.3).unwrap();
        let c = transfer_corr(&m, 0.5, 1, 3, CylinderPhase::Symmetric).unwrap();
        assert!((c - (0.65f64).tanh().powi(3)).abs() < 1e-13);
        assert!((transfer_corr(&m, 0.5, 1, 0, CylinderPhase::Symmetric).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn transpose_is_adjoint() {
        let m = PeriodicIsingModel::new(2, 3, vec![vec![0.3, 1.0, 2.0], vec![1.5, 0.4, 0.9]], vec![vec![1.2, 0.5, 0.8], vec![0.7, 1.9, 0.6]])
            .unwrap();
        let tm = TransferMatrix::new(&m, 0.4, 2).unwrap();
        let q = tm.dense().unwrap();
        let n = tm.states();
        let v: Vec<f64> = (0..n).map(|k| (k as f64 * 0.37).sin()).collect();
        let qt = q.transpose().matvec(&v);
        let got = tm.apply_transpose(&v);
        for (a, b) in qt.iter().zip(&got) {
            assert!((a - b).abs() < 1e-12 * a.abs().max(1.0));
        }
    }
}
