//! Spin-spin correlations along the vertical line through column 0 as block
//! Toeplitz determinants, their Widom limit, dimer edge probabilities and
//! exponential decay fits.
//!
//! The symbol is assembled from the inverse Kasteleyn operator restricted to
//! the `U` and `D` terminals of the gadgets on the line. Removing a vertical
//! bond of weight `tau` is compensated by the `tau / (1 - tau^2)` entries, and
//! the squared correlation over `N` sites is
//! `prod (1 - tau^2)^2 * det T_N[psi]` with `T_N[psi]_{ij} = psi_{i-j}`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fishergraph::{Role, TEMPLATE};
use crate::linalg::{self, circle_point, DenseMatrix, C64};
use crate::model::{PeriodicIsingModel, WeightKind};
use crate::spectral::{self, KasteleynOperator};

pub const DEFAULT_GRID: usize = 256;
pub const DEFAULT_K_MAX: usize = 64;
/// Quadrature points per direction for infinite-volume edge statistics.
pub const DEFAULT_EDGE_GRID: usize = 128;

/// Matrix Fourier coefficients of the correlation symbol and of its inverse.
#[derive(Clone, Debug)]
pub struct ToeplitzSymbol {
    op: KasteleynOperator,
    /// Vertex index and domain offset of each row of the symbol.
    terminals: Vec<(usize, i32)>,
    correction: DenseMatrix<C64>,
    line_weights: Vec<f64>,
    grid: usize,
    k_max: usize,
    coeffs: Vec<DenseMatrix<C64>>,
    inv_coeffs: Vec<DenseMatrix<C64>>,
    geometric_mean: f64,
}

/// Builds the symbol for `model` at `beta` from `grid` circle points in each
/// direction, keeping coefficients `|k| <= k_max`.
pub fn build_symbol(model: &PeriodicIsingModel, beta: f64, grid: usize, k_max: usize) -> Result<ToeplitzSymbol> {
    if grid < 8 || k_max == 0 || 2 * k_max >= grid {
        return Err(Error::InvalidArgument(format!(
            "symbol grid {grid} must be at least 8 and exceed 2 * k_max = {}",
            2 * k_max
        )));
    }
    let op = spectral::assemble(model, beta, WeightKind::HighTemp)?;
    let (m, n) = (model.m(), model.n());
    let vid = |y: usize, role: Role| (y * m) * 6 + role as usize;
    let mut terminals: Vec<(usize, i32)> = (0..n).map(|r| (vid(r, Role::U), 0)).collect();
    terminals.extend((1..=n).map(|r| (vid(r % n, Role::D), i32::from(r == n))));
    let weights = model.weights(beta, WeightKind::HighTemp)?;
    let line_weights: Vec<f64> = (0..n).map(|r| weights.tv_at(0, r)).collect();
    let mut correction = DenseMatrix::zeros(2 * n);
    for (r, &t) in line_weights.iter().enumerate() {
        let c = t / (1.0 - t * t);
        correction[(r, n + r)] = C64::new(-c, 0.0);
        correction[(n + r, r)] = C64::new(c, 0.0);
    }
    let mut symbol = ToeplitzSymbol {
        op,
        terminals,
        correction,
        line_weights,
        grid,
        k_max,
        coeffs: Vec::new(),
        inv_coeffs: Vec::new(),
        geometric_mean: 0.0,
    };
    let samples: Vec<DenseMatrix<C64>> = (0..grid)
        .into_par_iter()
        .map(|j| symbol.line_matrix(circle_point(j, grid)))
        .collect::<Result<_>>()?;
    let inverses: Vec<DenseMatrix<C64>> = samples.iter().map(linalg::inverse).collect::<Result<_>>()?;
    let ks: Vec<i64> = (-(k_max as i64)..=k_max as i64).collect();
    // psi_k is the coefficient of zeta^{-k} in the line matrix.
    let mut f = linalg::fourier_coeffs_from_samples(&samples, &ks);
    let mut g = linalg::fourier_coeffs_from_samples(&inverses, &ks);
    f.reverse();
    g.reverse();
    let log_mean = samples.iter().map(|s| linalg::det(s).ln()).sum::<C64>() / grid as f64;
    symbol.coeffs = f;
    symbol.inv_coeffs = g;
    symbol.geometric_mean = log_mean.exp().re;
    Ok(symbol)
}

impl ToeplitzSymbol {
    /// Period `l0` of the couplings along the line.
    pub fn l0(&self) -> usize {
        self.line_weights.len()
    }

    pub fn block_dim(&self) -> usize {
        2 * self.l0()
    }

    pub fn line_weights(&self) -> &[f64] {
        &self.line_weights
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn grid(&self) -> usize {
        self.grid
    }

    /// `prod_l (1 - tau_l^2)^2` over one period of the line.
    pub fn weight_factor(&self) -> f64 {
        self.line_weights.iter().map(|t| (1.0 - t * t).powi(2)).product()
    }

    /// `psi_k`, zero outside the stored band.
    pub fn coeff(&self, k: i64) -> Option<&DenseMatrix<C64>> {
        band(&self.coeffs, self.k_max, k)
    }

    /// Fourier coefficient `k` of the pointwise inverse `psi^{-1}`.
    pub fn inv_coeff(&self, k: i64) -> Option<&DenseMatrix<C64>> {
        band(&self.inv_coeffs, self.k_max, k)
    }

    /// `G[psi] = exp((1/2 pi) int log det psi)`.
    pub fn geometric_mean(&self) -> f64 {
        self.geometric_mean
    }

    /// `psi(zeta) = sum_k psi_k zeta^k`, evaluated directly by quadrature in
    /// the horizontal phase rather than from the truncated coefficients.
    pub fn eval(&self, zeta: C64) -> Result<DenseMatrix<C64>> {
        self.line_matrix(zeta.inv())
    }

    /// Terminal block of the inverse operator averaged over the horizontal
    /// phase, with the removed-bond corrections added.
    fn line_matrix(&self, z: C64) -> Result<DenseMatrix<C64>> {
        let dim = self.terminals.len();
        let mut acc: DenseMatrix<C64> = DenseMatrix::zeros(dim);
        for j in 0..self.grid {
            let k = self.op.eval(z, circle_point(j, self.grid));
            let f = linalg::lu(&k);
            if f.is_near_singular() {
                return Err(Error::NearSingular(f.min_pivot_ratio()));
            }
            let mut e = vec![C64::new(0.0, 0.0); k.dim()];
            for (b, &(vb, _)) in self.terminals.iter().enumerate() {
                e[vb] = C64::new(1.0, 0.0);
                let col = f.solve(&e);
                e[vb] = C64::new(0.0, 0.0);
                for (a, &(va, _)) in self.terminals.iter().enumerate() {
                    acc[(a, b)] += col[va];
                }
            }
        }
        let inv = 1.0 / self.grid as f64;
        Ok(DenseMatrix::from_fn(dim, |a, b| {
            let shift = self.terminals[a].1 - self.terminals[b].1;
            acc[(a, b)] * inv * z.powi(shift) + self.correction[(a, b)]
        }))
    }
}

fn band(v: &[DenseMatrix<C64>], k_max: usize, k: i64) -> Option<&DenseMatrix<C64>> {
    if k.unsigned_abs() as usize > k_max {
        None
    } else {
        Some(&v[(k + k_max as i64) as usize])
    }
}

/// Square matrix of `blocks x blocks` blocks with block `(i, j)` given by `f`.
fn block_matrix(
    blocks: usize,
    bd: usize,
    f: impl Fn(usize, usize) -> Option<DenseMatrix<C64>>,
) -> DenseMatrix<C64> {
    let mut out = DenseMatrix::zeros(blocks * bd);
    for i in 0..blocks {
        for j in 0..blocks {
            if let Some(b) = f(i, j) {
                for r in 0..bd {
                    for c in 0..bd {
                        out[(i * bd + r, j * bd + c)] = b[(r, c)];
                    }
                }
            }
        }
    }
    out
}

fn window(a: &DenseMatrix<C64>, dim: usize) -> DenseMatrix<C64> {
    DenseMatrix::from_fn(dim, |i, j| a[(i, j)])
}

/// `T_blocks[psi]` with block `(i, j)` equal to `psi_{i-j}`.
pub fn toeplitz_matrix(symbol: &ToeplitzSymbol, blocks: usize) -> DenseMatrix<C64> {
    block_matrix(blocks, symbol.block_dim(), |i, j| symbol.coeff(i as i64 - j as i64).cloned())
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationResult {
    /// Site separation along the line.
    pub n: usize,
    /// `<sigma_00 sigma_0N>^2`, clipped at zero.
    pub corr_sq: f64,
    /// Nonnegative square root of `corr_sq`.
    pub corr: f64,
    /// Magnitude removed by clipping a negative round-off value, else zero.
    pub clipped: f64,
    pub widom_limit: Option<f64>,
    pub fitted_alpha: Option<f64>,
}

/// Squared correlation `<sigma_00 sigma_0N>^2` from the `N / l0` block
/// Toeplitz determinant.
pub fn spin_corr_sq(symbol: &ToeplitzSymbol, n: usize) -> Result<CorrelationResult> {
    let l0 = symbol.l0();
    if n % l0 != 0 {
        return Err(Error::InvalidArgument(format!("separation {n} is not a multiple of the period {l0}")));
    }
    let blocks = n / l0;
    let raw = if blocks == 0 {
        1.0
    } else {
        let t = toeplitz_matrix(symbol, blocks);
        let f = linalg::lu(&t);
        if f.is_near_singular() {
            return Err(Error::NearSingular(f.min_pivot_ratio()));
        }
        symbol.weight_factor().powi(blocks as i32) * f.det().re
    };
    let (corr_sq, clipped) = if raw < 0.0 { (0.0, -raw) } else { (raw, 0.0) };
    Ok(CorrelationResult {
        n,
        corr_sq,
        corr: corr_sq.sqrt(),
        clipped,
        widom_limit: None,
        fitted_alpha: None,
    })
}

/// [`spin_corr_sq`] for several separations in parallel; output order
/// follows `ns`.
pub fn spin_corr_series(symbol: &ToeplitzSymbol, ns: &[usize]) -> Result<Vec<CorrelationResult>> {
    ns.par_iter().map(|&n| spin_corr_sq(symbol, n)).collect()
}

/// Builds the symbol with default resolution and evaluates one separation.
pub fn spin_corr_sq_at(model: &PeriodicIsingModel, beta: f64, n: usize) -> Result<CorrelationResult> {
    spin_corr_sq(&build_symbol(model, beta, DEFAULT_GRID, DEFAULT_K_MAX)?, n)
}

/// `H[a]_{ij} = a_{i+j+1}` on a `blocks x blocks` window.
fn hankel(blocks: usize, bd: usize, coeff: impl Fn(i64) -> Option<DenseMatrix<C64>>) -> DenseMatrix<C64> {
    block_matrix(blocks, bd, |i, j| coeff((i + j + 1) as i64))
}

/// Widom constants `(G, E)` with `det T_N[psi] ~ E G^{N / l0}`, where
/// `E = det(I - H[psi] H[psi~^{-1}])` on a `truncation`-block window.
pub fn widom_limit(symbol: &ToeplitzSymbol, truncation: usize) -> Result<(f64, f64)> {
    let bd = symbol.block_dim();
    let hp = hankel(truncation, bd, |k| symbol.coeff(k).cloned());
    let hq = hankel(truncation, bd, |k| symbol.inv_coeff(-k).cloned());
    let prod = hp.matmul(&hq);
    let op = &DenseMatrix::identity(truncation * bd) - &prod;
    let f = linalg::lu(&op);
    if f.is_near_singular() {
        return Err(Error::NearSingular(f.min_pivot_ratio()));
    }
    Ok((symbol.geometric_mean(), f.det().re))
}

/// Frobenius norm of `(I - T[a] T[b]) - H[a] H[b~]` on a `truncation`-block
/// window, for coefficient sequences `a` and `b = a^{-1}` truncated to
/// `|k| <= truncation`. Inner sums run over every nonzero term, so the
/// residual measures only the coefficient truncation.
pub fn toeplitz_hankel_residual_of(
    bd: usize,
    truncation: usize,
    a: impl Fn(i64) -> Option<DenseMatrix<C64>>,
    b: impl Fn(i64) -> Option<DenseMatrix<C64>>,
) -> f64 {
    let t = truncation as i64;
    let a = |k: i64| if k.abs() > t { None } else { a(k) };
    let b = |k: i64| if k.abs() > t { None } else { b(k) };
    // T[a]_{ik} = a_{i-k} vanishes for k > i + t, so 2t + 1 inner blocks suffice.
    let inner = 2 * truncation + 1;
    let ta = block_matrix(inner, bd, |i, j| a(i as i64 - j as i64));
    let tb = block_matrix(inner, bd, |i, j| b(i as i64 - j as i64));
    let ha = hankel(inner, bd, &a);
    let hb = hankel(inner, bd, |k| b(-k));
    let tt = window(&ta.matmul(&tb), truncation * bd);
    let hh = window(&ha.matmul(&hb), truncation * bd);
    let id = DenseMatrix::identity(truncation * bd);
    (&(&id - &tt) - &hh).frobenius_norm()
}

/// Toeplitz-Hankel identity residual for the correlation symbol.
pub fn toeplitz_hankel_residual(symbol: &ToeplitzSymbol, truncation: usize) -> f64 {
    toeplitz_hankel_residual_of(
        symbol.block_dim(),
        truncation,
        |k| symbol.coeff(k).cloned(),
        |k| symbol.inv_coeff(k).cloned(),
    )
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecayFit {
    /// Decay rate: minus the slope of `log(c_N - limit)` against `N`.
    pub alpha: f64,
    /// Intercept `log K` of the fitted line.
    pub log_k: f64,
    pub r_squared: f64,
}

/// Least-squares fit of `c_N - limit ~ K exp(-alpha N)` over `(N, c_N)`.
pub fn decay_fit(series: &[(f64, f64)], limit: f64) -> Result<DecayFit> {
    if series.len() < 5 {
        return Err(Error::InvalidArgument(format!("decay fit needs at least 5 points, got {}", series.len())));
    }
    let mut pts = Vec::with_capacity(series.len());
    for &(n, c) in series {
        let r = c - limit;
        if !(r > 0.0) {
            return Err(Error::NonPositiveResidual(n as usize));
        }
        pts.push((n, r.ln()));
    }
    let len = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / len;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / len;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("decay fit needs distinct abscissae".into()));
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(DecayFit {
        alpha: -slope,
        log_k: my - slope * mx,
        r_squared,
    })
}

/// Sign of the permutation that lists `first` in order, followed by the
/// remaining indices of `0..n` in ascending order.
fn prefix_permutation_sign(first: &[usize], n: usize) -> f64 {
    let mut perm = first.to_vec();
    let mut taken = vec![false; n];
    for &v in first {
        taken[v] = true;
    }
    perm.extend((0..n).filter(|&v| !taken[v]));
    let mut seen = vec![false; n];
    let mut sign = 1.0;
    for start in 0..n {
        let mut len = 0;
        let mut j = start;
        while !seen[j] {
            seen[j] = true;
            j = perm[j];
            len += 1;
        }
        if len > 0 && len % 2 == 0 {
            sign = -sign;
        }
    }
    sign
}

/// Probability that all `edges` of a finite torus graph are occupied,
/// from the four Kasteleyn Pfaffians with the edges' rows and columns
/// removed.
pub fn torus_edge_probability(graph: &crate::fishergraph::FisherGraph, edges: &[usize]) -> Result<f64> {
    let signs = spectral::sector_signs(graph)?;
    let c = signs.coefficients();
    let nv = graph.vertices().len();
    let mut ends = Vec::with_capacity(2 * edges.len());
    for &e in edges {
        let edge = &graph.edges()[e];
        ends.push(edge.u);
        ends.push(edge.v);
    }
    let mut sorted = ends.clone();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != ends.len() {
        return Ok(0.0);
    }
    let rest: Vec<usize> = (0..nv).filter(|v| sorted.binary_search(v).is_err()).collect();
    let perm_sign = prefix_permutation_sign(&ends, nv);
    let mut restricted = 0.0;
    let mut total = 0.0;
    for (a, row) in c.iter().enumerate() {
        for (b, &cab) in row.iter().enumerate() {
            let k = graph.kasteleyn_matrix(a, b);
            let prod: f64 = edges.iter().map(|&e| graph.edge_entry(e, a, b)).product();
            let sub = if rest.is_empty() { 1.0 } else { linalg::pfaffian(&k.submatrix(&rest))? };
            restricted += cab * signs.s0 * perm_sign * prod * sub;
            total += cab * signs.s0 * linalg::pfaffian(&k)?;
        }
    }
    Ok(restricted / total)
}

/// An edge of the infinite periodic Fisher graph: template edge `template`
/// owned by the lattice site `site`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LatticeEdge {
    pub site: (i64, i64),
    pub template: usize,
}

impl LatticeEdge {
    pub fn new(x: i64, y: i64, template: usize) -> Self {
        LatticeEdge { site: (x, y), template }
    }
}

/// A vertex of the infinite graph: fundamental-domain offset and index
/// within the domain.
type DomainVertex = ((i64, i64), usize);

fn locate(op: &KasteleynOperator, x: i64, y: i64, role: Role) -> DomainVertex {
    let (m, n) = op.graph().period();
    let (m, n) = (m as i64, n as i64);
    let (lx, ly) = (x.rem_euclid(m), y.rem_euclid(n));
    ((x.div_euclid(m), y.div_euclid(n)), ((ly * m + lx) * 6) as usize + role as usize)
}

/// Entries `K^{-1}[a][b]` of the infinite-volume inverse Kasteleyn matrix
/// by double trapezoidal quadrature over the unit torus.
pub fn infinite_inverse_entries(
    op: &KasteleynOperator,
    pairs: &[(DomainVertex, DomainVertex)],
    grid: usize,
) -> Result<Vec<f64>> {
    let cols: Vec<(usize, usize)> = pairs.iter().map(|&((_, u), (_, v))| (u, v)).collect();
    let sums = (0..grid)
        .into_par_iter()
        .map(|jz| {
            let z = circle_point(jz, grid);
            let mut acc = vec![C64::new(0.0, 0.0); pairs.len()];
            for jw in 0..grid {
                let w = circle_point(jw, grid);
                let vals = linalg::inverse_entries(&op.eval(z, w), &cols)?;
                for (k, &((da, _), (db, _))) in pairs.iter().enumerate() {
                    let (dx, dy) = (db.0 - da.0, db.1 - da.1);
                    let phase = z.powi(-dy as i32) * w.powi(-dx as i32);
                    acc[k] += vals[k] * phase;
                }
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?;
    let norm = 1.0 / (grid * grid) as f64;
    Ok((0..pairs.len())
        .map(|k| sums.iter().map(|s| s[k]).sum::<C64>().re * norm)
        .collect())
}

/// Infinite-volume probability that all `edges` are occupied:
/// `prod |K_e| * |Pf (K^{-1})_E|` over the endpoints of the edges.
pub fn edge_probability(op: &KasteleynOperator, edges: &[LatticeEdge], grid: usize) -> Result<f64> {
    let graph = op.graph();
    let (m, n) = graph.period();
    let mut ends = Vec::with_capacity(2 * edges.len());
    let mut weight = 1.0;
    for e in edges {
        if e.template >= TEMPLATE.len() {
            return Err(Error::InvalidArgument(format!("edge template {} out of range", e.template)));
        }
        let (ru, rv, (ox, oy)) = TEMPLATE[e.template];
        let (x, y) = e.site;
        ends.push(locate(op, x, y, ru));
        ends.push(locate(op, x + ox as i64, y + oy as i64, rv));
        let (lx, ly) = (x.rem_euclid(m as i64) as usize, y.rem_euclid(n as i64) as usize);
        weight *= graph.edge_entry(graph.edge_id(lx, ly, e.template), 0, 0);
    }
    let mut distinct = ends.clone();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() != ends.len() {
        return Ok(0.0);
    }
    let k = ends.len();
    let pairs: Vec<_> = (0..k)
        .flat_map(|i| (i + 1..k).map(move |j| (i, j)))
        .map(|(i, j)| (ends[i], ends[j]))
        .collect();
    let vals = infinite_inverse_entries(op, &pairs, grid)?;
    let mut sub = DenseMatrix::zeros(k);
    let mut idx = 0;
    for i in 0..k {
        for j in i + 1..k {
            sub[(i, j)] = vals[idx];
            sub[(j, i)] = -vals[idx];
            idx += 1;
        }
    }
    Ok((weight * linalg::pfaffian(&sub)?).abs())
}

/// `P(e1 & e2) - P(e1) P(e2)` in infinite volume.
pub fn edge_covariance(op: &KasteleynOperator, e1: LatticeEdge, e2: LatticeEdge, grid: usize) -> Result<f64> {
    let joint = edge_probability(op, &[e1, e2], grid)?;
    let p1 = edge_probability(op, &[e1], grid)?;
    let p2 = edge_probability(op, &[e2], grid)?;
    Ok(joint - p1 * p2)
}
