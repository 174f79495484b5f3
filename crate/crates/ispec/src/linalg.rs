//! Dense numerical kernels: LU determinants and solves over real or complex
//! scalars, real skew-symmetric Pfaffians, and trapezoidal Fourier
//! coefficients of matrix-valued functions on the unit circle.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Div, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Relative pivot size below which a factorization is reported as singular.
pub const SINGULAR_THRESHOLD: f64 = 1e-12;

/// Field operations needed by the dense kernels.
pub trait Scalar:
    Copy
    + Debug
    + Send
    + Sync
    + PartialEq
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
{
    fn zero() -> Self;
    fn one() -> Self;
    fn from_f64(x: f64) -> Self;
    fn modulus(self) -> f64;
    fn conj(self) -> Self;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_f64(x: f64) -> Self {
        x
    }
    fn modulus(self) -> f64 {
        self.abs()
    }
    fn conj(self) -> Self {
        self
    }
}

impl Scalar for C64 {
    fn zero() -> Self {
        C64::new(0.0, 0.0)
    }
    fn one() -> Self {
        C64::new(1.0, 0.0)
    }
    fn from_f64(x: f64) -> Self {
        C64::new(x, 0.0)
    }
    fn modulus(self) -> f64 {
        self.norm()
    }
    fn conj(self) -> Self {
        Complex64::conj(&self)
    }
}

/// Square matrix stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix<T> {
    dim: usize,
    data: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn zeros(dim: usize) -> Self {
        DenseMatrix {
            dim,
            data: vec![T::zero(); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_fn(dim, |i, j| if i == j { T::one() } else { T::zero() })
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        DenseMatrix { dim, data }
    }

    /// Builds a matrix from rows; every row must have `rows.len()` entries.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let dim = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch(format!(
                "row of length {} in a {dim}x{dim} matrix",
                bad.len()
            )));
        }
        Ok(DenseMatrix {
            dim,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)])
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> DenseMatrix<U> {
        DenseMatrix {
            dim: self.dim,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn scale(&self, s: T) -> Self {
        self.map(|x| x * s)
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "matmul dimension mismatch");
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[T]) -> Vec<T> {
        (0..self.dim)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .fold(T::zero(), |acc, (&a, &b)| acc + a * b)
            })
            .collect()
    }

    /// Principal submatrix on the given (ordered) index list.
    pub fn submatrix(&self, idx: &[usize]) -> Self {
        Self::from_fn(idx.len(), |i, j| self[(idx[i], idx[j])])
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.modulus()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data
            .iter()
            .map(|x| x.modulus().powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Largest `|A[i][j] + A[j][i]|`.
    pub fn skew_residual(&self) -> f64 {
        let mut r: f64 = 0.0;
        for i in 0..self.dim {
            for j in i..self.dim {
                r = r.max((self[(i, j)] + self[(j, i)]).modulus());
            }
        }
        r
    }
}

impl<T: Scalar> Index<(usize, usize)> for DenseMatrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.dim + j]
    }
}

impl<T: Scalar> IndexMut<(usize, usize)> for DenseMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.dim + j]
    }
}

impl<T: Scalar> Add for &DenseMatrix<T> {
    type Output = DenseMatrix<T>;
    fn add(self, rhs: Self) -> DenseMatrix<T> {
        assert_eq!(self.dim, rhs.dim);
        DenseMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| a + b).collect(),
        }
    }
}

impl<T: Scalar> Sub for &DenseMatrix<T> {
    type Output = DenseMatrix<T>;
    fn sub(self, rhs: Self) -> DenseMatrix<T> {
        assert_eq!(self.dim, rhs.dim);
        DenseMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| a - b).collect(),
        }
    }
}

impl DenseMatrix<f64> {
    pub fn to_complex(&self) -> DenseMatrix<C64> {
        self.map(C64::from_f64)
    }
}

/// LU factorization with partial pivoting, `P A = L U`.
#[derive(Clone, Debug)]
pub struct Lu<T> {
    lu: DenseMatrix<T>,
    perm: Vec<usize>,
    odd_permutation: bool,
    min_pivot_ratio: f64,
}

pub fn lu<T: Scalar>(a: &DenseMatrix<T>) -> Lu<T> {
    let n = a.dim;
    let scale = a.max_abs();
    let mut m = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut odd = false;
    let mut min_ratio = f64::INFINITY;
    for k in 0..n {
        let mut p = k;
        let mut best = m[(k, k)].modulus();
        for i in k + 1..n {
            let v = m[(i, k)].modulus();
            if v > best {
                best = v;
                p = i;
            }
        }
        min_ratio = min_ratio.min(if scale > 0.0 { best / scale } else { 0.0 });
        if p != k {
            for j in 0..n {
                m.data.swap(k * n + j, p * n + j);
            }
            perm.swap(k, p);
            odd = !odd;
        }
        if best == 0.0 {
            continue;
        }
        let pivot = m[(k, k)];
        for i in k + 1..n {
            let f = m[(i, k)] / pivot;
            m[(i, k)] = f;
            if f == T::zero() {
                continue;
            }
            for j in k + 1..n {
                let u = m.data[k * n + j];
                m.data[i * n + j] -= f * u;
            }
        }
    }
    if n == 0 {
        min_ratio = 1.0;
    }
    Lu {
        lu: m,
        perm,
        odd_permutation: odd,
        min_pivot_ratio: min_ratio,
    }
}

impl<T: Scalar> Lu<T> {
    pub fn det(&self) -> T {
        let mut d = if self.odd_permutation {
            -T::one()
        } else {
            T::one()
        };
        for k in 0..self.lu.dim {
            d = d * self.lu[(k, k)];
        }
        d
    }

    /// Smallest pivot magnitude relative to the largest input entry.
    pub fn min_pivot_ratio(&self) -> f64 {
        self.min_pivot_ratio
    }

    pub fn is_near_singular(&self) -> bool {
        !(self.min_pivot_ratio >= SINGULAR_THRESHOLD)
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.lu.dim;
        let mut x: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for (j, xj) in x.iter().enumerate().take(i) {
                s -= self.lu[(i, j)] * *xj;
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for (j, xj) in x.iter().enumerate().skip(i + 1) {
                s -= self.lu[(i, j)] * *xj;
            }
            x[i] = s / self.lu[(i, i)];
        }
        x
    }

    pub fn inverse(&self) -> DenseMatrix<T> {
        let n = self.lu.dim;
        let mut inv = DenseMatrix::zeros(n);
        let mut e = vec![T::zero(); n];
        for j in 0..n {
            e.iter_mut().for_each(|x| *x = T::zero());
            e[j] = T::one();
            let col = self.solve(&e);
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        inv
    }
}

/// Determinant by partial-pivot LU; a singular input yields zero.
pub fn det<T: Scalar>(a: &DenseMatrix<T>) -> T {
    lu(a).det()
}

fn checked_lu<T: Scalar>(a: &DenseMatrix<T>) -> Result<Lu<T>> {
    let f = lu(a);
    if f.is_near_singular() {
        return Err(Error::NearSingular(f.min_pivot_ratio));
    }
    Ok(f)
}

pub fn inverse<T: Scalar>(a: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    Ok(checked_lu(a)?.inverse())
}

/// Selected entries of `A^{-1}`, solving once per distinct column.
pub fn inverse_entries<T: Scalar>(a: &DenseMatrix<T>, pairs: &[(usize, usize)]) -> Result<Vec<T>> {
    let f = checked_lu(a)?;
    let n = a.dim;
    let mut cols: Vec<usize> = pairs.iter().map(|&(_, c)| c).collect();
    cols.sort_unstable();
    cols.dedup();
    let mut solved = std::collections::HashMap::with_capacity(cols.len());
    let mut e = vec![T::zero(); n];
    for &c in &cols {
        e.iter_mut().for_each(|x| *x = T::zero());
        e[c] = T::one();
        solved.insert(c, f.solve(&e));
    }
    Ok(pairs.iter().map(|&(r, c)| solved[&c][r]).collect())
}

/// Pfaffian of a real skew-symmetric matrix by Parlett–Reid style
/// elimination: at step `k` the largest entry of column `k` below the
/// diagonal is swapped into row/column `k+1`, and rows/columns beyond
/// `k+1` are reduced with a skew rank-2 update. Each swap flips the sign.
pub fn pfaffian(a: &DenseMatrix<f64>) -> Result<f64> {
    let n = a.dim;
    let resid = a.skew_residual();
    if resid > 1e-12 * a.max_abs().max(1.0) {
        return Err(Error::NotSkew(resid));
    }
    if n % 2 == 1 {
        return Err(Error::OddDimension(n));
    }
    let mut m = a.clone();
    let mut pf = 1.0;
    let mut k = 0;
    while k + 1 < n {
        let mut p = k + 1;
        let mut best = m[(k + 1, k)].abs();
        for i in k + 2..n {
            let v = m[(i, k)].abs();
            if v > best {
                best = v;
                p = i;
            }
        }
        if best == 0.0 {
            return Ok(0.0);
        }
        if p != k + 1 {
            for j in 0..n {
                m.data.swap((k + 1) * n + j, p * n + j);
            }
            for i in 0..n {
                m.data.swap(i * n + k + 1, i * n + p);
            }
            pf = -pf;
        }
        let pivot = m[(k, k + 1)];
        pf *= pivot;
        if k + 2 < n {
            let tau: Vec<f64> = (k + 2..n).map(|j| m[(k, j)] / pivot).collect();
            let col: Vec<f64> = (k + 2..n).map(|j| m[(j, k + 1)]).collect();
            for (ii, i) in (k + 2..n).enumerate() {
                for (jj, j) in (k + 2..n).enumerate() {
                    m.data[i * n + j] += tau[ii] * col[jj] - col[ii] * tau[jj];
                }
            }
        }
        k += 2;
    }
    Ok(pf)
}

/// The `j`-th of `m` equally spaced points on the unit circle.
pub fn circle_point(j: usize, m: usize) -> C64 {
    C64::from_polar(1.0, 2.0 * std::f64::consts::PI * j as f64 / m as f64)
}

/// `zeta_j^{-k}` for `zeta_j = circle_point(j, m)`, with the phase reduced
/// exactly modulo `m` before the trigonometric evaluation.
fn circle_power(j: usize, k: i64, m: usize) -> C64 {
    let r = (-(j as i64) * k).rem_euclid(m as i64) as usize;
    circle_point(r, m)
}

/// Trapezoidal Fourier coefficients `c_k = (1/M) sum_j f(zeta_j) zeta_j^{-k}`
/// of samples taken at `circle_point(j, M)`, `j = 0..M`.
pub fn fourier_coeffs_from_samples(
    samples: &[DenseMatrix<C64>],
    ks: &[i64],
) -> Vec<DenseMatrix<C64>> {
    let m = samples.len();
    assert!(m > 0, "no samples");
    let dim = samples[0].dim();
    let inv = 1.0 / m as f64;
    ks.par_iter()
        .map(|&k| {
            let mut acc = DenseMatrix::zeros(dim);
            for (j, s) in samples.iter().enumerate() {
                let ph = circle_power(j, k, m) * inv;
                for (a, &b) in acc.data.iter_mut().zip(&s.data) {
                    *a += b * ph;
                }
            }
            acc
        })
        .collect()
}

/// Samples `f` at `M` circle points (in parallel) and returns its
/// trapezoidal Fourier coefficients for the requested indices.
pub fn fourier_coeffs<F>(f: F, ks: &[i64], m: usize) -> Vec<DenseMatrix<C64>>
where
    F: Fn(C64) -> DenseMatrix<C64> + Sync,
{
    let samples: Vec<DenseMatrix<C64>> = (0..m)
        .into_par_iter()
        .map(|j| f(circle_point(j, m)))
        .collect();
    fourier_coeffs_from_samples(&samples, ks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_real(n: usize, rng: &mut impl Rng) -> DenseMatrix<f64> {
        DenseMatrix::from_fn(n, |_, _| rng.random_range(-1.0..1.0))
    }

    fn random_skew(n: usize, rng: &mut impl Rng) -> DenseMatrix<f64> {
        let mut a = DenseMatrix::zeros(n);
        for i in 0..n {
            for j in i + 1..n {
                let v = rng.random_range(-1.0..1.0);
                a[(i, j)] = v;
                a[(j, i)] = -v;
            }
        }
        a
    }

    fn cofactor_det(a: &DenseMatrix<f64>) -> f64 {
        let n = a.dim();
        if n == 1 {
            return a[(0, 0)];
        }
        (0..n)
            .map(|j| {
                let minor = DenseMatrix::from_fn(n - 1, |r, c| a[(r + 1, if c < j { c } else { c + 1 })]);
                let s = if j % 2 == 0 { 1.0 } else { -1.0 };
                s * a[(0, j)] * cofactor_det(&minor)
            })
            .sum()
    }

    #[test]
    fn det_identity_and_diagonal() {
        assert_eq!(det(&DenseMatrix::<f64>::identity(5)), 1.0);
        let mut d = DenseMatrix::<C64>::zeros(2);
        d[(0, 0)] = C64::new(2.0, 0.0);
        d[(1, 1)] = C64::new(0.0, 3.0);
        let v = det(&d);
        assert!((v - C64::new(0.0, 6.0)).norm() < 1e-15);
    }

    #[test]
    fn det_matches_cofactor_expansion() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let a = random_real(6, &mut rng);
            let exact = cofactor_det(&a);
            assert!((det(&a) - exact).abs() < 1e-10 * exact.abs().max(1e-3));
        }
    }

    #[test]
    fn singular_det_is_zero() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert_eq!(det(&a), 0.0);
        assert!(matches!(inverse(&a), Err(Error::NearSingular(_))));
    }

    #[test]
    fn inverse_entries_basic() {
        let id = DenseMatrix::<f64>::identity(3);
        let e = inverse_entries(&id, &[(0, 0), (0, 1), (2, 2)]).unwrap();
        assert_eq!(e, vec![1.0, 0.0, 1.0]);
        let d = DenseMatrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 4.0]]).unwrap();
        assert_eq!(inverse_entries(&d, &[(1, 1)]).unwrap(), vec![0.25]);
    }

    #[test]
    fn inverse_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = random_real(6, &mut rng);
        let inv = inverse(&a).unwrap();
        let r = &a.matmul(&inv) - &DenseMatrix::identity(6);
        assert!(r.max_abs() < 1e-10);
    }

    #[test]
    fn pfaffian_small_cases() {
        let a = DenseMatrix::from_rows(&[vec![0.0, 2.5], vec![-2.5, 0.0]]).unwrap();
        assert_eq!(pfaffian(&a).unwrap(), 2.5);
        let (a12, a13, a14, a23, a24, a34) = (1.3, -0.7, 2.1, 0.4, -1.9, 0.8);
        let a = DenseMatrix::from_rows(&[
            vec![0.0, a12, a13, a14],
            vec![-a12, 0.0, a23, a24],
            vec![-a13, -a23, 0.0, a34],
            vec![-a14, -a24, -a34, 0.0],
        ])
        .unwrap();
        let exact = a12 * a34 - a13 * a24 + a14 * a23;
        assert!((pfaffian(&a).unwrap() - exact).abs() < 1e-14);
    }

    #[test]
    fn pfaffian_squares_to_det() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let a = random_skew(8, &mut rng);
            let pf = pfaffian(&a).unwrap();
            let d = det(&a);
            assert!((pf * pf - d).abs() < 1e-9 * d.abs());
        }
    }

    #[test]
    fn pfaffian_sign_flips_under_swap() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_skew(6, &mut rng);
        let mut idx: Vec<usize> = (0..6).collect();
        idx.swap(1, 4);
        let b = a.submatrix(&idx);
        assert!((pfaffian(&a).unwrap() + pfaffian(&b).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn pfaffian_rejects_bad_input() {
        let a = DenseMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert!(matches!(pfaffian(&a), Err(Error::NotSkew(_))));
        let z = DenseMatrix::<f64>::zeros(3);
        assert!(matches!(pfaffian(&z), Err(Error::OddDimension(3))));
    }

    #[test]
    fn fourier_of_constant_and_monomial() {
        let c = DenseMatrix::from_rows(&[
            vec![C64::new(1.0, 2.0), C64::new(0.5, 0.0)],
            vec![C64::new(-3.0, 0.0), C64::new(0.0, -1.0)],
        ])
        .unwrap();
        let ks: Vec<i64> = (-3..=3).collect();
        let co = fourier_coeffs(|_| c.clone(), &ks, 16);
        for (k, m) in ks.iter().zip(&co) {
            let expect = if *k == 0 { c.clone() } else { DenseMatrix::zeros(2) };
            assert!((m - &expect).max_abs() < 1e-14);
        }
        let co = fourier_coeffs(|z| c.scale(z), &ks, 16);
        for (k, m) in ks.iter().zip(&co) {
            let expect = if *k == 1 { c.clone() } else { DenseMatrix::zeros(2) };
            assert!((m - &expect).max_abs() < 1e-14);
        }
    }

    #[test]
    fn fourier_exact_on_trig_polynomials() {
        let m = 16;
        let f = |z: C64| {
            let v = C64::new(0.3, 0.0) + z.powi(3) * 2.0 - z.powi(-7) * C64::new(0.0, 1.5);
            DenseMatrix::from_rows(&[vec![v]]).unwrap()
        };
        let ks: Vec<i64> = (-7..=7).collect();
        let co = fourier_coeffs(f, &ks, m);
        for (k, c) in ks.iter().zip(&co) {
            let expect = match k {
                0 => C64::new(0.3, 0.0),
                3 => C64::new(2.0, 0.0),
                -7 => C64::new(0.0, -1.5),
                _ => C64::new(0.0, 0.0),
            };
            assert!((c[(0, 0)] - expect).norm() < 1e-14);
        }
    }

    proptest::proptest! {
        #[test]
        fn prop_pfaffian_squared_is_det(seed in 0u64..1000, half in 1usize..5) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_skew(2 * half, &mut rng);
            let pf = pfaffian(&a).unwrap();
            let d = det(&a);
            proptest::prop_assert!((pf * pf - d).abs() <= 1e-9 * d.abs().max(1e-12));
        }
    }
}
