//! Banded LU with partial pivoting for real and complex systems, plus a
//! few dense helpers.
//!
//! Storage follows the LAPACK `gbtrf` layout: an `n × n` matrix with `kl`
//! sub- and `ku` super-diagonals keeps `kl` extra super-diagonals for the
//! fill-in created by row interchanges.

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Result, WaveError};

/// Field element usable by the banded solver.
pub trait Scalar:
    Copy
    + Send
    + Sync
    + PartialEq
    + std::fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
{
    fn zero() -> Self;
    /// Pivot magnitude.
    fn magnitude(self) -> f64;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(self) -> f64 {
        self.abs()
    }
}

impl Scalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(self) -> f64 {
        self.norm()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BandMatrix<T> {
    n: usize,
    kl: usize,
    ku: usize,
    /// Column-major band storage with leading dimension `2 kl + ku + 1`.
    ab: Vec<T>,
}

impl<T: Scalar> BandMatrix<T> {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let ld = 2 * kl + ku + 1;
        Self {
            n,
            kl,
            ku,
            ab: vec![T::zero(); ld * n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn lower_bandwidth(&self) -> usize {
        self.kl
    }

    pub fn upper_bandwidth(&self) -> usize {
        self.ku
    }

    fn ld(&self) -> usize {
        2 * self.kl + self.ku + 1
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        // row kl + ku + i - j of column j
        (self.kl + self.ku + i - j) + j * self.ld()
    }

    /// Whether `(i, j)` lies inside the declared band.
    pub fn in_band(&self, i: usize, j: usize) -> bool {
        i < self.n && j < self.n && j <= i + self.ku && i <= j + self.kl
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        if self.in_band(i, j) {
            self.ab[self.idx(i, j)]
        } else {
            T::zero()
        }
    }

    /// Adds to an entry. Panics outside the band.
    pub fn add(&mut self, i: usize, j: usize, v: T) {
        assert!(self.in_band(i, j), "entry ({i}, {j}) outside band kl={} ku={}", self.kl, self.ku);
        let k = self.idx(i, j);
        self.ab[k] += v;
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.n);
        let mut y = vec![T::zero(); self.n];
        for j in 0..self.n {
            let xj = x[j];
            let lo = j.saturating_sub(self.ku);
            let hi = (j + self.kl).min(self.n - 1);
            for (i, yi) in y.iter_mut().enumerate().take(hi + 1).skip(lo) {
                *yi += self.ab[self.idx(i, j)] * xj;
            }
        }
        y
    }

    pub fn to_dense(&self) -> Vec<Vec<T>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j)).collect())
            .collect()
    }

    /// LU factorization with partial pivoting (unblocked `gbtf2`).
    pub fn factor(mut self) -> Result<BandLu<T>> {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        let kv = ku + kl;
        let mut pivots = vec![0usize; n];
        let mut ju = 0usize;
        // pivots below rounding level relative to the largest entry mean the
        // matrix is numerically singular
        let scale = self.ab.iter().fold(0.0f64, |m, v| m.max(v.magnitude()));
        let floor = n as f64 * f64::EPSILON * scale;
        for j in 0..n {
            let km = kl.min(n - 1 - j);
            let mut p = 0;
            let mut best = -1.0;
            for r in 0..=km {
                let m = self.ab[self.idx(j + r, j)].magnitude();
                if m > best {
                    best = m;
                    p = r;
                }
            }
            pivots[j] = j + p;
            if !(best > floor) || !best.is_finite() {
                return Err(WaveError::Solver(format!("pivot {best:e} in column {j} is at rounding level")));
            }
            ju = ju.max((j + ku + p).min(n - 1));
            if p != 0 {
                for c in j..=ju {
                    let a = self.idx(j, c);
                    let b = self.idx(j + p, c);
                    self.ab.swap(a, b);
                }
            }
            let piv = self.ab[self.idx(j, j)];
            for r in 1..=km {
                let k = self.idx(j + r, j);
                self.ab[k] = self.ab[k] / piv;
            }
            for c in j + 1..=ju {
                let t = self.ab[self.idx(j, c)];
                if t == T::zero() {
                    continue;
                }
                for r in 1..=km {
                    debug_assert!(c <= j + r + kv);
                    let l = self.ab[self.idx(j + r, j)];
                    let k = self.idx(j + r, c);
                    self.ab[k] -= l * t;
                }
            }
        }
        Ok(BandLu { a: self, pivots })
    }
}

/// Factored band matrix.
#[derive(Debug, Clone)]
pub struct BandLu<T> {
    a: BandMatrix<T>,
    pivots: Vec<usize>,
}

impl<T: Scalar> BandLu<T> {
    pub fn n(&self) -> usize {
        self.a.n
    }

    pub fn solve_in_place(&self, b: &mut [T]) {
        let a = &self.a;
        let n = a.n;
        assert_eq!(b.len(), n);
        for j in 0..n {
            let p = self.pivots[j];
            if p != j {
                b.swap(j, p);
            }
            let km = a.kl.min(n - 1 - j);
            let bj = b[j];
            for r in 1..=km {
                b[j + r] -= a.ab[a.idx(j + r, j)] * bj;
            }
        }
        let kv = a.kl + a.ku;
        for j in (0..n).rev() {
            b[j] = b[j] / a.ab[a.idx(j, j)];
            let bj = b[j];
            for i in j.saturating_sub(kv)..j {
                b[i] -= a.ab[a.idx(i, j)] * bj;
            }
        }
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

/// Eigenvalues of a symmetric matrix in ascending order.
pub fn symmetric_eigenvalues(a: &DMatrix<f64>) -> Vec<f64> {
    let sym = 0.5 * (a + a.transpose());
    let mut v: Vec<f64> = sym.symmetric_eigen().eigenvalues.iter().copied().collect();
    v.sort_by(|x, y| x.partial_cmp(y).unwrap());
    v
}

/// Eigenvalues of `K v = λ M v` for symmetric `K` and positive definite `M`,
/// ascending.
pub fn generalized_eigenvalues(k: &DMatrix<f64>, m: &DMatrix<f64>) -> Result<Vec<f64>> {
    let chol = m
        .clone()
        .cholesky()
        .ok_or_else(|| WaveError::Solver("mass matrix is not positive definite".into()))?;
    let l = chol.l();
    let linv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| WaveError::Solver("singular Cholesky factor".into()))?;
    let a = &linv * k * linv.transpose();
    Ok(symmetric_eigenvalues(&a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dense_solve(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let m = DMatrix::from_fn(n, n, |i, j| a[i][j]);
        let x = m.lu().solve(&nalgebra::DVector::from_column_slice(b)).unwrap();
        x.as_slice().to_vec()
    }

    #[test]
    fn tridiagonal_solve() {
        let n = 6;
        let mut a = BandMatrix::<f64>::zeros(n, 1, 1);
        for i in 0..n {
            a.add(i, i, 2.0);
            if i + 1 < n {
                a.add(i, i + 1, -1.0);
                a.add(i + 1, i, -1.0);
            }
        }
        let b: Vec<f64> = (0..n).map(|i| i as f64 + 1.0).collect();
        let expect = dense_solve(&a.to_dense(), &b);
        let x = a.factor().unwrap().solve(&b);
        for (u, v) in x.iter().zip(&expect) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn pivoting_needed() {
        // zero leading diagonal forces a row swap
        let mut a = BandMatrix::<f64>::zeros(3, 1, 1);
        a.add(0, 1, 1.0);
        a.add(1, 0, 1.0);
        a.add(1, 1, 1.0);
        a.add(1, 2, 2.0);
        a.add(2, 1, 3.0);
        a.add(2, 2, 1.0);
        let b = [1.0, 2.0, 3.0];
        let expect = dense_solve(&a.to_dense(), &b);
        let x = a.factor().unwrap().solve(&b);
        for (u, v) in x.iter().zip(&expect) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_is_reported() {
        let a = BandMatrix::<f64>::zeros(3, 1, 1);
        assert!(a.factor().is_err());
    }

    #[test]
    fn complex_solve_matches_product() {
        let n = 9;
        let mut a = BandMatrix::<Complex64>::zeros(n, 2, 3);
        for i in 0..n {
            for j in i.saturating_sub(2)..(i + 4).min(n) {
                let v = Complex64::new((i * 7 + j * 3) as f64 % 5.0 - 2.0, (i + 2 * j) as f64 % 3.0 - 1.0);
                a.add(i, j, v);
            }
            a.add(i, i, Complex64::new(0.5, 0.0));
        }
        let x: Vec<Complex64> = (0..n).map(|i| Complex64::new(i as f64, 1.0 - i as f64)).collect();
        let b = a.mul_vec(&x);
        let got = a.factor().unwrap().solve(&b);
        for (u, v) in got.iter().zip(&x) {
            assert!((u - v).norm() < 1e-9, "{u} vs {v}");
        }
    }

    proptest! {
        #[test]
        fn banded_matches_dense(seed in proptest::collection::vec(-1.0f64..1.0, 64), kl in 0usize..3, ku in 0usize..3) {
            let n = 8;
            let mut a = BandMatrix::<f64>::zeros(n, kl, ku);
            let mut it = seed.iter().cycle();
            for i in 0..n {
                for j in 0..n {
                    if a.in_band(i, j) {
                        a.add(i, j, *it.next().unwrap());
                    }
                }
                a.add(i, i, 4.0);
            }
            let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
            let expect = dense_solve(&a.to_dense(), &b);
            let x = a.clone().factor().unwrap().solve(&b);
            for (u, v) in x.iter().zip(&expect) {
                prop_assert!((u - v).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn generalized_eigen_diagonal() {
        let k = DMatrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 9.0]);
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let ev = generalized_eigenvalues(&k, &m).unwrap();
        assert!((ev[0] - 4.0).abs() < 1e-12 && (ev[1] - 9.0).abs() < 1e-12);
    }
}
