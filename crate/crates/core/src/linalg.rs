//! Dense complex matrices, vector helpers, and LU solves.
//!
//! Storage is row-major `Vec<Complex64>`; everything here is sized for the
//! desk-scale models (n up to a few thousand), where dense O(n^3) kernels are
//! simplest and exact.

use std::ops::{Index, IndexMut};

use num_complex::Complex64;

use crate::error::{CoreError, Result};

pub type C64 = Complex64;

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    n_rows: usize,
    n_cols: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            data: vec![C64::new(0.0, 0.0); n_rows * n_cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Self {
        let n_rows = rows.len();
        let n_cols = if n_rows > 0 { rows[0].len() } else { 0 };
        let mut data = Vec::with_capacity(n_rows * n_cols);
        for r in rows {
            assert_eq!(r.len(), n_cols, "ragged rows");
            data.extend_from_slice(r);
        }
        Self {
            n_rows,
            n_cols,
            data,
        }
    }

    #[inline]
    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    #[inline]
    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn is_square(&self) -> bool {
        self.n_rows == self.n_cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.n_cols..(i + 1) * self.n_cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [C64] {
        &mut self.data[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    #[allow(dead_code)]
    pub(crate) fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    /// Split borrow of two rows (a < b) as mutable slices.
    pub(crate) fn split_rows(&mut self, a: usize, b: usize) -> (&mut [C64], &mut [C64]) {
        debug_assert!(a < b);
        let nc = self.n_cols;
        let (head, tail) = self.data.split_at_mut(b * nc);
        (&mut head[a * nc..a * nc + nc], &mut tail[..nc])
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        let nc = self.n_cols;
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let (head, tail) = self.data.split_at_mut(hi * nc);
        head[lo * nc..lo * nc + nc].swap_with_slice(&mut tail[..nc]);
    }

    /// y = A x.
    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.n_cols);
        let mut y = vec![C64::new(0.0, 0.0); self.n_rows];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[C64], y: &mut [C64]) {
        assert_eq!(x.len(), self.n_cols);
        assert_eq!(y.len(), self.n_rows);
        for (i, yi) in y.iter_mut().enumerate() {
            let row = self.row(i);
            let mut acc = C64::new(0.0, 0.0);
            for (a, b) in row.iter().zip(x.iter()) {
                acc += a * b;
            }
            *yi = acc;
        }
    }

    pub fn trace(&self) -> C64 {
        (0..self.n_rows.min(self.n_cols))
            .map(|i| self[(i, i)])
            .sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// ||A - A^dagger||_F, zero exactly for Hermitian matrices.
    pub fn hermiticity_defect(&self) -> f64 {
        assert!(self.is_square());
        let n = self.n_rows;
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                let d = self[(i, j)] - self[(j, i)].conj();
                acc += d.norm_sqr();
            }
        }
        acc.sqrt()
    }

    /// A + c I, in place.
    pub fn add_scaled_identity(&mut self, c: C64) {
        assert!(self.is_square());
        for i in 0..self.n_rows {
            self[(i, i)] += c;
        }
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.n_cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.n_cols + j]
    }
}

pub fn norm2(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// <a, b> = a^dagger b.
pub fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn scale(v: &mut [C64], c: C64) {
    for z in v.iter_mut() {
        *z *= c;
    }
}

/// Normalize to unit L2; errors on the zero vector.
pub fn normalize(v: &mut [C64]) -> Result<f64> {
    let n = norm2(v);
    if n == 0.0 {
        return Err(CoreError::ZeroVector);
    }
    scale(v, C64::new(1.0 / n, 0.0));
    Ok(n)
}

/// LU factorization with partial pivoting, PA = LU.
#[derive(Debug, Clone)]
pub struct LuFactors {
    lu: CMatrix,
    pivots: Vec<usize>,
    swap_parity: bool,
    min_pivot: f64,
}

impl LuFactors {
    pub fn factor(a: &CMatrix) -> Self {
        assert!(a.is_square(), "LU needs a square matrix");
        let n = a.n_rows();
        let mut lu = a.clone();
        let mut pivots = vec![0usize; n];
        let mut swap_parity = false;
        let mut min_pivot = f64::INFINITY;
        for k in 0..n {
            let mut p = k;
            let mut best = lu[(k, k)].norm();
            for i in k + 1..n {
                let v = lu[(i, k)].norm();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            pivots[k] = p;
            if p != k {
                lu.swap_rows(p, k);
                swap_parity = !swap_parity;
            }
            let piv = lu[(k, k)];
            min_pivot = min_pivot.min(piv.norm());
            if piv.norm() == 0.0 {
                continue; // exactly singular; solves will surface it via min_pivot
            }
            let inv = C64::new(1.0, 0.0) / piv;
            for i in k + 1..n {
                let m = lu[(i, k)] * inv;
                lu[(i, k)] = m;
                if m.norm_sqr() != 0.0 {
                    let (upper, lower) = lu.data.split_at_mut(i * n);
                    let row_k = &upper[k * n..k * n + n];
                    let row_i = &mut lower[..n];
                    for j in k + 1..n {
                        row_i[j] -= m * row_k[j];
                    }
                }
            }
        }
        if n == 0 {
            min_pivot = 0.0;
        }
        Self {
            lu,
            pivots,
            swap_parity,
            min_pivot,
        }
    }

    pub fn n(&self) -> usize {
        self.lu.n_rows()
    }

    /// Smallest |pivot| seen during elimination; the caller's singularity guard.
    pub fn min_pivot(&self) -> f64 {
        self.min_pivot
    }

    pub fn solve(&self, b: &[C64]) -> Result<Vec<C64>> {
        let n = self.n();
        if b.len() != n {
            return Err(CoreError::DimensionMismatch {
                expected: n,
                got: b.len(),
            });
        }
        let mut x = b.to_vec();
        self.solve_in_place(&mut x)?;
        Ok(x)
    }

    pub fn solve_in_place(&self, x: &mut [C64]) -> Result<()> {
        let n = self.n();
        if self.min_pivot == 0.0 {
            return Err(CoreError::Singular {
                pivot: 0.0,
                threshold: 0.0,
            });
        }
        // rows were swapped in full during factorization, so all row
        // interchanges apply to the right-hand side up front
        for k in 0..n {
            x.swap(k, self.pivots[k]);
        }
        for k in 0..n {
            let xk = x[k];
            if xk.norm_sqr() != 0.0 {
                for (i, xi) in x.iter_mut().enumerate().take(n).skip(k + 1) {
                    let l = self.lu[(i, k)];
                    *xi -= l * xk;
                }
            }
        }
        for k in (0..n).rev() {
            let mut acc = x[k];
            let row = self.lu.row(k);
            for (j, xj) in x.iter().enumerate().take(n).skip(k + 1) {
                acc -= row[j] * xj;
            }
            x[k] = acc / self.lu[(k, k)];
        }
        Ok(())
    }

    /// det(A) from the pivots.
    pub fn det(&self) -> C64 {
        let mut d = if self.swap_parity {
            C64::new(-1.0, 0.0)
        } else {
            C64::new(1.0, 0.0)
        };
        for i in 0..self.n() {
            d *= self.lu[(i, i)];
        }
        d
    }
}

/// Solve A x = b with one pass of iterative refinement; returns (x, ||Ax-b||).
pub fn solve_refined(a: &CMatrix, lu: &LuFactors, b: &[C64]) -> Result<(Vec<C64>, f64)> {
    let mut x = lu.solve(b)?;
    let mut r = residual_vec(a, &x, b);
    let mut rn = norm2(&r);
    if rn > 1e-13 * norm2(b).max(1.0) {
        let dx = lu.solve(&r)?;
        for (xi, di) in x.iter_mut().zip(dx) {
            *xi += di;
        }
        r = residual_vec(a, &x, b);
        rn = norm2(&r);
    }
    Ok((x, rn))
}

fn residual_vec(a: &CMatrix, x: &[C64], b: &[C64]) -> Vec<C64> {
    let ax = a.matvec(x);
    b.iter().zip(ax).map(|(bi, axi)| bi - axi).collect()
}
