//! Dense complex non-symmetric eigendecomposition.
//!
//! Pipeline: unitary Hessenberg reduction (Householder reflectors), explicit
//! single-shift QR iteration with Wilkinson shifts, deflation at
//! `tol * ||H||_F`, and accumulation of the full Schur transform; right
//! eigenvectors come from back-substitution on the triangular factor,
//! back-transformed through the accumulated unitary. Back-substitution keeps
//! eigenvector residuals at rounding level even for strongly non-normal
//! matrices, where inverse iteration stalls at the pseudospectral floor.

use rayon::prelude::*;

use crate::error::{CoreError, Result};
use crate::linalg::{self, CMatrix, C64};

pub const DEFAULT_TOL: f64 = 1e-12;

/// Sweeps without a deflation before an exceptional shift is taken.
const STALL_SWEEPS: usize = 10;

/// Eigenpairs of a dense complex matrix, sorted by (Re, Im). `vectors[k]` is
/// a unit-L2 right eigenvector for `values[k]`;
/// `residuals[k] = ||H v - lambda v||`.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub values: Vec<C64>,
    pub vectors: Vec<Vec<C64>>,
    pub residuals: Vec<f64>,
}

impl EigenDecomposition {
    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().cloned().fold(0.0, f64::max)
    }
}

/// Householder vector mapping x onto beta*e1: (I - tau v v^H) x = beta e1,
/// with v[0] = 1. Returns (tail of v, tau, beta).
fn householder(x: &[C64]) -> (Vec<C64>, C64, C64) {
    let alpha = x[0];
    let tail_norm = linalg::norm2(&x[1..]);
    if tail_norm == 0.0 {
        return (
            vec![C64::new(0.0, 0.0); x.len() - 1],
            C64::new(0.0, 0.0),
            alpha,
        );
    }
    let xnorm = (alpha.norm_sqr() + tail_norm * tail_norm).sqrt();
    let sign = if alpha.norm() == 0.0 {
        C64::new(1.0, 0.0)
    } else {
        alpha / alpha.norm()
    };
    let beta = -sign * xnorm;
    let tau = (beta - alpha) / beta;
    let denom = alpha - beta;
    let v: Vec<C64> = x[1..].iter().map(|z| z / denom).collect();
    (v, tau, beta)
}

/// Reduce to upper Hessenberg form; returns (H, Q) with H = Q^H A Q.
fn hessenberg(a: &CMatrix) -> (CMatrix, CMatrix) {
    let n = a.n_rows();
    let mut h = a.clone();
    let mut q = CMatrix::identity(n);
    if n < 3 {
        return (h, q);
    }
    let mut col_x = vec![C64::new(0.0, 0.0); n];
    for k in 0..n - 2 {
        let m = n - k - 1;
        for i in 0..m {
            col_x[i] = h[(k + 1 + i, k)];
        }
        let (vt, tau, beta) = householder(&col_x[..m]);
        if tau.norm_sqr() == 0.0 {
            continue;
        }
        let mut v = Vec::with_capacity(m);
        v.push(C64::new(1.0, 0.0));
        v.extend_from_slice(&vt);

        h[(k + 1, k)] = beta;
        for i in k + 2..n {
            h[(i, k)] = C64::new(0.0, 0.0);
        }
        // left-apply P^H = I - conj(tau) v v^H to rows k+1.., columns k+1..
        // (columns <= k already hold exact zeros below the subdiagonal)
        let tau_c = tau.conj();
        for j in k + 1..n {
            let mut s = C64::new(0.0, 0.0);
            for i in 0..m {
                s += v[i].conj() * h[(k + 1 + i, j)];
            }
            s *= tau_c;
            for i in 0..m {
                let val = s * v[i];
                h[(k + 1 + i, j)] -= val;
            }
        }
        // right-apply P = I - tau v v^H to columns k+1.. of H and Q
        for mat in [&mut h, &mut q] {
            for i in 0..n {
                let row = mat.row_mut(i);
                let mut s = C64::new(0.0, 0.0);
                for (jv, vj) in v.iter().enumerate() {
                    s += row[k + 1 + jv] * vj;
                }
                s *= tau;
                for (jv, vj) in v.iter().enumerate() {
                    row[k + 1 + jv] -= s * vj.conj();
                }
            }
        }
    }
    (h, q)
}

/// Complex Givens rotation: (c, s) with c real, c^2 + |s|^2 = 1, such that
/// [c s; -conj(s) c] [a; b] = [r; 0].
#[inline]
fn givens(a: C64, b: C64) -> (f64, C64) {
    let bn = b.norm();
    if bn == 0.0 {
        return (1.0, C64::new(0.0, 0.0));
    }
    let an = a.norm();
    if an == 0.0 {
        return (0.0, b.conj() / bn);
    }
    let r = (an * an + bn * bn).sqrt();
    (an / r, (a / an) * b.conj() / r)
}

/// Eigenvalues of the 2x2 block [[a, b], [c, d]].
fn eig2(a: C64, b: C64, c: C64, d: C64) -> (C64, C64) {
    let half = (a + d) * 0.5;
    let det = a * d - b * c;
    let disc = (half * half - det).sqrt();
    (half + disc, half - disc)
}

fn wilkinson_shift(h: &CMatrix, m: usize) -> C64 {
    let corner = h[(m, m)];
    if m == 0 {
        return corner;
    }
    let (e1, e2) = eig2(h[(m - 1, m - 1)], h[(m - 1, m)], h[(m, m - 1)], corner);
    if (e1 - corner).norm() <= (e2 - corner).norm() {
        e1
    } else {
        e2
    }
}

/// Schur decomposition of a Hessenberg matrix by explicit shifted QR:
/// on return `h` is upper triangular and `q` holds the accumulated unitary
/// (A = Q T Q^H relative to the caller's initial `q`).
fn qr_schur(h: &mut CMatrix, q: &mut CMatrix, thresh: f64, max_sweeps: usize) -> Result<()> {
    let n = h.n_rows();
    if n <= 1 {
        return Ok(());
    }
    let mut hi = n - 1;
    let mut sweeps_total = 0usize;
    let mut stall = 0usize;
    let mut cs: Vec<(f64, C64)> = vec![(1.0, C64::new(0.0, 0.0)); n];
    loop {
        // deflate converged trailing blocks
        loop {
            if hi == 0 {
                return Ok(());
            }
            if h[(hi, hi - 1)].norm() <= thresh {
                h[(hi, hi - 1)] = C64::new(0.0, 0.0);
                hi -= 1;
                stall = 0;
                continue;
            }
            if hi == 1 || h[(hi - 1, hi - 2)].norm() <= thresh {
                // isolated 2x2 block: triangularize it with one rotation
                if hi >= 2 {
                    h[(hi - 1, hi - 2)] = C64::new(0.0, 0.0);
                }
                triangularize_2x2(h, q, hi - 1);
                if hi == 1 {
                    return Ok(());
                }
                hi -= 2;
                stall = 0;
                continue;
            }
            break;
        }
        let mut lo = hi - 1;
        while lo > 0 && h[(lo, lo - 1)].norm() > thresh {
            lo -= 1;
        }
        if sweeps_total >= max_sweeps {
            let mut partial: Vec<C64> = (hi + 1..n).map(|i| h[(i, i)]).collect();
            partial.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
            return Err(CoreError::EigNonConvergence {
                sweeps: sweeps_total,
                found: partial.len(),
                n,
                partial,
            });
        }
        sweeps_total += 1;
        stall += 1;
        let shift = if stall.is_multiple_of(STALL_SWEEPS) {
            let ts = h[(hi, hi - 1)].norm() + h[(hi - 1, hi - 2)].norm();
            h[(hi, hi)] + C64::new(0.75 * ts, 0.0)
        } else {
            wilkinson_shift(h, hi)
        };

        // explicit shifted QR sweep on [lo..=hi], full-range updates:
        // H <- L (H - shift I) L^H + shift I, Q <- Q L^H
        for i in lo..=hi {
            h[(i, i)] -= shift;
        }
        for i in lo..hi {
            let (c, s) = givens(h[(i, i)], h[(i + 1, i)]);
            cs[i] = (c, s);
            let (row_i, row_i1) = h.split_rows(i, i + 1);
            for j in i..n {
                let a = row_i[j];
                let b = row_i1[j];
                row_i[j] = c * a + s * b;
                row_i1[j] = -s.conj() * a + c * b;
            }
        }
        for i in lo..hi {
            let (c, s) = cs[i];
            for r in 0..=(i + 1) {
                let a = h[(r, i)];
                let b = h[(r, i + 1)];
                h[(r, i)] = c * a + s.conj() * b;
                h[(r, i + 1)] = -s * a + c * b;
            }
            for r in 0..n {
                let a = q[(r, i)];
                let b = q[(r, i + 1)];
                q[(r, i)] = c * a + s.conj() * b;
                q[(r, i + 1)] = -s * a + c * b;
            }
        }
        for i in lo..=hi {
            h[(i, i)] += shift;
        }
    }
}

/// Similarity-rotate the 2x2 block at rows (k, k+1) into upper triangular
/// form, updating the full matrix and Q.
fn triangularize_2x2(h: &mut CMatrix, q: &mut CMatrix, k: usize) {
    let n = h.n_rows();
    let (a, b) = (h[(k, k)], h[(k, k + 1)]);
    let (c2, d) = (h[(k + 1, k)], h[(k + 1, k + 1)]);
    if c2.norm() == 0.0 {
        return;
    }
    let (e1, e2) = eig2(a, b, c2, d);
    // eigenvector (v0, v1) for whichever eigenvalue gives the more robust
    // representation
    let cand1 = (b, e1 - a);
    let cand2 = (e1 - d, c2);
    let (v0, v1) = if cand1.0.norm() + cand1.1.norm() >= cand2.0.norm() + cand2.1.norm() {
        cand1
    } else {
        cand2
    };
    let (v0, v1) = if v0.norm() + v1.norm() == 0.0 {
        (C64::new(1.0, 0.0), C64::new(0.0, 0.0))
    } else {
        (v0, v1)
    };
    // G maps v onto e1; similarity H <- G H G^H puts e1's eigenvalue first
    let (c, s) = givens(v0, v1);
    {
        let (row_k, row_k1) = h.split_rows(k, k + 1);
        for j in k..n {
            let x = row_k[j];
            let y = row_k1[j];
            row_k[j] = c * x + s * y;
            row_k1[j] = -s.conj() * x + c * y;
        }
    }
    for r in 0..=(k + 1) {
        let x = h[(r, k)];
        let y = h[(r, k + 1)];
        h[(r, k)] = c * x + s.conj() * y;
        h[(r, k + 1)] = -s * x + c * y;
    }
    for r in 0..n {
        let x = q[(r, k)];
        let y = q[(r, k + 1)];
        q[(r, k)] = c * x + s.conj() * y;
        q[(r, k + 1)] = -s * x + c * y;
    }
    h[(k + 1, k)] = C64::new(0.0, 0.0);
    // keep the diagonal at the exact 2x2 eigenvalues; rotation rounding
    // otherwise leaks into them
    h[(k, k)] = e1;
    h[(k + 1, k + 1)] = e2;
}

/// Right eigenvector of the upper triangular `t` for the eigenvalue at
/// diagonal position k, by back-substitution. Near-zero denominators
/// (repeated eigenvalues) are floored at `smin`.
fn triangular_eigenvector(t: &CMatrix, k: usize, smin: f64) -> Vec<C64> {
    let lambda = t[(k, k)];
    let mut x = vec![C64::new(0.0, 0.0); k + 1];
    x[k] = C64::new(1.0, 0.0);
    for i in (0..k).rev() {
        let mut acc = C64::new(0.0, 0.0);
        let row = t.row(i);
        for (j, xj) in x.iter().enumerate().take(k + 1).skip(i + 1) {
            acc += row[j] * xj;
        }
        let mut den = t[(i, i)] - lambda;
        if den.norm() < smin {
            den = C64::new(smin, 0.0);
        }
        x[i] = -acc / den;
        // rescale if the solve is blowing up (strong non-normality)
        let xin = x[i].norm();
        if xin > 1e120 {
            let inv = 1.0 / xin;
            for xj in x.iter_mut().skip(i) {
                *xj *= inv;
            }
        }
    }
    x
}

/// Full eigendecomposition of a dense complex matrix.
///
/// `tol` scales the QR deflation threshold (`tol * ||H||_F`; pass
/// [`DEFAULT_TOL`] for 1e-12). Non-convergence after `30 n` sweeps errors
/// out carrying the eigenvalues deflated so far.
pub fn eig(a: &CMatrix, tol: f64) -> Result<EigenDecomposition> {
    assert!(a.is_square(), "eig needs a square matrix");
    let n = a.n_rows();
    if n == 0 {
        return Ok(EigenDecomposition {
            values: vec![],
            vectors: vec![],
            residuals: vec![],
        });
    }
    if !a.data().iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        return Err(CoreError::InvalidSpec("non-finite matrix entry".into()));
    }
    if n == 1 {
        return Ok(EigenDecomposition {
            values: vec![a[(0, 0)]],
            vectors: vec![vec![C64::new(1.0, 0.0)]],
            residuals: vec![0.0],
        });
    }
    let norm = a.frobenius_norm();
    let thresh = (tol * norm).max(f64::MIN_POSITIVE);
    let (mut t, mut q) = hessenberg(a);
    qr_schur(&mut t, &mut q, thresh, 30 * n)?;

    let smin = f64::EPSILON * norm.max(f64::MIN_POSITIVE);
    let mut pairs: Vec<(C64, Vec<C64>, f64)> = (0..n)
        .into_par_iter()
        .map(|k| {
            let lambda = t[(k, k)];
            let xs = triangular_eigenvector(&t, k, smin);
            // v = Q[:, 0..=k] * x
            let mut v = vec![C64::new(0.0, 0.0); n];
            for (r, vr) in v.iter_mut().enumerate() {
                let qrow = q.row(r);
                let mut acc = C64::new(0.0, 0.0);
                for (j, xj) in xs.iter().enumerate() {
                    acc += qrow[j] * xj;
                }
                *vr = acc;
            }
            let _ = linalg::normalize(&mut v);
            let av = a.matvec(&v);
            let res: f64 = av
                .iter()
                .zip(&v)
                .map(|(avi, vi)| (avi - lambda * vi).norm_sqr())
                .sum::<f64>()
                .sqrt();
            (lambda, v, res)
        })
        .collect();
    pairs.sort_by(|x, y| {
        x.0.re
            .total_cmp(&y.0.re)
            .then(x.0.im.total_cmp(&y.0.im))
    });
    let mut values = Vec::with_capacity(n);
    let mut vectors = Vec::with_capacity(n);
    let mut residuals = Vec::with_capacity(n);
    for (lam, v, r) in pairs {
        values.push(lam);
        vectors.push(v);
        residuals.push(r);
    }
    Ok(EigenDecomposition {
        values,
        vectors,
        residuals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::LuFactors;
    use crate::rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn diagonal_matrix() {
        let a = CMatrix::from_rows(&[
            vec![c(3.0, 0.0), c(0.0, 0.0)],
            vec![c(0.0, 0.0), c(2.0, -1.0)],
        ]);
        let d = eig(&a, DEFAULT_TOL).unwrap();
        assert!((d.values[0] - c(2.0, -1.0)).norm() < 1e-12);
        assert!((d.values[1] - c(3.0, 0.0)).norm() < 1e-12);
        for (k, lam) in d.values.iter().enumerate() {
            let v = &d.vectors[k];
            let big = if (lam - c(3.0, 0.0)).norm() < 1e-6 { 0 } else { 1 };
            assert!(v[big].norm() > 1.0 - 1e-10);
        }
        assert!(d.max_residual() < 1e-12);
    }

    #[test]
    fn rotation_block_has_imaginary_pair() {
        let a = CMatrix::from_rows(&[
            vec![c(0.0, 0.0), c(1.0, 0.0)],
            vec![c(-1.0, 0.0), c(0.0, 0.0)],
        ]);
        let d = eig(&a, DEFAULT_TOL).unwrap();
        assert!((d.values[0] - c(0.0, -1.0)).norm() < 1e-12);
        assert!((d.values[1] - c(0.0, 1.0)).norm() < 1e-12);
        assert!(d.max_residual() < 1e-12);
    }

    #[test]
    fn random_matrices_satisfy_trace_det_residual() {
        let mut r = rng::seeded(1);
        for trial in 0..50 {
            let n = 2 + (trial % 7);
            let a = rng::random_matrix(&mut r, n);
            let d = eig(&a, DEFAULT_TOL).unwrap();
            let tr: C64 = d.values.iter().sum();
            assert!(
                (tr - a.trace()).norm() <= 1e-10 * a.trace().norm().max(1.0),
                "trace identity failed at n={n}"
            );
            let det_lu = LuFactors::factor(&a).det();
            let det_eig: C64 = d.values.iter().product();
            assert!(
                (det_lu - det_eig).norm() <= 1e-8 * det_lu.norm().max(1e-30),
                "det identity failed at n={n}: {det_lu} vs {det_eig}"
            );
            assert!(d.max_residual() <= 1e-8 * a.frobenius_norm());
        }
    }

    #[test]
    fn shift_equivariance() {
        let mut r = rng::seeded(7);
        let a = rng::random_matrix(&mut r, 12);
        let shift = c(0.37, -1.21);
        let mut b = a.clone();
        b.add_scaled_identity(shift);
        let da = eig(&a, DEFAULT_TOL).unwrap();
        let db = eig(&b, DEFAULT_TOL).unwrap();
        for (x, y) in da.values.iter().zip(&db.values) {
            assert!((x + shift - y).norm() < 1e-10 * a.frobenius_norm().max(1.0));
        }
    }

    #[test]
    fn similarity_invariance_under_permutation() {
        let mut r = rng::seeded(11);
        let n = 10;
        let a = rng::random_matrix(&mut r, n);
        let mut perm: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = rng::uniform(&mut r, 0.0, (i + 1) as f64) as usize;
            perm.swap(i, j.min(i));
        }
        let mut b = CMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                b[(perm[i], perm[j])] = a[(i, j)];
            }
        }
        let va = eig(&a, DEFAULT_TOL).unwrap().values;
        let vb = eig(&b, DEFAULT_TOL).unwrap().values;
        for (x, y) in va.iter().zip(&vb) {
            assert!((x - y).norm() < 1e-9 * a.frobenius_norm().max(1.0));
        }
    }

    #[test]
    fn repeated_eigenvalues_get_distinct_vectors() {
        let a = CMatrix::from_rows(&[
            vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
            vec![c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)],
            vec![c(0.0, 0.0), c(0.0, 0.0), c(5.0, 0.0)],
        ]);
        let d = eig(&a, DEFAULT_TOL).unwrap();
        let overlap = linalg::dot(&d.vectors[0], &d.vectors[1]).norm();
        assert!(overlap < 1e-6, "identical vectors for a repeated eigenvalue");
        assert!(d.max_residual() < 1e-10);
    }

    #[test]
    fn defective_block_still_converges_values() {
        // Jordan block: eigenvalues exact, eigenvector unique
        let a = CMatrix::from_rows(&[
            vec![c(2.0, 0.0), c(1.0, 0.0)],
            vec![c(0.0, 0.0), c(2.0, 0.0)],
        ]);
        let d = eig(&a, DEFAULT_TOL).unwrap();
        assert!((d.values[0] - c(2.0, 0.0)).norm() < 1e-12);
        assert!((d.values[1] - c(2.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn hessenberg_similarity_reconstructs() {
        let mut r = rng::seeded(21);
        let a = rng::random_matrix(&mut r, 9);
        let (h, q) = hessenberg(&a);
        // A Q = Q H
        let n = 9;
        for jcol in 0..n {
            let hcol: Vec<C64> = (0..n).map(|i| h[(i, jcol)]).collect();
            let qh = q.matvec(&hcol);
            let qcol: Vec<C64> = (0..n).map(|i| q[(i, jcol)]).collect();
            let aq = a.matvec(&qcol);
            for i in 0..n {
                assert!((aq[i] - qh[i]).norm() < 1e-12 * a.frobenius_norm());
            }
        }
        // Hessenberg structure
        for i in 2..n {
            for j in 0..i - 1 {
                assert_eq!(h[(i, j)], c(0.0, 0.0));
            }
        }
    }
}
