//! Dense and Krylov eigensolvers shared by the physics modules.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

/// Eigenvalues in `[-NEG_CLIP, ZERO_CLIP]` count as zero in entropy sums.
pub const ZERO_CLIP: f64 = 1e-12;
pub const NEG_CLIP: f64 = 1e-10;

/// `-x ln x - (1-x) ln(1-x)`, with `x` clipped to `[0, 1]`.
pub fn binary_entropy(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    xlogx(x) + xlogx(1.0 - x)
}

fn xlogx(x: f64) -> f64 {
    if x <= ZERO_CLIP {
        0.0
    } else {
        -x * x.ln()
    }
}

/// `-sum p ln p` over a spectrum of a density matrix.
pub fn spectrum_entropy(eigs: &[f64]) -> Result<f64> {
    let mut s = 0.0;
    for &p in eigs {
        if p < -NEG_CLIP {
            return Err(Error::NumericInput(format!("negative eigenvalue {p:e} in density matrix")));
        }
        s += xlogx(p);
    }
    Ok(s)
}

/// Ascending eigenvalues of a real symmetric matrix.
pub fn symmetric_eigenvalues(m: DMatrix<f64>) -> Vec<f64> {
    let mut v: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(|a, b| a.total_cmp(b));
    v
}

/// Ascending eigenvalues of a Hermitian matrix.
pub fn hermitian_eigenvalues(m: DMatrix<Complex64>) -> Vec<f64> {
    let mut v: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(|a, b| a.total_cmp(b));
    v
}

/// Ascending eigenpairs of a real symmetric matrix; eigenvectors are columns.
pub fn symmetric_eigen(m: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = m.symmetric_eigen();
    sort_pairs(eig.eigenvalues.as_slice(), &eig.eigenvectors)
}

/// Ascending eigenpairs of a Hermitian matrix; eigenvectors are columns.
pub fn hermitian_eigen(m: DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    let eig = m.symmetric_eigen();
    sort_pairs(eig.eigenvalues.as_slice(), &eig.eigenvectors)
}

fn sort_pairs<T: nalgebra::Scalar + Copy>(vals: &[f64], vecs: &DMatrix<T>) -> (Vec<f64>, DMatrix<T>) {
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
    let values = order.iter().map(|&k| vals[k]).collect();
    let vectors = DMatrix::from_fn(vecs.nrows(), order.len(), |r, c| vecs[(r, order[c])]);
    (values, vectors)
}

/// Eigendecomposition `M = V diag(values) V^{-1}` of a general complex matrix.
///
/// Values are sorted by decreasing modulus (ties by increasing argument, so
/// conjugate pairs stay adjacent). Right eigenvectors are the columns of
/// `right`; the rows of `left = V^{-1}` are the biorthonormal left
/// eigenvectors.
#[derive(Debug, Clone)]
pub struct GeneralEigen {
    pub values: Vec<Complex64>,
    pub right: DMatrix<Complex64>,
    pub left: DMatrix<Complex64>,
}

pub fn general_eigen(m: &DMatrix<Complex64>) -> Result<GeneralEigen> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::Shape(format!("{}x{} matrix is not square", n, m.ncols())));
    }
    let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
    let schur = nalgebra::Schur::try_new(m.clone(), 1e-15, 10_000)
        .ok_or_else(|| Error::NonDiagonalizable("Schur iteration did not converge".into()))?;
    let (q, t) = schur.unpack();

    // eigenvectors of the triangular factor by back substitution
    let tiny = 1e-11 * scale;
    let mut y = DMatrix::<Complex64>::zeros(n, n);
    for k in 0..n {
        let lam = t[(k, k)];
        y[(k, k)] = Complex64::new(1.0, 0.0);
        for j in (0..k).rev() {
            let mut num = Complex64::new(0.0, 0.0);
            for l in j + 1..=k {
                num += t[(j, l)] * y[(l, k)];
            }
            let den = t[(j, j)] - lam;
            if den.norm() <= tiny {
                if num.norm() <= 1e-9 * scale {
                    y[(j, k)] = Complex64::new(0.0, 0.0);
                } else {
                    return Err(Error::NonDiagonalizable(format!(
                        "Jordan block at eigenvalue {lam} (coupling {:e})",
                        num.norm()
                    )));
                }
            } else {
                y[(j, k)] = -num / den;
            }
        }
        let norm = y.column(k).norm();
        y.column_mut(k).unscale_mut(norm);
    }
    let v = &q * y;
    let vals: Vec<Complex64> = (0..n).map(|k| t[(k, k)]).collect();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        let (za, zb) = (vals[a], vals[b]);
        let (ma, mb) = (za.norm(), zb.norm());
        if (ma - mb).abs() > 1e-10 * scale {
            mb.total_cmp(&ma)
        } else {
            za.arg().total_cmp(&zb.arg())
        }
    });
    let values: Vec<Complex64> = order.iter().map(|&k| vals[k]).collect();
    let right = DMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    let left = right
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::NonDiagonalizable("eigenvector matrix is singular".into()))?;
    let cond = right.norm() * left.norm();
    if !(cond < 1e12) {
        return Err(Error::NonDiagonalizable(format!("eigenvector condition number {cond:e}")));
    }
    let lam = DMatrix::from_diagonal(&DVector::from_vec(values.clone()));
    let recon = (m * &right - &right * lam).norm();
    if recon > 1e-8 * scale * (n as f64).sqrt() {
        return Err(Error::NonDiagonalizable(format!("reconstruction residual {recon:e}")));
    }
    Ok(GeneralEigen { values, right, left })
}

/// Principal square root of a Hermitian positive semidefinite matrix.
/// Negative eigenvalues within round-off are treated as zero.
pub fn hermitian_sqrt(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let (vals, vecs) = hermitian_eigen(m.clone());
    let n = vals.len();
    let mut out = DMatrix::<Complex64>::zeros(n, n);
    for (k, &lam) in vals.iter().enumerate() {
        let s = lam.max(0.0).sqrt();
        let col = vecs.column(k);
        out += (col * col.adjoint()) * Complex64::new(s, 0.0);
    }
    out
}

/// Settings for [`lanczos_lowest`].
#[derive(Debug, Clone, Copy)]
pub struct LanczosOptions {
    /// Krylov subspace size per restart.
    pub krylov_dim: usize,
    pub max_restarts: usize,
    /// Target for `||H x - e x||`.
    pub tol: f64,
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self { krylov_dim: 60, max_restarts: 500, tol: 1e-10, seed: 0x5eed }
    }
}

/// Lowest eigenpair of a real symmetric operator, restricted to the
/// orthogonal complement of `deflate` (orthonormal vectors).
///
/// Restarted Lanczos with full reorthogonalization; each restart begins
/// from the current Ritz vector.
pub fn lanczos_lowest<F>(dim: usize, matvec: F, deflate: &[Vec<f64>], opts: &LanczosOptions) -> Result<(f64, Vec<f64>)>
where
    F: Fn(&[f64], &mut [f64]),
{
    use rand::Rng;
    if dim == 0 {
        return Err(Error::InvalidSize("empty operator".into()));
    }
    let mut rng = crate::rng::seeded(opts.seed);
    let mut x: Vec<f64> = (0..dim).map(|_| rng.random::<f64>() - 0.5).collect();
    project_out(&mut x, deflate);
    if normalize(&mut x) == 0.0 {
        return Err(Error::InvalidSize("deflation space fills the operator".into()));
    }
    let m = opts.krylov_dim.min(dim - deflate.len().min(dim - 1)).max(1);
    let mut w = vec![0.0; dim];
    let mut last_residual = f64::INFINITY;
    for _ in 0..opts.max_restarts {
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m);
        let mut alpha = Vec::with_capacity(m);
        let mut beta: Vec<f64> = Vec::with_capacity(m);
        basis.push(x.clone());
        loop {
            let k = basis.len() - 1;
            matvec(&basis[k], &mut w);
            let a = dot(&w, &basis[k]);
            alpha.push(a);
            // full reorthogonalization, twice for stability
            for _ in 0..2 {
                project_out(&mut w, deflate);
                for v in &basis {
                    let c = dot(&w, v);
                    axpy(-c, v, &mut w);
                }
            }
            if basis.len() == m {
                break;
            }
            let b = normalize(&mut w);
            if b < 1e-13 {
                break;
            }
            beta.push(b);
            basis.push(w.clone());
        }
        let k = alpha.len();
        let tri = DMatrix::from_fn(k, k, |r, c| {
            if r == c {
                alpha[r]
            } else if r + 1 == c {
                beta[r]
            } else if c + 1 == r {
                beta[c]
            } else {
                0.0
            }
        });
        let (_, vecs) = symmetric_eigen(tri);
        let mut ritz = vec![0.0; dim];
        for (j, v) in basis.iter().enumerate() {
            axpy(vecs[(j, 0)], v, &mut ritz);
        }
        project_out(&mut ritz, deflate);
        normalize(&mut ritz);
        matvec(&ritz, &mut w);
        let e = dot(&w, &ritz);
        axpy(-e, &ritz, &mut w);
        project_out(&mut w, deflate);
        let residual = dot(&w, &w).sqrt();
        if residual < opts.tol {
            return Ok((e, ritz));
        }
        last_residual = residual;
        x = ritz;
    }
    Err(Error::NoConvergence { residual: last_residual })
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

fn normalize(x: &mut [f64]) -> f64 {
    let n = dot(x, x).sqrt();
    if n > 0.0 {
        x.iter_mut().for_each(|v| *v /= n);
    }
    n
}

fn project_out(x: &mut [f64], basis: &[Vec<f64>]) {
    for v in basis {
        let c = dot(x, v);
        axpy(-c, v, x);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn entropy_clipping() {
        assert_eq!(spectrum_entropy(&[1.0, 0.0, -5e-11]).unwrap(), 0.0);
        assert!(spectrum_entropy(&[1.0, -1e-6]).is_err());
        let s = spectrum_entropy(&[0.5, 0.5]).unwrap();
        assert!((s - core::f64::consts::LN_2).abs() < 1e-15);
        assert!((binary_entropy(0.5) - core::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(binary_entropy(1.0 + 1e-14), 0.0);
    }

    #[test]
    fn general_eigen_nonsymmetric() {
        let m = DMatrix::from_row_slice(3, 3, &[c(2.0), c(1.0), c(0.0), c(0.0), c(-1.0), c(3.0), c(0.5), c(0.0), c(0.3)]);
        let e = general_eigen(&m).unwrap();
        let lam = DMatrix::from_diagonal(&DVector::from_vec(e.values.clone()));
        let back = &e.right * lam * &e.left;
        assert!((back - &m).norm() < 1e-12);
        for w in e.values.windows(2) {
            assert!(w[0].norm() >= w[1].norm() - 1e-12);
        }
    }

    #[test]
    fn general_eigen_repeated_diagonalizable() {
        // similarity transform of diag(1, 1/3, 1/3, 1/3)
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![c(1.0), c(1.0 / 3.0), c(1.0 / 3.0), c(1.0 / 3.0)]));
        let s = DMatrix::from_fn(4, 4, |r, k| c(if r == k { 2.0 } else { 0.3 * (r as f64 - k as f64) }));
        let m = &s * d * s.clone().try_inverse().unwrap();
        let e = general_eigen(&m).unwrap();
        assert!((e.values[0] - c(1.0)).norm() < 1e-12);
        for z in &e.values[1..] {
            assert!((z - c(1.0 / 3.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn general_eigen_rejects_jordan_block() {
        let m = DMatrix::from_row_slice(2, 2, &[c(1.0), c(1.0), c(0.0), c(1.0)]);
        assert!(matches!(general_eigen(&m), Err(Error::NonDiagonalizable(_))));
    }

    #[test]
    fn lanczos_matches_dense() {
        let n = 200;
        let mut rng = crate::rng::seeded(1);
        let mut a = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let (x, _) = crate::rng::normal_pair(&mut rng);
                a[(i, j)] = x;
                a[(j, i)] = x;
            }
        }
        let dense = symmetric_eigenvalues(a.clone());
        let mv = |x: &[f64], y: &mut [f64]| {
            let r = &a * DVector::from_column_slice(x);
            y.copy_from_slice(r.as_slice());
        };
        let opts = LanczosOptions::default();
        let (e0, v0) = lanczos_lowest(n, mv, &[], &opts).unwrap();
        assert!((e0 - dense[0]).abs() < 1e-9);
        let (e1, _) = lanczos_lowest(n, mv, &[v0], &opts).unwrap();
        assert!((e1 - dense[1]).abs() < 1e-9);
    }
}
