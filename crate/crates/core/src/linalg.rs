//! Small dense linear algebra: row-major matrices, a cyclic Jacobi
//! eigensolver for symmetric matrices, and the Moore–Penrose pseudoinverse of
//! symmetric positive semidefinite matrices.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// Asymmetry tolerated by the symmetric routines.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Most negative eigenvalue still accepted as positive semidefinite.
pub const PSD_TOL: f64 = 1e-8;

const MAX_SWEEPS: usize = 100;

/// Eigenvalues at or below this are treated as zero.
pub fn zero_cutoff(lambda_max: f64) -> f64 {
    1e-12 * lambda_max.max(1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    /// Builds a matrix from equal-length rows. Panics on ragged input.
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        assert!(rows.iter().all(|r| r.len() == cols), "ragged rows");
        DenseMatrix {
            rows: rows.len(),
            cols,
            data: rows.iter().flat_map(|r| r.iter().copied()).collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, rhs: &DenseMatrix) -> Self {
        assert_eq!(self.cols, rhs.rows, "matmul: inner dimensions");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let src = rhs.row(k);
                let dst = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (d, &b) in dst.iter_mut().zip(src) {
                    *d += a * b;
                }
            }
        }
        out
    }

    pub fn mat_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, x.len(), "mat_vec: dimension");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn scale(&self, s: f64) -> Self {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn add(&self, rhs: &DenseMatrix) -> Self {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "add: shape");
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, rhs: &DenseMatrix) -> Self {
        self.add(&rhs.scale(-1.0))
    }

    /// `‖self − rhs‖_max`
    pub fn max_abs_diff(&self, rhs: &DenseMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape");
        self.data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.rows {
            for j in i + 1..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    fn check_symmetric(&self) -> Result<()> {
        if !self.is_square() {
            return Err(Error::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        let asym = self.max_asymmetry();
        if asym > SYMMETRY_TOL {
            return Err(Error::NotSymmetric(asym));
        }
        Ok(())
    }

    /// Copies the rows and columns listed in `idx` (in that order).
    pub fn principal_submatrix(&self, idx: &[usize]) -> Self {
        let mut out = Self::zeros(idx.len(), idx.len());
        for (p, &i) in idx.iter().enumerate() {
            for (q, &j) in idx.iter().enumerate() {
                out[(p, q)] = self[(i, j)];
            }
        }
        out
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// `M = Q diag(λ) Qᵀ` with eigenvalues ascending and orthonormal eigenvector
/// columns in `Q`.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DenseMatrix,
}

impl EigenDecomposition {
    pub fn reconstruct(&self) -> DenseMatrix {
        self.spectral_map(Some)
    }

    /// `Σ f(λ_k) q_k q_kᵀ` over the eigenpairs where `f` returns a value.
    pub fn spectral_map(&self, f: impl Fn(f64) -> Option<f64>) -> DenseMatrix {
        let n = self.eigenvalues.len();
        let q = &self.eigenvectors;
        let mut out = DenseMatrix::zeros(n, n);
        for (k, &l) in self.eigenvalues.iter().enumerate() {
            let Some(w) = f(l) else { continue };
            if w == 0.0 {
                continue;
            }
            for i in 0..n {
                let qi = w * q[(i, k)];
                if qi == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += qi * q[(j, k)];
                }
            }
        }
        out
    }

    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
pub fn sym_eigen(m: &DenseMatrix) -> Result<EigenDecomposition> {
    m.check_symmetric()?;
    let n = m.rows();
    // symmetrize so rounding-level asymmetry cannot bias the rotations
    let mut a = m.add(&m.transpose()).scale(0.5);
    let mut v = DenseMatrix::identity(n);

    let frob = a.data.iter().map(|x| x * x).sum::<f64>().sqrt();
    let tol = 1e-15 * frob;
    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let off = off_diagonal_norm(&a);
        if off <= tol || off == 0.0 {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                rotate(&mut a, &mut v, p, q, c, s);
            }
        }
    }
    if !converged && off_diagonal_norm(&a) > tol {
        return Err(Error::NoConvergence(MAX_SWEEPS));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let eigenvalues = order.iter().map(|&i| a[(i, i)]).collect();
    let mut eigenvectors = DenseMatrix::zeros(n, n);
    for (k, &src) in order.iter().enumerate() {
        for i in 0..n {
            eigenvectors[(i, k)] = v[(i, src)];
        }
    }
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

fn off_diagonal_norm(a: &DenseMatrix) -> f64 {
    let n = a.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)] * a[(i, j)];
            }
        }
    }
    s.sqrt()
}

/// Applies `Jᵀ A J` for the rotation in the `(p, q)` plane and accumulates
/// `V ← V J`.
fn rotate(a: &mut DenseMatrix, v: &mut DenseMatrix, p: usize, q: usize, c: f64, s: f64) {
    let n = a.rows();
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = c * akp - s * akq;
        a[(k, q)] = s * akp + c * akq;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = c * apk - s * aqk;
        a[(q, k)] = s * apk + c * aqk;
    }
    a[(p, q)] = 0.0;
    a[(q, p)] = 0.0;
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = c * vkp - s * vkq;
        v[(k, q)] = s * vkp + c * vkq;
    }
}

fn check_psd(eig: &EigenDecomposition) -> Result<()> {
    match eig.eigenvalues.first() {
        Some(&l) if l < -PSD_TOL => Err(Error::NotPsd(l)),
        _ => Ok(()),
    }
}

/// Moore–Penrose pseudoinverse of a symmetric PSD matrix.
pub fn pinv_psd(m: &DenseMatrix) -> Result<DenseMatrix> {
    let eig = sym_eigen(m)?;
    check_psd(&eig)?;
    let cutoff = zero_cutoff(eig.lambda_max());
    Ok(eig.spectral_map(|l| (l > cutoff).then(|| 1.0 / l)))
}

/// Smallest eigenvalue above the zero cutoff.
pub fn lambda_min_plus(m: &DenseMatrix) -> Result<f64> {
    let eig = sym_eigen(m)?;
    check_psd(&eig)?;
    let cutoff = zero_cutoff(eig.lambda_max());
    eig.eigenvalues
        .iter()
        .copied()
        .find(|&l| l > cutoff)
        .ok_or(Error::ZeroMatrix)
}

/// Number of eigenvalues at or below the zero cutoff.
pub fn count_zero_eigenvalues(eigenvalues: &[f64]) -> usize {
    let cutoff = zero_cutoff(eigenvalues.last().copied().unwrap_or(0.0));
    eigenvalues.iter().filter(|&&l| l <= cutoff).count()
}

/// Inverse of a symmetric positive definite matrix via its Cholesky factor.
pub fn spd_inverse(m: &DenseMatrix) -> Result<DenseMatrix> {
    m.check_symmetric()?;
    let n = m.rows();
    // lower factor L with M = L Lᵀ
    let mut l = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = m[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > 0.0) {
            return Err(Error::NotPsd(d));
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        for i in j + 1..n {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / d;
        }
    }
    // L⁻¹ by forward substitution, then M⁻¹ = L⁻ᵀ L⁻¹
    let mut linv = DenseMatrix::zeros(n, n);
    for c in 0..n {
        for i in c..n {
            let mut s = if i == c { 1.0 } else { 0.0 };
            for k in c..i {
                s -= l[(i, k)] * linv[(k, c)];
            }
            linv[(i, c)] = s / l[(i, i)];
        }
    }
    let mut inv = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (i..n).map(|k| linv[(k, i)] * linv[(k, j)]).sum();
            inv[(i, j)] = s;
            inv[(j, i)] = s;
        }
    }
    Ok(inv)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
        }
    }

    fn check_decomposition(m: &DenseMatrix) -> EigenDecomposition {
        let eig = sym_eigen(m).unwrap();
        let n = m.rows();
        assert!(eig.reconstruct().max_abs_diff(m) < 1e-8);
        let q = &eig.eigenvectors;
        assert!(q.transpose().matmul(q).max_abs_diff(&DenseMatrix::identity(n)) < 1e-8);
        assert!(eig.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        eig
    }

    #[test]
    fn identity_eigenvalues() {
        let eig = check_decomposition(&DenseMatrix::identity(3));
        assert_close(&eig.eigenvalues, &[1.0, 1.0, 1.0], 1e-14);
    }

    #[test]
    fn diagonal_eigenvalues() {
        let eig = check_decomposition(&DenseMatrix::from_diag(&[5.0, 2.0]));
        assert_close(&eig.eigenvalues, &[2.0, 5.0], 1e-14);
    }

    #[test]
    fn triangle_laplacian_spectrum() {
        // K3 Laplacian: det(L − λI) = −λ(λ − 3)²
        let l = DenseMatrix::from_rows(&[
            &[2.0, -1.0, -1.0],
            &[-1.0, 2.0, -1.0],
            &[-1.0, -1.0, 2.0],
        ]);
        let eig = check_decomposition(&l);
        assert_close(&eig.eigenvalues, &[0.0, 3.0, 3.0], 1e-12);
    }

    #[test]
    fn dense_symmetric_reconstruction() {
        let n = 12;
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = ((i * 7 + j * 13) % 11) as f64 - 5.0 + 0.25 * (i as f64);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        let eig = check_decomposition(&m);
        let trace: f64 = m.diagonal().iter().sum();
        assert!((eig.eigenvalues.iter().sum::<f64>() - trace).abs() < 1e-9);
    }

    #[test]
    fn rejects_asymmetric_input() {
        let m = DenseMatrix::from_rows(&[&[1.0, 2.0], &[0.0, 1.0]]);
        assert!(matches!(sym_eigen(&m), Err(Error::NotSymmetric(_))));
        let r = DenseMatrix::zeros(2, 3);
        assert!(matches!(sym_eigen(&r), Err(Error::NotSquare { .. })));
    }

    #[test]
    fn pinv_examples() {
        let p = pinv_psd(&DenseMatrix::from_diag(&[2.0, 0.0])).unwrap();
        assert!(p.max_abs_diff(&DenseMatrix::from_diag(&[0.5, 0.0])) < 1e-15);

        let single = pinv_psd(&DenseMatrix::from_rows(&[&[2.0]])).unwrap();
        assert_eq!(single[(0, 0)], 0.5);

        let m = DenseMatrix::from_rows(&[&[4.0, 1.0, 0.0], &[1.0, 3.0, 1.0], &[0.0, 1.0, 2.0]]);
        let inv = pinv_psd(&m).unwrap();
        assert!(m.matmul(&inv).max_abs_diff(&DenseMatrix::identity(3)) < 1e-8);
    }

    #[test]
    fn pinv_penrose_conditions_on_singular_matrix() {
        // path Laplacian, rank 3 out of 4
        let l = DenseMatrix::from_rows(&[
            &[1.0, -1.0, 0.0, 0.0],
            &[-1.0, 2.0, -1.0, 0.0],
            &[0.0, -1.0, 2.0, -1.0],
            &[0.0, 0.0, -1.0, 1.0],
        ]);
        let p = pinv_psd(&l).unwrap();
        assert!(l.matmul(&p).matmul(&l).max_abs_diff(&l) < 1e-8);
        assert!(p.matmul(&l).matmul(&p).max_abs_diff(&p) < 1e-8);
        assert!(l.matmul(&p).max_asymmetry() < 1e-8);
        assert!(p.matmul(&l).max_asymmetry() < 1e-8);

        let eig = sym_eigen(&l).unwrap();
        let via_eig = eig.spectral_map(|v| (v > zero_cutoff(eig.lambda_max())).then(|| 1.0 / v));
        assert!(via_eig.max_abs_diff(&p) < 1e-8);
    }

    #[test]
    fn pinv_rejects_indefinite() {
        let m = DenseMatrix::from_diag(&[1.0, -0.5]);
        assert!(matches!(pinv_psd(&m), Err(Error::NotPsd(_))));
    }

    #[test]
    fn lambda_min_plus_examples() {
        let l = lambda_min_plus(&DenseMatrix::from_diag(&[0.0, 0.5, 2.0])).unwrap();
        assert!((l - 0.5).abs() < 1e-15);
        assert_eq!(lambda_min_plus(&DenseMatrix::identity(2)).unwrap(), 1.0);
        assert!(matches!(
            lambda_min_plus(&DenseMatrix::zeros(3, 3)),
            Err(Error::ZeroMatrix)
        ));
    }

    #[test]
    fn spd_inverse_matches_pinv() {
        let m = DenseMatrix::from_rows(&[&[4.0, 1.0, 0.5], &[1.0, 3.0, 1.0], &[0.5, 1.0, 2.0]]);
        let inv = spd_inverse(&m).unwrap();
        assert!(m.matmul(&inv).max_abs_diff(&DenseMatrix::identity(3)) < 1e-14);
        assert!(inv.max_abs_diff(&pinv_psd(&m).unwrap()) < 1e-12);
        assert!(spd_inverse(&DenseMatrix::from_diag(&[1.0, 0.0])).is_err());
    }

    #[test]
    fn zero_count() {
        assert_eq!(count_zero_eigenvalues(&[1e-17, 0.3, 2.0]), 1);
        assert_eq!(count_zero_eigenvalues(&[-1e-16, 1e-14, 2.0]), 2);
        assert_eq!(count_zero_eigenvalues(&[0.0, 0.0]), 2);
    }
}
