//! Dense complex linear-algebra helpers shared by all modules.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use std::f64::consts::PI;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
pub const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let mut vals: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    vals
}

/// Full eigendecomposition of a Hermitian matrix.
///
/// Returns eigenvalues (ascending) and the matrix whose columns are the
/// matching eigenvectors.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = m.clone().symmetric_eigen();
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .partial_cmp(&eig.eigenvalues[b])
            .unwrap()
    });
    let vals: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = CMatrix::zeros(n, n);
    for (j, &i) in order.iter().enumerate() {
        vecs.set_column(j, &eig.eigenvectors.column(i));
    }
    (vals, vecs)
}

/// Trace norm of a Hermitian matrix (sum of |eigenvalue|).
pub fn trace_norm_hermitian(m: &CMatrix) -> f64 {
    hermitian_eigenvalues(m).iter().map(|v| v.abs()).sum()
}

/// Trace norm of a general rectangular matrix (sum of singular values).
pub fn trace_norm_rect(m: &CMatrix) -> f64 {
    m.clone().svd(false, false).singular_values.iter().sum()
}

/// Max elementwise |m - m†|.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// One standard complex Gaussian sample (Box-Muller).
pub fn gaussian_complex<R: Rng>(rng: &mut R) -> Complex64 {
    let u1: f64 = rng.gen::<f64>().max(1e-300);
    let u2: f64 = rng.gen();
    let r = (-2.0 * u1.ln()).sqrt();
    Complex64::new(r * (2.0 * PI * u2).cos(), r * (2.0 * PI * u2).sin())
}

/// Matrix with i.i.d. standard complex Gaussian entries.
pub fn ginibre<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| gaussian_complex(rng))
}

/// Orthonormalize the columns of `m` (modified Gram-Schmidt).
///
/// Columns that turn out linearly dependent are replaced by canonical basis
/// vectors orthogonalized against the ones already accepted, so the result
/// always satisfies V†V = I.
pub fn orthonormal_columns(m: &CMatrix) -> CMatrix {
    let (rows, cols) = m.shape();
    assert!(cols <= rows, "cannot orthonormalize {cols} columns in dimension {rows}");
    let mut q = m.clone();
    for j in 0..cols {
        let mut col = q.column(j).clone_owned();
        for i in 0..j {
            let qi = q.column(i);
            let proj: Complex64 = qi.dotc(&col);
            col -= qi.clone_owned() * proj;
        }
        let mut norm = col.norm();
        if norm < 1e-12 {
            // degenerate column: fall back to the first canonical vector
            // with a nonzero residual
            for k in 0..rows {
                let mut e = CVector::zeros(rows);
                e[k] = ONE;
                for i in 0..j {
                    let qi = q.column(i);
                    let proj: Complex64 = qi.dotc(&e);
                    e -= qi.clone_owned() * proj;
                }
                if e.norm() > 1e-8 {
                    col = e;
                    break;
                }
            }
            norm = col.norm();
        }
        q.set_column(j, &(col / Complex64::new(norm, 0.0)));
    }
    q
}

/// Haar-distributed random unitary (Ginibre + Gram-Schmidt).
pub fn random_unitary<R: Rng>(dim: usize, rng: &mut R) -> CMatrix {
    orthonormal_columns(&ginibre(dim, dim, rng))
}

/// Haar-distributed normalized state vector.
pub fn random_pure_vector<R: Rng>(dim: usize, rng: &mut R) -> CVector {
    let v = CVector::from_fn(dim, |_, _| gaussian_complex(rng));
    let n = v.norm();
    v / Complex64::new(n, 0.0)
}
