//! Sample (auto)covariance matrices and their spectra.
//!
//! All spectra are returned raw and in descending order. A normalization
//! constant (`a_np^2`) can be attached to a [`SpectrumResult`], but it is
//! never applied behind the caller's back.

pub mod eigen;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// A symmetric matrix. Construction checks symmetry and then averages the two
/// triangles so downstream solvers see an exactly symmetric input.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(Matrix);

/// Admissible asymmetry relative to the largest entry (floored at 1).
pub const SYMMETRY_TOL: f64 = 1e-12;

impl SymMatrix {
    pub fn new(m: Matrix) -> Result<Self> {
        let (r, c) = m.shape();
        if r != c {
            return Err(Error::ShapeMismatch {
                expected: (r, r),
                got: (r, c),
            });
        }
        if m.as_slice().iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("matrix has non-finite entries"));
        }
        let tol = SYMMETRY_TOL * m.max_abs().max(1.0);
        let mut m = m;
        for i in 0..r {
            for j in 0..i {
                let (a, b) = (m[(i, j)], m[(j, i)]);
                if (a - b).abs() > tol {
                    return Err(Error::invalid(format!(
                        "matrix is not symmetric at ({i}, {j}): {a} vs {b}"
                    )));
                }
                let avg = 0.5 * (a + b);
                m[(i, j)] = avg;
                m[(j, i)] = avg;
            }
        }
        Ok(SymMatrix(m))
    }

    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }
}

/// Eigen-decomposition with eigenvalues in descending order; column `i` of
/// `vectors` belongs to `values[i]`.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

/// Full eigen-decomposition by cyclic Jacobi rotations.
pub fn sym_eigen(m: &SymMatrix) -> Result<SymEigen> {
    let (vals, vecs) = eigen::jacobi(m.matrix())?;
    let n = vals.len();
    let mut order: Vec<usize> = (0..n).collect();
    // stable: ties keep diagonal order
    order.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]));
    let mut vectors = Matrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        for k in 0..n {
            vectors[(k, dst)] = vecs[(k, src)];
        }
    }
    Ok(SymEigen {
        values: order.iter().map(|&i| vals[i]).collect(),
        vectors,
    })
}

/// Eigenvalues only, descending.
pub fn sym_eigenvalues(m: &SymMatrix) -> Result<Vec<f64>> {
    let mut vals = eigen::tridiagonal_ql(m.matrix())?;
    sort_desc(&mut vals);
    Ok(vals)
}

pub(crate) fn sort_desc(v: &mut [f64]) {
    v.sort_by(|a, b| b.total_cmp(a));
}

/// Ordered eigen- or singular values of one sample (auto)covariance matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumResult {
    pub lag: usize,
    /// Descending.
    pub values: Vec<f64>,
    /// `a_np^2`, when known.
    pub normalization: Option<f64>,
    pub is_eigen: bool,
    pub is_singular: bool,
}

impl SpectrumResult {
    pub fn with_normalization(mut self, a2: f64) -> Self {
        self.normalization = Some(a2);
        self
    }

    pub fn largest(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn trace(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Values divided by the attached normalization.
    pub fn normalized(&self) -> Result<Vec<f64>> {
        let a2 = self
            .normalization
            .ok_or_else(|| Error::invalid("spectrum has no normalization attached"))?;
        Ok(self.values.iter().map(|v| v / a2).collect())
    }
}

/// Sample autocovariance matrix `X0 Xs'` (not symmetric for `s > 0`).
pub fn autocov(x0: &Matrix, xs: &Matrix) -> Result<Matrix> {
    if x0.shape() != xs.shape() {
        return Err(Error::ShapeMismatch {
            expected: x0.shape(),
            got: xs.shape(),
        });
    }
    x0.mul_transpose(xs)
}

/// The smaller of the two Gram matrices `A A'` and `A'A`.
fn smaller_gram(a: &Matrix) -> SymMatrix {
    if a.rows() <= a.cols() {
        SymMatrix(a.gram())
    } else {
        SymMatrix(a.transpose().gram())
    }
}

/// Eigenvalues of `A A'` (length `rows`), clipped at zero; the Gram switch to
/// `A'A` is used when `A` has more rows than columns.
fn gram_eigenvalues(a: &Matrix) -> Result<Vec<f64>> {
    let mut vals = sym_eigenvalues(&smaller_gram(a))?;
    for v in vals.iter_mut() {
        *v = v.max(0.0);
    }
    vals.resize(a.rows(), 0.0);
    Ok(vals)
}

/// Singular values of `a`, descending, one per row (zero-padded).
pub fn singular_values(a: &Matrix) -> Result<Vec<f64>> {
    Ok(gram_eigenvalues(a)?.into_iter().map(f64::sqrt).collect())
}

/// Eigenvalues of the sample covariance matrix `X X'`.
pub fn covariance_eigs(x: &Matrix) -> Result<SpectrumResult> {
    if x.rows() == 0 || x.cols() == 0 {
        return Err(Error::invalid("panel must have p, n >= 1"));
    }
    Ok(SpectrumResult {
        lag: 0,
        values: gram_eigenvalues(x)?,
        normalization: None,
        is_eigen: true,
        is_singular: true,
    })
}

/// Singular values of the lag-`lag` sample autocovariance matrix `X0 Xs'`.
pub fn autocov_spectrum(x0: &Matrix, xs: &Matrix, lag: usize) -> Result<SpectrumResult> {
    if lag == 0 && x0 == xs {
        return covariance_eigs(x0);
    }
    let a = autocov(x0, xs)?;
    Ok(SpectrumResult {
        lag,
        values: singular_values(&a)?,
        normalization: None,
        is_eigen: false,
        is_singular: true,
    })
}

/// Largest singular value.
pub fn spectral_norm(a: &Matrix) -> Result<f64> {
    if a.rows() == 0 || a.cols() == 0 {
        return Ok(0.0);
    }
    let vals = sym_eigenvalues(&smaller_gram(a))?;
    Ok(vals.first().copied().unwrap_or(0.0).max(0.0).sqrt())
}

pub fn frobenius_norm(a: &Matrix) -> f64 {
    a.frobenius_norm()
}

/// Spectral norm of a symmetric matrix, `max |eigenvalue|`.
pub fn sym_spectral_norm(m: &SymMatrix) -> Result<f64> {
    let vals = sym_eigenvalues(m)?;
    Ok(vals.iter().fold(0.0f64, |acc, v| acc.max(v.abs())))
}

/// Outcome of a Weyl-inequality check `max_i |l_(i)(A+B) - l_(i)(A)| <= ||B||_2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeylCheck {
    pub max_deviation: f64,
    pub perturbation_norm: f64,
    pub holds: bool,
}

/// Checks Weyl's inequality for the pair `(A, B)`.
pub fn weyl_check(a: &SymMatrix, b: &SymMatrix) -> Result<WeylCheck> {
    let mut sum = a.matrix().clone();
    sum.add_assign(b.matrix())?;
    let la = sym_eigenvalues(a)?;
    let lab = sym_eigenvalues(&SymMatrix(sum))?;
    let norm_b = sym_spectral_norm(b)?;
    let max_deviation = la
        .iter()
        .zip(&lab)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    let slack = 1e-10 * (norm_b + la.iter().fold(0.0f64, |m, v| m.max(v.abs())));
    Ok(WeylCheck {
        max_deviation,
        perturbation_norm: norm_b,
        holds: max_deviation <= norm_b + slack,
    })
}

/// Distance of `X X'` from its diagonal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiagGap {
    /// `a2^{-1} ||X X' - diag(X X')||_2`.
    pub gap: f64,
    /// `a2^{-1} max_i |l_(i)(X X') - l_(i)(diag(X X'))|`.
    pub eigen_deviation: f64,
    pub weyl: WeylCheck,
}

pub fn diag_gap(x: &Matrix, a2: f64) -> Result<DiagGap> {
    if !(a2 > 0.0) {
        return Err(Error::invalid("normalization a2 must be positive"));
    }
    let g = x.gram();
    let diag = g.diagonal();
    let mut off = g;
    for i in 0..off.rows() {
        off[(i, i)] = 0.0;
    }
    let weyl = weyl_check(&SymMatrix(Matrix::diag(&diag)), &SymMatrix(off))?;
    Ok(DiagGap {
        gap: weyl.perturbation_norm / a2,
        eigen_deviation: weyl.max_deviation / a2,
        weyl,
    })
}

/// `sum_{s=s0}^{s1} A(s) A(s)'` with `A(s) = X(0) X(s)'`; `panels[s]` is `X(s)`.
pub fn sum_squares_matrix<M: AsRef<Matrix>>(panels: &[M], s0: usize, s1: usize) -> Result<SymMatrix> {
    if s0 > s1 || s1 >= panels.len() {
        return Err(Error::invalid(format!(
            "need s0 <= s1 < {} panels, got s0 = {s0}, s1 = {s1}",
            panels.len()
        )));
    }
    let x0 = panels[0].as_ref();
    let p = x0.rows();
    let mut total = Matrix::zeros(p, p);
    for xs in &panels[s0..=s1] {
        let a = autocov(x0, xs.as_ref())?;
        total.add_assign(&a.mul_transpose(&a)?)?;
    }
    SymMatrix::new(total)
}

/// Descending eigenvalues `w_(i)(s0, s1)` of the summed squares.
pub fn sum_squares_eigs<M: AsRef<Matrix>>(panels: &[M], s0: usize, s1: usize) -> Result<Vec<f64>> {
    let mut vals = sym_eigenvalues(&sum_squares_matrix(panels, s0, s1)?)?;
    for v in vals.iter_mut() {
        *v = v.max(0.0);
    }
    Ok(vals)
}

impl AsRef<Matrix> for Matrix {
    fn as_ref(&self) -> &Matrix {
        self
    }
}

impl AsRef<Matrix> for crate::matrix::Panel {
    fn as_ref(&self) -> &Matrix {
        &self.matrix
    }
}
