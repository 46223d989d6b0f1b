//! Dense complex linear-algebra helpers shared by the solver modules.
//!
//! Everything is expressed on `nalgebra` dynamic matrices of `Complex64`.
//! Hermitian matrices are symmetrized before factorization so that
//! round-off asymmetry never leaks into eigenvalues or Cholesky factors.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

/// Above this order the largest eigenvalue is found by power iteration
/// instead of a full Hermitian eigendecomposition.
pub const POWER_ITERATION_ORDER: usize = 2000;

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// `(m + m^H) / 2`.
pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()).scale(0.5)
}

pub fn trace(m: &CMat) -> Complex64 {
    m.diagonal().iter().sum()
}

/// Squared Frobenius norm.
pub fn frob_sq(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}

/// Eigendecomposition `m = Q diag(values) Q^H` of a Hermitian matrix with
/// eigenvalues sorted in descending order.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMat,
}

impl HermitianEigen {
    pub fn new(m: &CMat) -> Self {
        let n = m.nrows();
        let eig = hermitian_part(m).symmetric_eigen();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let mut vectors = CMat::zeros(n, n);
        for (dst, &src) in order.iter().enumerate() {
            vectors.set_column(dst, &eig.eigenvectors.column(src));
        }
        Self { values, vectors }
    }

    pub fn max(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn min(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    /// Number of eigenvalues at or above `rel_threshold * max(|λ|)`.
    pub fn rank(&self, rel_threshold: f64) -> usize {
        let top = self.values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
        if top == 0.0 {
            return 0;
        }
        self.values.iter().filter(|&&v| v >= rel_threshold * top).count()
    }

    /// `Q diag(values) Q^H`.
    pub fn reassemble(&self) -> CMat {
        let mut scaled = self.vectors.clone();
        for (j, &v) in self.values.iter().enumerate() {
            scaled.column_mut(j).scale_mut(v);
        }
        &scaled * self.vectors.adjoint()
    }
}

/// Largest eigenvalue of a Hermitian matrix.
pub fn max_eigenvalue(m: &CMat) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    if m.nrows() > POWER_ITERATION_ORDER {
        power_iteration_max_eigenvalue(m, 1e-12, 10_000)
    } else {
        HermitianEigen::new(m).max()
    }
}

/// Power iteration for the dominant eigenvalue of a Hermitian PSD matrix.
pub fn power_iteration_max_eigenvalue(m: &CMat, tol: f64, max_iters: usize) -> f64 {
    let n = m.nrows();
    if n == 0 {
        return 0.0;
    }
    // deterministic start vector with no special alignment to any axis
    let mut x = CVec::from_fn(n, |i, _| c(1.0 + 0.01 * i as f64, 0.5 - 0.003 * i as f64));
    x.normalize_mut();
    let mut lambda = 0.0;
    for _ in 0..max_iters {
        let y = m * &x;
        let next = x.dotc(&y).re;
        let norm = y.norm();
        if norm == 0.0 {
            return 0.0;
        }
        x = y.unscale(norm);
        if (next - lambda).abs() <= tol * next.abs().max(f64::MIN_POSITIVE) {
            return next;
        }
        lambda = next;
    }
    lambda
}

fn cholesky(a: &CMat, what: &str) -> Result<Cholesky<Complex64, Dyn>> {
    Cholesky::new(hermitian_part(a)).ok_or_else(|| Error::Numerical {
        what: format!("{what}: matrix is not numerically positive definite"),
        condition: condition_number(a),
    })
}

/// Solve `a x = b` for Hermitian positive definite `a`.
pub fn hpd_solve(a: &CMat, b: &CMat) -> Result<CMat> {
    Ok(cholesky(a, "hpd_solve")?.solve(b))
}

/// Inverse of a Hermitian positive definite matrix, symmetrized.
pub fn hpd_inverse(a: &CMat) -> Result<CMat> {
    Ok(hermitian_part(&cholesky(a, "hpd_inverse")?.inverse()))
}

/// Natural log-determinant of a Hermitian positive definite matrix.
pub fn ln_det_hpd(a: &CMat) -> Result<f64> {
    let chol = cholesky(a, "ln_det_hpd")?;
    Ok(chol.l_dirty().diagonal().iter().map(|z| 2.0 * z.re.ln()).sum())
}

/// Ratio of extreme eigenvalue magnitudes of a Hermitian matrix.
pub fn condition_number(a: &CMat) -> f64 {
    if a.nrows() == 0 {
        return 1.0;
    }
    let eig = HermitianEigen::new(a);
    let hi = eig.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let lo = eig.values.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    if lo == 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// Leading `count` right singular vectors of `h` as the columns of a
/// `h.ncols() x count` matrix (eigenvectors of `h^H h`).
pub fn leading_right_singular_vectors(h: &CMat, count: usize) -> CMat {
    let gram = h.adjoint() * h;
    let eig = HermitianEigen::new(&gram);
    eig.vectors.columns(0, count).into_owned()
}

/// Elementwise `e^{j arg z}`; zero entries map to phase 0.
pub fn unit_phase(z: Complex64) -> Complex64 {
    let r = z.norm();
    if r == 0.0 {
        c(1.0, 0.0)
    } else {
        z / r
    }
}

pub fn from_diag(v: &CVec) -> CMat {
    CMat::from_diagonal(v)
}
