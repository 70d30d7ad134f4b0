//! Dense matrix primitives, factored low-rank matrices, implicit operators
//! and a Lanczos-bidiagonalization partial SVD.
//!
//! Dense storage is `nalgebra::DMatrix<f64>`. Everything that only needs
//! products with a matrix goes through [`LinearOperator`], so the partial SVD
//! never has to see the entries of what it decomposes.

mod lanczos;
mod operator;
mod skinny;

pub use lanczos::{lanczos_partial_svd, LanczosOptions, PartialSvd};
pub use operator::{DenseOperator, FnOperator, LinearOperator};
pub use skinny::{skinny_matmul_left, SkinnySvd};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

/// Row-by-column real matrix used for every explicit matrix in the crate.
pub type DenseMatrix = DMatrix<f64>;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("{what} contains a non-finite entry")]
    NonFinite { what: &'static str },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("requested {k} singular triplets from a {rows}x{cols} operator")]
    RankOutOfRange { k: usize, rows: usize, cols: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("partial SVD did not converge after {steps} Lanczos steps")]
    NoConvergence {
        steps: usize,
        best: Box<PartialSvd>,
    },
}

pub type Result<T> = std::result::Result<T, LinalgError>;

pub(crate) fn ensure_finite(m: &DenseMatrix, what: &'static str) -> Result<()> {
    if m.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(LinalgError::NonFinite { what })
    }
}

/// Unit-norm Gaussian vector drawn from `rng`.
pub(crate) fn random_unit_vector(len: usize, rng: &mut impl Rng) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(len, |_, _| rng.sample::<f64, _>(StandardNormal));
        let norm = v.norm();
        if norm > 0.0 {
            return v / norm;
        }
    }
}

/// Matrix with i.i.d. standard normal entries.
pub fn gaussian_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> DenseMatrix {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Estimate of `σ_max(X)²` by power iteration on `XᵀX`.
///
/// The start vector is drawn from a ChaCha generator seeded with `seed`, so the
/// estimate is reproducible. Iteration stops once the relative change of the
/// Rayleigh quotient drops below `tol / 100`, which keeps the estimate within
/// relative `tol` of the true value unless the top two singular values are
/// nearly tied.
pub fn spectral_norm_sq(x: &DenseMatrix, tol: f64, max_iter: usize, seed: u64) -> Result<f64> {
    if x.nrows() == 0 || x.ncols() == 0 {
        return Err(LinalgError::InvalidArgument("empty matrix".into()));
    }
    if !(tol > 0.0) {
        return Err(LinalgError::InvalidArgument(format!("tol must be positive, got {tol}")));
    }
    ensure_finite(x, "spectral_norm_sq input")?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = random_unit_vector(x.ncols(), &mut rng);
    let mut estimate = 0.0_f64;
    for _ in 0..max_iter.max(1) {
        let xv = x * &v;
        let rayleigh = xv.norm_squared();
        let w = x.tr_mul(&xv);
        let w_norm = w.norm();
        if w_norm == 0.0 {
            // v lies in the null space; X may still be nonzero elsewhere.
            if x.iter().all(|&e| e == 0.0) {
                return Ok(0.0);
            }
            v = random_unit_vector(x.ncols(), &mut rng);
            continue;
        }
        v = w / w_norm;
        let change = (rayleigh - estimate).abs();
        estimate = rayleigh;
        if change <= 1e-2 * tol * rayleigh {
            break;
        }
    }
    // One last Rayleigh quotient at the final iterate.
    Ok(estimate.max((x * &v).norm_squared()))
}

/// Full thin SVD with singular values sorted in non-increasing order.
///
/// Returns `(U, σ, V)` with `U: m×p`, `V: n×p`, `p = min(m, n)`.
pub fn dense_svd(m: &DenseMatrix) -> (DenseMatrix, Vec<f64>, DenseMatrix) {
    let (rows, cols) = m.shape();
    let p = rows.min(cols);
    if p == 0 {
        return (DMatrix::zeros(rows, 0), Vec::new(), DMatrix::zeros(cols, 0));
    }
    // nalgebra's bidiagonal SVD can stop early when a tiny diagonal entry sits
    // next to exact zeros, which is the usual shape of a Lanczos projection.
    let fm = faer::Mat::<f64>::from_fn(rows, cols, |i, j| m[(i, j)]);
    let svd = fm.thin_svd().expect("SVD of a finite matrix");
    let (fu, fs, fv) = (svd.U(), svd.S().column_vector(), svd.V());
    let u = DMatrix::from_fn(rows, p, |i, j| fu[(i, j)]);
    let v = DMatrix::from_fn(cols, p, |i, j| fv[(i, j)]);
    (u, (0..p).map(|i| fs[i]).collect(), v)
}

/// Orthonormal basis of the column span of a random Gaussian `rows×cols`
/// matrix (`cols ≤ rows`).
pub fn random_orthonormal(rows: usize, cols: usize, rng: &mut impl Rng) -> DenseMatrix {
    assert!(cols <= rows, "need cols <= rows for orthonormal columns");
    let g = gaussian_matrix(rows, cols, rng);
    let qr = g.qr();
    let q = qr.q();
    let r = qr.r();
    // Fix column signs so the factor is unique given the Gaussian draw.
    let mut q = q.columns(0, cols).into_owned();
    for j in 0..cols {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Frobenius inner product `⟨A, B⟩ = tr(AᵀB)`.
pub fn frob_inner(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectral_norm_identity() {
        let x = DenseMatrix::identity(5, 5);
        let s = spectral_norm_sq(&x, 1e-10, 100, 1).unwrap();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn spectral_norm_diagonal() {
        let x = DenseMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 1.0]);
        let s = spectral_norm_sq(&x, 1e-12, 1000, 7).unwrap();
        assert!((s - 9.0).abs() < 1e-9, "{s}");
    }

    #[test]
    fn spectral_norm_gaussian_matches_dense_svd() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let x = gaussian_matrix(40, 60, &mut rng);
        let (_, sigma, _) = dense_svd(&x);
        let oracle = sigma[0] * sigma[0];
        let s = spectral_norm_sq(&x, 1e-8, 10_000, 3).unwrap();
        assert!(((s - oracle) / oracle).abs() < 1e-6, "{s} vs {oracle}");
        assert!(s >= oracle * (1.0 - 1e-8));
    }

    #[test]
    fn spectral_norm_rejects_nan() {
        let mut x = DenseMatrix::identity(3, 3);
        x[(1, 2)] = f64::NAN;
        assert!(matches!(
            spectral_norm_sq(&x, 1e-6, 10, 0),
            Err(LinalgError::NonFinite { .. })
        ));
    }

    #[test]
    fn spectral_norm_zero_matrix() {
        let x = DenseMatrix::zeros(4, 3);
        assert_eq!(spectral_norm_sq(&x, 1e-6, 10, 0).unwrap(), 0.0);
    }

    #[test]
    fn dense_svd_sorted() {
        let x = DenseMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 5.0, 3.0]));
        let (u, s, v) = dense_svd(&x);
        assert_eq!(s.len(), 3);
        assert!((s[0] - 5.0).abs() < 1e-12 && (s[2] - 1.0).abs() < 1e-12);
        let rec = &u * DenseMatrix::from_diagonal(&DVector::from_vec(s)) * v.transpose();
        assert!((rec - x).norm() < 1e-12);
    }

    #[test]
    fn random_orthonormal_is_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let q = random_orthonormal(30, 6, &mut rng);
        let gram = q.tr_mul(&q);
        assert!((gram - DenseMatrix::identity(6, 6)).amax() < 1e-12);
    }
}
