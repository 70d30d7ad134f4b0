use nalgebra::DVector;

use super::DenseMatrix;

/// A linear map known only through its products `N v` and `Nᵀ u`.
pub trait LinearOperator {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    /// `N v` for `v` of length `ncols()`.
    fn apply(&self, v: &DVector<f64>) -> DVector<f64>;
    /// `Nᵀ u` for `u` of length `nrows()`.
    fn apply_adjoint(&self, u: &DVector<f64>) -> DVector<f64>;
}

/// Wraps an explicit matrix.
#[derive(Debug, Clone, Copy)]
pub struct DenseOperator<'a>(pub &'a DenseMatrix);

impl LinearOperator for DenseOperator<'_> {
    fn nrows(&self) -> usize {
        self.0.nrows()
    }

    fn ncols(&self) -> usize {
        self.0.ncols()
    }

    fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        self.0 * v
    }

    fn apply_adjoint(&self, u: &DVector<f64>) -> DVector<f64> {
        self.0.tr_mul(u)
    }
}

/// Operator assembled from a pair of closures.
pub struct FnOperator<F, G> {
    rows: usize,
    cols: usize,
    apply: F,
    adjoint: G,
}

impl<F, G> FnOperator<F, G>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
    G: Fn(&DVector<f64>) -> DVector<f64>,
{
    pub fn new(rows: usize, cols: usize, apply: F, adjoint: G) -> Self {
        Self {
            rows,
            cols,
            apply,
            adjoint,
        }
    }
}

impl<F, G> LinearOperator for FnOperator<F, G>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
    G: Fn(&DVector<f64>) -> DVector<f64>,
{
    fn nrows(&self) -> usize {
        self.rows
    }

    fn ncols(&self) -> usize {
        self.cols
    }

    fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        debug_assert_eq!(v.len(), self.cols);
        (self.apply)(v)
    }

    fn apply_adjoint(&self, u: &DVector<f64>) -> DVector<f64> {
        debug_assert_eq!(u.len(), self.rows);
        (self.adjoint)(u)
    }
}

impl<T: LinearOperator + ?Sized> LinearOperator for &T {
    fn nrows(&self) -> usize {
        (**self).nrows()
    }

    fn ncols(&self) -> usize {
        (**self).ncols()
    }

    fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        (**self).apply(v)
    }

    fn apply_adjoint(&self, u: &DVector<f64>) -> DVector<f64> {
        (**self).apply_adjoint(u)
    }
}
