use crate::error::{Error, Result};
use crate::linalg::{dense_svd, DenseMatrix};
use crate::prox::{l21_norm, l21_shrink, svt_dense, ShrinkThreshold};

/// `min f(x) + g(y)  s.t.  A(x) + B(y) = c` with convex `f`, `g`.
///
/// All elements are stored as matrices (a vector is a one-column matrix).
/// `prox_f(p, w)` must return the exact minimizer of `f(x) + (w/2)‖x − p‖²`.
pub trait SeparableProblem {
    fn apply_a(&self, x: &DenseMatrix) -> DenseMatrix;
    fn adjoint_a(&self, l: &DenseMatrix) -> DenseMatrix;
    fn apply_b(&self, y: &DenseMatrix) -> DenseMatrix;
    fn adjoint_b(&self, l: &DenseMatrix) -> DenseMatrix;
    fn target(&self) -> &DenseMatrix;
    fn prox_f(&self, point: &DenseMatrix, weight: f64) -> Result<DenseMatrix>;
    fn prox_g(&self, point: &DenseMatrix, weight: f64) -> Result<DenseMatrix>;
    /// Upper bound on `‖A‖²`.
    fn norm_a_sq_bound(&self) -> f64;
    /// Upper bound on `‖B‖²`.
    fn norm_b_sq_bound(&self) -> f64;
    fn x_shape(&self) -> (usize, usize);
    fn y_shape(&self) -> (usize, usize);

    /// `f(x) + g(y)`, when cheap enough to report per iteration.
    fn objective(&self, _x: &DenseMatrix, _y: &DenseMatrix) -> Option<f64> {
        None
    }
}

/// Convex regularizers with closed-form proximal maps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regularizer {
    Zero,
    /// `scale · ‖x‖₁`
    L1(f64),
    /// `scale · ‖x‖₂,₁` (sum of column norms)
    L21(f64),
    /// `scale · ‖x‖_*`
    Nuclear(f64),
}

impl Regularizer {
    pub fn value(&self, x: &DenseMatrix) -> f64 {
        match *self {
            Regularizer::Zero => 0.0,
            Regularizer::L1(s) => s * x.iter().map(|v| v.abs()).sum::<f64>(),
            Regularizer::L21(s) => s * l21_norm(x),
            Regularizer::Nuclear(s) => s * dense_svd(x).1.iter().sum::<f64>(),
        }
    }

    /// `argmin_x r(x) + (weight/2)‖x − point‖²`.
    pub fn prox(&self, point: &DenseMatrix, weight: f64) -> Result<DenseMatrix> {
        if !(weight > 0.0) {
            return Err(Error::Config(format!("prox weight must be positive, got {weight}")));
        }
        Ok(match *self {
            Regularizer::Zero => point.clone(),
            Regularizer::L1(s) => {
                let t = s / weight;
                point.map(|v| v.signum() * (v.abs() - t).max(0.0))
            }
            Regularizer::L21(s) => l21_shrink(point, ShrinkThreshold::new(s / weight)?)?,
            Regularizer::Nuclear(s) => {
                let full = point.nrows().min(point.ncols());
                svt_dense(point, ShrinkThreshold::new(s / weight)?, full)?.z.to_dense()
            }
        })
    }
}

/// Problem whose linear maps are left multiplications: `A(x) = A·x`,
/// `B(y) = B·y`.
#[derive(Debug, Clone)]
pub struct MatrixProblem {
    pub a: DenseMatrix,
    pub b: DenseMatrix,
    pub c: DenseMatrix,
    pub f: Regularizer,
    pub g: Regularizer,
    norm_a_sq: f64,
    norm_b_sq: f64,
}

impl MatrixProblem {
    pub fn new(
        a: DenseMatrix,
        b: DenseMatrix,
        c: DenseMatrix,
        f: Regularizer,
        g: Regularizer,
    ) -> Result<Self> {
        if a.nrows() != c.nrows() || b.nrows() != c.nrows() {
            return Err(Error::Input(format!(
                "A has {} rows, B has {}, c has {}",
                a.nrows(),
                b.nrows(),
                c.nrows()
            )));
        }
        let norm_a_sq = dense_svd(&a).1[0].powi(2);
        let norm_b_sq = dense_svd(&b).1[0].powi(2);
        Ok(Self {
            a,
            b,
            c,
            f,
            g,
            norm_a_sq,
            norm_b_sq,
        })
    }
}

impl SeparableProblem for MatrixProblem {
    fn apply_a(&self, x: &DenseMatrix) -> DenseMatrix {
        &self.a * x
    }

    fn adjoint_a(&self, l: &DenseMatrix) -> DenseMatrix {
        self.a.tr_mul(l)
    }

    fn apply_b(&self, y: &DenseMatrix) -> DenseMatrix {
        &self.b * y
    }

    fn adjoint_b(&self, l: &DenseMatrix) -> DenseMatrix {
        self.b.tr_mul(l)
    }

    fn target(&self) -> &DenseMatrix {
        &self.c
    }

    fn prox_f(&self, point: &DenseMatrix, weight: f64) -> Result<DenseMatrix> {
        self.f.prox(point, weight)
    }

    fn prox_g(&self, point: &DenseMatrix, weight: f64) -> Result<DenseMatrix> {
        self.g.prox(point, weight)
    }

    fn norm_a_sq_bound(&self) -> f64 {
        self.norm_a_sq
    }

    fn norm_b_sq_bound(&self) -> f64 {
        self.norm_b_sq
    }

    fn x_shape(&self) -> (usize, usize) {
        (self.a.ncols(), self.c.ncols())
    }

    fn y_shape(&self) -> (usize, usize) {
        (self.b.ncols(), self.c.ncols())
    }

    fn objective(&self, x: &DenseMatrix, y: &DenseMatrix) -> Option<f64> {
        Some(self.f.value(x) + self.g.value(y))
    }
}
