use nalgebra::{DMatrix, DVector};

use super::{DenseMatrix, LinalgError, Result};

/// Low-rank matrix held as `U diag(σ) Vᵀ`.
///
/// `U` is `rows×r`, `V` is `cols×r`, both with orthonormal columns, and `σ` is
/// strictly positive and non-increasing. Rank zero is the zero matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SkinnySvd {
    pub u: DenseMatrix,
    pub sigma: Vec<f64>,
    pub v: DenseMatrix,
}

impl SkinnySvd {
    pub fn zero(rows: usize, cols: usize) -> Self {
        Self {
            u: DMatrix::zeros(rows, 0),
            sigma: Vec::new(),
            v: DMatrix::zeros(cols, 0),
        }
    }

    /// Builds the factorization, checking shapes and the ordering of `sigma`.
    pub fn new(u: DenseMatrix, sigma: Vec<f64>, v: DenseMatrix) -> Result<Self> {
        let r = sigma.len();
        if u.ncols() != r || v.ncols() != r {
            return Err(LinalgError::DimensionMismatch(format!(
                "U has {} columns, V has {}, sigma has {r} entries",
                u.ncols(),
                v.ncols()
            )));
        }
        if sigma.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(LinalgError::InvalidArgument(
                "singular values must be finite and positive".into(),
            ));
        }
        if sigma.windows(2).any(|w| w[0] < w[1]) {
            return Err(LinalgError::InvalidArgument(
                "singular values must be non-increasing".into(),
            ));
        }
        Ok(Self { u, sigma, v })
    }

    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    pub fn nrows(&self) -> usize {
        self.u.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.v.nrows()
    }

    /// `U Σ`, i.e. the left factor with singular values folded in.
    pub fn scaled_u(&self) -> DenseMatrix {
        let mut us = self.u.clone();
        for (j, s) in self.sigma.iter().enumerate() {
            us.column_mut(j).scale_mut(*s);
        }
        us
    }

    pub fn to_dense(&self) -> DenseMatrix {
        if self.rank() == 0 {
            return DMatrix::zeros(self.nrows(), self.ncols());
        }
        self.scaled_u() * self.v.transpose()
    }

    /// `Z w = U(Σ(Vᵀ w))`.
    pub fn apply(&self, w: &DVector<f64>) -> DVector<f64> {
        let mut t = self.v.tr_mul(w);
        for (t, s) in t.iter_mut().zip(&self.sigma) {
            *t *= s;
        }
        &self.u * t
    }

    /// `Zᵀ w = V(Σ(Uᵀ w))`.
    pub fn apply_adjoint(&self, w: &DVector<f64>) -> DVector<f64> {
        let mut t = self.u.tr_mul(w);
        for (t, s) in t.iter_mut().zip(&self.sigma) {
            *t *= s;
        }
        &self.v * t
    }

    pub fn frob_norm_sq(&self) -> f64 {
        self.sigma.iter().map(|s| s * s).sum()
    }

    pub fn nuclear_norm(&self) -> f64 {
        self.sigma.iter().sum()
    }

    /// `⟨Z₁, Z₂⟩ = Σᵢⱼ σ₁ᵢ σ₂ⱼ (U₁ᵀU₂)ᵢⱼ (V₁ᵀV₂)ᵢⱼ`, computed from the factors.
    pub fn inner(&self, other: &SkinnySvd) -> f64 {
        if self.rank() == 0 || other.rank() == 0 {
            return 0.0;
        }
        let uu = self.u.tr_mul(&other.u);
        let vv = self.v.tr_mul(&other.v);
        let mut acc = 0.0;
        for j in 0..other.rank() {
            for i in 0..self.rank() {
                acc += self.sigma[i] * other.sigma[j] * uu[(i, j)] * vv[(i, j)];
            }
        }
        acc
    }

    /// `‖Z₁ − Z₂‖²` from the factors alone.
    ///
    /// `Z₁ − Z₂ = [U₁ U₂] diag(Σ₁, −Σ₂) [V₁ V₂]ᵀ`; with thin QR factors
    /// `[U₁ U₂] = Q_u R_u` and `[V₁ V₂] = Q_v R_v` the norm equals
    /// `‖R_u diag(Σ₁, −Σ₂) R_vᵀ‖`, a `(r₁+r₂)`-sized problem. Unlike the
    /// expansion `‖Z₁‖² + ‖Z₂‖² − 2⟨Z₁, Z₂⟩` this does not lose the small
    /// differences to cancellation.
    pub fn dist_sq(&self, other: &SkinnySvd) -> f64 {
        let (r1, r2) = (self.rank(), other.rank());
        if r1 == 0 {
            return other.frob_norm_sq();
        }
        if r2 == 0 {
            return self.frob_norm_sq();
        }
        let stack = |a: &DenseMatrix, b: &DenseMatrix| {
            let mut s = DMatrix::zeros(a.nrows(), r1 + r2);
            s.columns_mut(0, r1).copy_from(a);
            s.columns_mut(r1, r2).copy_from(b);
            s
        };
        let ru = stack(&self.u, &other.u).qr().r();
        let mut rv = stack(&self.v, &other.v).qr().r();
        let signed = self.sigma.iter().copied().chain(other.sigma.iter().map(|s| -s));
        for (j, s) in signed.enumerate() {
            rv.column_mut(j).scale_mut(s);
        }
        (ru * rv.transpose()).norm_squared()
    }

    /// `⟨Z, D⟩` against a dense matrix, as `Σⱼ σⱼ uⱼᵀ D vⱼ`.
    pub fn inner_dense(&self, d: &DenseMatrix) -> f64 {
        if self.rank() == 0 {
            return 0.0;
        }
        let dv = d * &self.v;
        (0..self.rank())
            .map(|j| self.sigma[j] * self.u.column(j).dot(&dv.column(j)))
            .sum()
    }

    /// `‖Z − D‖²` for a dense `D`.
    pub fn dist_sq_dense(&self, d: &DenseMatrix) -> f64 {
        (self.frob_norm_sq() + d.norm_squared() - 2.0 * self.inner_dense(d)).max(0.0)
    }
}

/// `X·Z` evaluated as `((X U) Σ) Vᵀ`.
pub fn skinny_matmul_left(x: &DenseMatrix, z: &SkinnySvd) -> Result<DenseMatrix> {
    if x.ncols() != z.nrows() {
        return Err(LinalgError::DimensionMismatch(format!(
            "X is {}x{}, Z has {} rows",
            x.nrows(),
            x.ncols(),
            z.nrows()
        )));
    }
    if z.rank() == 0 {
        return Ok(DMatrix::zeros(x.nrows(), z.ncols()));
    }
    let mut xu = x * &z.u;
    for (j, s) in z.sigma.iter().enumerate() {
        xu.column_mut(j).scale_mut(*s);
    }
    Ok(xu * z.v.transpose())
}
