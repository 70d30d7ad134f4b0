//! Closed-form proximal operators of the `l2,1` norm and the nuclear norm.

use crate::linalg::{
    dense_svd, ensure_finite, lanczos_partial_svd, DenseMatrix, LanczosOptions, LinalgError,
    LinearOperator, PartialSvd, Result, SkinnySvd,
};

/// Nonnegative, finite shrinkage threshold.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct ShrinkThreshold(f64);

impl ShrinkThreshold {
    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && value >= 0.0 {
            Ok(Self(value))
        } else {
            Err(LinalgError::InvalidArgument(format!(
                "shrinkage threshold must be finite and >= 0, got {value}"
            )))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// `argmin_W eps·‖W‖₂,₁ + ½‖W − M‖²`: each column is scaled by
/// `max(0, 1 − eps/‖mᵢ‖)`.
pub fn l21_shrink(m: &DenseMatrix, eps: ShrinkThreshold) -> Result<DenseMatrix> {
    ensure_finite(m, "l21_shrink input")?;
    let eps = eps.value();
    let mut out = m.clone();
    for mut col in out.column_iter_mut() {
        let norm = col.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm <= eps {
            col.fill(0.0);
        } else {
            col.scale_mut(1.0 - eps / norm);
        }
    }
    Ok(out)
}

/// `‖M‖₂,₁`, the sum of column norms.
pub fn l21_norm(m: &DenseMatrix) -> f64 {
    m.column_iter().map(|c| c.norm()).sum()
}

#[derive(Debug, Clone)]
pub struct SvtOutput {
    /// Soft-thresholded factorization; holds exactly the values that were
    /// strictly above the threshold.
    pub z: SkinnySvd,
    /// Number of singular triplets computed.
    pub computed: usize,
    /// The smallest computed singular value was still above the threshold,
    /// so part of the spectrum above it may be missing.
    pub spectrum_truncated: bool,
}

impl SvtOutput {
    /// Kept rank `r'`.
    pub fn kept(&self) -> usize {
        self.z.rank()
    }
}

fn shrink_spectrum(svd: PartialSvd, tau: f64, kmax: usize) -> SvtOutput {
    let computed = svd.sigma.len();
    let kept = svd.sigma.iter().take_while(|s| **s > tau).count();
    let spectrum_truncated = kept == computed && computed < kmax;
    let sigma = svd.sigma[..kept].iter().map(|s| s - tau).collect();
    SvtOutput {
        z: SkinnySvd {
            u: svd.u.columns(0, kept).into_owned(),
            sigma,
            v: svd.v.columns(0, kept).into_owned(),
        },
        computed,
        spectrum_truncated,
    }
}

/// Singular value thresholding of an implicit operator from its top
/// `rank_hint` triplets (computed by Lanczos bidiagonalization).
///
/// Values equal to `tau` are discarded.
pub fn svt<O: LinearOperator + ?Sized>(
    op: &O,
    tau: ShrinkThreshold,
    rank_hint: usize,
    opts: &LanczosOptions,
) -> Result<SvtOutput> {
    let kmax = op.nrows().min(op.ncols());
    let svd = lanczos_partial_svd(op, rank_hint, opts)?;
    Ok(shrink_spectrum(svd, tau.value(), kmax))
}

/// Singular value thresholding of an explicit matrix through a full dense SVD.
pub fn svt_dense(m: &DenseMatrix, tau: ShrinkThreshold, rank_hint: usize) -> Result<SvtOutput> {
    ensure_finite(m, "svt input")?;
    let kmax = m.nrows().min(m.ncols());
    if rank_hint == 0 || rank_hint > kmax {
        return Err(LinalgError::RankOutOfRange {
            k: rank_hint,
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    let (u, sigma, v) = dense_svd(m);
    let svd = PartialSvd {
        u: u.columns(0, rank_hint).into_owned(),
        sigma: sigma[..rank_hint].to_vec(),
        v: v.columns(0, rank_hint).into_owned(),
        steps: 0,
    };
    Ok(shrink_spectrum(svd, tau.value(), kmax))
}

/// [`svt`] with the under-prediction policy: when the computed spectrum never
/// drops to the threshold the rank is doubled (capped at the operator size)
/// and the decomposition repeated until it does.
///
/// Returns the output together with the rank that was finally requested.
pub fn svt_growing<O: LinearOperator + ?Sized>(
    op: &O,
    tau: ShrinkThreshold,
    rank_hint: usize,
    opts: &LanczosOptions,
) -> Result<(SvtOutput, usize)> {
    let kmax = op.nrows().min(op.ncols());
    let mut rank = rank_hint.clamp(1, kmax);
    loop {
        let out = svt(op, tau, rank, opts)?;
        if !out.spectrum_truncated || rank == kmax {
            return Ok((out, rank));
        }
        log::debug!("svt: rank {rank} under-predicted, retrying");
        rank = (rank * 2).min(kmax);
    }
}
