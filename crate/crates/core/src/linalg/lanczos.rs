use nalgebra::{DMatrix, DVector, Dyn, MatrixView, U1};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{dense_svd, random_unit_vector, DenseMatrix, LinalgError, LinearOperator, Result, SkinnySvd};

type BasisView<'a> = MatrixView<'a, f64, Dyn, Dyn, U1, Dyn>;

#[derive(Debug, Clone, Copy)]
pub struct LanczosOptions {
    /// A Ritz triplet counts as converged once its residual bound is below
    /// `tol · σ₁`.
    pub tol: f64,
    /// Seed for the start vector and for restart vectors after breakdown.
    pub seed: u64,
    /// Step cap; `None` means `10·k + 50`.
    pub max_steps: Option<usize>,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            seed: 0,
            max_steps: None,
        }
    }
}

impl LanczosOptions {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }
}

/// Leading singular triplets of an operator.
///
/// Unlike [`SkinnySvd`], trailing singular values may be zero: when the
/// operator has rank below the requested count the missing values are
/// reported as zeros with orthonormal (but otherwise arbitrary) vectors.
#[derive(Debug, Clone)]
pub struct PartialSvd {
    pub u: DenseMatrix,
    pub sigma: Vec<f64>,
    pub v: DenseMatrix,
    /// Lanczos steps taken.
    pub steps: usize,
}

impl PartialSvd {
    /// Keeps the strictly positive part as a [`SkinnySvd`].
    pub fn into_skinny(self) -> SkinnySvd {
        let r = self.sigma.iter().take_while(|s| **s > 0.0).count();
        SkinnySvd {
            u: self.u.columns(0, r).into_owned(),
            sigma: self.sigma[..r].to_vec(),
            v: self.v.columns(0, r).into_owned(),
        }
    }
}

/// Classical Gram-Schmidt against the columns of `basis`, at least two passes
/// and more while a pass still removes a large share of the norm. Near a
/// breakdown the surviving vector is tiny and gets normalized, so whatever
/// component along `basis` is left over would be blown up.
fn reorthogonalize(w: &mut DVector<f64>, basis: &BasisView<'_>) {
    if basis.ncols() == 0 {
        return;
    }
    let mut before = w.norm();
    for pass in 0..6 {
        let h = basis.tr_mul(w);
        w.gemv(-1.0, basis, &h, 1.0);
        let after = w.norm();
        if pass >= 1 && (after > std::f64::consts::FRAC_1_SQRT_2 * before || after == 0.0) {
            break;
        }
        before = after;
    }
}

/// Random unit vector orthogonal to `basis` (which must not span the space).
fn restart_vector(len: usize, basis: &BasisView<'_>, rng: &mut ChaCha8Rng) -> DVector<f64> {
    loop {
        let mut w = random_unit_vector(len, rng);
        reorthogonalize(&mut w, basis);
        let norm = w.norm();
        if norm > 1e-8 {
            return w / norm;
        }
    }
}

/// Top-`k` singular triplets of `op` by Golub–Kahan–Lanczos bidiagonalization
/// with full reorthogonalization.
///
/// Only `apply` and `apply_adjoint` are used; the operator is never formed.
/// After `j` steps `A Vⱼ = Uⱼ Bⱼ` with `Bⱼ` upper bidiagonal, and a Ritz
/// triplet `(σ, Uⱼp, Vⱼq)` of `Bⱼ = PΣQᵀ` has residual `βⱼ₊₁ |pⱼ|`.
pub fn lanczos_partial_svd<O: LinearOperator + ?Sized>(
    op: &O,
    k: usize,
    opts: &LanczosOptions,
) -> Result<PartialSvd> {
    let m = op.nrows();
    let n = op.ncols();
    let kmax = m.min(n);
    if k == 0 || k > kmax {
        return Err(LinalgError::RankOutOfRange { k, rows: m, cols: n });
    }
    if !(opts.tol > 0.0) {
        return Err(LinalgError::InvalidArgument(format!(
            "tolerance must be positive, got {}",
            opts.tol
        )));
    }
    let cap = opts.max_steps.unwrap_or(10 * k + 50).clamp(k, kmax);

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut ub = DMatrix::<f64>::zeros(m, cap);
    let mut vb = DMatrix::<f64>::zeros(n, cap + 1);
    vb.set_column(0, &random_unit_vector(n, &mut rng));

    let mut alphas: Vec<f64> = Vec::with_capacity(cap);
    let mut betas: Vec<f64> = Vec::with_capacity(cap);
    let mut scale = 0.0_f64;
    let breakdown = |norm: f64, scale: f64| norm <= 1e-13 * scale || norm == 0.0;

    let mut next_check = (k + k / 2 + 5).min(cap);
    let mut best: Option<PartialSvd> = None;

    for j in 0..cap {
        let mut u = op.apply(&vb.column(j).into_owned());
        if j > 0 {
            u.axpy(-betas[j - 1], &ub.column(j - 1), 1.0);
        }
        reorthogonalize(&mut u, &ub.columns(0, j));
        let mut alpha = u.norm();
        scale = scale.max(alpha);
        if breakdown(alpha, scale) {
            alpha = 0.0;
            u = restart_vector(m, &ub.columns(0, j), &mut rng);
        } else {
            u /= alpha;
        }
        ub.set_column(j, &u);
        alphas.push(alpha);
        let steps = j + 1;

        let beta = if steps < n {
            let mut w = op.apply_adjoint(&u);
            w.axpy(-alpha, &vb.column(j), 1.0);
            reorthogonalize(&mut w, &vb.columns(0, steps));
            let mut beta = w.norm();
            scale = scale.max(beta);
            if breakdown(beta, scale) {
                beta = 0.0;
                w = restart_vector(n, &vb.columns(0, steps), &mut rng);
            } else {
                w /= beta;
            }
            vb.set_column(steps, &w);
            beta
        } else {
            0.0
        };
        betas.push(beta);

        if steps < k || (steps < next_check && steps < cap) {
            continue;
        }

        let (triplets, converged) = ritz_triplets(&ub, &vb, &alphas, &betas, steps, m, k, opts.tol);
        if converged {
            return Ok(triplets);
        }
        best = Some(triplets);
        next_check = steps + (k / 4).max(3);
    }

    let best = best.expect("at least one Ritz extraction happens by the step cap");
    Err(LinalgError::NoConvergence {
        steps: best.steps,
        best: Box::new(best),
    })
}

/// Extracts the top-`k` Ritz triplets after `steps` Lanczos steps and reports
/// whether all of them meet the residual test.
#[allow(clippy::too_many_arguments)]
fn ritz_triplets(
    ub: &DenseMatrix,
    vb: &DenseMatrix,
    alphas: &[f64],
    betas: &[f64],
    steps: usize,
    m: usize,
    k: usize,
    tol: f64,
) -> (PartialSvd, bool) {
    let last_beta = betas[steps - 1];
    // With U complete, A = U [B | β e] [V v₊]ᵀ holds exactly.
    let exact_wide = steps == m && last_beta != 0.0;
    let cols = if exact_wide { steps + 1 } else { steps };
    let mut b = DMatrix::<f64>::zeros(steps, cols);
    for i in 0..steps {
        b[(i, i)] = alphas[i];
        if i + 1 < cols {
            b[(i, i + 1)] = betas[i];
        }
    }
    let (p, mut sigma, q) = dense_svd(&b);
    let sigma1 = sigma.first().copied().unwrap_or(0.0);
    // Below rounding level of `B` a Ritz value is indistinguishable from zero.
    let floor = f64::EPSILON * sigma1 * steps as f64;
    for s in sigma.iter_mut().filter(|s| **s <= floor) {
        *s = 0.0;
    }

    let converged = exact_wide
        || last_beta == 0.0
        || (0..k).all(|i| last_beta * p[(steps - 1, i)].abs() <= tol * sigma1);

    let u = ub.columns(0, steps) * p.columns(0, k);
    let v = vb.columns(0, cols) * q.columns(0, k);
    let result = PartialSvd {
        u,
        sigma: sigma[..k].to_vec(),
        v,
        steps,
    };
    (result, converged)
}
