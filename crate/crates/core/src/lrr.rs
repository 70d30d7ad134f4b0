//! LADMAP for low-rank representation,
//!
//! ```text
//! min ‖Z‖_* + μ‖E‖₂,₁   s.t.   X = XZ + E.
//! ```
//!
//! `Z` is always held as a skinny SVD. Per iteration:
//!
//! 1. `E ← shrink₂,₁(M, μ/β)` with `M = X − XZ − Λ/β`.
//! 2. `Z ← SVT(N, 1/(βη_X))` with `N = Z − η_X⁻¹ Xᵀ(XZ + E − X + Λ/β)`.
//! 3. `Λ ← Λ + β(XZ + E − X)`.
//! 4. adaptive `β` update.
//!
//! In [`SvdMode::Accelerated`] `N` is only touched through products, built
//! from the factors of `Z` and from `E − M`; `XZ` is evaluated as
//! `((XU)Σ)Vᵀ`. [`SvdMode::Standard`] densifies `Z` and `N` the way a plain
//! implementation would. Both feed the same Lanczos routine with the same
//! start vector, so they produce the same iterates up to rounding.

use std::cell::Cell;
use std::time::Instant;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::ladmap::{kkt2_residual, next_beta, ConvergenceTrace, LadmapConfig, SolveStatus, TraceRecord};
use crate::linalg::{
    ensure_finite, skinny_matmul_left, spectral_norm_sq, DenseMatrix, DenseOperator, LanczosOptions,
    LinalgError, LinearOperator, SkinnySvd,
};
use crate::prox::{l21_norm, l21_shrink, svt_growing, ShrinkThreshold};

/// Safety factor over `σ_max(X)²` used for the default `η_X`.
pub const ETA_FACTOR: f64 = 1.02;

thread_local! {
    static DENSE_NN: Cell<usize> = const { Cell::new(0) };
}

/// Number of dense `n×n` products formed by the standard path on this thread.
#[doc(hidden)]
pub fn dense_nn_formations() -> usize {
    DENSE_NN.with(|c| c.get())
}

fn count_dense_nn() {
    DENSE_NN.with(|c| c.set(c.get() + 1));
}

#[derive(Debug, Clone)]
pub struct LrrProblem {
    pub x: DenseMatrix,
    pub mu: f64,
    pub eta_x: f64,
    x_norm: f64,
    sigma_max_sq: f64,
}

impl LrrProblem {
    /// Uses `η_X = 1.02·σ_max(X)²`.
    pub fn new(x: DenseMatrix, mu: f64) -> Result<Self> {
        Self::check_data(&x, mu)?;
        let s = spectral_norm_sq(&x, 1e-10, 10_000, 0)?;
        Self::build(x, mu, ETA_FACTOR * s, s)
    }

    /// Explicit `η_X`, which must exceed `σ_max(X)²`.
    pub fn with_eta(x: DenseMatrix, mu: f64, eta_x: f64) -> Result<Self> {
        Self::check_data(&x, mu)?;
        let s = spectral_norm_sq(&x, 1e-10, 10_000, 0)?;
        if !(eta_x > s) {
            return Err(Error::Config(format!(
                "eta_x = {eta_x} must exceed sigma_max(X)^2 = {s}"
            )));
        }
        Self::build(x, mu, eta_x, s)
    }

    fn check_data(x: &DenseMatrix, mu: f64) -> Result<()> {
        if x.nrows() == 0 || x.ncols() == 0 {
            return Err(Error::Input("data matrix is empty".into()));
        }
        ensure_finite(x, "data matrix")?;
        if !(mu >= 0.0 && mu.is_finite()) {
            return Err(Error::Config(format!("mu must be finite and >= 0, got {mu}")));
        }
        Ok(())
    }

    fn build(x: DenseMatrix, mu: f64, eta_x: f64, sigma_max_sq: f64) -> Result<Self> {
        let x_norm = x.norm();
        if !(x_norm > 0.0) {
            return Err(Error::Config(
                "data matrix is zero; relative residuals are undefined".into(),
            ));
        }
        Ok(Self {
            x,
            mu,
            eta_x,
            x_norm,
            sigma_max_sq,
        })
    }

    pub fn m(&self) -> usize {
        self.x.nrows()
    }

    pub fn n(&self) -> usize {
        self.x.ncols()
    }

    pub fn x_norm(&self) -> f64 {
        self.x_norm
    }

    /// Power-iteration estimate of `σ_max(X)²`.
    pub fn sigma_max_sq(&self) -> f64 {
        self.sigma_max_sq
    }

    /// `‖Z‖_* + μ‖E‖₂,₁`.
    pub fn objective(&self, e: &DenseMatrix, z: &SkinnySvd) -> f64 {
        z.nuclear_norm() + self.mu * l21_norm(e)
    }

    /// `XZ + E − X`, with `XZ` in factored order.
    pub fn residual(&self, e: &DenseMatrix, z: &SkinnySvd) -> DenseMatrix {
        let xz = skinny_matmul_left(&self.x, z).expect("Z conforms to X");
        xz + e - &self.x
    }

    /// `‖XZ + E − X‖ / ‖X‖`.
    pub fn feasibility(&self, e: &DenseMatrix, z: &SkinnySvd) -> f64 {
        self.residual(e, z).norm() / self.x_norm
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SvdMode {
    /// Dense `XZ` and dense `N`, `O(n³)` per iteration.
    Standard,
    /// Factored `XZ` and implicit `N`, `O(rn²)` per iteration.
    Accelerated,
}

/// How `β` evolves across iterations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PenaltySchedule {
    /// `β ← min(β_max, ρβ)` with the KKT-2 test selecting `ρ`.
    Adaptive,
    /// `β` frozen at the given value.
    Fixed(f64),
}

#[derive(Debug, Clone)]
pub struct LrrState {
    pub e: DenseMatrix,
    pub z: SkinnySvd,
    pub lambda: DenseMatrix,
    pub beta: f64,
    pub k: usize,
    pub predicted_rank: usize,
}

impl LrrState {
    /// Zero `E`, `Z`, `Λ` and the initial rank prediction `min(10, n)`.
    pub fn initial(problem: &LrrProblem, beta0: f64) -> Self {
        let (m, n) = (problem.m(), problem.n());
        Self {
            e: DenseMatrix::zeros(m, n),
            z: SkinnySvd::zero(n, n),
            lambda: DenseMatrix::zeros(m, n),
            beta: beta0,
            k: 0,
            predicted_rank: initial_rank(n),
        }
    }
}

pub fn initial_rank(n: usize) -> usize {
    n.min(10)
}

/// Next rank request for the partial SVD.
///
/// When the threshold cut strictly inside the computed spectrum the request
/// tracks the kept rank plus one; otherwise it grows by `⌈0.05 n⌉`.
pub fn predict_rank(previous_r_prime: usize, n: usize, current_predicted: usize) -> usize {
    let next = if previous_r_prime < current_predicted {
        previous_r_prime + 1
    } else {
        previous_r_prime + (n as f64 * 0.05).ceil() as usize
    };
    next.clamp(1, n)
}

/// `XZ`, densely (`Standard`) or in factored order (`Accelerated`).
fn x_times_z(problem: &LrrProblem, z: &SkinnySvd, mode: SvdMode) -> DenseMatrix {
    match mode {
        SvdMode::Accelerated => skinny_matmul_left(&problem.x, z).expect("Z conforms to X"),
        SvdMode::Standard => {
            count_dense_nn();
            &problem.x * z.to_dense()
        }
    }
}

/// `M = −XZ + X − Λ/β`.
pub fn compute_m(problem: &LrrProblem, state: &LrrState, mode: SvdMode) -> DenseMatrix {
    let mut m = &problem.x - x_times_z(problem, &state.z, mode);
    let inv_beta = 1.0 / state.beta;
    m.zip_apply(&state.lambda, |a, l| *a -= l * inv_beta);
    m
}

/// `E⁺ = shrink₂,₁(M, μ/β)`, the exact minimizer of
/// `μ‖E‖₂,₁ + (β/2)‖E − M‖²`.
pub fn update_e(problem: &LrrProblem, state: &LrrState, m: &DenseMatrix) -> Result<DenseMatrix> {
    Ok(l21_shrink(m, ShrinkThreshold::new(problem.mu / state.beta)?)?)
}

/// Implicit `N = Z − η_X⁻¹ Xᵀ D` with `D = E⁺ − M = XZ + E⁺ − X + Λ/β`.
pub struct NkOperator<'a> {
    x: &'a DenseMatrix,
    z: &'a SkinnySvd,
    d: DenseMatrix,
    inv_eta: f64,
}

impl LinearOperator for NkOperator<'_> {
    fn nrows(&self) -> usize {
        self.z.nrows()
    }

    fn ncols(&self) -> usize {
        self.z.ncols()
    }

    fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        let dv = &self.d * v;
        let mut out = self.z.apply(v);
        out.gemv_tr(-self.inv_eta, self.x, &dv, 1.0);
        out
    }

    fn apply_adjoint(&self, u: &DVector<f64>) -> DVector<f64> {
        let xu = self.x * u;
        let mut out = self.z.apply_adjoint(u);
        out.gemv_tr(-self.inv_eta, &self.d, &xu, 1.0);
        out
    }
}

pub fn nk_operator<'a>(
    problem: &'a LrrProblem,
    state: &'a LrrState,
    e_new: &DenseMatrix,
    m: &DenseMatrix,
) -> NkOperator<'a> {
    NkOperator {
        x: &problem.x,
        z: &state.z,
        d: e_new - m,
        inv_eta: 1.0 / problem.eta_x,
    }
}

/// `N` formed explicitly: `Z − η_X⁻¹ Xᵀ(XZ + E⁺ − X + Λ/β)`.
pub fn dense_nk(problem: &LrrProblem, state: &LrrState, e_new: &DenseMatrix) -> DenseMatrix {
    let mut r = x_times_z(problem, &state.z, SvdMode::Standard) + e_new - &problem.x;
    let inv_beta = 1.0 / state.beta;
    r.zip_apply(&state.lambda, |a, l| *a += l * inv_beta);
    count_dense_nn();
    let mut n = state.z.to_dense();
    n.gemm_tr(-1.0 / problem.eta_x, &problem.x, &r, 1.0);
    n
}

#[derive(Debug, Clone)]
pub struct ZUpdate {
    pub z: SkinnySvd,
    /// Kept rank `r'`.
    pub r_prime: usize,
    /// Rank requested from the partial SVD after any enlargement.
    pub rank_used: usize,
}

/// Partial SVD of `N` at the predicted rank, then singular value shrinkage by
/// `1/(βη_X)`, enlarging the rank while the computed spectrum stays above the
/// threshold.
pub fn update_z(
    problem: &LrrProblem,
    state: &LrrState,
    e_new: &DenseMatrix,
    m: &DenseMatrix,
    mode: SvdMode,
    lanczos: &LanczosOptions,
) -> Result<ZUpdate> {
    let tau = ShrinkThreshold::new(1.0 / (state.beta * problem.eta_x))?;
    let rank = state.predicted_rank.clamp(1, problem.n());
    let (out, rank_used) = match mode {
        SvdMode::Accelerated => {
            let op = nk_operator(problem, state, e_new, m);
            svt_growing(&op, tau, rank, lanczos)?
        }
        SvdMode::Standard => {
            let n = dense_nk(problem, state, e_new);
            svt_growing(&DenseOperator(&n), tau, rank, lanczos)?
        }
    };
    Ok(ZUpdate {
        r_prime: out.kept(),
        z: out.z,
        rank_used,
    })
}

/// `Λ⁺ = Λ + β(XZ⁺ + E⁺ − X)`.
pub fn update_lambda(problem: &LrrProblem, state: &LrrState, e_new: &DenseMatrix, z_new: &SkinnySvd) -> DenseMatrix {
    let mut l = problem.residual(e_new, z_new);
    l *= state.beta;
    l += &state.lambda;
    l
}

#[derive(Debug, Clone)]
pub struct LrrSolution {
    pub e: DenseMatrix,
    pub z: SkinnySvd,
    pub lambda: DenseMatrix,
    pub trace: ConvergenceTrace,
    pub status: SolveStatus,
    pub iterations: usize,
    /// Ranks requested from the partial SVD, one per iteration.
    pub predicted_ranks: Vec<usize>,
}

/// Per-iteration norms of the iterate differences, for diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepDiffs {
    pub de: f64,
    pub dz: f64,
    pub dlambda: f64,
}

/// Runner shared by LADMAP, its fixed-penalty variant and the ground-truth
/// procedure.
#[derive(Debug, Clone)]
pub struct LrrSolver<'p> {
    pub problem: &'p LrrProblem,
    pub config: LadmapConfig,
    pub mode: SvdMode,
    pub schedule: PenaltySchedule,
    /// When false, iterate exactly `max_iter` times.
    pub early_stop: bool,
    pub lanczos_tol: f64,
}

impl<'p> LrrSolver<'p> {
    pub fn new(problem: &'p LrrProblem, config: LadmapConfig, mode: SvdMode) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            problem,
            config,
            mode,
            schedule: PenaltySchedule::Adaptive,
            early_stop: true,
            lanczos_tol: LanczosOptions::default().tol,
        })
    }

    pub fn beta0(&self) -> f64 {
        match self.schedule {
            PenaltySchedule::Adaptive => self.config.resolved_beta0(self.problem.x.shape()),
            PenaltySchedule::Fixed(b) => b,
        }
    }

    /// One iteration of the accelerated/standard loop.
    pub fn step(&self, state: &LrrState) -> Result<(LrrState, TraceRecord, StepDiffs)> {
        let started = Instant::now();
        let problem = self.problem;
        let m = compute_m(problem, state, self.mode);
        let e_new = update_e(problem, state, &m)?;
        let lanczos = LanczosOptions {
            tol: self.lanczos_tol,
            seed: self.config.seed.wrapping_add(state.k as u64),
            max_steps: None,
        };
        let zu = match update_z(problem, state, &e_new, &m, self.mode, &lanczos) {
            Ok(zu) => zu,
            Err(Error::Linalg(LinalgError::NoConvergence { steps, .. })) => {
                return Err(Error::Linalg(LinalgError::InvalidArgument(format!(
                    "partial SVD of N failed to converge in {steps} steps at iteration {}",
                    state.k
                ))))
            }
            Err(e) => return Err(e),
        };

        let residual = problem.residual(&e_new, &zu.z);
        let feas_res = residual.norm() / problem.x_norm();
        let mut lambda = residual * state.beta;
        lambda += &state.lambda;

        let de = (&e_new - &state.e).norm();
        let dz = zu.z.dist_sq(&state.z).sqrt();
        let kkt2 = kkt2_residual(state.beta, 1.0, problem.eta_x, de, dz, problem.x_norm());
        let beta = match self.schedule {
            PenaltySchedule::Adaptive => {
                next_beta(state.beta, kkt2, self.config.eps2, self.config.rho0, self.config.beta_max)
            }
            PenaltySchedule::Fixed(b) => b,
        };
        let dlambda = (&lambda - &state.lambda).norm();
        let predicted_rank = predict_rank(zu.r_prime, problem.n(), zu.rank_used);
        let objective = self
            .config
            .track_objective
            .then(|| problem.objective(&e_new, &zu.z));
        let record = TraceRecord {
            k: state.k + 1,
            feas_res,
            kkt2_res: kkt2,
            beta: state.beta,
            time_ms: started.elapsed().as_secs_f64() * 1e3,
            objective,
            rank: Some(zu.z.rank()),
        };
        let next = LrrState {
            e: e_new,
            z: zu.z,
            lambda,
            beta,
            k: state.k + 1,
            predicted_rank,
        };
        Ok((next, record, StepDiffs { de, dz, dlambda }))
    }

    pub fn solve(&self) -> Result<LrrSolution> {
        self.solve_observed(|_, _| {})
    }

    /// [`Self::solve`], calling `observe` after every iteration with the new
    /// state and the norms of the iterate differences.
    pub fn solve_observed(&self, mut observe: impl FnMut(&LrrState, &StepDiffs)) -> Result<LrrSolution> {
        let mut state = LrrState::initial(self.problem, self.beta0());
        let mut trace = ConvergenceTrace::default();
        let mut predicted_ranks = Vec::new();
        let mut status = SolveStatus::IterationCapped;
        while state.k < self.config.max_iter {
            predicted_ranks.push(state.predicted_rank);
            let (next, record, diffs) = self.step(&state)?;
            let stop = record.feas_res < self.config.eps1 && record.kkt2_res <= self.config.eps2;
            log::trace!(
                "lrr k={} feas={:.3e} kkt2={:.3e} beta={:.3e} rank={}",
                record.k,
                record.feas_res,
                record.kkt2_res,
                record.beta,
                next.z.rank()
            );
            trace.push(record);
            state = next;
            observe(&state, &diffs);
            if self.early_stop && stop {
                status = SolveStatus::Converged;
                break;
            }
        }
        Ok(LrrSolution {
            iterations: state.k,
            e: state.e,
            z: state.z,
            lambda: state.lambda,
            trace,
            status,
            predicted_ranks,
        })
    }
}

/// `η_X‖Z − Z*‖² + β⁻²‖Λ − Λ*‖²` against a KKT point `(Z*, Λ*)`.
///
/// `E` is minimized exactly (its linearization weight equals `‖I‖² = 1`), so
/// its term in the general Lyapunov quantity vanishes.
pub fn lyapunov(problem: &LrrProblem, state: &LrrState, z_ref: &SkinnySvd, lambda_ref: &DenseMatrix) -> f64 {
    problem.eta_x * state.z.dist_sq(z_ref) + (&state.lambda - lambda_ref).norm_squared() / (state.beta * state.beta)
}

/// LADMAP for LRR with the adaptive penalty.
pub fn solve_lrr(problem: &LrrProblem, config: &LadmapConfig, mode: SvdMode) -> Result<LrrSolution> {
    LrrSolver::new(problem, config.clone(), mode)?.solve()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{gaussian_matrix, random_orthonormal};
    use nalgebra::DMatrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small_problem(seed: u64) -> LrrProblem {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let basis = gaussian_matrix(12, 3, &mut rng);
        let coef = gaussian_matrix(3, 15, &mut rng);
        let mut x = basis * coef;
        x += gaussian_matrix(12, 15, &mut rng) * 0.05;
        LrrProblem::new(x, 0.5).unwrap()
    }

    fn random_state(p: &LrrProblem, seed: u64) -> LrrState {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = p.n();
        let z = SkinnySvd::new(
            random_orthonormal(n, 3, &mut rng),
            vec![0.9, 0.5, 0.2],
            random_orthonormal(n, 3, &mut rng),
        )
        .unwrap();
        LrrState {
            e: gaussian_matrix(p.m(), n, &mut rng) * 0.1,
            z,
            lambda: gaussian_matrix(p.m(), n, &mut rng),
            beta: 0.8,
            k: 3,
            predicted_rank: 5,
        }
    }

    #[test]
    fn eta_default_exceeds_spectral_norm() {
        let p = small_problem(1);
        let s = crate::linalg::dense_svd(&p.x).1[0].powi(2);
        assert!(p.eta_x > s);
        assert!((p.eta_x / s - ETA_FACTOR).abs() < 1e-6);
        assert!(LrrProblem::with_eta(p.x.clone(), 0.5, s * 0.99).is_err());
    }

    #[test]
    fn m_at_initialization_is_x() {
        let p = small_problem(2);
        let s = LrrState::initial(&p, 1e-3);
        assert_eq!(compute_m(&p, &s, SvdMode::Accelerated), p.x);
    }

    #[test]
    fn m_with_zero_data_is_scaled_multiplier() {
        let p = small_problem(3);
        let mut s = random_state(&p, 4);
        let zero = LrrProblem {
            x: DMatrix::zeros(p.m(), p.n()),
            ..p.clone()
        };
        s.beta = 2.0;
        let m = compute_m(&zero, &s, SvdMode::Accelerated);
        assert!((m + &s.lambda / 2.0).amax() < 1e-15);
    }

    #[test]
    fn m_matches_dense_recomputation() {
        let p = small_problem(5);
        let s = random_state(&p, 6);
        let oracle = -(&p.x * s.z.to_dense()) + &p.x - &s.lambda / s.beta;
        for mode in [SvdMode::Accelerated, SvdMode::Standard] {
            assert!((compute_m(&p, &s, mode) - &oracle).amax() < 1e-12);
        }
    }

    #[test]
    fn e_update_extremes() {
        let p = small_problem(7);
        let s = random_state(&p, 8);
        let m = compute_m(&p, &s, SvdMode::Accelerated);
        let huge = LrrProblem { mu: 1e9, ..p.clone() };
        assert_eq!(update_e(&huge, &s, &m).unwrap().amax(), 0.0);
        let none = LrrProblem { mu: 0.0, ..p.clone() };
        assert_eq!(update_e(&none, &s, &m).unwrap(), m);
    }

    #[test]
    fn first_iteration_operator() {
        let p = small_problem(9);
        let s = LrrState::initial(&p, 1e-2);
        let e = DMatrix::zeros(p.m(), p.n());
        let m = compute_m(&p, &s, SvdMode::Accelerated);
        let op = nk_operator(&p, &s, &e, &m);
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let v = crate::linalg::gaussian_matrix(p.n(), 1, &mut rng).column(0).into_owned();
        let expected = p.x.transpose() * (&p.x * &v) / p.eta_x;
        assert!((op.apply(&v) - expected).amax() < 1e-12);
    }

    #[test]
    fn implicit_operator_matches_dense_and_is_adjoint_consistent() {
        let p = small_problem(11);
        let s = random_state(&p, 12);
        let m = compute_m(&p, &s, SvdMode::Accelerated);
        let e = update_e(&p, &s, &m).unwrap();
        let op = nk_operator(&p, &s, &e, &m);
        let dense = dense_nk(&p, &s, &e);
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..50 {
            let v = gaussian_matrix(p.n(), 1, &mut rng).column(0).into_owned();
            let u = gaussian_matrix(p.n(), 1, &mut rng).column(0).into_owned();
            assert!((op.apply(&v) - &dense * &v).amax() < 1e-10);
            let lhs = op.apply(&v).dot(&u);
            let rhs = v.dot(&op.apply_adjoint(&u));
            assert!((lhs - rhs).abs() <= 1e-8 * lhs.abs().max(1.0));
        }
    }

    #[test]
    fn z_update_modes_agree() {
        let p = small_problem(14);
        let s = random_state(&p, 15);
        let m = compute_m(&p, &s, SvdMode::Accelerated);
        let e = update_e(&p, &s, &m).unwrap();
        let opts = LanczosOptions::with_seed(3);
        let a = update_z(&p, &s, &e, &m, SvdMode::Accelerated, &opts).unwrap();
        let b = update_z(&p, &s, &e, &m, SvdMode::Standard, &opts).unwrap();
        assert_eq!(a.r_prime, b.r_prime);
        assert!(a.z.dist_sq(&b.z).sqrt() < 1e-8);
        for (x, y) in a.z.sigma.iter().zip(&b.z.sigma) {
            assert!((x - y).abs() < 1e-8);
        }
    }

    #[test]
    fn z_update_all_below_threshold_is_zero() {
        let p = small_problem(16);
        let mut s = random_state(&p, 17);
        s.lambda.fill(0.0);
        s.beta = 1e-9;
        let m = compute_m(&p, &s, SvdMode::Accelerated);
        let e = update_e(&p, &s, &m).unwrap();
        let zu = update_z(&p, &s, &e, &m, SvdMode::Accelerated, &LanczosOptions::default()).unwrap();
        assert_eq!(zu.r_prime, 0);
        assert_eq!(zu.z.rank(), 0);
    }

    #[test]
    fn z_update_without_shrinkage_is_truncated_svd() {
        let p = small_problem(18);
        let mut s = random_state(&p, 19);
        s.beta = 1e300;
        s.predicted_rank = 4;
        let m = compute_m(&p, &s, SvdMode::Accelerated);
        let e = update_e(&p, &s, &m).unwrap();
        let zu = update_z(&p, &s, &e, &m, SvdMode::Accelerated, &LanczosOptions::default()).unwrap();
        let n = dense_nk(&p, &s, &e);
        let (_, sv, _) = crate::linalg::dense_svd(&n);
        // With β → ∞, E⁺ = M and N collapses to Z itself (rank 3).
        let nonzero: Vec<f64> = sv.into_iter().filter(|v| *v > 1e-10).collect();
        assert_eq!(zu.r_prime, nonzero.len());
        for (a, b) in zu.z.sigma.iter().zip(&nonzero) {
            assert!((a - b).abs() < 1e-9 * nonzero[0]);
        }
        assert!(zu.z.dist_sq(&s.z).sqrt() < 1e-9);
    }

    #[test]
    fn lambda_update_formula() {
        let p = small_problem(20);
        let s = random_state(&p, 21);
        let m = compute_m(&p, &s, SvdMode::Accelerated);
        let e = update_e(&p, &s, &m).unwrap();
        let z = s.z.clone();
        let oracle = &s.lambda + (&p.x * z.to_dense() + &e - &p.x) * s.beta;
        assert!((update_lambda(&p, &s, &e, &z) - oracle).amax() < 1e-12);
        // A feasible pair leaves the multiplier unchanged.
        let e_feasible = &p.x - &p.x * z.to_dense();
        assert!((update_lambda(&p, &s, &e_feasible, &z) - &s.lambda).amax() < 1e-12);
    }

    #[test]
    fn rank_prediction_rule() {
        assert_eq!(predict_rank(5, 200, 8), 6);
        assert_eq!(predict_rank(8, 200, 8), 18);
        assert_eq!(predict_rank(0, 200, 10), 1);
        assert_eq!(predict_rank(199, 200, 199), 200);
        assert_eq!(initial_rank(200), 10);
        assert_eq!(initial_rank(4), 4);
    }

    #[test]
    fn single_column_data_gives_rank_at_most_one() {
        let mut x = DMatrix::zeros(6, 5);
        x[(0, 2)] = 1.0;
        x[(3, 2)] = -2.0;
        let p = LrrProblem::new(x, 10.0).unwrap();
        let sol = solve_lrr(&p, &LadmapConfig::default(), SvdMode::Accelerated).unwrap();
        assert_eq!(sol.status, SolveStatus::Converged);
        assert!(sol.z.rank() <= 1);
        assert!(sol.e.norm() < 1e-3 * p.x_norm());
    }

    #[test]
    fn small_instance_meets_both_criteria_and_modes_agree() {
        let p = small_problem(22);
        let config = LadmapConfig::default();
        let a = solve_lrr(&p, &config, SvdMode::Accelerated).unwrap();
        let b = solve_lrr(&p, &config, SvdMode::Standard).unwrap();
        assert_eq!(a.status, SolveStatus::Converged);
        assert_eq!(a.iterations, b.iterations);
        let last = a.trace.last().unwrap();
        assert!(last.feas_res < 1e-4);
        assert!(last.kkt2_res <= 1e-5);
        assert!(p.feasibility(&a.e, &a.z) < 1e-4);
        assert!(a.z.dist_sq(&b.z).sqrt() <= 1e-6 * a.z.frob_norm_sq().sqrt());
        assert!((&a.e - &b.e).norm() <= 1e-6 * a.e.norm().max(1e-12));
        let betas: Vec<f64> = a.trace.betas().collect();
        assert!(betas.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn fixed_schedule_keeps_beta() {
        let p = small_problem(23);
        let mut solver = LrrSolver::new(&p, LadmapConfig { max_iter: 30, ..Default::default() }, SvdMode::Standard).unwrap();
        solver.schedule = PenaltySchedule::Fixed(0.3);
        let sol = solver.solve().unwrap();
        assert!(sol.trace.betas().all(|b| b == 0.3));
    }
}
