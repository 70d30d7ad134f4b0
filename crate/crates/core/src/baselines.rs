//! Reference LRR solvers: classic ADM with an auxiliary variable, LADM with a
//! frozen penalty, and APG on the penalized relaxation.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::ladmap::{ConvergenceTrace, LadmapConfig, SolveStatus, TraceRecord};
use crate::linalg::{skinny_matmul_left, DenseMatrix, SkinnySvd};
use crate::lrr::{LrrProblem, LrrSolution, LrrSolver, PenaltySchedule, SvdMode};
use crate::prox::{l21_shrink, svt_dense, ShrinkThreshold};

/// Output shared by the baselines that do not carry LADMAP's multiplier.
#[derive(Debug, Clone)]
pub struct BaselineSolution {
    pub e: DenseMatrix,
    pub z: SkinnySvd,
    pub trace: ConvergenceTrace,
    pub status: SolveStatus,
    pub iterations: usize,
    /// Matrix factorizations performed (ADM factors `I + XᵀX` once).
    pub factorizations: usize,
}

/// `max(‖ΔE‖, ‖ΔZ‖)/‖X‖`, the relative-change test of the ADM reference code.
fn relative_change(de: f64, dz: f64, x_norm: f64) -> f64 {
    de.max(dz) / x_norm
}

fn check_tolerances(eps1: f64, eps2: f64) -> Result<()> {
    for (name, v) in [("eps1", eps1), ("eps2", eps2)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::Config(format!("{name} must be finite and positive, got {v}")));
        }
    }
    Ok(())
}

fn full_rank(m: &DenseMatrix) -> usize {
    m.nrows().min(m.ncols())
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmConfig {
    pub eps1: f64,
    pub eps2: f64,
    pub beta0: f64,
    pub rho: f64,
    pub beta_max: f64,
    pub max_iter: usize,
    pub track_objective: bool,
}

impl Default for AdmConfig {
    fn default() -> Self {
        Self {
            eps1: 1e-4,
            eps2: 1e-5,
            beta0: 1e-6,
            rho: 1.1,
            beta_max: 1e10,
            max_iter: 2000,
            track_objective: false,
        }
    }
}

impl AdmConfig {
    pub fn validate(&self) -> Result<()> {
        check_tolerances(self.eps1, self.eps2)?;
        if !(self.beta0 > 0.0 && self.beta0 <= self.beta_max && self.beta_max.is_finite()) {
            return Err(Error::Config(format!(
                "need 0 < beta0 <= beta_max < inf, got beta0 = {}, beta_max = {}",
                self.beta0, self.beta_max
            )));
        }
        if !(self.rho >= 1.0 && self.rho.is_finite()) {
            return Err(Error::Config(format!("rho must be >= 1, got {}", self.rho)));
        }
        Ok(())
    }
}

/// Classic ADM on `min ‖J‖_* + μ‖E‖₂,₁  s.t.  X = XZ + E, Z = J`.
///
/// Per iteration: `J` by singular value thresholding, `Z` by a linear solve
/// with the cached Cholesky factor of `I + XᵀX`, `E` by column shrinkage,
/// then both multipliers and `β ← min(β_max, ρβ)`. The returned `Z` is the
/// low-rank block `J`.
pub fn solve_adm_lrr(problem: &LrrProblem, config: &AdmConfig) -> Result<BaselineSolution> {
    config.validate()?;
    let x = &problem.x;
    let n = problem.n();
    let x_norm = problem.x_norm();

    let mut gram = x.tr_mul(x);
    for i in 0..n {
        gram[(i, i)] += 1.0;
    }
    let chol = gram
        .cholesky()
        .ok_or_else(|| Error::Input("I + XᵀX is not positive definite".into()))?;
    let factorizations = 1;
    let xtx_plus = x.tr_mul(x);

    let mut z = DenseMatrix::zeros(n, n);
    let mut j = SkinnySvd::zero(n, n);
    let mut e = DenseMatrix::zeros(problem.m(), n);
    let mut l1 = DenseMatrix::zeros(problem.m(), n);
    let mut l2 = DenseMatrix::zeros(n, n);
    let mut beta = config.beta0;
    let mut trace = ConvergenceTrace::default();
    let mut status = SolveStatus::IterationCapped;
    let mut k = 0;

    while k < config.max_iter {
        let started = Instant::now();
        let mut point = &z + &l2 / beta;
        let j_new = svt_dense(&point, ShrinkThreshold::new(1.0 / beta)?, n)?.z;

        // (I + XᵀX) Z = XᵀX − XᵀE + J + (XᵀΛ₁ − Λ₂)/β
        let mut rhs = &xtx_plus - x.tr_mul(&e) + j_new.to_dense();
        rhs += (x.tr_mul(&l1) - &l2) / beta;
        let z_new = chol.solve(&rhs);

        point = x - x * &z_new;
        let feas_mat = point.clone();
        point += &l1 / beta;
        let e_new = l21_shrink(&point, ShrinkThreshold::new(problem.mu / beta)?)?;

        let r1 = feas_mat - &e_new;
        let r2 = &z_new - j_new.to_dense();
        let feas_res = r1.norm() / x_norm;
        let change = relative_change((&e_new - &e).norm(), (&z_new - &z).norm(), x_norm);
        let objective = config
            .track_objective
            .then(|| problem.objective(&e_new, &j_new));
        k += 1;
        trace.push(TraceRecord {
            k,
            feas_res,
            kkt2_res: change,
            beta,
            time_ms: started.elapsed().as_secs_f64() * 1e3,
            objective,
            rank: Some(j_new.rank()),
        });
        log::trace!("adm k={k} feas={feas_res:.3e} change={change:.3e} beta={beta:.3e}");

        z = z_new;
        e = e_new;
        j = j_new;
        let split_res = r2.norm() / x_norm;
        if feas_res <= config.eps1 && split_res <= config.eps1 && change <= config.eps2 {
            status = SolveStatus::Converged;
            break;
        }
        l1 += r1 * beta;
        l2 += r2 * beta;
        beta = (beta * config.rho).min(config.beta_max);
    }

    Ok(BaselineSolution {
        e,
        z: j,
        trace,
        status,
        iterations: k,
        factorizations,
    })
}

/// Fixed penalty `2.5 / min(m, n)` used for LADM.
pub fn ladm_beta(problem: &LrrProblem) -> f64 {
    2.5 / problem.m().min(problem.n()) as f64
}

/// The LADMAP iteration (standard mode) with `β` frozen at [`ladm_beta`].
pub fn solve_ladm_lrr(problem: &LrrProblem, config: &LadmapConfig) -> Result<LrrSolution> {
    let mut solver = LrrSolver::new(problem, config.clone(), SvdMode::Standard)?;
    solver.schedule = PenaltySchedule::Fixed(ladm_beta(problem));
    solver.solve()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApgConfig {
    pub beta0: f64,
    pub beta_min: f64,
    pub theta: f64,
    /// Lipschitz constant; `None` means `σ_max(X)²`.
    pub tau: Option<f64>,
    pub max_iter: usize,
    pub eps1: f64,
    pub eps2: f64,
    pub track_objective: bool,
}

impl Default for ApgConfig {
    fn default() -> Self {
        Self {
            beta0: 0.01,
            beta_min: 1e-10,
            theta: 0.9,
            tau: None,
            max_iter: 2000,
            eps1: 1e-4,
            eps2: 1e-5,
            track_objective: false,
        }
    }
}

impl ApgConfig {
    /// Validates the scalars and resolves `τ` against `problem`.
    pub fn resolved_tau(&self, problem: &LrrProblem) -> Result<f64> {
        check_tolerances(self.eps1, self.eps2)?;
        if !(self.beta0 > self.beta_min && self.beta_min > 0.0 && self.beta0.is_finite()) {
            return Err(Error::Config(format!(
                "need beta0 > beta_min > 0, got {} and {}",
                self.beta0, self.beta_min
            )));
        }
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return Err(Error::Config(format!("theta must lie in (0, 1), got {}", self.theta)));
        }
        let floor = problem.sigma_max_sq();
        match self.tau {
            None => Ok(floor),
            Some(t) if t.is_finite() && t >= floor * (1.0 - 1e-9) => Ok(t),
            Some(t) => Err(Error::Config(format!(
                "tau = {t} is below sigma_max(X)^2 = {floor}"
            ))),
        }
    }
}

/// Accelerated proximal gradient with continuation on
/// `β(‖Z‖_* + μ‖E‖₂,₁) + ½‖X − XZ − E‖²`.
///
/// Stops on the same feasibility and relative-change tests as
/// [`solve_adm_lrr`].
pub fn solve_apg_lrr(problem: &LrrProblem, config: &ApgConfig) -> Result<BaselineSolution> {
    let tau = config.resolved_tau(problem)?;
    let x = &problem.x;
    let n = problem.n();
    let x_norm = problem.x_norm();

    let mut z = SkinnySvd::zero(n, n);
    let mut z_prev_dense = DenseMatrix::zeros(n, n);
    let mut z_dense = DenseMatrix::zeros(n, n);
    let mut e = DenseMatrix::zeros(problem.m(), n);
    let mut e_prev = e.clone();
    let mut t = 1.0_f64;
    let mut t_prev = 1.0_f64;
    let mut beta = config.beta0;
    let mut trace = ConvergenceTrace::default();
    let mut status = SolveStatus::IterationCapped;
    let mut k = 0;

    while k < config.max_iter {
        let started = Instant::now();
        let w = (t_prev - 1.0) / t;
        let yz = &z_dense + (&z_dense - &z_prev_dense) * w;
        let ye = &e + (&e - &e_prev) * w;
        let r = x - x * &yz - &ye;

        let mut gz = yz;
        gz.gemm_tr(1.0 / tau, x, &r, 1.0);
        let ge = ye + &r / tau;
        let z_new = svt_dense(&gz, ShrinkThreshold::new(beta / tau)?, full_rank(&gz))?.z;
        let e_new = l21_shrink(&ge, ShrinkThreshold::new(beta * problem.mu / tau)?)?;

        let z_new_dense = z_new.to_dense();
        let feas_res = (skinny_matmul_left(x, &z_new)? + &e_new - x).norm() / x_norm;
        let change = relative_change((&e_new - &e).norm(), (&z_new_dense - &z_dense).norm(), x_norm);
        let objective = config
            .track_objective
            .then(|| problem.objective(&e_new, &z_new));
        k += 1;
        trace.push(TraceRecord {
            k,
            feas_res,
            kkt2_res: change,
            beta,
            time_ms: started.elapsed().as_secs_f64() * 1e3,
            objective,
            rank: Some(z_new.rank()),
        });
        log::trace!("apg k={k} feas={feas_res:.3e} change={change:.3e} beta={beta:.3e}");

        z_prev_dense = std::mem::replace(&mut z_dense, z_new_dense);
        e_prev = std::mem::replace(&mut e, e_new);
        z = z_new;
        t_prev = t;
        t = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        beta = (beta * config.theta).max(config.beta_min);
        if feas_res <= config.eps1 && change <= config.eps2 {
            status = SolveStatus::Converged;
            break;
        }
    }

    Ok(BaselineSolution {
        e,
        z,
        trace,
        status,
        iterations: k,
        factorizations: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::{gen_synthetic, SyntheticSpec};

    fn small_problem(seed: u64) -> LrrProblem {
        let ds = gen_synthetic(&SyntheticSpec::new(3, 10, 40, 3, seed)).unwrap();
        LrrProblem::new(ds.x, 0.1).unwrap()
    }

    #[test]
    fn adm_factors_once_and_converges() {
        let p = small_problem(0);
        let sol = solve_adm_lrr(&p, &AdmConfig::default()).unwrap();
        assert_eq!(sol.factorizations, 1);
        assert_eq!(sol.status, SolveStatus::Converged);
        assert!(p.feasibility(&sol.e, &sol.z) < 1e-3);
    }

    #[test]
    fn ladm_keeps_beta_fixed() {
        let p = small_problem(1);
        let sol = solve_ladm_lrr(&p, &LadmapConfig::default()).unwrap();
        let beta = ladm_beta(&p);
        assert!(sol.trace.betas().all(|b| b == beta));
    }

    #[test]
    fn apg_beta_decreases_to_floor() {
        let p = small_problem(2);
        let cfg = ApgConfig::default();
        let sol = solve_apg_lrr(&p, &cfg).unwrap();
        let betas: Vec<f64> = sol.trace.betas().collect();
        assert!(!betas.is_empty());
        assert!(betas.windows(2).all(|w| w[1] <= w[0]));
        assert!(betas.iter().all(|b| *b >= cfg.beta_min));
    }

    #[test]
    fn adm_and_ladmap_reach_the_same_objective() {
        let p = small_problem(3);
        let tight = LadmapConfig {
            eps1: 1e-7,
            eps2: 1e-7,
            max_iter: 5000,
            ..LadmapConfig::default()
        };
        let lad = crate::lrr::solve_lrr(&p, &tight, SvdMode::Accelerated).unwrap();
        let adm = solve_adm_lrr(
            &p,
            &AdmConfig {
                eps1: 1e-7,
                eps2: 1e-7,
                max_iter: 5000,
                ..AdmConfig::default()
            },
        )
        .unwrap();
        let (a, b) = (p.objective(&lad.e, &lad.z), p.objective(&adm.e, &adm.z));
        assert!((a - b).abs() < 1e-3 * a, "{a} vs {b}");
    }

    #[test]
    fn configs_reject_bad_tolerances() {
        let adm = AdmConfig {
            eps1: 0.0,
            ..AdmConfig::default()
        };
        assert!(adm.validate().is_err());
        let p = small_problem(4);
        let apg = ApgConfig {
            eps2: f64::NAN,
            ..ApgConfig::default()
        };
        assert!(solve_apg_lrr(&p, &apg).is_err());
    }
}
