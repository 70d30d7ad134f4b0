//! Linearized alternating direction method with adaptive penalty for
//!
//! ```text
//! min f(x) + g(y)   s.t.   A(x) + B(y) = c
//! ```
//!
//! Each iteration linearizes the quadratic penalty around the current
//! iterate, so both subproblems reduce to one proximal step:
//!
//! ```text
//! x⁺ = prox_f( x − A*(λ + β(A x + B y − c)) / (β η_A),  β η_A )
//! y⁺ = prox_g( y − B*(λ + β(A x⁺ + B y − c)) / (β η_B),  β η_B )
//! λ⁺ = λ + β (A x⁺ + B y⁺ − c)
//! β⁺ = min(β_max, ρ β)
//! ```
//!
//! with `ρ = ρ₀` when `β·max(√η_A‖Δx‖, √η_B‖Δy‖)/‖c‖ < ε₂` and `ρ = 1`
//! otherwise. The loop stops when the relative feasibility residual is below
//! `ε₁` and the same KKT-2 quantity is at most `ε₂`.

mod problem;
mod trace;

pub use problem::{MatrixProblem, Regularizer, SeparableProblem};
pub use trace::{ConvergenceTrace, TraceRecord};

use std::time::Instant;

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct LadmapConfig {
    pub eps1: f64,
    pub eps2: f64,
    /// Initial penalty; `None` means `min(rows(c), cols(c)) · ε₂`.
    pub beta0: Option<f64>,
    pub beta_max: f64,
    pub rho0: f64,
    /// Linearization weight for `x`; `None` means `1.02 · ‖A‖²` bound.
    pub eta_a: Option<f64>,
    /// Linearization weight for `y`; `None` means `1.02 · ‖B‖²` bound.
    pub eta_b: Option<f64>,
    pub max_iter: usize,
    pub seed: u64,
    /// Evaluate `f(x) + g(y)` every iteration and store it in the trace.
    pub track_objective: bool,
}

impl Default for LadmapConfig {
    fn default() -> Self {
        Self {
            eps1: 1e-4,
            eps2: 1e-5,
            beta0: None,
            beta_max: 1e10,
            rho0: 1.9,
            eta_a: None,
            eta_b: None,
            max_iter: 2000,
            seed: 0,
            track_objective: false,
        }
    }
}

impl LadmapConfig {
    /// Checks the scalar parameters that do not depend on the problem.
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be finite and positive, got {v}")))
            }
        };
        positive("eps1", self.eps1)?;
        positive("eps2", self.eps2)?;
        positive("beta_max", self.beta_max)?;
        if let Some(b) = self.beta0 {
            positive("beta0", b)?;
            if b > self.beta_max {
                return Err(Error::Config(format!(
                    "beta0 = {b} exceeds beta_max = {}",
                    self.beta_max
                )));
            }
        }
        if !(self.rho0 >= 1.0 && self.rho0.is_finite()) {
            return Err(Error::Config(format!("rho0 must be >= 1, got {}", self.rho0)));
        }
        Ok(())
    }

    /// `β₀ = min(rows, cols)·ε₂` unless overridden.
    pub fn resolved_beta0(&self, c_shape: (usize, usize)) -> f64 {
        self.beta0
            .unwrap_or_else(|| c_shape.0.min(c_shape.1) as f64 * self.eps2)
            .min(self.beta_max)
    }
}

/// Relative KKT-2 residual `β·max(√η_A‖Δx‖, √η_B‖Δy‖)/‖c‖`.
pub fn kkt2_residual(beta: f64, eta_a: f64, eta_b: f64, dx_norm: f64, dy_norm: f64, c_norm: f64) -> f64 {
    beta * (eta_a.sqrt() * dx_norm).max(eta_b.sqrt() * dy_norm) / c_norm
}

/// Adaptive penalty: multiply by `ρ₀` when the KKT-2 residual is strictly
/// below `ε₂`, then clamp to `β_max`.
pub fn next_beta(beta: f64, kkt2: f64, eps2: f64, rho0: f64, beta_max: f64) -> f64 {
    let rho = if kkt2 < eps2 { rho0 } else { 1.0 };
    beta_max.min(rho * beta)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LadmapState {
    pub x: DenseMatrix,
    pub y: DenseMatrix,
    pub lambda: DenseMatrix,
    pub beta: f64,
    pub k: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopCheck {
    pub feasibility_ok: bool,
    pub kkt2_ok: bool,
    pub feas_res: f64,
    pub kkt2_res: f64,
}

impl StopCheck {
    pub fn should_stop(&self) -> bool {
        self.feasibility_ok && self.kkt2_ok
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    IterationCapped,
}

#[derive(Debug, Clone)]
pub struct LadmapSolution {
    pub state: LadmapState,
    pub trace: ConvergenceTrace,
    pub status: SolveStatus,
}

/// A configured solver bound to one problem.
pub struct Ladmap<'p, P: SeparableProblem> {
    problem: &'p P,
    config: LadmapConfig,
    eta_a: f64,
    eta_b: f64,
    beta0: f64,
    c_norm: f64,
}

fn default_eta(bound: f64) -> f64 {
    if bound > 0.0 {
        1.02 * bound
    } else {
        1.0
    }
}

impl<'p, P: SeparableProblem> Ladmap<'p, P> {
    pub fn new(problem: &'p P, config: LadmapConfig) -> Result<Self> {
        config.validate()?;
        let c = problem.target();
        let c_norm = c.norm();
        if !(c_norm > 0.0) {
            return Err(Error::Config(
                "target c is zero; relative residuals are undefined".into(),
            ));
        }
        let bound_a = problem.norm_a_sq_bound();
        let bound_b = problem.norm_b_sq_bound();
        let eta_a = config.eta_a.unwrap_or_else(|| default_eta(bound_a));
        let eta_b = config.eta_b.unwrap_or_else(|| default_eta(bound_b));
        if !(eta_a > bound_a) {
            return Err(Error::Config(format!("eta_a = {eta_a} must exceed ||A||^2 <= {bound_a}")));
        }
        if !(eta_b > bound_b) {
            return Err(Error::Config(format!("eta_b = {eta_b} must exceed ||B||^2 <= {bound_b}")));
        }
        let beta0 = config.resolved_beta0(c.shape());
        Ok(Self {
            problem,
            config,
            eta_a,
            eta_b,
            beta0,
            c_norm,
        })
    }

    pub fn config(&self) -> &LadmapConfig {
        &self.config
    }

    pub fn eta_a(&self) -> f64 {
        self.eta_a
    }

    pub fn eta_b(&self) -> f64 {
        self.eta_b
    }

    pub fn beta0(&self) -> f64 {
        self.beta0
    }

    /// All-zero iterates with `β = β₀`.
    pub fn initial_state(&self) -> LadmapState {
        let (xr, xc) = self.problem.x_shape();
        let (yr, yc) = self.problem.y_shape();
        let c = self.problem.target();
        LadmapState {
            x: DenseMatrix::zeros(xr, xc),
            y: DenseMatrix::zeros(yr, yc),
            lambda: DenseMatrix::zeros(c.nrows(), c.ncols()),
            beta: self.beta0,
            k: 0,
        }
    }

    fn residual(&self, x: &DenseMatrix, y: &DenseMatrix) -> DenseMatrix {
        self.problem.apply_a(x) + self.problem.apply_b(y) - self.problem.target()
    }

    pub fn update_x(&self, s: &LadmapState) -> Result<DenseMatrix> {
        let w = self.eta_a * s.beta;
        let tilde = &s.lambda + self.residual(&s.x, &s.y) * s.beta;
        let point = &s.x - self.problem.adjoint_a(&tilde) / w;
        self.problem.prox_f(&point, w)
    }

    pub fn update_y(&self, s: &LadmapState, x_new: &DenseMatrix) -> Result<DenseMatrix> {
        let w = self.eta_b * s.beta;
        let hat = &s.lambda + self.residual(x_new, &s.y) * s.beta;
        let point = &s.y - self.problem.adjoint_b(&hat) / w;
        self.problem.prox_g(&point, w)
    }

    pub fn update_lambda(&self, s: &LadmapState, x_new: &DenseMatrix, y_new: &DenseMatrix) -> DenseMatrix {
        &s.lambda + self.residual(x_new, y_new) * s.beta
    }

    pub fn update_beta(&self, beta: f64, dx_norm: f64, dy_norm: f64) -> f64 {
        let kkt2 = kkt2_residual(beta, self.eta_a, self.eta_b, dx_norm, dy_norm, self.c_norm);
        next_beta(beta, kkt2, self.config.eps2, self.config.rho0, self.config.beta_max)
    }

    pub fn check_stop(&self, s: &LadmapState, x_new: &DenseMatrix, y_new: &DenseMatrix) -> StopCheck {
        let feas_res = self.residual(x_new, y_new).norm() / self.c_norm;
        let dx = (x_new - &s.x).norm();
        let dy = (y_new - &s.y).norm();
        let kkt2_res = kkt2_residual(s.beta, self.eta_a, self.eta_b, dx, dy, self.c_norm);
        StopCheck {
            feasibility_ok: feas_res < self.config.eps1,
            kkt2_ok: kkt2_res <= self.config.eps2,
            feas_res,
            kkt2_res,
        }
    }

    /// One full iteration; returns the next state and its stopping check.
    pub fn step(&self, s: &LadmapState) -> Result<(LadmapState, StopCheck)> {
        let x_new = self.update_x(s)?;
        let y_new = self.update_y(s, &x_new)?;
        let lambda = self.update_lambda(s, &x_new, &y_new);
        let stop = self.check_stop(s, &x_new, &y_new);
        let dx = (&x_new - &s.x).norm();
        let dy = (&y_new - &s.y).norm();
        let beta = self.update_beta(s.beta, dx, dy);
        Ok((
            LadmapState {
                x: x_new,
                y: y_new,
                lambda,
                beta,
                k: s.k + 1,
            },
            stop,
        ))
    }

    pub fn solve(&self, initial: LadmapState) -> Result<LadmapSolution> {
        self.solve_observed(initial, |_| {})
    }

    /// [`Self::solve`], calling `observe` on the initial state and after every
    /// iteration.
    pub fn solve_observed(
        &self,
        initial: LadmapState,
        mut observe: impl FnMut(&LadmapState),
    ) -> Result<LadmapSolution> {
        let mut state = initial;
        let mut trace = ConvergenceTrace::default();
        observe(&state);
        while state.k < self.config.max_iter {
            let started = Instant::now();
            let beta_used = state.beta;
            let (next, stop) = self.step(&state)?;
            let objective = if self.config.track_objective {
                self.problem.objective(&next.x, &next.y)
            } else {
                None
            };
            trace.push(TraceRecord {
                k: next.k,
                feas_res: stop.feas_res,
                kkt2_res: stop.kkt2_res,
                beta: beta_used,
                time_ms: started.elapsed().as_secs_f64() * 1e3,
                objective,
                rank: None,
            });
            state = next;
            observe(&state);
            if stop.should_stop() {
                return Ok(LadmapSolution {
                    state,
                    trace,
                    status: SolveStatus::Converged,
                });
            }
        }
        Ok(LadmapSolution {
            state,
            trace,
            status: SolveStatus::IterationCapped,
        })
    }

    /// `η_A‖x−x*‖² − ‖A(x−x*)‖² + η_B‖y−y*‖² + β⁻²‖λ−λ*‖²`, the quantity that
    /// is non-increasing along the iterates for a KKT point `(x*, y*, λ*)`.
    pub fn lyapunov(&self, s: &LadmapState, reference: &LadmapState) -> f64 {
        let dx = &s.x - &reference.x;
        let dy = &s.y - &reference.y;
        let dl = &s.lambda - &reference.lambda;
        self.eta_a * dx.norm_squared() - self.problem.apply_a(&dx).norm_squared()
            + self.eta_b * dy.norm_squared()
            + dl.norm_squared() / (s.beta * s.beta)
    }
}
