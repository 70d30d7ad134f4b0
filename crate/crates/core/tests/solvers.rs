use ladmap_core::ladmap::{Ladmap, LadmapConfig, MatrixProblem, Regularizer, SolveStatus};
use ladmap_core::linalg::{gaussian_matrix, DenseMatrix};
use ladmap_core::lrr::{lyapunov, solve_lrr, LrrProblem, LrrSolver, PenaltySchedule, SvdMode};
use ladmap_core::pipeline::{gen_synthetic, SyntheticSpec};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn problem(seed: u64) -> LrrProblem {
    let ds = gen_synthetic(&SyntheticSpec::new(4, 10, 50, 3, seed)).unwrap();
    LrrProblem::new(ds.x, 0.1).unwrap()
}

#[test]
fn beta_is_monotone_and_capped() {
    let p = problem(0);
    let cfg = LadmapConfig {
        beta_max: 1.0,
        ..LadmapConfig::default()
    };
    let sol = solve_lrr(&p, &cfg, SvdMode::Accelerated).unwrap();
    let betas: Vec<f64> = sol.trace.betas().collect();
    assert!(betas.windows(2).all(|w| w[1] >= w[0]));
    assert!(betas.iter().all(|b| *b <= 1.0));
}

#[test]
fn converged_solution_meets_tolerances() {
    let p = problem(1);
    let cfg = LadmapConfig::default();
    let sol = solve_lrr(&p, &cfg, SvdMode::Accelerated).unwrap();
    assert_eq!(sol.status, SolveStatus::Converged);
    let last = sol.trace.last().unwrap();
    assert!(last.feas_res < cfg.eps1);
    assert!(last.kkt2_res <= cfg.eps2);
    assert!(p.feasibility(&sol.e, &sol.z) < cfg.eps1);
    assert_eq!(sol.iterations, sol.trace.len());
}

#[test]
fn standard_and_accelerated_agree() {
    let p = problem(2);
    let cfg = LadmapConfig::default();
    let a = solve_lrr(&p, &cfg, SvdMode::Accelerated).unwrap();
    let s = solve_lrr(&p, &cfg, SvdMode::Standard).unwrap();
    assert_eq!(a.iterations, s.iterations);
    let dz = a.z.dist_sq(&s.z).sqrt() / a.z.frob_norm_sq().sqrt();
    let de = (&a.e - &s.e).norm() / a.e.norm().max(1e-300);
    assert!(dz < 1e-6 && de < 1e-6, "{dz} {de}");
}

#[test]
fn iteration_cap_is_reported() {
    let p = problem(3);
    let cfg = LadmapConfig {
        max_iter: 3,
        ..LadmapConfig::default()
    };
    let sol = solve_lrr(&p, &cfg, SvdMode::Accelerated).unwrap();
    assert_eq!(sol.status, SolveStatus::IterationCapped);
    assert_eq!(sol.iterations, 3);
}

#[test]
fn lyapunov_does_not_increase() {
    let p = problem(4);
    let tight = LadmapConfig {
        eps1: 1e-9,
        eps2: 1e-9,
        max_iter: 3000,
        ..LadmapConfig::default()
    };
    let reference = solve_lrr(&p, &tight, SvdMode::Accelerated).unwrap();
    let solver = LrrSolver::new(&p, LadmapConfig::default(), SvdMode::Accelerated).unwrap();
    let mut values = Vec::new();
    solver
        .solve_observed(|s, _| values.push(lyapunov(&p, s, &reference.z, &reference.lambda)))
        .unwrap();
    for w in values.windows(2) {
        assert!(w[1] <= w[0] * (1.0 + 1e-6), "{} -> {}", w[0], w[1]);
    }
}

#[test]
fn fixed_schedule_keeps_beta() {
    let p = problem(5);
    let mut solver = LrrSolver::new(&p, LadmapConfig::default(), SvdMode::Accelerated).unwrap();
    solver.schedule = PenaltySchedule::Fixed(0.05);
    let sol = solver.solve().unwrap();
    assert!(sol.trace.betas().all(|b| b == 0.05));
}

#[test]
fn generic_solver_handles_l1_pair() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let a = gaussian_matrix(15, 25, &mut rng);
    let b = DenseMatrix::identity(15, 15);
    let x0 = DMatrix::from_fn(25, 1, |i, _| if i % 6 == 0 { 1.0 } else { 0.0 });
    let c = &a * &x0;
    let mp = MatrixProblem::new(a, b, c, Regularizer::L1(1.0), Regularizer::L1(1.0)).unwrap();
    let solver = Ladmap::new(&mp, LadmapConfig::default()).unwrap();
    let sol = solver.solve(solver.initial_state()).unwrap();
    assert_eq!(sol.status, SolveStatus::Converged);
    let r = &mp.a * &sol.state.x + &mp.b * &sol.state.y - &mp.c;
    assert!(r.norm() / mp.c.norm() < 1e-4);
}

#[test]
fn rejects_bad_inputs() {
    let x = DenseMatrix::from_element(3, 3, f64::NAN);
    assert!(LrrProblem::new(x, 0.1).is_err());
    let x = DenseMatrix::identity(3, 3);
    assert!(LrrProblem::new(x.clone(), -1.0).is_err());
    let cfg = LadmapConfig {
        rho0: 0.5,
        ..LadmapConfig::default()
    };
    assert!(cfg.validate().is_err());
}
