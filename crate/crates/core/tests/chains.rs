use stochlab::ergodicity::*;
use stochlab::kolmogorov::{solve_backward_kolmogorov, BoundaryCondition, SolverOptions};
use stochlab::{GaussianStream, Grid1D, Potential, SdeModel};

fn pde(bc: BoundaryCondition) -> KernelMethod {
    KernelMethod::Pde { dt: 1e-3, bc }
}

#[test]
fn killed_brownian_motion_principal_mode() {
    // Dirichlet Laplacian on (−1, 1): λ0 = exp(−π² t / 8), h0 ∝ cos(πx/2)
    let grid = Grid1D::with_nodes(-1.0, 1.0, 81).unwrap();
    let t = 0.25;
    let k = discretize_kernel(&SdeModel::brownian(1), grid, t, &pde(BoundaryCondition::DirichletZero)).unwrap();
    let eig = power_iteration_jentzsch(&k, 1e-12, 100_000).unwrap();
    let exact = (-std::f64::consts::PI.powi(2) * t / 8.0).exp();
    assert!((eig.lambda0 - exact).abs() < 2e-3, "{} vs {exact}", eig.lambda0);
    let inner = k.grid.unwrap();
    for (i, h) in eig.h0.iter().enumerate() {
        let x = inner.x(i);
        assert!((h - (std::f64::consts::FRAC_PI_2 * x).cos()).abs() < 5e-3);
    }
    // symmetric kernel up to quadrature weights: π0 ∝ h0
    let s: f64 = eig.h0.iter().sum();
    for (p, h) in eig.pi0.iter().zip(&eig.h0) {
        assert!((p - h / s).abs() < 1e-6);
    }
    assert!(eig.observed_rate <= eig.rate_bound);
}

#[test]
fn kernel_powers_follow_the_semigroup() {
    let grid = Grid1D::with_nodes(-4.0, 4.0, 81).unwrap();
    let model = SdeModel::ornstein_uhlenbeck();
    let bc = BoundaryCondition::NeumannZero;
    let k1 = discretize_kernel(&model, grid, 0.5, &pde(bc)).unwrap();
    let k2 = discretize_kernel(&model, grid, 1.0, &pde(bc)).unwrap();
    let phi = grid.sample(|x| x.sin() + 0.3 * x * x);
    let twice = k1.apply(&k1.apply(&phi));
    let once = k2.apply(&phi);
    // both are the same number of implicit steps of the same operator
    for (a, b) in twice.iter().zip(&once) {
        assert!((a - b).abs() < 1e-10);
    }
    let direct = solve_backward_kolmogorov(&model, &phi, 1.0, grid, bc, SolverOptions::implicit(1e-3)).unwrap();
    for (a, b) in once.iter().zip(&direct.final_field().values) {
        assert!((a - b).abs() < 1e-10);
    }
}

#[test]
fn harris_chain_for_the_double_well() {
    let grid = Grid1D::with_nodes(-3.0, 3.0, 121).unwrap();
    let model = SdeModel::gradient(Potential::double_well(), 1);
    let k = discretize_kernel(&model, grid, 1.0, &pde(BoundaryCondition::NeumannZero)).unwrap();
    let v = grid.sample(|x| 1.0 + x * x);
    let drift = verify_geometric_drift(&k, &v).unwrap();
    assert!(drift.feasible && drift.informative);
    assert_eq!(drift.violations(&k, &v), 0);
    let r = 2.0 * drift.d / (1.0 - drift.gamma) * 1.5;
    let minor = verify_minorisation(&k, r, &v).unwrap();
    assert!(minor.alpha > 0.0);
    assert_eq!(minor.violations(&k), 0);
    let lower = drift.gamma + 2.0 * drift.d / r;
    let hm = hm_constants(
        drift.gamma,
        drift.d,
        minor.alpha,
        r,
        0.5 * minor.alpha,
        0.5 * (lower + 1.0),
    )
    .unwrap();
    assert!(hm.alpha_bar < 1.0);
    let rep = verify_hm_contraction(&k, &v, hm.beta, hm.alpha_bar, 500, GaussianStream::new(3, 1)).unwrap();
    assert!(rep.holds, "{} > {}", rep.max_ratio, hm.alpha_bar);
    // iterating the chain from a point mass approaches the Gibbs weights
    let mut mu = vec![0.0; k.n];
    mu[10] = 1.0;
    for _ in 0..60 {
        mu = k.apply_left(&mu);
    }
    let w = grid.sample(|x| (-(0.25 * x.powi(4) - 0.5 * x * x)).exp());
    let tw = grid.trapezoid_weights();
    let z: f64 = w.iter().zip(&tw).map(|(a, b)| a * b).sum();
    let l1: f64 = mu
        .iter()
        .zip(w.iter().zip(&tw))
        .map(|(m, (w, t))| (m - w * t / z).abs())
        .sum();
    assert!(l1 < 0.02, "{l1}");
}

#[test]
fn mc_kernel_agrees_with_pde_kernel_in_mean() {
    let grid = Grid1D::with_nodes(-4.0, 4.0, 41).unwrap();
    let model = SdeModel::ornstein_uhlenbeck();
    let p = discretize_kernel(&model, grid, 0.5, &pde(BoundaryCondition::NeumannZero)).unwrap();
    let mc = KernelMethod::Mc {
        n_paths: 20_000,
        n_steps: 100,
        stream: GaussianStream::new(9, 0),
    };
    let m = discretize_kernel(&model, grid, 0.5, &mc).unwrap();
    let x = grid.nodes();
    for i in [5, 20, 33] {
        let mp: f64 = p.row(i).iter().zip(&x).map(|(a, b)| a * b).sum();
        let mm: f64 = m.row(i).iter().zip(&x).map(|(a, b)| a * b).sum();
        assert!((mp - mm).abs() < 0.03, "row {i}: {mp} vs {mm}");
    }
}
