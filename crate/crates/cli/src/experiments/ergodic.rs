use serde::{Deserialize, Serialize};
use stochlab::ergodicity::*;
use stochlab::kolmogorov::BoundaryCondition;
use stochlab::{Grid1D, Potential, SdeModel};

use super::{at_least, build, ordered, positive, require_scalar, Experiment};
use crate::expr::Expr;
use crate::model::ModelSpec;
use crate::output::RunContext;

fn parse_v(src: &str) -> Result<Expr, String> {
    Expr::parse(src, "x").map_err(|e| format!("v '{src}': {e}"))
}

fn pde(dt: f64, bc: BoundaryCondition) -> KernelMethod {
    KernelMethod::Pde { dt, bc }
}

pub struct HairerMattingly;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HairerMattinglyParams {
    pub x_min: f64,
    pub x_max: f64,
    pub n_nodes: usize,
    pub t_step: f64,
    pub pde_dt: f64,
    /// Lyapunov function as an expression in `x`.
    pub v: String,
    /// Level `R` of the minorising set `{V ≤ R}`.
    pub r_level: f64,
    pub n_pairs: usize,
    /// Steps of the ρ_β decay series.
    pub n_iterations: usize,
}

impl Default for HairerMattinglyParams {
    fn default() -> Self {
        Self {
            x_min: -5.0,
            x_max: 5.0,
            n_nodes: 201,
            t_step: 1.0,
            pde_dt: 1e-3,
            v: "x^2".into(),
            r_level: 2.0,
            n_pairs: 1000,
            n_iterations: 20,
        }
    }
}

impl Experiment for HairerMattingly {
    const NAME: &'static str = "hairer_mattingly";
    const ABOUT: &'static str = "Drift and minorisation certificates with weighted total-variation contraction";
    const CRITERION: Option<u8> = Some(7);
    type Params = HairerMattinglyParams;

    fn default_model() -> Option<ModelSpec> {
        Some(ModelSpec::Ou { theta: 1.0, sigma: 1.0 })
    }

    fn validate(p: &Self::Params, model: Option<&ModelSpec>) -> Result<(), String> {
        require_scalar(model)?;
        ordered("x_min/x_max", p.x_min, p.x_max)?;
        at_least("n_nodes", p.n_nodes, 3)?;
        positive("t_step", p.t_step)?;
        positive("pde_dt", p.pde_dt)?;
        positive("r_level", p.r_level)?;
        parse_v(&p.v).map(|_| ())
    }

    fn run(p: &Self::Params, model: Option<&ModelSpec>, ctx: &mut RunContext) -> anyhow::Result<()> {
        let sde = build(model)?;
        let grid = Grid1D::with_nodes(p.x_min, p.x_max, p.n_nodes)?;
        let kernel = discretize_kernel(&sde, grid, p.t_step, &pde(p.pde_dt, BoundaryCondition::NeumannZero))?;
        let v_expr = parse_v(&p.v).map_err(anyhow::Error::msg)?;
        let v = grid.sample(|x| v_expr.eval(x));
        let drift = verify_geometric_drift(&kernel, &v)?;
        let minor = verify_minorisation(&kernel, p.r_level, &v)?;
        let alpha0 = 0.5 * minor.alpha;
        let gamma0 = 0.5 * (drift.gamma + 2.0 * drift.d / p.r_level + 1.0);
        let hm = hm_constants(drift.gamma, drift.d, minor.alpha, p.r_level, alpha0, gamma0)?;
        let report = verify_hm_contraction(&kernel, &v, hm.beta, hm.alpha_bar, p.n_pairs, ctx.stream(7))?;
        ctx.json(
            "certificates.json",
            &serde_json::json!({
                "drift": drift,
                "minorisation": {
                    "alpha": minor.alpha,
                    "r_level": minor.r_level,
                    "set_size": minor.c.len(),
                },
                "alpha0": alpha0,
                "gamma0": gamma0,
                "constants": hm,
                "contraction": report,
                "drift_violations": drift.violations(&kernel, &v),
                "minorisation_violations": minor.violations(&kernel),
            }),
        )?;
        // two point masses at the grid ends, pushed forward together
        let n = kernel.n;
        let mut mu = vec![0.0; n];
        let mut nu = vec![0.0; n];
        mu[0] = 1.0;
        nu[n - 1] = 1.0;
        let rho0 = rho_beta_distance(&mu, &nu, &v, hm.beta)?;
        let mut rows = Vec::with_capacity(p.n_iterations + 1);
        for k in 0..=p.n_iterations {
            let d = rho_beta_distance(&mu, &nu, &v, hm.beta)?;
            rows.push(vec![k as f64, d, rho0 * hm.alpha_bar.powi(k as i32)]);
            mu = kernel.apply_left(&mu);
            nu = kernel.apply_left(&nu);
        }
        ctx.csv("rho_decay.csv", &["n", "rho_beta_distance", "bound"], rows)?;
        if !report.holds {
            ctx.flag(format!(
                "contraction ratio {} exceeds {}",
                report.max_ratio, hm.alpha_bar
            ));
        }
        if !drift.informative {
            ctx.flag("drift certificate is not informative on this grid");
        }
        Ok(())
    }
}

pub struct Birkhoff;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BirkhoffParams {
    /// Positive matrix; rows are normalised before use.
    pub matrix: Vec<Vec<f64>>,
    pub n_probe: usize,
    /// Killed Brownian motion on `(−half_width, half_width)`.
    pub half_width: f64,
    pub n_nodes: usize,
    pub t_step: f64,
    pub pde_dt: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for BirkhoffParams {
    fn default() -> Self {
        Self {
            matrix: vec![vec![2.0, 1.0], vec![1.0, 2.0]],
            n_probe: 2000,
            half_width: 1.0,
            n_nodes: 61,
            t_step: 0.25,
            pde_dt: 1e-3,
            tol: 1e-12,
            max_iter: 100_000,
        }
    }
}

impl Experiment for Birkhoff {
    const NAME: &'static str = "birkhoff";
    const ABOUT: &'static str =
        "Projective contraction of a positive matrix and the principal mode of killed Brownian motion";
    const CRITERION: Option<u8> = Some(8);
    type Params = BirkhoffParams;

    fn validate(p: &Self::Params, _: Option<&ModelSpec>) -> Result<(), String> {
        let n = p.matrix.len();
        if n == 0 || p.matrix.iter().any(|r| r.len() != n) {
            return Err("matrix must be square and non-empty".into());
        }
        if p.matrix.iter().flatten().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err("matrix entries must be positive".into());
        }
        positive("half_width", p.half_width)?;
        at_least("n_nodes", p.n_nodes, 4)?;
        positive("t_step", p.t_step)?;
        positive("pde_dt", p.pde_dt)?;
        positive("tol", p.tol)?;
        at_least("max_iter", p.max_iter, 1)
    }

    fn run(p: &Self::Params, _: Option<&ModelSpec>, ctx: &mut RunContext) -> anyhow::Result<()> {
        let k = DiscreteKernel::row_normalized(&p.matrix)?;
        let diam = projective_diameter(&k, p.n_probe, ctx.stream(8))?;
        let contraction = projective_contraction(&k, diam, p.n_probe, ctx.stream(9));
        let grid = Grid1D::with_nodes(-p.half_width, p.half_width, p.n_nodes)?;
        let killed = discretize_kernel(
            &SdeModel::brownian(1),
            grid,
            p.t_step,
            &pde(p.pde_dt, BoundaryCondition::DirichletZero),
        )?;
        // principal Dirichlet eigenvalue of ½Δ on the interval
        let rate = std::f64::consts::PI.powi(2) / (8.0 * p.half_width * p.half_width);
        let analytic = (-rate * p.t_step).exp();
        let mut summary = serde_json::json!({
            "diameter": diam,
            "contraction": contraction,
            "killed_bm": { "analytic_lambda0": analytic },
        });
        match power_iteration_jentzsch(&killed, p.tol, p.max_iter) {
            Ok(eig) => {
                summary["killed_bm"] = serde_json::json!({
                    "analytic_lambda0": analytic,
                    "lambda0": eig.lambda0,
                    "iterations": eig.iterations,
                    "residual_right": eig.residual_right,
                    "residual_left": eig.residual_left,
                    "observed_rate": eig.observed_rate,
                    "rate_bound": eig.rate_bound,
                });
                let inner = killed.grid.expect("kernel grid");
                let rows = inner
                    .nodes()
                    .into_iter()
                    .zip(eig.h0.iter().zip(&eig.pi0))
                    .map(|(x, (h, pi))| {
                        let exact = (std::f64::consts::PI * x / (2.0 * p.half_width)).cos();
                        vec![x, *h, *pi, exact]
                    });
                ctx.csv("eigenvectors.csv", &["x", "h0", "pi0", "cos_mode"], rows)?;
                if eig.observed_rate > eig.rate_bound {
                    ctx.flag("observed rate exceeds the cone bound");
                }
            }
            Err(stochlab::Error::NonConvergence { iterations, residual }) => {
                ctx.flag(format!(
                    "power iteration did not converge in {iterations} steps (residual {residual:.3e})"
                ));
            }
            Err(e) => return Err(e.into()),
        }
        if contraction.max_ratio > contraction.bound + 1e-9 {
            ctx.flag("sampled contraction exceeds tanh(diameter/4)");
        }
        ctx.json("summary.json", &summary)?;
        Ok(())
    }
}

pub struct Certificates;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CertificatesParams {
    pub mc_paths: usize,
    pub mc_steps: usize,
}

impl Default for CertificatesParams {
    fn default() -> Self {
        Self {
            mc_paths: 2000,
            mc_steps: 50,
        }
    }
}

#[derive(Serialize)]
struct Check {
    kernel: &'static str,
    certificate: String,
    violations: usize,
}

impl Experiment for Certificates {
    const NAME: &'static str = "certificates";
    const ABOUT: &'static str = "Entrywise recheck of every fitted drift, minorisation and cone certificate";
    const CRITERION: Option<u8> = Some(13);
    type Params = CertificatesParams;

    fn validate(p: &Self::Params, _: Option<&ModelSpec>) -> Result<(), String> {
        at_least("mc_paths", p.mc_paths, 1)?;
        at_least("mc_steps", p.mc_steps, 1)
    }

    fn run(p: &Self::Params, _: Option<&ModelSpec>, ctx: &mut RunContext) -> anyhow::Result<()> {
        let mut checks = Vec::new();
        let mut push = |kernel, certificate: &str, violations| {
            checks.push(Check {
                kernel,
                certificate: certificate.into(),
                violations,
            })
        };
        let reflected = pde(1e-3, BoundaryCondition::NeumannZero);

        let grid = Grid1D::with_nodes(-5.0, 5.0, 201)?;
        let ou = discretize_kernel(&SdeModel::ornstein_uhlenbeck(), grid, 1.0, &reflected)?;
        let v = grid.sample(|x| x * x);
        push("ou", "drift", verify_geometric_drift(&ou, &v)?.violations(&ou, &v));
        for r in [1.0, 2.0, 4.0, 9.0] {
            push(
                "ou",
                &format!("minorisation R={r}"),
                verify_minorisation(&ou, r, &v)?.violations(&ou),
            );
        }

        let killed = discretize_kernel(
            &SdeModel::brownian(1),
            Grid1D::with_nodes(-1.0, 1.0, 61)?,
            0.25,
            &pde(1e-3, BoundaryCondition::DirichletZero),
        )?;
        push("killed_bm", "cone", fit_cone_bounds(&killed)?.violations(&killed));
        let vk = killed.grid.expect("kernel grid").sample(|x| 1.0 + x * x);
        push(
            "killed_bm",
            "drift",
            verify_geometric_drift(&killed, &vk)?.violations(&killed, &vk),
        );

        let two = DiscreteKernel::row_normalized(&[vec![2.0, 1.0], vec![1.0, 2.0]])?;
        push("two_state", "cone", fit_cone_bounds(&two)?.violations(&two));

        let grid = Grid1D::with_nodes(-2.5, 2.5, 101)?;
        let dw = SdeModel::gradient(Potential::double_well(), 1);
        let mc = KernelMethod::Mc {
            n_paths: p.mc_paths,
            n_steps: p.mc_steps,
            stream: ctx.stream(12),
        };
        for (name, method) in [("double_well_pde", reflected), ("double_well_mc", mc)] {
            let k = discretize_kernel(&dw, grid, 0.5, &method)?;
            let v = grid.sample(|x| 1.0 + x * x);
            push(name, "drift", verify_geometric_drift(&k, &v)?.violations(&k, &v));
            push(
                name,
                "minorisation R=3",
                verify_minorisation(&k, 3.0, &v)?.violations(&k),
            );
            // sparse MC kernels may have zero entries and no cone bound
            if let Ok(cb) = fit_cone_bounds(&k) {
                push(name, "cone", cb.violations(&k));
            }
        }
        let total: usize = checks.iter().map(|c| c.violations).sum();
        if total > 0 {
            ctx.flag(format!("{total} certificate violations"));
        }
        ctx.json(
            "certificates.json",
            &serde_json::json!({ "checks": checks, "total_violations": total }),
        )?;
        Ok(())
    }
}

pub struct Lyapunov;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LyapunovParams {
    pub x_min: f64,
    pub x_max: f64,
    pub n_nodes: usize,
    pub v: String,
}

impl Default for LyapunovParams {
    fn default() -> Self {
        Self {
            x_min: -5.0,
            x_max: 5.0,
            n_nodes: 201,
            v: "1 + x^2".into(),
        }
    }
}

impl Experiment for Lyapunov {
    const NAME: &'static str = "lyapunov";
    const ABOUT: &'static str = "Generator inequalities for a Lyapunov function on a grid";
    type Params = LyapunovParams;

    fn default_model() -> Option<ModelSpec> {
        Some(ModelSpec::gradient("x^4/4 - x^2/2", None))
    }

    fn validate(p: &Self::Params, model: Option<&ModelSpec>) -> Result<(), String> {
        require_scalar(model)?;
        ordered("x_min/x_max", p.x_min, p.x_max)?;
        at_least("n_nodes", p.n_nodes, 5)?;
        parse_v(&p.v).map(|_| ())
    }

    fn run(p: &Self::Params, model: Option<&ModelSpec>, ctx: &mut RunContext) -> anyhow::Result<()> {
        let sde = build(model)?;
        let grid = Grid1D::with_nodes(p.x_min, p.x_max, p.n_nodes)?;
        let v_expr = parse_v(&p.v).map_err(anyhow::Error::msg)?;
        let v = grid.sample(|x| v_expr.eval(x));
        let report = mt_lyapunov_report(&sde, &v, &grid)?;
        let xs = grid.nodes();
        let rows = (0..report.lv.len()).map(|i| vec![xs[i + 1], v[i + 1], report.lv[i]]);
        ctx.csv("lv.csv", &["x", "v", "lv"], rows)?;
        ctx.json(
            "report.json",
            &serde_json::json!({
                "norm_like": report.norm_like,
                "non_explosion": report.non_explosion,
                "non_evanescence": report.non_evanescence,
                "harris_recurrence": report.harris_recurrence,
                "exponential": report.exponential,
                "petite_sets": report.petite_sets,
            }),
        )?;
        if !report.exponential.feasible {
            ctx.flag("no exponential-ergodicity certificate on this grid");
        }
        Ok(())
    }
}
