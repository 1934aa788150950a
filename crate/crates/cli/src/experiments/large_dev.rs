use serde::{Deserialize, Serialize};
use stochlab::exit::{mc_exit, Domain, ExitOptions, Side, StepControl};
use stochlab::ldp::*;
use stochlab::{Potential, SdeModel};

use super::{at_least, build, ordered, positive, require_gradient, Experiment};
use crate::expr::Expr;
use crate::model::ModelSpec;
use crate::output::RunContext;

fn path_csv(ctx: &mut RunContext, name: &str, path: &ActionPath) -> anyhow::Result<()> {
    let mut buf = Vec::new();
    path.write_csv(&mut buf)?;
    ctx.bytes(name, buf);
    Ok(())
}

fn dims_match(model: Option<&ModelSpec>, points: &[(&str, &[f64])]) -> Result<(), String> {
    let dim = model.map_or(1, ModelSpec::dim);
    for (name, p) in points {
        if p.len() != dim {
            return Err(format!(
                "{name} has {} components, the model has dimension {dim}",
                p.len()
            ));
        }
    }
    Ok(())
}

/// Potential of a gradient model whose noise level is set by the experiment.
fn gradient_potential(model: Option<&ModelSpec>) -> Result<Potential, String> {
    require_gradient(model)?;
    let m = model.expect("checked above");
    if let ModelSpec::Gradient { noise: Some(_), .. } = m {
        return Err("noise is set by eps in this experiment; leave model.noise unset".into());
    }
    Ok(m.potential()?.expect("gradient preset"))
}

fn minimize_options(tol: f64, max_iter: usize) -> MinimizeOptions {
    MinimizeOptions {
        tol,
        max_iter,
        ..Default::default()
    }
}

pub struct SchilderFw;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchilderFwParams {
    /// OU target level, reached from 0 at time `t`.
    pub h: f64,
    pub t: f64,
    pub n_steps: usize,
    /// Brownian target in the plane, reached from the origin at `free_t`.
    pub free_target: [f64; 2],
    pub free_t: f64,
    pub tol: f64,
}

impl Default for SchilderFwParams {
    fn default() -> Self {
        Self {
            h: 1.0,
            t: 1.0,
            n_steps: 2000,
            free_target: [1.0, 2.0],
            free_t: 2.0,
            tol: 1e-7,
        }
    }
}

impl Experiment for SchilderFw {
    const NAME: &'static str = "schilder_fw";
    const ABOUT: &'static str = "Minimum action of OU and free Brownian paths against closed forms";
    const CRITERION: Option<u8> = Some(9);
    type Params = SchilderFwParams;

    fn validate(p: &Self::Params, _: Option<&ModelSpec>) -> Result<(), String> {
        positive("h", p.h)?;
        positive("t", p.t)?;
        positive("free_t", p.free_t)?;
        positive("tol", p.tol)?;
        at_least("n_steps", p.n_steps, 2)
    }

    fn run(p: &Self::Params, _: Option<&ModelSpec>, ctx: &mut RunContext) -> anyhow::Result<()> {
        let opts = minimize_options(p.tol, 5000);
        let ou = minimize_action(
            &SdeModel::ornstein_uhlenbeck(),
            &[0.0],
            &[p.h],
            p.t,
            p.n_steps,
            PathInit::Line,
            &opts,
        )?;
        let exact = ou_exit_rate(0.0, p.h, p.t)?;
        let target = p.free_target;
        let free = minimize_action(
            &SdeModel::brownian(2),
            &[0.0, 0.0],
            &target,
            p.free_t,
            200,
            PathInit::Ode,
            &opts,
        )?;
        let free_exact = (target[0].powi(2) + target[1].powi(2)) / (2.0 * p.free_t);
        let schilder = schilder_rate(&free.path)?;
        let rows = ou
            .path
            .grid
            .times()
            .enumerate()
            .map(|(k, t)| vec![t, ou.path.state(k)[0], ou_optimal_path(0.0, p.h, p.t, t)]);
        ctx.csv("ou_path.csv", &["t", "phi", "exact"], rows.collect::<Vec<_>>())?;
        ctx.json(
            "summary.json",
            &serde_json::json!({
                "ou": {
                    "action": ou.action(),
                    "closed_form": exact,
                    "converged": ou.converged,
                    "iterations": ou.iterations,
                    "residual": ou.residual,
                },
                "free": {
                    "action": free.action(),
                    "schilder_rate": schilder,
                    "closed_form": free_exact,
                    "converged": free.converged,
                },
            }),
        )?;
        if !(ou.converged && free.converged) {
            ctx.flag("action minimiser did not converge");
        }
        Ok(())
    }
}

pub struct Quasipotential;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuasipotentialParams {
    pub x_star: Vec<f64>,
    pub y: Vec<f64>,
    pub t_list: Vec<f64>,
    pub dt: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for QuasipotentialParams {
    fn default() -> Self {
        Self {
            x_star: vec![-1.0],
            y: vec![0.0],
            t_list: vec![2.0, 4.0, 8.0, 16.0],
            dt: 0.01,
            tol: 1e-6,
            max_iter: 5000,
        }
    }
}

impl Experiment for Quasipotential {
    const NAME: &'static str = "quasipotential";
    const ABOUT: &'static str = "Quasipotential as the infimum of minimum actions over horizons";
    const CRITERION: Option<u8> = Some(10);
    type Params = QuasipotentialParams;

    fn default_model() -> Option<ModelSpec> {
        Some(ModelSpec::gradient("x^4/4 - x^2/2", Some(1.0)))
    }

    fn validate(p: &Self::Params, model: Option<&ModelSpec>) -> Result<(), String> {
        dims_match(model, &[("x_star", &p.x_star), ("y", &p.y)])?;
        if p.t_list.is_empty() || p.t_list.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
            return Err("t_list must hold positive horizons".into());
        }
        positive("dt", p.dt)?;
        positive("tol", p.tol)?;
        at_least("max_iter", p.max_iter, 1)
    }

    fn run(p: &Self::Params, model: Option<&ModelSpec>, ctx: &mut RunContext) -> anyhow::Result<()> {
        let sde = build(model)?;
        let opts = QuasipotentialOptions {
            dt: p.dt,
            minimize: minimize_options(p.tol, p.max_iter),
        };
        let r = quasipotential(&sde, &p.x_star, &p.y, &p.t_list, &opts)?;
        let rows = r.actions.iter().zip(&r.envelope).map(|((t, a), e)| vec![*t, *a, *e]);
        ctx.csv("actions.csv", &["T", "action", "envelope"], rows.collect::<Vec<_>>())?;
        path_csv(ctx, "path.csv", &r.path)?;
        ctx.json(
            "summary.json",
            &serde_json::json!({
                "value": r.value,
                "minimizing_t": r.minimizing_t,
                "converged": r.converged,
                "tie_flag": r.tie_flag,
            }),
        )?;
        if !r.converged {
            ctx.flag("action minimiser did not converge for every horizon");
        }
        if r.tie_flag {
            ctx.flag("distinct paths tie for the minimum action");
        }
        Ok(())
    }
}

pub struct Arrhenius;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArrheniusParams {
    pub eps: Vec<f64>,
    pub a: f64,
    pub b: f64,
    pub x0: f64,
    pub n_paths: usize,
    pub h_min: f64,
    pub h_max: f64,
    pub t_max: f64,
    /// Reference barrier height, if known.
    pub v_bar_ref: Option<f64>,
}

impl Default for ArrheniusParams {
    fn default() -> Self {
        Self {
            eps: vec![0.25, 0.167, 0.125],
            a: -1.0,
            b: 1.0,
            x0: 0.0,
            n_paths: 4000,
            h_min: 1e-7,
            h_max: 0.01,
            t_max: 1e6,
            v_bar_ref: Some(1.0),
        }
    }
}

impl Experiment for Arrhenius {
    const NAME: &'static str = "arrhenius";
    const ABOUT: &'static str = "Growth of mean exit times as the noise vanishes";
    const CRITERION: Option<u8> = Some(11);
    type Params = ArrheniusParams;

    fn default_model() -> Option<ModelSpec> {
        Some(ModelSpec::gradient("x^2/2", None))
    }

    fn validate(p: &Self::Params, model: Option<&ModelSpec>) -> Result<(), String> {
        gradient_potential(model)?;
        if p.eps.len() < 3 || p.eps.iter().any(|e| !(*e > 0.0)) {
            return Err("eps needs at least three positive values".into());
        }
        ordered("a/b", p.a, p.b)?;
        if !(p.a < p.x0 && p.x0 < p.b) {
            return Err("x0 must lie in (a, b)".into());
        }
        ordered("h_min/h_max", p.h_min, p.h_max)?;
        positive("h_min", p.h_min)?;
        positive("t_max", p.t_max)?;
        at_least("n_paths", p.n_paths, 2)
    }

    fn run(p: &Self::Params, model: Option<&ModelSpec>, ctx: &mut RunContext) -> anyhow::Result<()> {
        let pot = gradient_potential(model).map_err(anyhow::Error::msg)?;
        let domain = Domain::interval(p.a, p.b)?;
        let opts = ExitOptions::new(StepControl::adaptive(p.h_min, p.h_max), p.n_paths, p.t_max);
        let fit = arrhenius_check(&pot, 1, &[p.x0], &p.eps, &domain, &opts, ctx.stream(10), p.v_bar_ref)?;
        let rows = (0..fit.eps.len()).map(|i| {
            let e = fit.eps[i];
            vec![e, fit.eps_log_tau[i], e * fit.std_errors[i] / fit.mean_times[i]]
        });
        ctx.csv(
            "arrhenius.csv",
            &["eps", "eps_log_mean_tau", "stderr"],
            rows.collect::<Vec<_>>(),
        )?;
        ctx.json("fit.json", &fit)?;
        if !fit.monotone_trend {
            ctx.flag("eps log E[tau] is not monotone in eps");
        }
        Ok(())
    }
}

pub struct EyringKramers;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EyringKramersParams {
    pub eps: f64,
    pub x_star: f64,
    pub z_star: f64,
    /// Exit is the first crossing of this level.
    pub level: f64,
    pub h: f64,
    pub n_paths: usize,
    pub t_max: f64,
}

impl Default for EyringKramersParams {
    fn default() -> Self {
        Self {
            eps: 0.15,
            x_star: -1.0,
            z_star: 0.0,
            level: 0.9,
            h: 5e-3,
            n_paths: 500,
            t_max: 5000.0,
        }
    }
}

impl Experiment for EyringKramers {
    const NAME: &'static str = "eyring_kramers";
    const ABOUT: &'static str = "Mean transition time between wells against the Eyring-Kramers formula";
    const CRITERION: Option<u8> = Some(12);
    type Params = EyringKramersParams;

    fn default_model() -> Option<ModelSpec> {
        Some(ModelSpec::gradient("x^4/4 - x^2/2", None))
    }

    fn validate(p: &Self::Params, model: Option<&ModelSpec>) -> Result<(), String> {
        gradient_potential(model)?;
        positive("eps", p.eps)?;
        positive("h", p.h)?;
        positive("t_max", p.t_max)?;
        at_least("n_paths", p.n_paths, 2)?;
        if !(p.x_star < p.z_star && p.z_star < p.level) {
            return Err("need x_star < z_star < level".into());
        }
        Ok(())
    }

    fn run(p: &Self::Params, model: Option<&ModelSpec>, ctx: &mut RunContext) -> anyhow::Result<()> {
        let pot = gradient_potential(model).map_err(anyhow::Error::msg)?;
        let formula = eyring_kramers_time(&pot, &[p.x_star], &[p.z_star], p.eps)?;
        let sde = SdeModel::gradient_with_noise(pot, 1, p.eps.sqrt());
        let domain = Domain::half_space(p.level, 0, Side::Below);
        let opts = ExitOptions::new(StepControl::Fixed(p.h), p.n_paths, p.t_max);
        let s = mc_exit(&sde, &[p.x_star], &domain, &opts, ctx.stream(11))?;
        ctx.json(
            "summary.json",
            &serde_json::json!({
                "mc_mean": s.mean_time,
                "mc_stderr": s.time_std_error,
                "formula": formula,
                "ratio": s.mean_time / formula,
                "fraction_censored": s.fraction_censored,
            }),
        )?;
        if s.fraction_censored > 0.0 {
            ctx.flag("some paths were censored at t_max");
        }
        Ok(())
    }
}

pub struct MinAction;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MinActionParams {
    pub x0: Vec<f64>,
    pub y: Vec<f64>,
    pub t: f64,
    pub n_steps: usize,
    pub init: PathInit,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for MinActionParams {
    fn default() -> Self {
        Self {
            x0: vec![0.0],
            y: vec![1.0],
            t: 1.0,
            n_steps: 500,
            init: PathInit::Line,
            tol: 1e-7,
            max_iter: 5000,
        }
    }
}

impl Experiment for MinAction {
    const NAME: &'static str = "min_action";
    const ABOUT: &'static str = "Minimum-action path between two points over a fixed horizon";
    type Params = MinActionParams;

    fn default_model() -> Option<ModelSpec> {
        Some(ModelSpec::Ou { theta: 1.0, sigma: 1.0 })
    }

    fn validate(p: &Self::Params, model: Option<&ModelSpec>) -> Result<(), String> {
        dims_match(model, &[("x0", &p.x0), ("y", &p.y)])?;
        positive("t", p.t)?;
        positive("tol", p.tol)?;
        at_least("n_steps", p.n_steps, 2)?;
        at_least("max_iter", p.max_iter, 1)
    }

    fn run(p: &Self::Params, model: Option<&ModelSpec>, ctx: &mut RunContext) -> anyhow::Result<()> {
        let sde = build(model)?;
        let m = minimize_action(
            &sde,
            &p.x0,
            &p.y,
            p.t,
            p.n_steps,
            p.init,
            &minimize_options(p.tol, p.max_iter),
        )?;
        path_csv(ctx, "path.csv", &m.path)?;
        let hist = m.history.iter().enumerate().map(|(i, a)| vec![i as f64, *a]);
        ctx.csv("history.csv", &["iteration", "action"], hist.collect::<Vec<_>>())?;
        ctx.json(
            "summary.json",
            &serde_json::json!({
                "action": m.action(),
                "converged": m.converged,
                "iterations": m.iterations,
                "residual": m.residual,
            }),
        )?;
        if !m.converged {
            ctx.flag(format!(
                "not converged after {} iterations (residual {:.3e})",
                m.iterations, m.residual
            ));
        }
        Ok(())
    }
}

pub struct Hamilton;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HamiltonParams {
    pub phi0: Vec<f64>,
    pub psi0: Vec<f64>,
    pub t: f64,
    pub n_steps: usize,
}

impl Default for HamiltonParams {
    fn default() -> Self {
        Self {
            phi0: vec![-0.99],
            psi0: vec![0.02],
            t: 10.0,
            n_steps: 10_000,
        }
    }
}

impl Experiment for Hamilton {
    const NAME: &'static str = "hamilton";
    const ABOUT: &'static str = "Hamiltonian flow of the large-deviation action with energy drift";
    type Params = HamiltonParams;

    fn default_model() -> Option<ModelSpec> {
        Some(ModelSpec::gradient("x^4/4 - x^2/2", Some(1.0)))
    }

    fn validate(p: &Self::Params, model: Option<&ModelSpec>) -> Result<(), String> {
        dims_match(model, &[("phi0", &p.phi0), ("psi0", &p.psi0)])?;
        positive("t", p.t)?;
        at_least("n_steps", p.n_steps, 1)
    }

    fn run(p: &Self::Params, model: Option<&ModelSpec>, ctx: &mut RunContext) -> anyhow::Result<()> {
        let sde = build(model)?;
        let s0 = HamiltonianState::new(p.phi0.clone(), p.psi0.clone())?;
        let traj = hamilton_flow(&sde, &s0, p.t, p.n_steps)?;
        let h = p.t / p.n_steps as f64;
        let dim = p.phi0.len();
        let mut header = vec!["t".to_string()];
        header.extend((0..dim).map(|j| format!("phi{j}")));
        header.extend((0..dim).map(|j| format!("psi{j}")));
        header.push("H".into());
        let rows = traj.states.iter().zip(&traj.energy).enumerate().map(|(k, (s, e))| {
            let mut row = vec![k as f64 * h];
            row.extend(&s.phi);
            row.extend(&s.psi);
            row.push(*e);
            row
        });
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        ctx.csv("trajectory.csv", &header, rows.collect::<Vec<_>>())?;
        ctx.json(
            "summary.json",
            &serde_json::json!({ "h0": traj.energy[0], "max_drift": traj.max_drift, "flagged": traj.flagged }),
        )?;
        if traj.flagged {
            ctx.flag(format!("energy drift {:.3e} exceeds tolerance", traj.max_drift));
        }
        Ok(())
    }
}

pub struct Legendre;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LegendreParams {
    /// Log-moment generating function as an expression in `t`.
    pub lambda: String,
    pub x_min: f64,
    pub x_max: f64,
    pub n_x: usize,
    pub t_min: f64,
    pub t_max: f64,
    pub n_t: usize,
}

impl Default for LegendreParams {
    fn default() -> Self {
        Self {
            lambda: "log(cosh(t))".into(),
            x_min: -0.95,
            x_max: 0.95,
            n_x: 39,
            t_min: -10.0,
            t_max: 10.0,
            n_t: 2001,
        }
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

impl Experiment for Legendre {
    const NAME: &'static str = "legendre";
    const ABOUT: &'static str = "Numerical Legendre transform of a log-moment generating function";
    type Params = LegendreParams;

    fn validate(p: &Self::Params, _: Option<&ModelSpec>) -> Result<(), String> {
        Expr::parse(&p.lambda, "t").map_err(|e| format!("lambda '{}': {e}", p.lambda))?;
        ordered("x_min/x_max", p.x_min, p.x_max)?;
        ordered("t_min/t_max", p.t_min, p.t_max)?;
        at_least("n_x", p.n_x, 2)?;
        at_least("n_t", p.n_t, 2)
    }

    fn run(p: &Self::Params, _: Option<&ModelSpec>, ctx: &mut RunContext) -> anyhow::Result<()> {
        let lam = Expr::parse(&p.lambda, "t")?;
        let xs = linspace(p.x_min, p.x_max, p.n_x);
        let ts = linspace(p.t_min, p.t_max, p.n_t);
        let pair = legendre_transform(move |t| lam.eval(t), &xs, &ts)?;
        let rows = (0..xs.len()).map(|i| vec![xs[i], pair.lambda_star[i], pair.argmax[i]]);
        ctx.csv(
            "transform.csv",
            &["x", "lambda_star", "argmax"],
            rows.collect::<Vec<_>>(),
        )?;
        if !pair.is_convex(1e-9) {
            ctx.flag("transform is not convex on the grid");
        }
        let edge = pair.argmax.iter().any(|a| *a <= p.t_min || *a >= p.t_max);
        if edge {
            ctx.flag("supremum reached at the edge of the t grid; widen t_min/t_max");
        }
        Ok(())
    }
}
