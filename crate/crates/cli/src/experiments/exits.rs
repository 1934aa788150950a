use serde::{Deserialize, Serialize};
use stochlab::exit::*;
use stochlab::{Estimate, SdeModel, TimeGrid};

use super::{at_least, ordered, positive, Experiment};
use crate::model::ModelSpec;
use crate::output::RunContext;

fn histogram_rows(h: &[u64]) -> impl Iterator<Item = Vec<f64>> + '_ {
    let n = h.len() as f64;
    h.iter()
        .enumerate()
        .map(move |(i, c)| vec![i as f64 / n, (i + 1) as f64 / n, *c as f64])
}

pub struct ExitBall;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExitBallParams {
    pub dim: usize,
    pub radius: f64,
    /// Starting point; the centre when empty.
    pub x0: Vec<f64>,
    pub h: f64,
    pub n_paths: usize,
    pub t_max: f64,
}

impl Default for ExitBallParams {
    fn default() -> Self {
        Self {
            dim: 2,
            radius: 1.0,
            x0: Vec::new(),
            h: 1e-3,
            n_paths: 10_000,
            t_max: 50.0,
        }
    }
}

impl Experiment for ExitBall {
    const NAME: &'static str = "exit_ball";
    const ABOUT: &'static str = "Mean exit time of Brownian motion from a ball";
    const CRITERION: Option<u8> = Some(1);
    type Params = ExitBallParams;

    fn validate(p: &Self::Params, _: Option<&ModelSpec>) -> Result<(), String> {
        at_least("dim", p.dim, 1)?;
        positive("radius", p.radius)?;
        positive("h", p.h)?;
        positive("t_max", p.t_max)?;
        at_least("n_paths", p.n_paths, 1)?;
        if !p.x0.is_empty() && p.x0.len() != p.dim {
            return Err(format!("x0 has {} components, dim is {}", p.x0.len(), p.dim));
        }
        if p.x0.iter().map(|v| v * v).sum::<f64>().sqrt() >= p.radius {
            return Err("x0 must lie inside the ball".into());
        }
        Ok(())
    }

    fn run(p: &Self::Params, _: Option<&ModelSpec>, ctx: &mut RunContext) -> anyhow::Result<()> {
        let x0 = if p.x0.is_empty() {
            vec![0.0; p.dim]
        } else {
            p.x0.clone()
        };
        let domain = Domain::ball(p.radius, vec![0.0; p.dim])?;
        let opts = ExitOptions::new(StepControl::Fixed(p.h), p.n_paths, p.t_max);
        let run = mc_exit_samples(&SdeModel::brownian(p.dim), &x0, &domain, &opts, ctx.stream(1))?;
        let s = &run.statistics;
        let exact = ball_exit_expectation(p.radius, &x0)?;
        ctx.json(
            "summary.json",
            &serde_json::json!({
                "mean_time": s.mean_time,
                "std_error": s.time_std_error,
                "exact": exact,
                "n_paths": s.n_paths,
                "n_exited": s.n_exited,
                "fraction_censored": s.fraction_censored,
            }),
        )?;
        ctx.csv(
            "exit_angle_histogram.csv",
            &["lo", "hi", "count"],
            histogram_rows(&s.exit_location_histogram),
        )?;
        let mut buf = Vec::new();
        run.write_csv(&mut buf)?;
        ctx.bytes("exits.csv", buf);
        if s.fraction_censored > 0.0 {
            ctx.flag(format!("{} of paths censored at t_max", s.fraction_censored));
        }
        Ok(())
    }
}

pub struct Recurrence;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecurrenceParams {
    pub dim: usize,
    pub start_radius: f64,
    pub inner: f64,
    pub outer: f64,
    pub n_paths: usize,
    pub h_min: f64,
    pub h_max: f64,
    pub t_max: f64,
}

impl Default for RecurrenceParams {
    fn default() -> Self {
        Self {
            dim: 3,
            start_radius: 2.0,
            inner: 1.0,
            outer: 64.0,
            n_paths: 4000,
            h_min: 1e-7,
            h_max: 50.0,
            t_max: 1e7,
        }
    }
}

impl Experiment for Recurrence {
    const NAME: &'static str = "recurrence";
    const ABOUT: &'static str = "Probability that Brownian motion hits an inner ball before an outer shell";
    const CRITERION: Option<u8> = Some(2);
    type Params = RecurrenceParams;

    fn validate(p: &Self::Params, _: Option<&ModelSpec>) -> Result<(), String> {
        at_least("dim", p.dim, 1)?;
        ordered("inner/outer", p.inner, p.outer)?;
        positive("inner", p.inner)?;
        if !(p.inner < p.start_radius && p.start_radius < p.outer) {
            return Err("start_radius must lie strictly between inner and outer".into());
        }
        ordered("h_min/h_max", p.h_min, p.h_max)?;
        positive("h_min", p.h_min)?;
        positive("t_max", p.t_max)?;
        at_least("n_paths", p.n_paths, 1)
    }

    fn run(p: &Self::Params, _: Option<&ModelSpec>, ctx: &mut RunContext) -> anyhow::Result<()> {
        let domain = Domain::shell(p.inner, p.outer, vec![0.0; p.dim])?;
        let mut x0 = vec![0.0; p.dim];
        x0[0] = p.start_radius;
        let opts = ExitOptions::new(StepControl::adaptive(p.h_min, p.h_max), p.n_paths, p.t_max);
        let run = mc_exit_samples(&SdeModel::brownian(p.dim), &x0, &domain, &opts, ctx.stream(2))?;
        let mid = 0.5 * (p.inner + p.outer);
        let hits: Vec<f64> = run
            .samples
            .iter()
            .map(|s| {
                let r = s.location.iter().map(|v| v * v).sum::<f64>().sqrt();
                f64::from(u8::from(s.exit_time.is_some() && r < mid))
            })
            .collect();
        let est = Estimate::from_samples(&hits);
        let limit = if p.dim <= 2 {
            1.0
        } else {
            (p.inner / p.start_radius).powi(p.dim as i32 - 2)
        };
        ctx.json(
            "summary.json",
            &serde_json::json!({
                "p_hit_inner": est.value,
                "std_error": est.std_error,
                "finite_shell_exact": shell_hitting_probability(p.inner, p.outer, p.start_radius, p.dim)?,
                "infinite_shell_limit": limit,
                "fraction_censored": run.statistics.fraction_censored,
            }),
        )?;
        if run.statistics.fraction_censored > 0.0 {
            ctx.flag("some paths were censored at t_max");
        }
        Ok(())
    }
}

pub struct FeynmanKac;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeynmanKacParams {
    /// Half-width of the interval `(−a, a)`.
    pub a: f64,
    pub x0: f64,
    /// Start for the conditional-mean identities.
    pub x_cond: f64,
    pub lambdas: Vec<f64>,
    pub n_paths: usize,
    pub h_min: f64,
    pub h_max: f64,
    pub t_max: f64,
}

impl Default for FeynmanKacParams {
    fn default() -> Self {
        Self {
            a: 1.0,
            x0: 0.0,
            x_cond: 0.3,
            lambdas: vec![0.5, 1.0, 2.0],
            n_paths: 10_000,
            h_min: 1e-8,
            h_max: 1e-2,
            t_max: 100.0,
        }
    }
}

impl Experiment for FeynmanKac {
    const NAME: &'static str = "feynman_kac";
    const ABOUT: &'static str = "Laplace transform and conditional means of exit times from an interval";
    const CRITERION: Option<u8> = Some(3);
    type Params = FeynmanKacParams;

    fn validate(p: &Self::Params, _: Option<&ModelSpec>) -> Result<(), String> {
        positive("a", p.a)?;
        if p.x0.abs() >= p.a || p.x_cond.abs() >= p.a {
            return Err("x0 and x_cond must lie inside (−a, a)".into());
        }
        if p.lambdas.iter().any(|l| !(*l >= 0.0)) {
            return Err("lambdas must be non-negative".into());
        }
        ordered("h_min/h_max", p.h_min, p.h_max)?;
        positive("h_min", p.h_min)?;
        positive("t_max", p.t_max)?;
        at_least("n_paths", p.n_paths, 2)
    }

    fn run(p: &Self::Params, _: Option<&ModelSpec>, ctx: &mut RunContext) -> anyhow::Result<()> {
        let model = SdeModel::brownian(1);
        let domain = Domain::interval(-p.a, p.a)?;
        let opts =
            ExitOptions::new(StepControl::adaptive(p.h_min, p.h_max), p.n_paths, p.t_max).with_lambdas(&p.lambdas);
        let s = mc_exit(&model, &[p.x0], &domain, &opts, ctx.stream(3))?;
        let mut rows = Vec::new();
        for l in &s.laplace {
            rows.push(vec![
                l.lambda,
                l.value,
                l.std_error,
                fk_laplace_interval(l.lambda, p.a, p.x0)?,
            ]);
        }
        ctx.csv("laplace.csv", &["lambda", "estimate", "stderr", "exact"], rows)?;
        let run = mc_exit_samples(&model, &[p.x_cond], &domain, &opts, ctx.stream(4))?;
        let joint = run.functional(|t, loc| if loc[0] > 0.0 { t } else { 0.0 });
        let upper: Vec<f64> = run
            .samples
            .iter()
            .filter_map(|s| s.exit_time.filter(|_| s.location[0] > 0.0))
            .collect();
        let cond = Estimate::from_samples(&upper);
        ctx.json(
            "conditional.json",
            &serde_json::json!({
                "x": p.x_cond,
                "joint_mean": {"estimate": joint.value, "stderr": joint.std_error, "exact": fk_joint_mean(p.a, p.x_cond)?},
                "conditional_mean": {"estimate": cond.value, "stderr": cond.std_error, "exact": fk_conditional_mean(p.a, p.x_cond)?},
                "p_upper": {"estimate": upper.len() as f64 / p.n_paths as f64, "exact": fk_laplace_one_sided(0.0, p.a, p.x_cond)?},
            }),
        )?;
        Ok(())
    }
}

pub struct Arcsine;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArcsineParams {
    pub n_paths: usize,
    pub n_steps: usize,
    pub cdf_points: usize,
}

impl Default for ArcsineParams {
    fn default() -> Self {
        Self {
            n_paths: 10_000,
            n_steps: 1000,
            cdf_points: 101,
        }
    }
}

impl Experiment for Arcsine {
    const NAME: &'static str = "arcsine";
    const ABOUT: &'static str = "Occupation time of the positive half-line against the arcsine law";
    const CRITERION: Option<u8> = Some(4);
    type Params = ArcsineParams;

    fn validate(p: &Self::Params, _: Option<&ModelSpec>) -> Result<(), String> {
        at_least("n_paths", p.n_paths, 1)?;
        at_least("n_steps", p.n_steps, 1)?;
        at_least("cdf_points", p.cdf_points, 2)
    }

    fn run(p: &Self::Params, _: Option<&ModelSpec>, ctx: &mut RunContext) -> anyhow::Result<()> {
        let occ = arcsine_occupation(p.n_paths, TimeGrid::horizon(1.0, p.n_steps)?, ctx.stream(5))?;
        let at: Vec<f64> = (0..p.cdf_points)
            .map(|i| i as f64 / (p.cdf_points - 1) as f64)
            .collect();
        let emp = occ.cdf(&at);
        ctx.csv(
            "cdf.csv",
            &["u", "empirical", "exact"],
            at.iter().zip(&emp).map(|(u, e)| vec![*u, *e, arcsine_cdf(*u)]),
        )?;
        ctx.json(
            "summary.json",
            &serde_json::json!({ "ks_statistic": occ.ks_statistic(), "n_paths": p.n_paths }),
        )?;
        Ok(())
    }
}
