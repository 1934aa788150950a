use serde::{Deserialize, Serialize};
use stochlab::ito::{ito_integral, stratonovich_integral};
use stochlab::kolmogorov::{delta_like, solve_fokker_planck, BoundaryCondition, SolverOptions};
use stochlab::wiener::{refine_wiener_midpoint, sample_wiener};
use stochlab::{Estimate, Grid1D, TimeGrid};

use super::{at_least, build, ordered, positive, require_scalar, Experiment};
use crate::model::ModelSpec;
use crate::output::RunContext;

pub struct Ito;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ItoParams {
    pub n_paths: usize,
    pub base_steps: usize,
    pub levels: u32,
}

impl Default for ItoParams {
    fn default() -> Self {
        Self {
            n_paths: 2000,
            base_steps: 64,
            levels: 3,
        }
    }
}

impl Experiment for Ito {
    const NAME: &'static str = "ito";
    const ABOUT: &'static str = "Ito and Stratonovich sums of W dW under dyadic refinement";
    const CRITERION: Option<u8> = Some(5);
    type Params = ItoParams;

    fn validate(p: &Self::Params, _: Option<&ModelSpec>) -> Result<(), String> {
        at_least("n_paths", p.n_paths, 2)?;
        at_least("base_steps", p.base_steps, 1)?;
        if p.levels > 12 {
            return Err("levels must be at most 12".into());
        }
        Ok(())
    }

    fn run(p: &Self::Params, _: Option<&ModelSpec>, ctx: &mut RunContext) -> anyhow::Result<()> {
        let n_levels = p.levels as usize + 1;
        let mut ito_sq = vec![0.0; n_levels];
        let mut strat_sq = vec![0.0; n_levels];
        let mut iso = Vec::with_capacity(p.n_paths);
        for i in 0..p.n_paths {
            let base = ctx.stream(6).substream(i as u64);
            let coarse = sample_wiener(TimeGrid::horizon(1.0, p.base_steps)?, 1, base)?;
            for lvl in 0..n_levels {
                let w = refine_wiener_midpoint(&coarse, lvl as u32, base.substream(1))?;
                let vals = w.component(0);
                let wt = *vals.last().expect("non-empty path");
                let ito = ito_integral(|k| vals[k], &w)?;
                let strat = stratonovich_integral(|k| vals[k], &w)?;
                ito_sq[lvl] += (ito - (0.5 * wt * wt - 0.5)).powi(2);
                strat_sq[lvl] += (strat - 0.5 * wt * wt).powi(2);
                if lvl + 1 == n_levels {
                    iso.push(ito * ito);
                }
            }
        }
        let n = p.n_paths as f64;
        let rows = (0..n_levels).map(|l| {
            vec![
                (p.base_steps << l) as f64,
                (ito_sq[l] / n).sqrt(),
                (strat_sq[l] / n).sqrt(),
            ]
        });
        ctx.csv(
            "refinement.csv",
            &["n_steps", "ito_rms_error", "stratonovich_rms_error"],
            rows,
        )?;
        let e = Estimate::from_samples(&iso);
        ctx.json(
            "isometry.json",
            &serde_json::json!({ "mean_square": e.value, "stderr": e.std_error, "exact": 0.5 }),
        )?;
        Ok(())
    }
}

pub struct FokkerPlanck;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FokkerPlanckParams {
    pub x_min: f64,
    pub x_max: f64,
    pub n_nodes: usize,
    pub dt: f64,
    pub t_end: f64,
    /// Initial mass at this point; uniform on the grid when absent.
    pub x0: Option<f64>,
    /// Number of snapshot times written besides the initial state.
    pub snapshots: usize,
}

impl Default for FokkerPlanckParams {
    fn default() -> Self {
        Self {
            x_min: -8.0,
            x_max: 8.0,
            n_nodes: 1601,
            dt: 1e-2,
            t_end: 20.0,
            x0: None,
            snapshots: 10,
        }
    }
}

/// Stationary density for presets that have one in closed form.
fn reference_density(model: &ModelSpec, grid: &Grid1D) -> Result<Option<Vec<f64>>, String> {
    let log_rho: Vec<f64> = match model {
        ModelSpec::Gradient { noise, .. } => {
            let pot = model.potential()?.expect("gradient preset");
            let s2 = noise.map_or(2.0, |s| s * s);
            grid.nodes().iter().map(|&x| -2.0 * pot.eval(&[x]) / s2).collect()
        }
        ModelSpec::Ou { theta, sigma } if *theta > 0.0 => {
            grid.nodes().iter().map(|x| -theta * x * x / (sigma * sigma)).collect()
        }
        _ => return Ok(None),
    };
    let top = log_rho.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let rho: Vec<f64> = log_rho.iter().map(|l| (l - top).exp()).collect();
    let z = grid.integrate(&rho);
    if !(z.is_finite() && z > 0.0) {
        return Err("stationary density is not normalisable on the grid".into());
    }
    Ok(Some(rho.into_iter().map(|r| r / z).collect()))
}

impl Experiment for FokkerPlanck {
    const NAME: &'static str = "fokker_planck";
    const ABOUT: &'static str = "Fokker-Planck evolution towards the stationary density";
    const CRITERION: Option<u8> = Some(6);
    type Params = FokkerPlanckParams;

    fn default_model() -> Option<ModelSpec> {
        Some(ModelSpec::gradient("x^2/2", None))
    }

    fn validate(p: &Self::Params, model: Option<&ModelSpec>) -> Result<(), String> {
        require_scalar(model)?;
        ordered("x_min/x_max", p.x_min, p.x_max)?;
        at_least("n_nodes", p.n_nodes, 3)?;
        positive("dt", p.dt)?;
        positive("t_end", p.t_end)?;
        at_least("snapshots", p.snapshots, 1)?;
        if let Some(x0) = p.x0 {
            if !(p.x_min < x0 && x0 < p.x_max) {
                return Err("x0 must lie inside the grid".into());
            }
        }
        Ok(())
    }

    fn run(p: &Self::Params, model: Option<&ModelSpec>, ctx: &mut RunContext) -> anyhow::Result<()> {
        let spec = model.expect("default model");
        let sde = build(model)?;
        let grid = Grid1D::with_nodes(p.x_min, p.x_max, p.n_nodes)?;
        let rho0 = match p.x0 {
            Some(x0) => delta_like(&grid, x0),
            None => vec![1.0 / (p.x_max - p.x_min); p.n_nodes],
        };
        let n_steps = (p.t_end / p.dt).round().max(1.0) as usize;
        let stride = (n_steps / p.snapshots).max(1);
        let opts = SolverOptions::implicit(p.dt).with_stride(stride);
        let sol = solve_fokker_planck(&sde, &rho0, p.t_end, grid, BoundaryCondition::NeumannZero, opts)?;
        let reference = reference_density(spec, &grid).map_err(anyhow::Error::msg)?;
        let xs = grid.nodes();
        let mut rows = Vec::new();
        for snap in &sol.snapshots {
            for (x, r) in xs.iter().zip(&snap.values) {
                rows.push(vec![snap.time, *x, *r]);
            }
        }
        ctx.csv("snapshots.csv", &["t", "x", "rho"], rows)?;
        if let Some(rho) = &reference {
            ctx.csv(
                "stationary.csv",
                &["x", "rho"],
                xs.iter().zip(rho).map(|(x, r)| vec![*x, *r]),
            )?;
        }
        let stats = sol.snapshots.iter().map(|s| {
            let l1 = reference.as_ref().map_or(f64::NAN, |r| s.l1_distance(r));
            vec![s.time, s.mass(), s.mean(), s.variance(), l1]
        });
        ctx.csv(
            "moments.csv",
            &["t", "mass", "mean", "variance", "l1_to_stationary"],
            stats,
        )?;
        if !sol.positivity_ok {
            ctx.flag(format!("density went negative (min {:.3e})", sol.min_value));
        }
        Ok(())
    }
}

pub struct Wiener;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WienerParams {
    pub t_end: f64,
    pub base_steps: usize,
    pub levels: u32,
}

impl Default for WienerParams {
    fn default() -> Self {
        Self {
            t_end: 1.0,
            base_steps: 8,
            levels: 6,
        }
    }
}

impl Experiment for Wiener {
    const NAME: &'static str = "wiener";
    const ABOUT: &'static str = "A Brownian path refined level by level at dyadic midpoints";
    type Params = WienerParams;

    fn validate(p: &Self::Params, _: Option<&ModelSpec>) -> Result<(), String> {
        positive("t_end", p.t_end)?;
        at_least("base_steps", p.base_steps, 1)?;
        if p.levels > 16 {
            return Err("levels must be at most 16".into());
        }
        Ok(())
    }

    fn run(p: &Self::Params, _: Option<&ModelSpec>, ctx: &mut RunContext) -> anyhow::Result<()> {
        let base = sample_wiener(TimeGrid::horizon(p.t_end, p.base_steps)?, 1, ctx.stream(20))?;
        let mut rows = Vec::new();
        let mut current = base;
        for level in 0..=p.levels {
            if level > 0 {
                current = refine_wiener_midpoint(&current, 1, ctx.stream(21).substream(u64::from(level)))?;
            }
            for (t, w) in current.grid.times().zip(current.component(0)) {
                rows.push(vec![f64::from(level), t, w]);
            }
        }
        ctx.csv("path.csv", &["level", "t", "w"], rows)?;
        Ok(())
    }
}
