//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Three operations on the double well `U(x) = x⁴/4 − x²/2 + a·x`:
//! dyadic refinement of a Brownian path, Fokker–Planck evolution of a
//! density, and minimum-action paths out of the left well.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use stochlab::kolmogorov::{delta_like, solve_fokker_planck, BoundaryCondition, SolverOptions};
use stochlab::ldp::{minimize_action, MinimizeOptions, PathInit};
use stochlab::wiener::{refine_wiener_midpoint, sample_wiener, WienerPath};
use stochlab::{GaussianStream, Grid1D, Potential, SdeModel, TimeGrid};
use wasm_bindgen::prelude::*;

const MAX_LEVEL: u32 = 14;

fn js_err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

fn tilted_well(tilt: f64) -> Potential {
    Potential::scalar(
        move |x| 0.25 * x.powi(4) - 0.5 * x * x + tilt * x,
        move |x| x.powi(3) - x + tilt,
    )
}

/// Local minimum of the tilted well reached by Newton's method from `start`.
fn well_bottom(tilt: f64, start: f64) -> f64 {
    let mut x = start;
    for _ in 0..50 {
        let step = (x.powi(3) - x + tilt) / (3.0 * x * x - 1.0);
        x -= step;
        if step.abs() < 1e-14 {
            break;
        }
    }
    x
}

/// A Brownian path on `[0, 1]` refined one dyadic level at a time.
#[wasm_bindgen]
pub struct WienerDemo {
    path: WienerPath,
    stream: GaussianStream,
    level: u32,
}

#[wasm_bindgen]
impl WienerDemo {
    #[wasm_bindgen(constructor)]
    pub fn new(seed: u64, base_steps: usize) -> Result<WienerDemo, JsError> {
        let stream = GaussianStream::new(seed, 0);
        let grid = TimeGrid::horizon(1.0, base_steps.max(1)).map_err(js_err)?;
        let path = sample_wiener(grid, 1, stream.substream(0)).map_err(js_err)?;
        Ok(Self { path, stream, level: 0 })
    }

    /// Halves the step; existing nodes keep their values. Returns false at
    /// the maximum level.
    pub fn refine(&mut self) -> Result<bool, JsError> {
        if self.level >= MAX_LEVEL {
            return Ok(false);
        }
        self.level += 1;
        let s = self.stream.substream(u64::from(self.level));
        self.path = refine_wiener_midpoint(&self.path, 1, s).map_err(js_err)?;
        Ok(true)
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn times(&self) -> Vec<f64> {
        self.path.grid.times().collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.path.component(0)
    }
}

/// Density of `dX = −U'(X) dt + σ dW` on `[−3, 3]` with reflecting ends.
#[wasm_bindgen]
pub struct FokkerPlanckDemo {
    model: SdeModel,
    grid: Grid1D,
    rho: Vec<f64>,
    stationary: Vec<f64>,
    time: f64,
}

#[wasm_bindgen]
impl FokkerPlanckDemo {
    #[wasm_bindgen(constructor)]
    pub fn new(tilt: f64, sigma: f64, x0: f64) -> Result<FokkerPlanckDemo, JsError> {
        if !(sigma > 0.0) {
            return Err(JsError::new("sigma must be positive"));
        }
        let grid = Grid1D::with_nodes(-3.0, 3.0, 301).map_err(js_err)?;
        let pot = tilted_well(tilt);
        let log_rho: Vec<f64> = grid
            .nodes()
            .iter()
            .map(|&x| -2.0 * pot.eval(&[x]) / (sigma * sigma))
            .collect();
        let top = log_rho.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut stationary: Vec<f64> = log_rho.iter().map(|l| (l - top).exp()).collect();
        let z = grid.integrate(&stationary);
        stationary.iter_mut().for_each(|r| *r /= z);
        Ok(Self {
            model: SdeModel::gradient_with_noise(pot, 1, sigma),
            grid,
            rho: delta_like(&grid, x0.clamp(-2.9, 2.9)),
            stationary,
            time: 0.0,
        })
    }

    /// Advances the density by `dt_total` with implicit steps of `dt`.
    pub fn advance(&mut self, dt_total: f64, dt: f64) -> Result<(), JsError> {
        let opts = SolverOptions::implicit(dt);
        let sol = solve_fokker_planck(
            &self.model,
            &self.rho,
            dt_total,
            self.grid,
            BoundaryCondition::NeumannZero,
            opts,
        )
        .map_err(js_err)?;
        self.rho = sol.final_field().values.clone();
        self.time += dt_total;
        Ok(())
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn x(&self) -> Vec<f64> {
        self.grid.nodes()
    }

    pub fn density(&self) -> Vec<f64> {
        self.rho.clone()
    }

    pub fn stationary(&self) -> Vec<f64> {
        self.stationary.clone()
    }

    /// L1 distance to the stationary density.
    pub fn l1_error(&self) -> f64 {
        let diff: Vec<f64> = self
            .rho
            .iter()
            .zip(&self.stationary)
            .map(|(a, b)| (a - b).abs())
            .collect();
        self.grid.integrate(&diff)
    }
}

/// Result of [`min_action_path`].
#[wasm_bindgen]
pub struct ActionPathResult {
    times: Vec<f64>,
    values: Vec<f64>,
    action: f64,
    barrier: f64,
    converged: bool,
}

#[wasm_bindgen]
impl ActionPathResult {
    pub fn times(&self) -> Vec<f64> {
        self.times.clone()
    }

    pub fn values(&self) -> Vec<f64> {
        self.values.clone()
    }

    pub fn action(&self) -> f64 {
        self.action
    }

    /// `2(U(y) − U(x*))`, the quasipotential for unit noise when `y` lies
    /// uphill from the left well bottom `x*` within its basin.
    pub fn barrier(&self) -> f64 {
        self.barrier
    }

    pub fn converged(&self) -> bool {
        self.converged
    }
}

/// Minimum-action path from the bottom of the left well to `y` over time
/// `horizon`, unit noise.
#[wasm_bindgen]
pub fn min_action_path(tilt: f64, y: f64, horizon: f64, n_steps: usize) -> Result<ActionPathResult, JsError> {
    let pot = tilted_well(tilt);
    let x_star = well_bottom(tilt, -1.0);
    let barrier = 2.0 * (pot.eval(&[y]) - pot.eval(&[x_star]));
    let model = SdeModel::gradient_with_noise(pot, 1, 1.0);
    let opts = MinimizeOptions {
        tol: 1e-6,
        ..Default::default()
    };
    let m = minimize_action(
        &model,
        &[x_star],
        &[y],
        horizon,
        n_steps.clamp(10, 4000),
        PathInit::Line,
        &opts,
    )
    .map_err(js_err)?;
    Ok(ActionPathResult {
        times: m.path.grid.times().collect(),
        values: m.path.values.clone(),
        action: m.action(),
        barrier,
        converged: m.converged,
    })
}
