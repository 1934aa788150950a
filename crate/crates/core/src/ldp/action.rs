use std::collections::VecDeque;
use std::io::Write;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::TimeGrid;
use crate::sde::SdeModel;

/// Discretised path `φ(t_k)` on a uniform time grid, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionPath {
    pub grid: TimeGrid,
    pub dim: usize,
    pub values: Vec<f64>,
    pub action: Option<f64>,
}

impl ActionPath {
    pub fn new(grid: TimeGrid, dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 || values.len() != grid.len() * dim {
            return Err(invalid("path length does not match the grid"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("path has non-finite entries"));
        }
        Ok(Self {
            grid,
            dim,
            values,
            action: None,
        })
    }

    pub fn from_fn(grid: TimeGrid, dim: usize, f: impl Fn(f64) -> Vec<f64>) -> Result<Self> {
        let values = grid.times().flat_map(f).collect();
        Self::new(grid, dim, values)
    }

    /// Straight line from `x0` to `y` in time `t`.
    pub fn straight_line(x0: &[f64], y: &[f64], t: f64, n_steps: usize) -> Result<Self> {
        if x0.len() != y.len() {
            return Err(invalid("endpoints differ in dimension"));
        }
        let grid = TimeGrid::horizon(t, n_steps)?;
        Self::from_fn(grid, x0.len(), |s| {
            x0.iter().zip(y).map(|(a, b)| a + (b - a) * s / t).collect()
        })
    }

    pub fn n_steps(&self) -> usize {
        self.grid.n_steps
    }

    pub fn state(&self, k: usize) -> &[f64] {
        &self.values[k * self.dim..(k + 1) * self.dim]
    }

    pub fn first(&self) -> &[f64] {
        self.state(0)
    }

    pub fn last(&self) -> &[f64] {
        self.state(self.grid.n_steps)
    }

    /// Pieces on `[t_0, t_k]` and `[t_k, t_N]` sharing node `k`.
    pub fn split_at(&self, k: usize) -> Result<(Self, Self)> {
        let n = self.grid.n_steps;
        if k == 0 || k >= n {
            return Err(invalid("split index must be an interior node"));
        }
        let tk = self.grid.time(k);
        let left = Self::new(
            TimeGrid::new(self.grid.t0, tk, k)?,
            self.dim,
            self.values[..(k + 1) * self.dim].to_vec(),
        )?;
        let right = Self::new(
            TimeGrid::new(tk, self.grid.t_end, n - k)?,
            self.dim,
            self.values[k * self.dim..].to_vec(),
        )?;
        Ok((left, right))
    }

    /// Linear interpolation onto a grid with `n_steps` steps over `[0, t]`,
    /// matching the two paths at equal fractions of their durations.
    pub fn resampled(&self, t: f64, n_steps: usize) -> Result<Self> {
        let grid = TimeGrid::horizon(t, n_steps)?;
        let n_old = self.grid.n_steps as f64;
        Self::from_fn(grid, self.dim, |s| {
            let pos = s / t * n_old;
            let k = (pos.floor() as usize).min(self.grid.n_steps.saturating_sub(1));
            let w = pos - k as f64;
            let (a, b) = (self.state(k), self.state((k + 1).min(self.grid.n_steps)));
            a.iter().zip(b).map(|(a, b)| a + w * (b - a)).collect()
        })
    }

    /// CSV with columns `t, x0, x1, ...`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string()];
        header.extend((0..self.dim).map(|j| format!("x{j}")));
        w.write_record(&header)?;
        for (k, t) in self.grid.times().enumerate() {
            let mut row = vec![t.to_string()];
            row.extend(self.state(k).iter().map(|v| v.to_string()));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Schilder rate `½ Σ ‖Δφ_k/h‖² h` of a path starting at the origin.
pub fn schilder_rate(path: &ActionPath) -> Result<f64> {
    if path.first().iter().any(|v| *v != 0.0) {
        return Err(invalid("Schilder paths start at the origin"));
    }
    let h = path.grid.step();
    Ok((0..path.n_steps())
        .map(|k| {
            let (a, b) = (path.state(k), path.state(k + 1));
            0.5 * a.iter().zip(b).map(|(a, b)| ((b - a) / h).powi(2)).sum::<f64>() * h
        })
        .sum())
}

/// `D(x)⁻¹`, row-major.
fn inverse_diffusion(model: &SdeModel, x: &[f64], node: usize) -> Result<Vec<f64>> {
    let n = model.dim;
    let d = model.diffusion_matrix(x);
    if n == 1 {
        return if d[0] > 1e-300 && d[0].is_finite() {
            Ok(vec![1.0 / d[0]])
        } else {
            Err(Error::SingularDiffusion(node))
        };
    }
    let m = DMatrix::from_row_slice(n, n, &d);
    let chol = m.cholesky().ok_or(Error::SingularDiffusion(node))?;
    let inv = chol.inverse();
    Ok((0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| inv[(i, j)])
        .collect())
}

fn quad(m: &[f64], u: &[f64], v: &[f64]) -> f64 {
    let n = u.len();
    (0..n)
        .map(|i| u[i] * (0..n).map(|j| m[i * n + j] * v[j]).sum::<f64>())
        .sum()
}

fn mat_vec(m: &[f64], v: &[f64]) -> Vec<f64> {
    let n = v.len();
    (0..n).map(|i| (0..n).map(|j| m[i * n + j] * v[j]).sum()).collect()
}

fn velocity_residual(model: &SdeModel, path: &ActionPath, k: usize, h: f64) -> Vec<f64> {
    let (a, b) = (path.state(k), path.state(k + 1));
    let f = model.drift(a);
    (0..path.dim).map(|i| (b[i] - a[i]) / h - f[i]).collect()
}

/// Freidlin–Wentzell action `½ Σ ⟨v_k, D(φ_k)⁻¹ v_k⟩ h` with
/// `v_k = Δφ_k/h − f(φ_k)`.
pub fn fw_rate(model: &SdeModel, path: &ActionPath) -> Result<f64> {
    if path.dim != model.dim {
        return Err(invalid("path and model dimensions differ"));
    }
    let h = path.grid.step();
    let mut total = 0.0;
    for k in 0..path.n_steps() {
        let v = velocity_residual(model, path, k, h);
        let dinv = inverse_diffusion(model, path.state(k), k)?;
        total += 0.5 * quad(&dinv, &v, &v) * h;
    }
    Ok(total)
}

/// Action and its gradient with respect to every node value. Drift and
/// diffusion derivatives are central differences.
pub fn fw_rate_gradient(model: &SdeModel, path: &ActionPath) -> Result<(f64, Vec<f64>)> {
    if path.dim != model.dim {
        return Err(invalid("path and model dimensions differ"));
    }
    let n = path.dim;
    let h = path.grid.step();
    let mut grad = vec![0.0; path.values.len()];
    let mut total = 0.0;
    let mut probe = vec![0.0; n];
    for k in 0..path.n_steps() {
        let x = path.state(k);
        let v = velocity_residual(model, path, k, h);
        let dinv = inverse_diffusion(model, x, k)?;
        let w = mat_vec(&dinv, &v);
        total += 0.5 * v.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() * h;
        for i in 0..n {
            grad[(k + 1) * n + i] += w[i];
            grad[k * n + i] -= w[i];
        }
        for j in 0..n {
            let s = 1e-6 * (1.0 + x[j].abs());
            probe.copy_from_slice(x);
            probe[j] = x[j] + s;
            let (fp, dp) = (model.drift(&probe), model.diffusion_matrix(&probe));
            probe[j] = x[j] - s;
            let (fm, dm) = (model.drift(&probe), model.diffusion_matrix(&probe));
            // Σ_i ∂_j f_i w_i
            let jf: f64 = (0..n).map(|i| (fp[i] - fm[i]) / (2.0 * s) * w[i]).sum();
            let dd: Vec<f64> = dp.iter().zip(&dm).map(|(a, b)| (a - b) / (2.0 * s)).collect();
            grad[k * n + j] -= h * (jf + 0.5 * quad(&dd, &w, &w));
        }
    }
    Ok((total, grad))
}

/// Initial path for [`minimize_action`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathInit {
    Line,
    /// Blend of the forward flow `φ̇ = f` from `x0` and the backward flow
    /// into `y`; falls back to the line if either leaves the reals.
    Ode,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinimizeOptions {
    /// Bound on `max|∂J/∂φ_k| / h`, the discrete Euler–Lagrange residual.
    pub tol: f64,
    pub max_iter: usize,
    /// L-BFGS memory.
    pub memory: usize,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self {
            tol: 1e-7,
            max_iter: 5000,
            memory: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionMinimum {
    /// Best iterate, with its action cached.
    pub path: ActionPath,
    pub converged: bool,
    pub iterations: usize,
    pub residual: f64,
    /// Action after each accepted iteration. Non-increasing up to the
    /// floating-point resolution of the action (64 ulp).
    pub history: Vec<f64>,
}

impl ActionMinimum {
    pub fn action(&self) -> f64 {
        self.path.action.unwrap_or(f64::NAN)
    }
}

fn rk4_flow(model: &SdeModel, x: &[f64], h: f64, sign: f64) -> Vec<f64> {
    let f = |y: &[f64]| -> Vec<f64> { model.drift(y).iter().map(|v| sign * v).collect() };
    let add = |a: &[f64], b: &[f64], c: f64| -> Vec<f64> { a.iter().zip(b).map(|(a, b)| a + c * b).collect() };
    let k1 = f(x);
    let k2 = f(&add(x, &k1, 0.5 * h));
    let k3 = f(&add(x, &k2, 0.5 * h));
    let k4 = f(&add(x, &k3, h));
    (0..x.len())
        .map(|i| x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect()
}

fn ode_init(model: &SdeModel, x0: &[f64], y: &[f64], t: f64, n_steps: usize) -> Result<ActionPath> {
    let h = t / n_steps as f64;
    let mut fwd = vec![x0.to_vec()];
    let mut bwd = vec![y.to_vec()];
    for _ in 0..n_steps {
        fwd.push(rk4_flow(model, fwd.last().unwrap(), h, 1.0));
        bwd.push(rk4_flow(model, bwd.last().unwrap(), h, -1.0));
    }
    bwd.reverse();
    let grid = TimeGrid::horizon(t, n_steps)?;
    let values: Vec<f64> = (0..=n_steps)
        .flat_map(|k| {
            let s = k as f64 / n_steps as f64;
            (0..x0.len())
                .map(|i| (1.0 - s) * fwd[k][i] + s * bwd[k][i])
                .collect::<Vec<_>>()
        })
        .collect();
    match ActionPath::new(grid, x0.len(), values) {
        Ok(p) => Ok(p),
        Err(_) => ActionPath::straight_line(x0, y, t, n_steps),
    }
}

/// Applies `K⁻¹ ⊗ D_ref` with `K = h⁻¹ tridiag(−1, 2, −1)`, the Hessian of
/// the drift-free action on interior nodes.
struct Preconditioner {
    h: f64,
    m: usize,
    dim: usize,
    d_ref: Vec<f64>,
}

impl Preconditioner {
    fn apply(&self, g: &[f64]) -> Vec<f64> {
        let (m, n) = (self.m, self.dim);
        let mut out = vec![0.0; g.len()];
        let mut rhs = vec![0.0; m];
        let mut c = vec![0.0; m];
        for j in 0..n {
            for k in 0..m {
                rhs[k] = g[k * n + j] * self.h;
            }
            // Thomas for tridiag(−1, 2, −1)
            c[0] = -0.5;
            rhs[0] /= 2.0;
            for k in 1..m {
                let den = 2.0 + c[k - 1];
                c[k] = -1.0 / den;
                rhs[k] = (rhs[k] + rhs[k - 1]) / den;
            }
            for k in (0..m.saturating_sub(1)).rev() {
                rhs[k] -= c[k] * rhs[k + 1];
            }
            for k in 0..m {
                out[k * n + j] = rhs[k];
            }
        }
        if n > 1 || self.d_ref[0] != 1.0 {
            for k in 0..m {
                let v = mat_vec(&self.d_ref, &out[k * n..(k + 1) * n]);
                out[k * n..(k + 1) * n].copy_from_slice(&v);
            }
        }
        out
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimises the discretised action over interior nodes with fixed
/// endpoints: preconditioned L-BFGS with Armijo backtracking.
pub fn minimize_action(
    model: &SdeModel,
    x0: &[f64],
    y: &[f64],
    t: f64,
    n_steps: usize,
    init: PathInit,
    opts: &MinimizeOptions,
) -> Result<ActionMinimum> {
    if x0.len() != model.dim || y.len() != model.dim {
        return Err(invalid("endpoints must match the model dimension"));
    }
    if !(t > 0.0) || n_steps < 2 {
        return Err(invalid("need T > 0 and at least two steps"));
    }
    let start = match init {
        PathInit::Line => ActionPath::straight_line(x0, y, t, n_steps)?,
        PathInit::Ode => ode_init(model, x0, y, t, n_steps)?,
    };
    minimize_from(model, start, opts)
}

/// [`minimize_action`] from a given initial path; its endpoints stay fixed.
pub fn minimize_from(model: &SdeModel, start: ActionPath, opts: &MinimizeOptions) -> Result<ActionMinimum> {
    let n = start.dim;
    let n_steps = start.n_steps();
    let h = start.grid.step();
    let interior = n..n_steps * n;
    let pre = Preconditioner {
        h,
        m: n_steps - 1,
        dim: n,
        d_ref: model.diffusion_matrix(start.first()),
    };
    let mut path = start;
    let (mut value, mut full_grad) = fw_rate_gradient(model, &path)?;
    let mut g = full_grad[interior.clone()].to_vec();
    let residual_of = |g: &[f64]| g.iter().map(|v| v.abs()).fold(0.0, f64::max) / h;
    let mut residual = residual_of(&g);
    let mut memory: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut history = vec![value];
    let mut iterations = 0;
    while residual > opts.tol && iterations < opts.max_iter {
        iterations += 1;
        // two-loop recursion
        let mut q = g.clone();
        let mut alphas = Vec::with_capacity(memory.len());
        for (s, yv, rho) in memory.iter().rev() {
            let a = rho * dot(s, &q);
            q.iter_mut().zip(yv).for_each(|(qi, yi)| *qi -= a * yi);
            alphas.push(a);
        }
        let mut r = pre.apply(&q);
        if let Some((s, yv, _)) = memory.back() {
            let hy = pre.apply(yv);
            let scale = dot(s, yv) / dot(yv, &hy);
            r.iter_mut().for_each(|v| *v *= scale);
        }
        for ((s, yv, rho), a) in memory.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(yv, &r);
            r.iter_mut().zip(s).for_each(|(ri, si)| *ri += (a - b) * si);
        }
        let mut dir: Vec<f64> = r.iter().map(|v| -v).collect();
        let mut slope = dot(&g, &dir);
        if !(slope < 0.0) {
            memory.clear();
            dir = pre.apply(&g).iter().map(|v| -v).collect();
            slope = dot(&g, &dir);
        }
        // Armijo backtracking
        let mut step = 1.0;
        let mut accepted = None;
        while step > 1e-16 {
            let mut trial = path.clone();
            for (v, d) in trial.values[interior.clone()].iter_mut().zip(&dir) {
                *v += step * d;
            }
            if trial.values.iter().all(|v| v.is_finite()) {
                if let Ok((tv, tg)) = fw_rate_gradient(model, &trial) {
                    // Below the resolution of J the decrease is measured by
                    // the trapezoid rule on directional derivatives, which is
                    // exact for quadratics; J may then rise by round-off.
                    let floor = 64.0 * f64::EPSILON * value.abs();
                    let decrease = if (tv - value).abs() > floor {
                        tv - value
                    } else {
                        let end_slope = dot(&tg[interior.clone()], &dir);
                        0.5 * step * (slope + end_slope)
                    };
                    if decrease <= 1e-4 * step * slope && tv <= value + floor {
                        accepted = Some((trial, tv, tg));
                        break;
                    }
                }
            }
            step *= 0.5;
        }
        let Some((trial, tv, tg)) = accepted else {
            break;
        };
        let new_g = tg[interior.clone()].to_vec();
        let s: Vec<f64> = dir.iter().map(|d| step * d).collect();
        let yv: Vec<f64> = new_g.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &yv);
        if sy > 1e-300 {
            memory.push_back((s, yv, 1.0 / sy));
            if memory.len() > opts.memory {
                memory.pop_front();
            }
        }
        path = trial;
        value = tv;
        full_grad = tg;
        g = new_g;
        residual = residual_of(&g);
        history.push(value);
    }
    let _ = full_grad;
    path.action = Some(value);
    Ok(ActionMinimum {
        path,
        converged: residual <= opts.tol,
        iterations,
        residual,
        history,
    })
}

/// Result of minimising the action over a list of horizons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuasipotentialResult {
    pub value: f64,
    pub minimizing_t: f64,
    pub path: ActionPath,
    pub converged: bool,
    /// `(T, minimal action)` in increasing `T`.
    pub actions: Vec<(f64, f64)>,
    /// Running minimum of the actions.
    pub envelope: Vec<f64>,
    /// Another horizon reached the same action within `1e-6 (1 + value)`
    /// along a geometrically different path. The first minimiser is kept.
    pub tie_flag: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuasipotentialOptions {
    /// Target path time step; each horizon uses `ceil(T/dt)` steps.
    pub dt: f64,
    pub minimize: MinimizeOptions,
}

impl Default for QuasipotentialOptions {
    fn default() -> Self {
        Self {
            dt: 0.01,
            minimize: MinimizeOptions::default(),
        }
    }
}

/// `inf_T` of the minimal action from the equilibrium `x_star` to `y`, over
/// the horizons in `t_list`. Each horizon is warm-started from the previous
/// minimiser.
pub fn quasipotential(
    model: &SdeModel,
    x_star: &[f64],
    y: &[f64],
    t_list: &[f64],
    opts: &QuasipotentialOptions,
) -> Result<QuasipotentialResult> {
    if t_list.is_empty() || t_list.iter().any(|t| !(*t > 0.0)) {
        return Err(invalid("T_list must hold positive horizons"));
    }
    let f = model.drift(x_star);
    if f.iter().map(|v| v * v).sum::<f64>().sqrt() > 1e-8 {
        return Err(invalid("x_star is not an equilibrium of the drift"));
    }
    let mut ts = t_list.to_vec();
    ts.sort_by(f64::total_cmp);
    if x_star == y {
        let mut path = ActionPath::straight_line(x_star, y, ts[0], 2)?;
        path.action = Some(0.0);
        return Ok(QuasipotentialResult {
            value: 0.0,
            minimizing_t: ts[0],
            path,
            converged: true,
            actions: ts.iter().map(|&t| (t, 0.0)).collect(),
            envelope: vec![0.0; ts.len()],
            tie_flag: false,
        });
    }
    let mut actions = Vec::new();
    let mut envelope = Vec::new();
    let mut best: Option<ActionMinimum> = None;
    let mut best_t = ts[0];
    let mut converged = true;
    let mut previous: Option<ActionPath> = None;
    let mut paths = Vec::with_capacity(ts.len());
    for &t in &ts {
        let n_steps = ((t / opts.dt).ceil() as usize).max(10);
        let start = match &previous {
            Some(p) => p.resampled(t, n_steps)?,
            None => ActionPath::straight_line(x_star, y, t, n_steps)?,
        };
        let m = minimize_from(model, start, &opts.minimize)?;
        converged &= m.converged;
        let a = m.action();
        actions.push((t, a));
        let run_min = envelope.last().map_or(a, |e: &f64| e.min(a));
        envelope.push(run_min);
        previous = Some(m.path.clone());
        paths.push(m.path.clone());
        if best.as_ref().is_none_or(|b| a < b.action()) {
            best_t = t;
            best = Some(m);
        }
    }
    let best = best.expect("t_list is non-empty");
    let value = best.action();
    let tie_flag = actions
        .iter()
        .zip(&paths)
        .any(|(&(_, a), p)| (a - value).abs() < 1e-6 * (1.0 + value) && hausdorff(p, &best.path) > 0.1);
    Ok(QuasipotentialResult {
        value,
        minimizing_t: best_t,
        path: best.path,
        converged,
        actions,
        envelope,
        tie_flag,
    })
}

/// Hausdorff distance between the node sets of two paths.
fn hausdorff(a: &ActionPath, b: &ActionPath) -> f64 {
    let one_sided = |p: &ActionPath, q: &ActionPath| {
        (0..p.grid.len())
            .map(|i| {
                (0..q.grid.len())
                    .map(|j| {
                        let (x, y) = (p.state(i), q.state(j));
                        x.iter().zip(y).map(|(u, v)| (u - v) * (u - v)).sum::<f64>()
                    })
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
            .sqrt()
    };
    one_sided(a, b).max(one_sided(b, a))
}

/// Number of boundary samples before refinement.
pub const BOUNDARY_SAMPLES: usize = 64;

/// Minimum of the quasipotential over a boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryQuasipotential {
    pub value: f64,
    /// Boundary parameter in `[0, 1)` and point of the minimum.
    pub parameter: f64,
    pub point: Vec<f64>,
    /// `(parameter, value)` at the coarse samples.
    pub samples: Vec<(f64, f64)>,
    pub converged: bool,
}

/// `min_{y ∈ ∂D} V(x*, y)` for a boundary parametrised by `boundary` on
/// `[0, 1)`. The boundary is sampled at [`BOUNDARY_SAMPLES`] points and the
/// best sample refined by golden-section search over its neighbouring cell.
pub fn boundary_quasipotential(
    model: &SdeModel,
    x_star: &[f64],
    boundary: impl Fn(f64) -> Vec<f64>,
    t_list: &[f64],
    opts: &QuasipotentialOptions,
    refine_iters: usize,
) -> Result<BoundaryQuasipotential> {
    let mut converged = true;
    let mut eval = |s: f64| -> Result<f64> {
        let r = quasipotential(model, x_star, &boundary(s.rem_euclid(1.0)), t_list, opts)?;
        converged &= r.converged;
        Ok(r.value)
    };
    let n = BOUNDARY_SAMPLES as f64;
    let mut samples = Vec::with_capacity(BOUNDARY_SAMPLES);
    for i in 0..BOUNDARY_SAMPLES {
        let s = i as f64 / n;
        samples.push((s, eval(s)?));
    }
    let (mut best_s, mut best_v) = samples
        .iter()
        .copied()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("non-empty sample set");
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let (mut lo, mut hi) = (best_s - 1.0 / n, best_s + 1.0 / n);
    let mut c = hi - phi * (hi - lo);
    let mut d = lo + phi * (hi - lo);
    let (mut fc, mut fd) = (eval(c)?, eval(d)?);
    for _ in 0..refine_iters {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - phi * (hi - lo);
            fc = eval(c)?;
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + phi * (hi - lo);
            fd = eval(d)?;
        }
    }
    for (s, v) in [(c, fc), (d, fd)] {
        if v < best_v {
            best_s = s.rem_euclid(1.0);
            best_v = v;
        }
    }
    Ok(BoundaryQuasipotential {
        value: best_v,
        parameter: best_s,
        point: boundary(best_s),
        samples,
        converged,
    })
}
