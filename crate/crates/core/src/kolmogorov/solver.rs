//! Finite-difference time stepping for `∂ₜu = 𝓛u` and `∂ₜρ = 𝓛†ρ`.
//!
//! Space: central differences on a uniform grid. The Fokker–Planck operator is
//! written in flux form with half cells at the ends, so under zero-flux
//! boundaries the trapezoidal mass is conserved to rounding. Time: implicit
//! Euler (default, unconditionally stable) or explicit Euler with the
//! stability bound `dt <= Δx² / max D` checked before stepping.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::Grid1D;
use crate::sde::SdeModel;

use super::DensityField;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryCondition {
    /// Absorbing: the field vanishes at the end node.
    DirichletZero,
    /// Reflecting: zero normal derivative (backward) or zero flux (forward).
    NeumannZero,
    /// Backward: zero second derivative (linear extrapolation) at the end.
    /// Forward: zero flux, as for `NeumannZero`.
    Natural,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeScheme {
    Implicit,
    Explicit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub dt: f64,
    pub scheme: TimeScheme,
    /// Keep every `snapshot_stride`-th step (the initial and final states are
    /// always kept). Zero keeps only those two.
    pub snapshot_stride: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            scheme: TimeScheme::Implicit,
            snapshot_stride: 0,
        }
    }
}

impl SolverOptions {
    pub fn implicit(dt: f64) -> Self {
        Self { dt, ..Self::default() }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.snapshot_stride = stride;
        self
    }
}

/// Snapshots of a solution together with run diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PdeSolution {
    pub snapshots: Vec<DensityField>,
    /// Smallest value seen over all steps.
    pub min_value: f64,
    /// Non-negative initial data stayed non-negative (to `1e-12` relative).
    pub positivity_ok: bool,
}

impl PdeSolution {
    pub fn final_field(&self) -> &DensityField {
        self.snapshots.last().expect("solution always holds the initial state")
    }

    /// Snapshot whose time is closest to `t`.
    pub fn at(&self, t: f64) -> &DensityField {
        self.snapshots
            .iter()
            .min_by(|a, b| (a.time - t).abs().total_cmp(&(b.time - t).abs()))
            .expect("solution always holds the initial state")
    }
}

/// Tridiagonal matrix; row `i` is `lower[i] u[i-1] + diag[i] u[i] + upper[i] u[i+1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiagonal {
    fn zeros(n: usize) -> Self {
        Self {
            lower: vec![0.0; n],
            diag: vec![0.0; n],
            upper: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn apply(&self, u: &[f64], out: &mut [f64]) {
        let n = self.len();
        for i in 0..n {
            let mut v = self.diag[i] * u[i];
            if i > 0 {
                v += self.lower[i] * u[i - 1];
            }
            if i + 1 < n {
                v += self.upper[i] * u[i + 1];
            }
            out[i] = v;
        }
    }

    /// Solves `(I - dt A) x = rhs` in place (Thomas algorithm).
    pub fn solve_shifted(&self, dt: f64, rhs: &mut [f64], scratch: &mut Vec<f64>) {
        let n = self.len();
        scratch.clear();
        scratch.resize(n, 0.0);
        let a = |i: usize| -dt * self.lower[i];
        let b = |i: usize| 1.0 - dt * self.diag[i];
        let c = |i: usize| -dt * self.upper[i];
        let mut denom = b(0);
        scratch[0] = c(0) / denom;
        rhs[0] /= denom;
        for i in 1..n {
            denom = b(i) - a(i) * scratch[i - 1];
            scratch[i] = c(i) / denom;
            rhs[i] = (rhs[i] - a(i) * rhs[i - 1]) / denom;
        }
        for i in (0..n - 1).rev() {
            rhs[i] -= scratch[i] * rhs[i + 1];
        }
    }
}

/// Backward operator 𝓛 on the grid with boundary rows for `bc`.
pub(crate) fn backward_operator(model: &SdeModel, grid: &Grid1D, bc: BoundaryCondition) -> Tridiagonal {
    let n = grid.n_nodes();
    let dx = grid.dx();
    let mut op = Tridiagonal::zeros(n);
    for i in 1..n - 1 {
        let x = grid.x(i);
        let (f, d) = (model.f1(x), model.d1(x));
        op.lower[i] = d / (2.0 * dx * dx) - f / (2.0 * dx);
        op.diag[i] = -d / (dx * dx);
        op.upper[i] = d / (2.0 * dx * dx) + f / (2.0 * dx);
    }
    let last = n - 1;
    let (f0, d0) = (model.f1(grid.x(0)), model.d1(grid.x(0)));
    let (fn_, dn) = (model.f1(grid.x(last)), model.d1(grid.x(last)));
    match bc {
        BoundaryCondition::DirichletZero => {}
        BoundaryCondition::NeumannZero => {
            op.diag[0] = -d0 / (dx * dx);
            op.upper[0] = d0 / (dx * dx);
            op.diag[last] = -dn / (dx * dx);
            op.lower[last] = dn / (dx * dx);
        }
        BoundaryCondition::Natural => {
            op.diag[0] = -f0 / dx;
            op.upper[0] = f0 / dx;
            op.diag[last] = fn_ / dx;
            op.lower[last] = -fn_ / dx;
        }
    }
    op
}

/// Adjoint operator 𝓛† in conservative flux form.
pub(crate) fn forward_operator(model: &SdeModel, grid: &Grid1D, bc: BoundaryCondition) -> Tridiagonal {
    let n = grid.n_nodes();
    let dx = grid.dx();
    let f: Vec<f64> = (0..n).map(|i| model.f1(grid.x(i))).collect();
    let d: Vec<f64> = (0..n).map(|i| model.d1(grid.x(i))).collect();
    let mut op = Tridiagonal::zeros(n);
    for i in 1..n - 1 {
        op.lower[i] = d[i - 1] / (2.0 * dx * dx) + f[i - 1] / (2.0 * dx);
        op.diag[i] = -d[i] / (dx * dx);
        op.upper[i] = d[i + 1] / (2.0 * dx * dx) - f[i + 1] / (2.0 * dx);
    }
    let last = n - 1;
    match bc {
        BoundaryCondition::DirichletZero => {
            // interior rows must not pull mass from the pinned end nodes
            op.lower[1] = 0.0;
            op.upper[last - 1] = 0.0;
        }
        BoundaryCondition::NeumannZero | BoundaryCondition::Natural => {
            // half cells: (Δx/2) ρ₀' = -J_{1/2}, (Δx/2) ρ_N' = J_{N-1/2}
            op.diag[0] = -f[0] / dx - d[0] / (dx * dx);
            op.upper[0] = -f[1] / dx + d[1] / (dx * dx);
            op.lower[last] = f[last - 1] / dx + d[last - 1] / (dx * dx);
            op.diag[last] = f[last] / dx - d[last] / (dx * dx);
        }
    }
    op
}

fn evolve(
    op: &Tridiagonal,
    grid: Grid1D,
    init: &[f64],
    t_end: f64,
    bc: BoundaryCondition,
    opts: SolverOptions,
) -> Result<PdeSolution> {
    if init.len() != grid.n_nodes() {
        return Err(invalid("initial data length does not match the grid"));
    }
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(invalid("final time must be finite and non-negative"));
    }
    if !(opts.dt > 0.0) {
        return Err(invalid("time step must be positive"));
    }
    let n_steps = (t_end / opts.dt).ceil() as usize;
    let dt = if n_steps == 0 { 0.0 } else { t_end / n_steps as f64 };
    if opts.scheme == TimeScheme::Explicit {
        // |diag| bounds the local rate; the explicit step must not overshoot it
        let max_rate = op.diag.iter().map(|d| d.abs()).fold(0.0, f64::max);
        let limit = if max_rate > 0.0 { 1.0 / max_rate } else { f64::INFINITY };
        if dt > limit {
            return Err(Error::Cfl { dt, limit });
        }
    }
    let dirichlet = bc == BoundaryCondition::DirichletZero;
    let last = grid.n_nodes() - 1;
    let mut u = init.to_vec();
    if dirichlet {
        u[0] = 0.0;
        u[last] = 0.0;
    }
    let nonneg = init.iter().all(|&v| v >= 0.0);
    let scale = init.iter().map(|v| v.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut min_value = u.iter().copied().fold(f64::INFINITY, f64::min);
    let mut snapshots = vec![DensityField {
        grid,
        values: u.clone(),
        time: 0.0,
    }];
    let mut scratch = Vec::new();
    let mut tmp = vec![0.0; u.len()];
    for step in 1..=n_steps {
        match opts.scheme {
            TimeScheme::Implicit => op.solve_shifted(dt, &mut u, &mut scratch),
            TimeScheme::Explicit => {
                op.apply(&u, &mut tmp);
                for (ui, ti) in u.iter_mut().zip(&tmp) {
                    *ui += dt * ti;
                }
            }
        }
        if dirichlet {
            u[0] = 0.0;
            u[last] = 0.0;
        }
        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::BlowUp {
                step,
                time: step as f64 * dt,
            });
        }
        min_value = u.iter().copied().fold(min_value, f64::min);
        let keep = step == n_steps || (opts.snapshot_stride > 0 && step % opts.snapshot_stride == 0);
        if keep {
            snapshots.push(DensityField {
                grid,
                values: u.clone(),
                time: step as f64 * dt,
            });
        }
    }
    Ok(PdeSolution {
        snapshots,
        min_value,
        positivity_ok: !nonneg || min_value >= -1e-12 * scale,
    })
}

/// Solves `∂ₜu = 𝓛u`, `u(0) = φ` on `[0, t_end]`, so `u(t, x) = E^x[φ(X_t)]`.
pub fn solve_backward_kolmogorov(
    model: &SdeModel,
    phi0: &[f64],
    t_end: f64,
    grid: Grid1D,
    bc: BoundaryCondition,
    opts: SolverOptions,
) -> Result<PdeSolution> {
    model.require_scalar()?;
    let op = backward_operator(model, &grid, bc);
    evolve(&op, grid, phi0, t_end, bc, opts)
}

/// Solves the Fokker–Planck equation `∂ₜρ = 𝓛†ρ`, `ρ(0) = ρ₀`.
pub fn solve_fokker_planck(
    model: &SdeModel,
    rho0: &[f64],
    t_end: f64,
    grid: Grid1D,
    bc: BoundaryCondition,
    opts: SolverOptions,
) -> Result<PdeSolution> {
    model.require_scalar()?;
    let op = forward_operator(model, &grid, bc);
    evolve(&op, grid, rho0, t_end, bc, opts)
}

/// Approximation of the Dirac mass at `x0`: a Gaussian of standard deviation
/// `2Δx`, normalised to unit trapezoidal mass on the grid.
pub fn delta_like(grid: &Grid1D, x0: f64) -> Vec<f64> {
    let s = 2.0 * grid.dx();
    let mut v = grid.sample(|x| (-(x - x0) * (x - x0) / (2.0 * s * s)).exp());
    let m = grid.integrate(&v);
    v.iter_mut().for_each(|x| *x /= m);
    v
}
