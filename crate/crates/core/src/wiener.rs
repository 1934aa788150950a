//! Brownian paths on uniform grids and dyadic midpoint refinement.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::grid::TimeGrid;
use crate::rng::{GaussianSource, GaussianStream};

/// Sampled `dim`-dimensional Wiener process. States are stored row-major:
/// node `k` occupies `values[k*dim..(k+1)*dim]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WienerPath {
    pub grid: TimeGrid,
    pub dim: usize,
    pub values: Vec<f64>,
}

impl WienerPath {
    pub fn state(&self, k: usize) -> &[f64] {
        &self.values[k * self.dim..(k + 1) * self.dim]
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Scalar path of component `j`.
    pub fn component(&self, j: usize) -> Vec<f64> {
        self.values.iter().skip(j).step_by(self.dim).copied().collect()
    }

    /// Increment `W(t_{k+1}) - W(t_k)` of component `j`.
    pub fn increment(&self, k: usize, j: usize) -> f64 {
        self.values[(k + 1) * self.dim + j] - self.values[k * self.dim + j]
    }

    /// The path `c W(t / c^2)`, which is again a Wiener path, on the stretched grid.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if c == 0.0 || !c.is_finite() {
            return Err(invalid("scaling factor must be finite and non-zero"));
        }
        let c2 = c * c;
        Ok(Self {
            grid: TimeGrid::new(self.grid.t0 * c2, self.grid.t_end * c2, self.grid.n_steps)?,
            dim: self.dim,
            values: self.values.iter().map(|v| c * v).collect(),
        })
    }
}

/// Samples a Wiener path with independent `N(0, h I)` increments and `W(t0) = 0`.
pub fn sample_wiener(grid: TimeGrid, dim: usize, stream: GaussianStream) -> Result<WienerPath> {
    sample_wiener_with(grid, dim, &mut stream.source())
}

pub fn sample_wiener_with(grid: TimeGrid, dim: usize, source: &mut GaussianSource) -> Result<WienerPath> {
    if dim == 0 {
        return Err(invalid("Wiener path dimension must be at least 1"));
    }
    let sd = grid.step().sqrt();
    let mut values = vec![0.0; grid.len() * dim];
    for k in 1..grid.len() {
        for j in 0..dim {
            values[k * dim + j] = values[(k - 1) * dim + j] + sd * source.normal();
        }
    }
    Ok(WienerPath { grid, dim, values })
}

/// Halves the grid step `levels` times. Each new midpoint is the average of
/// its two neighbours plus an independent `N(0, h/4)` perturbation, `h` being
/// the step before that halving. Values at the original nodes are unchanged.
pub fn refine_wiener_midpoint(path: &WienerPath, levels: u32, stream: GaussianStream) -> Result<WienerPath> {
    refine_wiener_midpoint_with(path, levels, &mut stream.source())
}

pub fn refine_wiener_midpoint_with(path: &WienerPath, levels: u32, source: &mut GaussianSource) -> Result<WienerPath> {
    if levels > 0 && path.grid.n_steps == 0 {
        return Err(invalid("cannot refine a single-node path"));
    }
    let mut current = path.clone();
    for _ in 0..levels {
        let dim = current.dim;
        let coarse = current.grid;
        let sd = (0.25 * coarse.step()).sqrt();
        let fine = coarse.refined(1);
        let mut values = vec![0.0; fine.len() * dim];
        for k in 0..coarse.len() {
            values[2 * k * dim..(2 * k + 1) * dim].copy_from_slice(current.state(k));
        }
        for k in 0..coarse.n_steps {
            for j in 0..dim {
                let left = values[2 * k * dim + j];
                let right = values[(2 * k + 2) * dim + j];
                values[(2 * k + 1) * dim + j] = 0.5 * (left + right) + sd * source.normal();
            }
        }
        current = WienerPath {
            grid: fine,
            dim,
            values,
        };
    }
    Ok(current)
}
