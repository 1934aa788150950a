use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Uniform time grid `t0 < t0 + h < ... < t_end`.
///
/// `n_steps = 0` is accepted and denotes the single node `t0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t0: f64,
    pub t_end: f64,
    pub n_steps: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, t_end: f64, n_steps: usize) -> Result<Self> {
        if !(t0.is_finite() && t_end.is_finite()) {
            return Err(invalid("time grid endpoints must be finite"));
        }
        if n_steps > 0 && t_end <= t0 {
            return Err(invalid(format!("t_end ({t_end}) must exceed t0 ({t0})")));
        }
        Ok(Self { t0, t_end, n_steps })
    }

    /// Grid on `[0, t_end]`.
    pub fn horizon(t_end: f64, n_steps: usize) -> Result<Self> {
        Self::new(0.0, t_end, n_steps)
    }

    pub fn step(&self) -> f64 {
        if self.n_steps == 0 {
            0.0
        } else {
            (self.t_end - self.t0) / self.n_steps as f64
        }
    }

    pub fn len(&self) -> usize {
        self.n_steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn time(&self, k: usize) -> f64 {
        if k == self.n_steps {
            self.t_end
        } else {
            self.t0 + k as f64 * self.step()
        }
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(move |k| self.time(k))
    }

    /// Grid with the step halved `levels` times.
    pub fn refined(&self, levels: u32) -> Self {
        Self {
            n_steps: self.n_steps << levels,
            ..*self
        }
    }
}

/// Uniform spatial grid with `n_cells + 1` nodes on `[x_min, x_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    pub x_min: f64,
    pub x_max: f64,
    pub n_cells: usize,
}

impl Grid1D {
    pub fn new(x_min: f64, x_max: f64, n_cells: usize) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite()) || x_min >= x_max {
            return Err(invalid(format!("need x_min < x_max, got [{x_min}, {x_max}]")));
        }
        if n_cells < 2 {
            return Err(invalid("a spatial grid needs at least two cells"));
        }
        Ok(Self { x_min, x_max, n_cells })
    }

    /// Grid with `n_nodes` nodes (so `n_nodes - 1` cells).
    pub fn with_nodes(x_min: f64, x_max: f64, n_nodes: usize) -> Result<Self> {
        Self::new(x_min, x_max, n_nodes.saturating_sub(1))
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.n_cells as f64
    }

    pub fn n_nodes(&self) -> usize {
        self.n_cells + 1
    }

    pub fn x(&self, i: usize) -> f64 {
        if i == self.n_cells {
            self.x_max
        } else {
            self.x_min + i as f64 * self.dx()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_nodes()).map(|i| self.x(i)).collect()
    }

    pub fn is_interior(&self, i: usize) -> bool {
        i > 0 && i < self.n_cells
    }

    /// Index of the node closest to `x`, clamped to the grid.
    pub fn nearest(&self, x: f64) -> usize {
        let r = ((x - self.x_min) / self.dx()).round();
        r.clamp(0.0, self.n_cells as f64) as usize
    }

    /// Trapezoidal quadrature weights.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let dx = self.dx();
        let mut w = vec![dx; self.n_nodes()];
        w[0] = 0.5 * dx;
        w[self.n_cells] = 0.5 * dx;
        w
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.trapezoid_weights().iter().zip(values).map(|(w, v)| w * v).sum()
    }

    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        (0..self.n_nodes()).map(|i| f(self.x(i))).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn time_grid_nodes() {
        let g = TimeGrid::horizon(1.0, 4).unwrap();
        assert_eq!(g.len(), 5);
        assert_eq!(g.step(), 0.25);
        let t: Vec<f64> = g.times().collect();
        assert_eq!(t, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert!(TimeGrid::new(1.0, 1.0, 3).is_err());
        assert_eq!(TimeGrid::horizon(1.0, 0).unwrap().len(), 1);
        assert_eq!(g.refined(2).n_steps, 16);
    }

    #[test]
    fn spatial_grid() {
        let g = Grid1D::new(-1.0, 1.0, 4).unwrap();
        assert_eq!(g.nodes(), vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert!((g.integrate(&[1.0; 5]) - 2.0).abs() < 1e-15);
        assert_eq!(g.nearest(0.3), 3);
        assert!(Grid1D::new(0.0, 1.0, 1).is_err());
        assert!(!g.is_interior(0) && g.is_interior(2) && !g.is_interior(4));
    }
}
