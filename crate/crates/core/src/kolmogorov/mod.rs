//! Generators, Kolmogorov backward and Fokker–Planck solvers in one space
//! dimension, closed-form Brownian densities and Monte Carlo semigroups.

mod densities;
mod generator;
mod mc;
mod solver;

pub use densities::{heat_kernel, killed_bm_density, reflected_bm_density, stationary_density_gradient};
pub use generator::{apply_adjoint_generator, apply_generator, apply_generator_nd};
pub use mc::{mc_feynman_kac, mc_semigroup};
pub use solver::{
    delta_like, solve_backward_kolmogorov, solve_fokker_planck, BoundaryCondition, PdeSolution, SolverOptions,
    TimeScheme, Tridiagonal,
};

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::grid::Grid1D;

/// Grid function at a given time: a transition density, a solution of the
/// backward equation or a density evolved by the Fokker–Planck equation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityField {
    pub grid: Grid1D,
    pub values: Vec<f64>,
    pub time: f64,
}

impl DensityField {
    pub fn new(grid: Grid1D, values: Vec<f64>, time: f64) -> Result<Self> {
        if values.len() != grid.n_nodes() {
            return Err(invalid("field length does not match the grid"));
        }
        Ok(Self { grid, values, time })
    }

    pub fn from_fn(grid: Grid1D, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid,
            values: grid.sample(f),
            time: 0.0,
        }
    }

    /// Trapezoidal mass.
    pub fn mass(&self) -> f64 {
        self.grid.integrate(&self.values)
    }

    pub fn mean(&self) -> f64 {
        let m = self.mass();
        let xs = self.grid.nodes();
        self.grid
            .integrate(&xs.iter().zip(&self.values).map(|(x, v)| x * v).collect::<Vec<_>>())
            / m
    }

    pub fn variance(&self) -> f64 {
        let m = self.mass();
        let mu = self.mean();
        let xs = self.grid.nodes();
        self.grid.integrate(
            &xs.iter()
                .zip(&self.values)
                .map(|(x, v)| (x - mu).powi(2) * v)
                .collect::<Vec<_>>(),
        ) / m
    }

    /// Trapezoidal L¹ distance to another field on the same grid.
    pub fn l1_distance(&self, other: &[f64]) -> f64 {
        self.grid.integrate(
            &self
                .values
                .iter()
                .zip(other)
                .map(|(a, b)| (a - b).abs())
                .collect::<Vec<_>>(),
        )
    }

    /// Fraction of the mass carried by nodes within `k` cells of either end.
    pub fn boundary_mass_fraction(&self, k: usize) -> f64 {
        let w = self.grid.trapezoid_weights();
        let n = self.values.len();
        let edge: f64 = (0..n)
            .filter(|&i| i <= k || i + k >= n - 1)
            .map(|i| w[i] * self.values[i].abs())
            .sum();
        let total: f64 = w.iter().zip(&self.values).map(|(w, v)| w * v.abs()).sum();
        if total == 0.0 {
            0.0
        } else {
            edge / total
        }
    }

    /// CSV with header `x,value`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "value"])?;
        for (i, v) in self.values.iter().enumerate() {
            w.write_record([self.grid.x(i).to_string(), v.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moments_of_sampled_gaussian() {
        let g = Grid1D::new(-10.0, 10.0, 2000).unwrap();
        let f = DensityField::from_fn(g, |x| (-(x - 1.0) * (x - 1.0) / 2.0).exp());
        assert!((f.mass() - (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-9);
        assert!((f.mean() - 1.0).abs() < 1e-9);
        assert!((f.variance() - 1.0).abs() < 1e-6);
        assert!(f.boundary_mass_fraction(5) < 1e-10);
    }

    #[test]
    fn csv_layout() {
        let g = Grid1D::new(0.0, 1.0, 2).unwrap();
        let f = DensityField::new(g, vec![1.0, 2.0, 0.5], 0.0).unwrap();
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "x,value\n0,1\n0.5,2\n1,0.5\n");
    }
}
