//! Finite-state Markov kernels obtained from diffusions, with drift /
//! minorisation certificates, weighted total-variation contraction, the
//! Hilbert projective metric and Perron–Frobenius power iteration.

mod birkhoff;
mod harris;
mod lyapunov;

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::{Grid1D, TimeGrid};
use crate::kolmogorov::{solve_backward_kolmogorov, BoundaryCondition, SolverOptions};
use crate::par::map_indices;
use crate::rng::GaussianStream;
use crate::sde::{EmStepper, SdeModel};

pub use birkhoff::{
    fit_cone_bounds, hilbert_metric, power_iteration_jentzsch, projective_contraction, projective_diameter,
    random_positive_vector, ConeBounds, PerronEigen, ProjectiveContraction,
};
pub use harris::{
    hm_constants, rho_beta_distance, verify_geometric_drift, verify_hm_contraction, verify_minorisation,
    ContractionReport, DriftCert, HmConstants, MinorisationCert,
};
pub use lyapunov::{mt_lyapunov_report, CriterionFit, LyapunovReport};

/// Row-sum slack tolerated for stochastic rows.
pub const ROW_SUM_SLACK: f64 = 1e-12;

/// Transition matrix `p(x, y)` on a finite state space, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteKernel {
    pub n: usize,
    pub matrix: Vec<f64>,
    /// Spatial grid when the states are nodes of one.
    pub grid: Option<Grid1D>,
    pub t_step: Option<f64>,
    pub substochastic: bool,
}

#[derive(Serialize, Deserialize)]
struct Sidecar {
    n: usize,
    grid: Option<Grid1D>,
    t_step: Option<f64>,
    substochastic: bool,
}

impl DiscreteKernel {
    /// Checks non-negativity and row sums `<= 1 + ROW_SUM_SLACK`.
    pub fn new(n: usize, matrix: Vec<f64>) -> Result<Self> {
        if n == 0 || matrix.len() != n * n {
            return Err(invalid("kernel matrix must be n×n with n > 0"));
        }
        if let Some(v) = matrix.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
            return Err(invalid(format!("kernel entry {v} is not a finite non-negative number")));
        }
        let mut k = Self {
            n,
            matrix,
            grid: None,
            t_step: None,
            substochastic: false,
        };
        let sums = k.row_sums();
        if let Some((i, s)) = sums.iter().enumerate().find(|(_, s)| **s > 1.0 + ROW_SUM_SLACK) {
            return Err(invalid(format!("row {i} has mass {s} > 1")));
        }
        k.substochastic = sums.iter().any(|s| *s < 1.0 - ROW_SUM_SLACK);
        Ok(k)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(invalid("kernel rows must all have length n"));
        }
        Self::new(n, rows.concat())
    }

    /// Divides each row by its sum. Rows of zero mass are an error.
    pub fn row_normalized(rows: &[Vec<f64>]) -> Result<Self> {
        let rows: Vec<Vec<f64>> = rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let s: f64 = r.iter().sum();
                if s > 0.0 {
                    Ok(r.iter().map(|v| v / s).collect())
                } else {
                    Err(Error::EmptyRow(i))
                }
            })
            .collect::<Result<_>>()?;
        Self::from_rows(&rows)
    }

    pub fn with_grid(mut self, grid: Grid1D) -> Self {
        self.grid = Some(grid);
        self
    }

    #[inline]
    pub fn entry(&self, x: usize, y: usize) -> f64 {
        self.matrix[x * self.n + y]
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.matrix[x * self.n..(x + 1) * self.n]
    }

    pub fn column(&self, y: usize) -> Vec<f64> {
        (0..self.n).map(|x| self.entry(x, y)).collect()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|x| self.row(x).iter().sum()).collect()
    }

    /// `(𝒫f)(x) = Σ_y p(x, y) f(y)`.
    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|x| self.row(x).iter().zip(f).map(|(p, v)| p * v).sum())
            .collect()
    }

    /// `(μ𝒫)(y) = Σ_x μ(x) p(x, y)`.
    pub fn apply_left(&self, mu: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (x, m) in mu.iter().enumerate() {
            if *m != 0.0 {
                for (o, p) in out.iter_mut().zip(self.row(x)) {
                    *o += m * p;
                }
            }
        }
        out
    }

    /// Writes the matrix to `path` (CSV, no header) and the metadata to the
    /// same path with a `.json` extension.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
        for x in 0..self.n {
            w.write_record(self.row(x).iter().map(|v| format!("{v:e}")))?;
        }
        w.flush()?;
        let sidecar = Sidecar {
            n: self.n,
            grid: self.grid,
            t_step: self.t_step,
            substochastic: self.substochastic,
        };
        fs::write(sidecar_path(path), serde_json::to_string_pretty(&sidecar)?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let sidecar: Sidecar = serde_json::from_str(&fs::read_to_string(sidecar_path(path))?)?;
        let mut r = csv::ReaderBuilder::new().has_headers(false).from_path(path)?;
        let mut matrix = Vec::with_capacity(sidecar.n * sidecar.n);
        for rec in r.records() {
            for field in rec?.iter() {
                matrix.push(
                    field
                        .trim()
                        .parse::<f64>()
                        .map_err(|e| invalid(format!("bad kernel entry {field:?}: {e}")))?,
                );
            }
        }
        let mut k = Self::new(sidecar.n, matrix)?;
        k.grid = sidecar.grid;
        k.t_step = sidecar.t_step;
        k.substochastic = sidecar.substochastic;
        Ok(k)
    }
}

fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

/// How a kernel is computed from a one-dimensional diffusion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelMethod {
    /// Implicit finite-difference backward solves, one per column. With
    /// Dirichlet conditions the two end nodes are dropped and the kernel on
    /// the interior is substochastic (killing).
    Pde { dt: f64, bc: BoundaryCondition },
    /// Euler–Maruyama histograms: each endpoint is assigned to its nearest
    /// node; mass leaving the grid is lost.
    Mc {
        n_paths: usize,
        n_steps: usize,
        stream: GaussianStream,
    },
}

/// Transition probabilities of `model` over time `t_step` between grid nodes.
pub fn discretize_kernel(model: &SdeModel, grid: Grid1D, t_step: f64, method: &KernelMethod) -> Result<DiscreteKernel> {
    if !(t_step > 0.0 && t_step.is_finite()) {
        return Err(invalid("t_step must be positive"));
    }
    model.require_scalar()?;
    let mut kernel = match method {
        KernelMethod::Pde { dt, bc } => pde_kernel(model, grid, t_step, *dt, *bc)?,
        KernelMethod::Mc {
            n_paths,
            n_steps,
            stream,
        } => mc_kernel(model, grid, t_step, *n_paths, *n_steps, *stream)?,
    };
    kernel.t_step = Some(t_step);
    Ok(kernel)
}

fn pde_kernel(model: &SdeModel, grid: Grid1D, t_step: f64, dt: f64, bc: BoundaryCondition) -> Result<DiscreteKernel> {
    let n = grid.n_nodes();
    let killed = bc == BoundaryCondition::DirichletZero;
    let states: Vec<usize> = if killed { (1..n - 1).collect() } else { (0..n).collect() };
    // A unit vector at y evolved backward gives the column p(·, y): the
    // discrete delta e_y / w_y pairs with quadrature weight w_y.
    let columns = map_indices(states.len(), |j| {
        let mut phi = vec![0.0; n];
        phi[states[j as usize]] = 1.0;
        solve_backward_kolmogorov(model, &phi, t_step, grid, bc, SolverOptions::implicit(dt))
            .map(|s| s.final_field().values.clone())
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let m = states.len();
    let mut matrix = vec![0.0; m * m];
    for (j, col) in columns.iter().enumerate() {
        for (i, &x) in states.iter().enumerate() {
            // clip round-off negatives
            matrix[i * m + j] = col[x].max(0.0);
        }
    }
    for i in 0..m {
        let row = &mut matrix[i * m..(i + 1) * m];
        let s: f64 = row.iter().sum();
        if s > 1.0 {
            row.iter_mut().for_each(|v| *v /= s);
        }
    }
    let kernel = DiscreteKernel::new(m, matrix)?;
    Ok(if killed {
        let inner = Grid1D::new(grid.x(1), grid.x(n - 2), n - 3)?;
        kernel.with_grid(inner)
    } else {
        kernel.with_grid(grid)
    })
}

fn mc_kernel(
    model: &SdeModel,
    grid: Grid1D,
    t_step: f64,
    n_paths: usize,
    n_steps: usize,
    stream: GaussianStream,
) -> Result<DiscreteKernel> {
    if n_paths == 0 {
        return Err(invalid("n_paths must be positive"));
    }
    let n = grid.n_nodes();
    let tg = TimeGrid::horizon(t_step, n_steps.max(1))?;
    let h = tg.step();
    let half = 0.5 * grid.dx();
    let rows = map_indices(n, |x| {
        let mut row = vec![0.0; n];
        let mut stepper = EmStepper::new(model);
        let w = 1.0 / n_paths as f64;
        for p in 0..n_paths {
            let mut src = stream.substream(x).substream(p as u64).source();
            let mut state = [grid.x(x as usize)];
            for k in 0..tg.n_steps {
                let dw = [h.sqrt() * src.normal()];
                if !stepper.step(&mut state, h, &dw) {
                    return Err(Error::BlowUp {
                        step: k + 1,
                        time: tg.time(k + 1),
                    });
                }
            }
            let y = state[0];
            if y >= grid.x_min - half && y < grid.x_max + half {
                row[grid.nearest(y)] += w;
            }
        }
        Ok(row)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    if let Some(i) = rows.iter().position(|r| r.iter().all(|v| *v == 0.0)) {
        return Err(Error::EmptyRow(i));
    }
    Ok(DiscreteKernel::from_rows(&rows)?.with_grid(grid))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kolmogorov::heat_kernel;

    fn ou_kernel(t: f64) -> DiscreteKernel {
        let grid = Grid1D::with_nodes(-5.0, 5.0, 201).unwrap();
        let method = KernelMethod::Pde {
            dt: 2e-3,
            bc: BoundaryCondition::NeumannZero,
        };
        discretize_kernel(&SdeModel::ornstein_uhlenbeck(), grid, t, &method).unwrap()
    }

    #[test]
    fn validation() {
        assert!(DiscreteKernel::from_rows(&[vec![0.5, 0.6], vec![0.5, 0.5]]).is_err());
        assert!(DiscreteKernel::from_rows(&[vec![-0.1, 1.0], vec![0.5, 0.5]]).is_err());
        let k = DiscreteKernel::from_rows(&[vec![0.5, 0.4], vec![0.5, 0.5]]).unwrap();
        assert!(k.substochastic);
        assert!(matches!(
            DiscreteKernel::row_normalized(&[vec![0.0, 0.0], vec![1.0, 1.0]]),
            Err(Error::EmptyRow(0))
        ));
    }

    #[test]
    fn heat_kernel_rows() {
        let grid = Grid1D::with_nodes(-8.0, 8.0, 321).unwrap();
        let method = KernelMethod::Pde {
            dt: 1e-3,
            bc: BoundaryCondition::NeumannZero,
        };
        let k = discretize_kernel(&SdeModel::brownian(1), grid, 0.5, &method).unwrap();
        let dx = grid.dx();
        for x in [140, 160, 185] {
            let l1: f64 = (0..k.n)
                .map(|y| (k.entry(x, y) / dx - heat_kernel(0.5, grid.x(y) - grid.x(x))).abs() * dx)
                .sum();
            assert!(l1 < 0.02, "row {x}: {l1}");
        }
    }

    #[test]
    fn short_time_rows_concentrate() {
        let grid = Grid1D::with_nodes(-2.0, 2.0, 81).unwrap();
        let dx = grid.dx();
        let t = dx * dx / 10.0;
        let method = KernelMethod::Pde {
            dt: t / 10.0,
            bc: BoundaryCondition::NeumannZero,
        };
        let k = discretize_kernel(&SdeModel::ornstein_uhlenbeck(), grid, t, &method).unwrap();
        for x in 3..k.n - 3 {
            let near: f64 = (x - 3..=x + 3).map(|y| k.entry(x, y)).sum();
            assert!(near > 0.99);
        }
    }

    #[test]
    fn ou_rows_are_gaussian() {
        let k = ou_kernel(1.0);
        let g = k.grid.unwrap();
        let t: f64 = 1.0;
        for x in [60, 100, 150] {
            let x0 = g.x(x);
            let row = k.row(x);
            let mean: f64 = row.iter().enumerate().map(|(y, p)| p * g.x(y)).sum();
            let var: f64 = row.iter().enumerate().map(|(y, p)| p * (g.x(y) - mean).powi(2)).sum();
            assert!((mean - x0 * (-t).exp()).abs() < 0.01 * (1.0 + x0.abs()), "{mean}");
            let exact = 0.5 * (1.0 - (-2.0 * t).exp());
            assert!((var / exact - 1.0).abs() < 0.03, "{var} vs {exact}");
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn mc_kernel_matches_pde_kernel() {
        let grid = Grid1D::with_nodes(-3.0, 3.0, 31).unwrap();
        let model = SdeModel::ornstein_uhlenbeck();
        let pde = KernelMethod::Pde {
            dt: 1e-3,
            bc: BoundaryCondition::NeumannZero,
        };
        let mc = KernelMethod::Mc {
            n_paths: 20_000,
            n_steps: 100,
            stream: GaussianStream::new(3, 0),
        };
        let a = discretize_kernel(&model, grid, 0.5, &pde).unwrap();
        let b = discretize_kernel(&model, grid, 0.5, &mc).unwrap();
        for x in [10, 15, 20] {
            let l1: f64 = a.row(x).iter().zip(b.row(x)).map(|(p, q)| (p - q).abs()).sum();
            assert!(l1 < 0.06, "row {x}: {l1}");
        }
    }

    #[test]
    fn killed_kernel_is_substochastic() {
        let grid = Grid1D::with_nodes(-1.0, 1.0, 41).unwrap();
        let method = KernelMethod::Pde {
            dt: 1e-3,
            bc: BoundaryCondition::DirichletZero,
        };
        let k = discretize_kernel(&SdeModel::brownian(1), grid, 0.1, &method).unwrap();
        assert_eq!(k.n, 39);
        assert!(k.substochastic);
        assert!(k.matrix.iter().all(|v| *v > 0.0));
    }

    #[test]
    fn save_and_load_round_trip() {
        let dir = std::env::temp_dir().join(format!("stochlab-kernel-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("kernel.csv");
        let mut k = DiscreteKernel::from_rows(&[vec![0.25, 0.75], vec![0.1, 0.8]]).unwrap();
        k.t_step = Some(0.5);
        k.save(&path).unwrap();
        let back = DiscreteKernel::load(&path).unwrap();
        assert_eq!(back, k);
        std::fs::remove_dir_all(dir).ok();
    }
}
