use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::grid::Grid1D;
use crate::sde::Potential;

use super::DensityField;

/// `e^{-x²/2t} / sqrt(2πt)`.
pub fn heat_kernel(t: f64, x: f64) -> f64 {
    (-x * x / (2.0 * t)).exp() / (2.0 * PI * t).sqrt()
}

fn check_image_args(t: f64, x: f64, level: f64) -> Result<()> {
    if !(t > 0.0) {
        return Err(invalid("time must be positive"));
    }
    if !(level > 0.0) {
        return Err(invalid("barrier level must be positive"));
    }
    if x > level {
        return Err(invalid(format!("x = {x} lies above the barrier {level}")));
    }
    Ok(())
}

/// Density at time `t` of Brownian motion started at 0 and reflected at `level`.
pub fn reflected_bm_density(t: f64, x: f64, level: f64) -> Result<f64> {
    check_image_args(t, x, level)?;
    Ok(heat_kernel(t, x) + heat_kernel(t, 2.0 * level - x))
}

/// Density at time `t` of Brownian motion started at 0 and killed at `level`.
pub fn killed_bm_density(t: f64, x: f64, level: f64) -> Result<f64> {
    check_image_args(t, x, level)?;
    if x == level {
        return Ok(0.0);
    }
    Ok(heat_kernel(t, x) - heat_kernel(t, 2.0 * level - x))
}

/// `ρ = e^{-U} / Z` on the grid, `Z` by the trapezoidal rule.
///
/// Fails when the mass is not finite and positive, or when the density has
/// not decayed at the ends of the grid (relative value above `1e-8`).
pub fn stationary_density_gradient(potential: &Potential, grid: Grid1D) -> Result<DensityField> {
    let u = grid.sample(|x| potential.eval(&[x]));
    let u_min = u.iter().copied().fold(f64::INFINITY, f64::min);
    if !u_min.is_finite() {
        return Err(Error::NonNormalizable(f64::NAN));
    }
    // shift by the minimum to avoid overflow
    let mut values: Vec<f64> = u.iter().map(|v| (u_min - v).exp()).collect();
    let z = grid.integrate(&values);
    if !(z.is_finite() && z > 0.0) {
        return Err(Error::NonNormalizable(z));
    }
    let edge = values[0].max(values[grid.n_cells]);
    if edge > 1e-8 {
        return Err(Error::NonNormalizable(z));
    }
    values.iter_mut().for_each(|v| *v /= z);
    DensityField::new(grid, values, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trapezoid(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let inner: f64 = (1..n).map(|i| f(a + i as f64 * h)).sum();
        h * (inner + 0.5 * (f(a) + f(b)))
    }

    #[test]
    fn reflected_density_has_unit_mass() {
        let (t, level) = (1.0, 0.7);
        let m = trapezoid(|x| reflected_bm_density(t, x, level).unwrap(), -40.0, level, 400_000);
        assert!((m - 1.0).abs() < 1e-6, "mass {m}");
    }

    #[test]
    fn killed_density_vanishes_at_barrier() {
        assert_eq!(killed_bm_density(0.3, 1.2, 1.2).unwrap(), 0.0);
        assert!(killed_bm_density(0.3, 1.3, 1.2).is_err());
        assert!(reflected_bm_density(0.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn far_barrier_recovers_heat_kernel() {
        let p = heat_kernel(1.0, 0.0);
        let r = reflected_bm_density(1.0, 0.0, 10.0).unwrap();
        let k = killed_bm_density(1.0, 0.0, 10.0).unwrap();
        assert!(((r - p) / p).abs() < 1e-10);
        assert!(((k - p) / p).abs() < 1e-10);
    }

    #[test]
    fn heat_kernel_self_similarity() {
        for t in [0.25, 2.0, 9.0] {
            for x in [-1.0, 0.3, 2.5] {
                let lhs = heat_kernel(t, x);
                let rhs = heat_kernel(1.0, x / t.sqrt()) / t.sqrt();
                assert!((lhs - rhs).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn gaussian_normaliser() {
        let g = Grid1D::new(-10.0, 10.0, 2000).unwrap();
        let pot = Potential::quadratic();
        let rho = stationary_density_gradient(&pot, g).unwrap();
        // ρ(0) = 1 / sqrt(2π)
        let mid = rho.values[1000];
        assert!((1.0 / mid - (2.0 * PI).sqrt()).abs() < 1e-9);
    }

    #[test]
    fn double_well_density_is_symmetric() {
        let g = Grid1D::new(-4.0, 4.0, 400).unwrap();
        let rho = stationary_density_gradient(&Potential::double_well(), g).unwrap();
        for i in 0..=400 {
            let (a, b) = (rho.values[i], rho.values[400 - i]);
            assert!((a - b).abs() <= 1e-12 * a.max(b));
        }
        // mode at x = 1, saddle at x = 0
        assert!(rho.values[250] > rho.values[200]);
    }

    #[test]
    fn flat_potential_is_rejected() {
        let g = Grid1D::new(-1.0, 1.0, 10).unwrap();
        let flat = Potential::scalar(|_| 0.0, |_| 0.0);
        assert!(matches!(
            stationary_density_gradient(&flat, g),
            Err(Error::NonNormalizable(_))
        ));
    }
}
