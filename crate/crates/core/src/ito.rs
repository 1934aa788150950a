//! Pre-limit Itô and Stratonovich sums on a fixed grid.
//!
//! The stochastic integrals are L² limits of these sums; convergence studies
//! refine the grid explicitly (see [`crate::wiener::refine_wiener_midpoint`]).

use crate::error::{invalid, Error, Result};
use crate::sde::SamplePath;
use crate::wiener::WienerPath;

/// `Σ e(t_{k-1}) (W_{t_k} - W_{t_{k-1}})` for an integrand given as a
/// function of the node index (evaluated at left endpoints only).
pub fn ito_integral(integrand: impl Fn(usize) -> f64, wiener: &WienerPath) -> Result<f64> {
    scalar(wiener)?;
    Ok((0..wiener.grid.n_steps)
        .map(|k| integrand(k) * wiener.increment(k, 0))
        .sum())
}

/// `Σ ½(e(t_k) + e(t_{k-1})) ΔW_k`.
pub fn stratonovich_integral(integrand: impl Fn(usize) -> f64, wiener: &WienerPath) -> Result<f64> {
    scalar(wiener)?;
    Ok((0..wiener.grid.n_steps)
        .map(|k| 0.5 * (integrand(k) + integrand(k + 1)) * wiener.increment(k, 0))
        .sum())
}

/// Itô sum of a scalar sampled process against `wiener`; the grids must agree.
pub fn ito_integral_path(integrand: &SamplePath, wiener: &WienerPath) -> Result<f64> {
    check_path(integrand, wiener)?;
    ito_integral(|k| integrand.values[k], wiener)
}

pub fn stratonovich_integral_path(integrand: &SamplePath, wiener: &WienerPath) -> Result<f64> {
    check_path(integrand, wiener)?;
    stratonovich_integral(|k| integrand.values[k], wiener)
}

fn scalar(wiener: &WienerPath) -> Result<()> {
    if wiener.dim != 1 {
        return Err(invalid(
            "stochastic integrals are implemented against scalar Brownian motion",
        ));
    }
    Ok(())
}

fn check_path(integrand: &SamplePath, wiener: &WienerPath) -> Result<()> {
    if integrand.grid != wiener.grid || integrand.values.len() != wiener.grid.len() * integrand.dim {
        return Err(Error::GridMismatch);
    }
    if integrand.dim != 1 {
        return Err(invalid("integrand must be scalar"));
    }
    Ok(())
}
