use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::grid::TimeGrid;
use crate::par::map_indices;
use crate::rng::GaussianStream;
use crate::sde::SdeModel;
use crate::stats::{empirical_cdf, ks_statistic};

use super::{mc_exit_samples, Domain, ExitOptions, Side, StepControl};

/// `(2/π) arcsin √u` on `[0, 1]`.
pub fn arcsine_cdf(u: f64) -> f64 {
    2.0 / PI * u.clamp(0.0, 1.0).sqrt().asin()
}

/// Samples of the fraction of `[0, T]` a Brownian path spends above 0.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Occupation {
    pub fractions: Vec<f64>,
}

impl Occupation {
    pub fn cdf(&self, at: &[f64]) -> Vec<f64> {
        empirical_cdf(&self.fractions, at)
    }

    /// Kolmogorov–Smirnov distance to the arcsine law.
    pub fn ks_statistic(&self) -> f64 {
        ks_statistic(&self.fractions, arcsine_cdf)
    }
}

/// Occupation fractions `(1/T)∫1{W_s > 0} ds` on `grid`, the time integral
/// by the trapezoidal rule on the indicator.
pub fn arcsine_occupation(n_paths: usize, grid: TimeGrid, stream: GaussianStream) -> Result<Occupation> {
    if grid.n_steps == 0 {
        return Err(invalid("occupation needs at least one step"));
    }
    let sd = grid.step().sqrt();
    let fractions = map_indices(n_paths, |i| {
        let mut src = stream.substream(i).source();
        let mut w = 0.0;
        let mut above = 0.0;
        let mut was_up = 0.0;
        for _ in 0..grid.n_steps {
            w += sd * src.normal();
            let up = if w > 0.0 { 1.0 } else { 0.0 };
            above += 0.5 * (was_up + up);
            was_up = up;
        }
        above / grid.n_steps as f64
    });
    Ok(Occupation { fractions })
}

/// First hitting of the line `{x₁ = 1}` by planar Brownian motion from the
/// origin, with the second coordinate at that time.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LineHitting {
    pub tau_samples: Vec<f64>,
    pub w2_at_tau_samples: Vec<f64>,
    pub fraction_censored: f64,
}

/// The first coordinate is simulated until it crosses 1 (or `t_max`); the
/// second, independent of it, is then drawn exactly as `N(0, τ)`.
pub fn line_hitting_2d(n_paths: usize, step: StepControl, t_max: f64, stream: GaussianStream) -> Result<LineHitting> {
    let opts = ExitOptions::new(step, n_paths, t_max);
    let run = mc_exit_samples(
        &SdeModel::brownian(1),
        &[0.0],
        &Domain::half_space(1.0, 0, Side::Below),
        &opts,
        stream.substream(0),
    )?;
    let side = stream.substream(1);
    let hits: Vec<(u64, f64)> = run
        .samples
        .iter()
        .filter_map(|s| s.exit_time.map(|t| (s.path_id, t)))
        .collect();
    let w2 = map_indices(hits.len(), |j| {
        let (id, t) = hits[j as usize];
        t.sqrt() * side.substream(id).source().normal()
    });
    Ok(LineHitting {
        tau_samples: hits.iter().map(|h| h.1).collect(),
        w2_at_tau_samples: w2,
        fraction_censored: run.statistics.fraction_censored,
    })
}

/// Upper bound on `E_A[τ_B]` from `E_A[τ_{B∪C}]`, `P_A[τ_C < τ_B]` and
/// `E_{∂C}[τ_{A∪B}]`.
pub fn three_set_bound(e_a_buc: f64, p_a_c_before_b: f64, e_dc_aub: f64) -> Result<f64> {
    let p = p_a_c_before_b;
    if !(p < 1.0) {
        return Err(invalid("P[τ_C < τ_B] must be below 1"));
    }
    if e_a_buc < 0.0 || p < 0.0 || e_dc_aub < 0.0 {
        return Err(invalid("inputs must be non-negative"));
    }
    Ok((e_a_buc + p * e_dc_aub) / (1.0 - p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{median, normal_quantile};

    #[test]
    fn arcsine_reference_values() {
        assert!((arcsine_cdf(0.5) - 0.5).abs() < 1e-15);
        assert!((arcsine_cdf(0.25) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(arcsine_cdf(1.0), 1.0);
    }

    #[test]
    fn occupation_follows_arcsine_law() {
        let grid = TimeGrid::horizon(1.0, 1000).unwrap();
        let occ = arcsine_occupation(4000, grid, GaussianStream::new(4, 0)).unwrap();
        assert!(occ.ks_statistic() < 0.035, "{}", occ.ks_statistic());
        let c = occ.cdf(&[0.5]);
        assert!((c[0] - 0.5).abs() < 0.03);
    }

    #[test]
    fn line_hitting_statistics() {
        let r = line_hitting_2d(4000, StepControl::adaptive(1e-6, 0.5), 1e4, GaussianStream::new(9, 0)).unwrap();
        assert!(r.fraction_censored < 0.02);
        // P(τ ≤ t) = 2(1 − Φ(1/√t))  =>  median = 1/z²_{0.75}
        let z = normal_quantile(0.75);
        let med = median(&r.tau_samples);
        assert!((med / (1.0 / (z * z)) - 1.0).abs() < 0.08, "median {med}");
        let cauchy = |y: f64| 0.5 + y.atan() / PI;
        let ks = ks_statistic(&r.w2_at_tau_samples, cauchy);
        assert!(ks < 0.035, "ks {ks}");
        assert!(median(&r.w2_at_tau_samples).abs() < 0.08);
    }

    #[test]
    fn three_set_arithmetic() {
        assert_eq!(three_set_bound(1.0, 0.5, 2.0).unwrap(), 4.0);
        assert_eq!(three_set_bound(3.0, 0.0, 7.0).unwrap(), 3.0);
        assert!(three_set_bound(1.0, 1.0, 2.0).is_err());
        assert!(three_set_bound(-1.0, 0.2, 2.0).is_err());
    }
}
