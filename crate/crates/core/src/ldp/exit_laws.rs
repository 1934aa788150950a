use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::exit::{mc_exit, Domain, ExitOptions};
use crate::rng::GaussianStream;
use crate::sde::{Potential, SdeModel};

/// Minimal OU action `(h e^{T/2} − x0 e^{−T/2})² / (2 sinh T)` to go from
/// `x0` to level `h` in time `T`.
pub fn ou_exit_rate(x0: f64, h: f64, t: f64) -> Result<f64> {
    if !(0.0 <= x0 && x0 < h) || !(t > 0.0) {
        return Err(invalid("need 0 ≤ x0 < h and T > 0"));
    }
    // (h e^{T/2} − x0 e^{−T/2})² / (2 sinh T), rewritten to avoid overflow
    let num = h - x0 * (-t).exp();
    Ok(num * num / (1.0 - (-2.0 * t).exp()))
}

/// Limit of [`ou_exit_rate`] as `T → ∞`.
pub fn ou_exit_rate_limit(h: f64) -> f64 {
    h * h
}

/// Optimal OU path `[x0 sinh(T−t) + h sinh t] / sinh T`.
pub fn ou_optimal_path(x0: f64, h: f64, t_total: f64, t: f64) -> f64 {
    (x0 * (t_total - t).sinh() + h * t.sinh()) / t_total.sinh()
}

fn hessian_eigen(potential: &Potential, x: &[f64]) -> (Vec<f64>, f64) {
    let n = x.len();
    let h = potential.hessian(x, 1e-4);
    let eig = SymmetricEigen::new(DMatrix::from_row_slice(n, n, &h));
    let vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    let det = vals.iter().product();
    (vals, det)
}

/// Eyring–Kramers mean transition time from the minimum `x_star` over the
/// saddle `z_star` for `dX = −∇U dt + √ε dW`.
pub fn eyring_kramers_time(potential: &Potential, x_star: &[f64], z_star: &[f64], eps: f64) -> Result<f64> {
    if x_star.len() != z_star.len() || x_star.is_empty() {
        return Err(invalid("x_star and z_star must share a positive dimension"));
    }
    if !(eps > 0.0) {
        return Err(invalid("eps must be positive"));
    }
    let (ex, det_x) = hessian_eigen(potential, x_star);
    if ex.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::WrongSignature(format!(
            "Hessian at x_star has eigenvalues {ex:?}"
        )));
    }
    let (ez, det_z) = hessian_eigen(potential, z_star);
    let negative: Vec<f64> = ez.iter().copied().filter(|v| *v < 0.0).collect();
    if negative.len() != 1 || ez.contains(&0.0) {
        return Err(Error::WrongSignature(format!(
            "Hessian at z_star has eigenvalues {ez:?}"
        )));
    }
    let barrier = potential.eval(z_star) - potential.eval(x_star);
    let prefactor = 2.0 * std::f64::consts::PI / negative[0].abs() * (det_z.abs() / det_x).sqrt();
    Ok(prefactor * (2.0 * barrier / eps).exp())
}

/// Exit-time scaling fit over a noise-level list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrheniusFit {
    pub eps: Vec<f64>,
    pub mean_times: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub fraction_censored: Vec<f64>,
    /// `ε log E[τ]` per noise level.
    pub eps_log_tau: Vec<f64>,
    /// Slope of `log E[τ]` against `1/ε`: the estimate of `V̄`.
    pub v_bar_estimate: f64,
    pub intercept: f64,
    pub v_bar_ref: Option<f64>,
    pub relative_error: Option<f64>,
    /// `ε log E[τ]` increases as `ε` decreases.
    pub monotone_trend: bool,
}

/// Runs [`mc_exit`] for `dX = −∇U dt + √ε dW` at each `ε` and fits
/// `log E[τ] = V̄/ε + c`. Runs with more than half the paths censored are
/// rejected.
#[allow(clippy::too_many_arguments)]
pub fn arrhenius_check(
    potential: &Potential,
    dim: usize,
    x_start: &[f64],
    eps_list: &[f64],
    domain: &Domain,
    opts: &ExitOptions,
    stream: GaussianStream,
    v_bar_ref: Option<f64>,
) -> Result<ArrheniusFit> {
    if eps_list.len() < 3 {
        return Err(invalid("arrhenius_check needs at least three noise levels"));
    }
    if eps_list.iter().any(|e| !(*e > 0.0)) {
        return Err(invalid("noise levels must be positive"));
    }
    let mut eps = eps_list.to_vec();
    eps.sort_by(|a, b| b.total_cmp(a));
    let mut fit = ArrheniusFit {
        eps: eps.clone(),
        mean_times: Vec::new(),
        std_errors: Vec::new(),
        fraction_censored: Vec::new(),
        eps_log_tau: Vec::new(),
        v_bar_estimate: f64::NAN,
        intercept: f64::NAN,
        v_bar_ref,
        relative_error: None,
        monotone_trend: false,
    };
    for (i, &e) in eps.iter().enumerate() {
        let model = SdeModel::gradient_with_noise(potential.clone(), dim, e.sqrt());
        let stats = mc_exit(&model, x_start, domain, opts, stream.substream(i as u64))?;
        if stats.fraction_censored > 0.5 || !stats.valid {
            return Err(Error::CensoredRun {
                run: i,
                fraction: stats.fraction_censored,
            });
        }
        fit.mean_times.push(stats.mean_time);
        fit.std_errors.push(stats.time_std_error);
        fit.fraction_censored.push(stats.fraction_censored);
        fit.eps_log_tau.push(e * stats.mean_time.ln());
    }
    let xs: Vec<f64> = eps.iter().map(|e| 1.0 / e).collect();
    let ys: Vec<f64> = fit.mean_times.iter().map(|t| t.ln()).collect();
    let (slope, intercept) = least_squares(&xs, &ys);
    fit.v_bar_estimate = slope;
    fit.intercept = intercept;
    fit.relative_error = v_bar_ref.map(|v| (slope - v).abs() / v.abs());
    fit.monotone_trend = fit.eps_log_tau.windows(2).all(|w| w[1] > w[0]);
    Ok(fit)
}

fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exit::StepControl;

    #[test]
    fn ou_rate_values() {
        let r = ou_exit_rate(0.0, 1.0, 1.0).unwrap();
        assert!((r - 1.0f64.exp() / (2.0 * 1.0f64.sinh())).abs() < 1e-14);
        assert!((r - 1.1565).abs() < 5e-5);
        assert!((ou_exit_rate(0.0, 1.0, 60.0).unwrap() - ou_exit_rate_limit(1.0)).abs() < 1e-12);
        let ts: Vec<f64> = (1..100).map(|k| 0.1 * k as f64).collect();
        for w in ts.windows(2) {
            assert!(ou_exit_rate(0.0, 1.0, w[1]).unwrap() < ou_exit_rate(0.0, 1.0, w[0]).unwrap());
        }
        // from x0 > 0 the infimum over T is U-difference h² − x0², attained
        // at a finite horizon
        let best = ts
            .iter()
            .map(|&t| ou_exit_rate(0.3, 1.0, t).unwrap())
            .fold(f64::INFINITY, f64::min);
        assert!(best < ou_exit_rate_limit(1.0));
        assert!((best - 0.91).abs() < 1e-3);
        assert!(ou_exit_rate(1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn ou_rate_matches_naive_formula() {
        for (x0, h, t) in [(0.2, 1.0, 0.5), (0.0, 2.0, 3.0), (0.9, 1.0, 0.1)] {
            let naive = (h * (t / 2.0f64).exp() - x0 * (-t / 2.0f64).exp()).powi(2) / (2.0 * t.sinh());
            assert!((ou_exit_rate(x0, h, t).unwrap() - naive).abs() < 1e-12 * naive);
        }
    }

    #[test]
    fn optimal_path_endpoints() {
        assert!((ou_optimal_path(0.3, 1.0, 2.0, 0.0) - 0.3).abs() < 1e-15);
        assert!((ou_optimal_path(0.3, 1.0, 2.0, 2.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn kramers_double_well() {
        let u = Potential::double_well();
        let eps = 0.2;
        let t = eyring_kramers_time(&u, &[-1.0], &[0.0], eps).unwrap();
        let expected = 2.0 * std::f64::consts::PI / 2f64.sqrt() * (0.5 / eps).exp();
        assert!((t - expected).abs() < 1e-6 * expected);
        let mirrored = eyring_kramers_time(&u, &[1.0], &[0.0], eps).unwrap();
        assert_eq!(t, mirrored);
        assert!((eyring_kramers_time(&u, &[-1.0], &[0.0], 0.15).unwrap() - 124.54).abs() < 0.01);
    }

    #[test]
    fn kramers_wrong_signature() {
        let u = Potential::double_well();
        assert!(matches!(
            eyring_kramers_time(&u, &[0.0], &[0.0], 0.1),
            Err(Error::WrongSignature(_))
        ));
        assert!(matches!(
            eyring_kramers_time(&u, &[-1.0], &[1.0], 0.1),
            Err(Error::WrongSignature(_))
        ));
    }

    #[test]
    fn kramers_two_dimensional() {
        // U = (x²−1)²/4 + y²: adds factor sqrt(2/2) = 1 in y
        let u = Potential::new(
            |x| 0.25 * (x[0] * x[0] - 1.0).powi(2) + x[1] * x[1],
            |x, g| {
                g[0] = x[0] * (x[0] * x[0] - 1.0);
                g[1] = 2.0 * x[1];
            },
        );
        let t2 = eyring_kramers_time(&u, &[-1.0, 0.0], &[0.0, 0.0], 0.2).unwrap();
        let t1 = eyring_kramers_time(&Potential::double_well(), &[-1.0], &[0.0], 0.2).unwrap();
        assert!((t2 - t1).abs() < 1e-6 * t1);
    }

    #[test]
    fn arrhenius_needs_three_levels() {
        let d = Domain::interval(-1.0, 1.0).unwrap();
        let opts = ExitOptions::new(StepControl::Fixed(1e-2), 10, 10.0);
        let r = arrhenius_check(
            &Potential::quadratic(),
            1,
            &[0.0],
            &[0.3],
            &d,
            &opts,
            GaussianStream::new(1, 0),
            None,
        );
        assert!(r.is_err());
    }

    #[test]
    fn arrhenius_rejects_censored_runs() {
        let d = Domain::interval(-1.0, 1.0).unwrap();
        let opts = ExitOptions::new(StepControl::Fixed(1e-2), 50, 0.5);
        let r = arrhenius_check(
            &Potential::quadratic(),
            1,
            &[0.0],
            &[0.3, 0.2, 0.1],
            &d,
            &opts,
            GaussianStream::new(1, 0),
            None,
        );
        assert!(matches!(r, Err(Error::CensoredRun { .. })));
    }

    #[test]
    fn least_squares_exact_line() {
        let (s, c) = least_squares(&[1.0, 2.0, 4.0], &[3.0, 5.0, 9.0]);
        assert!((s - 2.0).abs() < 1e-14 && (c - 1.0).abs() < 1e-14);
    }
}
