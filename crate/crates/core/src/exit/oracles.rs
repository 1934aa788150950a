use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Mean exit time of `n`-dimensional Brownian motion (`n = x.len()`) from the
/// ball of radius `radius` centred at the origin: `(R² − ‖x‖²)/n`.
pub fn ball_exit_expectation(radius: f64, x: &[f64]) -> Result<f64> {
    let r = norm(x);
    if x.is_empty() || !(r < radius) {
        return Err(invalid(format!("‖x‖ = {r} is not inside the ball of radius {radius}")));
    }
    Ok((radius * radius - r * r) / x.len() as f64)
}

/// Probability that Brownian motion started at `x` ever hits the ball of
/// radius `radius`: 1 in dimensions 1 and 2, `(R/‖x‖)^{n−2}` above.
pub fn ball_hitting_probability(radius: f64, x: &[f64]) -> Result<f64> {
    let r = norm(x);
    if x.is_empty() || !(r > radius) {
        return Err(invalid(format!("‖x‖ = {r} must exceed the radius {radius}")));
    }
    let n = x.len() as i32;
    Ok(if n <= 2 { 1.0 } else { (radius / r).powi(n - 2) })
}

/// Probability of reaching the inner sphere before the outer one, for
/// Brownian motion started at radius `r` in dimension `n`.
pub fn shell_hitting_probability(inner: f64, outer: f64, r: f64, n: usize) -> Result<f64> {
    if !(0.0 < inner && inner < r && r < outer) || n == 0 {
        return Err(invalid("need 0 < inner < r < outer and n > 0"));
    }
    // radial harmonic function
    let phi = |s: f64| match n {
        1 => s,
        2 => s.ln(),
        _ => s.powi(2 - n as i32),
    };
    Ok((phi(r) - phi(outer)) / (phi(inner) - phi(outer)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbmExit {
    pub p_hit_a_first: f64,
    pub p_hit_b_first: f64,
    /// `E[τ_b]`, finite only for `r > ½`, where the process never reaches 0.
    pub mean_time_to_b: Option<f64>,
}

/// Exit of `dX = rX dt + X dW` from `(a, b)` started at `x`. `a = 0` gives
/// the limits `P(τ_b < τ_0)`.
pub fn gbm_exit(r: f64, a: f64, b: f64, x: f64) -> Result<GbmExit> {
    if (r - 0.5).abs() < 1e-12 {
        return Err(invalid("r = 1/2 (logarithmic case) is not implemented"));
    }
    if !(0.0 <= a && a < x && x < b) {
        return Err(invalid("need 0 <= a < x < b"));
    }
    // u = x^γ solves ½x²u'' + rxu' = 0
    let gamma = 1.0 - 2.0 * r;
    let p_b = if a == 0.0 {
        if gamma > 0.0 {
            (x / b).powf(gamma)
        } else {
            1.0
        }
    } else {
        (x.powf(gamma) - a.powf(gamma)) / (b.powf(gamma) - a.powf(gamma))
    };
    // u = α log x + β with 𝓛u = −1, u(b) = 0
    let mean_time_to_b = (r > 0.5).then(|| (b / x).ln() / (r - 0.5));
    Ok(GbmExit {
        p_hit_a_first: 1.0 - p_b,
        p_hit_b_first: p_b,
        mean_time_to_b,
    })
}

fn check_fk(a: f64, x: f64) -> Result<()> {
    if !(a > 0.0) {
        return Err(invalid("interval half-width must be positive"));
    }
    if x.abs() > a {
        return Err(invalid(format!("|x| = {} exceeds a = {a}", x.abs())));
    }
    Ok(())
}

/// `E^x[e^{−λτ}]` for Brownian motion leaving `(−a, a)`.
pub fn fk_laplace_interval(lambda: f64, a: f64, x: f64) -> Result<f64> {
    check_fk(a, x)?;
    if !(lambda >= 0.0) {
        return Err(invalid("λ must be non-negative"));
    }
    let k = (2.0 * lambda).sqrt();
    Ok((k * x).cosh() / (k * a).cosh())
}

/// `E^x[e^{−λτ} 1{τ_a < τ_{−a}}]`.
pub fn fk_laplace_one_sided(lambda: f64, a: f64, x: f64) -> Result<f64> {
    check_fk(a, x)?;
    if !(lambda >= 0.0) {
        return Err(invalid("λ must be non-negative"));
    }
    let k = (2.0 * lambda).sqrt();
    if k * a < 1e-8 {
        return Ok((x + a) / (2.0 * a));
    }
    Ok((k * (x + a)).sinh() / (2.0 * k * a).sinh())
}

/// `E^x[τ 1{τ_a < τ_{−a}}] = (a² − x²)(3a + x)/(6a)`.
pub fn fk_joint_mean(a: f64, x: f64) -> Result<f64> {
    check_fk(a, x)?;
    Ok((a * a - x * x) * (3.0 * a + x) / (6.0 * a))
}

/// `E^x[τ | τ_a < τ_{−a}] = (a − x)(3a + x)/3`.
pub fn fk_conditional_mean(a: f64, x: f64) -> Result<f64> {
    check_fk(a, x)?;
    Ok((a - x) * (3.0 * a + x) / 3.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_values() {
        assert_eq!(ball_exit_expectation(1.0, &[0.0, 0.0]).unwrap(), 0.5);
        assert_eq!(ball_exit_expectation(1.0, &[0.0]).unwrap(), 1.0);
        assert!(ball_exit_expectation(1.0, &[0.999_999, 0.0]).unwrap() < 1e-5);
        assert!(ball_exit_expectation(1.0, &[1.0, 0.0]).is_err());
        assert_eq!(ball_hitting_probability(1.0, &[2.0, 0.0, 0.0]).unwrap(), 0.5);
        assert_eq!(ball_hitting_probability(1.0, &[0.0, 7.0]).unwrap(), 1.0);
        assert!(ball_hitting_probability(1.0, &[0.5, 0.0]).is_err());
    }

    #[test]
    fn shell_tends_to_hitting_probability() {
        let p = shell_hitting_probability(1.0, 64.0, 2.0, 3).unwrap();
        assert!((p - (0.5 - 1.0 / 64.0) / (1.0 - 1.0 / 64.0)).abs() < 1e-15);
        let far = shell_hitting_probability(1.0, 1e9, 2.0, 3).unwrap();
        assert!((far - 0.5).abs() < 1e-8);
        // one dimension: gambler's ruin
        assert!((shell_hitting_probability(1.0, 3.0, 2.0, 1).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn gbm_martingale_case() {
        let e = gbm_exit(0.0, 0.5, 2.0, 1.0).unwrap();
        assert!((e.p_hit_a_first - 1.0 / 1.5).abs() < 1e-15);
        assert!((gbm_exit(0.0, 0.0, 2.0, 1.0).unwrap().p_hit_b_first - 0.5).abs() < 1e-15);
        assert!(e.mean_time_to_b.is_none());
        assert!(gbm_exit(0.5, 0.5, 2.0, 1.0).is_err());
    }

    #[test]
    fn gbm_power_solves_generator() {
        for r in [-0.3, 0.2, 0.9] {
            let g = 1.0 - 2.0 * r;
            for x in [0.3, 1.0, 2.7f64] {
                // ½x²γ(γ−1)x^{γ−2} + r x γ x^{γ−1}
                let lu = 0.5 * g * (g - 1.0) * x.powf(g) + r * g * x.powf(g);
                assert!(lu.abs() < 1e-12);
            }
        }
        // r > ½: hitting 0 first has vanishing probability as a → 0
        let e = gbm_exit(0.9, 1e-12, 2.0, 1.0).unwrap();
        assert!(e.p_hit_a_first < 1e-8);
        let t = gbm_exit(0.9, 0.0, 2.0, 1.0).unwrap().mean_time_to_b.unwrap();
        assert!((t - 2f64.ln() / 0.4).abs() < 1e-14);
    }

    #[test]
    fn feynman_kac_limits() {
        assert_eq!(fk_laplace_interval(0.0, 1.0, 0.3).unwrap(), 1.0);
        assert!((fk_laplace_one_sided(0.0, 1.0, 0.3).unwrap() - 0.65).abs() < 1e-15);
        assert!((fk_laplace_one_sided(1e-20, 1.0, 0.3).unwrap() - 0.65).abs() < 1e-12);
        // −d/dλ at 0 of the two-sided transform is a² − x²
        let (a, x, d) = (1.3, 0.4, 1e-6);
        let slope = (fk_laplace_interval(0.0, a, x).unwrap() - fk_laplace_interval(d, a, x).unwrap()) / d;
        assert!((slope - (a * a - x * x)).abs() < 1e-5);
        // same for the one-sided transform and the joint mean
        let slope = (fk_laplace_one_sided(0.0, a, x).unwrap() - fk_laplace_one_sided(d, a, x).unwrap()) / d;
        assert!((slope - fk_joint_mean(a, x).unwrap()).abs() < 1e-5);
        assert_eq!(fk_joint_mean(1.0, 0.0).unwrap(), 0.5);
        assert_eq!(fk_conditional_mean(1.0, 0.0).unwrap(), 1.0);
        assert!(fk_laplace_interval(1.0, 1.0, 1.5).is_err());
    }
}
