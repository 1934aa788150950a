use std::fmt;
use std::sync::Arc;

use crate::error::{invalid, Result};

/// A log-moment generating function together with its Legendre transform
/// tabulated on `x_grid`.
#[derive(Clone)]
pub struct LegendrePair {
    pub lambda: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub x_grid: Vec<f64>,
    pub lambda_star: Vec<f64>,
    /// Maximising `t` for each `x`.
    pub argmax: Vec<f64>,
}

impl fmt::Debug for LegendrePair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LegendrePair")
            .field("x_grid", &self.x_grid)
            .field("lambda_star", &self.lambda_star)
            .finish()
    }
}

impl LegendrePair {
    /// Discrete midpoint convexity of `Λ*` on an equally spaced `x_grid`.
    pub fn is_convex(&self, tol: f64) -> bool {
        self.lambda_star.windows(3).all(|w| w[1] <= 0.5 * (w[0] + w[2]) + tol)
    }

    pub fn value_at(&self, x: f64) -> Option<f64> {
        self.x_grid
            .iter()
            .position(|&g| (g - x).abs() < 1e-12)
            .map(|i| self.lambda_star[i])
    }
}

/// `Λ*(x) = sup_t [t x − Λ(t)]`, maximised over `t_grid` and then refined by
/// golden-section search between the neighbours of the best grid point.
pub fn legendre_transform(
    lambda: impl Fn(f64) -> f64 + Send + Sync + 'static,
    x_grid: &[f64],
    t_grid: &[f64],
) -> Result<LegendrePair> {
    if t_grid.len() < 2 {
        return Err(invalid("t_grid needs at least two points"));
    }
    let lam_values: Vec<f64> = t_grid.iter().map(|&t| lambda(t)).collect();
    if lam_values.iter().any(|v| !v.is_finite()) {
        return Err(invalid("Λ must be finite on t_grid"));
    }
    let mut lambda_star = Vec::with_capacity(x_grid.len());
    let mut argmax = Vec::with_capacity(x_grid.len());
    for &x in x_grid {
        let (i, _) = t_grid.iter().zip(&lam_values).map(|(t, l)| t * x - l).enumerate().fold(
            (0, f64::NEG_INFINITY),
            |best, (i, v)| if v > best.1 { (i, v) } else { best },
        );
        let mut lo = t_grid[i.saturating_sub(1)];
        let mut hi = t_grid[(i + 1).min(t_grid.len() - 1)];
        let obj = |t: f64| t * x - lambda(t);
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..100 {
            let a = hi - phi * (hi - lo);
            let b = lo + phi * (hi - lo);
            if obj(a) >= obj(b) {
                hi = b;
            } else {
                lo = a;
            }
        }
        let t_ref = 0.5 * (lo + hi);
        let (t, v) = if obj(t_ref) >= obj(t_grid[i]) {
            (t_ref, obj(t_ref))
        } else {
            (t_grid[i], obj(t_grid[i]))
        };
        lambda_star.push(v);
        argmax.push(t);
    }
    Ok(LegendrePair {
        lambda: Arc::new(lambda),
        x_grid: x_grid.to_vec(),
        lambda_star,
        argmax,
    })
}
