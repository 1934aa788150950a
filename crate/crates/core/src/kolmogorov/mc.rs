use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::par::map_indices;
use crate::rng::GaussianStream;
use crate::sde::{EmStepper, Estimate, SdeModel};

/// Runs one Euler–Maruyama path to time `t` and reports `(∫₀ᵗ q(X_s) ds, φ(X_t))`,
/// the integral by left-endpoint sums.
fn em_functional(
    model: &SdeModel,
    x: &[f64],
    grid: TimeGrid,
    stream: GaussianStream,
    q: &(dyn Fn(&[f64]) -> f64 + Sync),
    phi: &(dyn Fn(&[f64]) -> f64 + Sync),
) -> Result<(f64, f64)> {
    let h = grid.step();
    let sd = h.sqrt();
    let mut src = stream.source();
    let mut state = x.to_vec();
    let mut dw = vec![0.0; model.noise_dim];
    let mut stepper = EmStepper::new(model);
    let mut integral = 0.0;
    for k in 0..grid.n_steps {
        integral += q(&state) * h;
        for v in dw.iter_mut() {
            *v = sd * src.normal();
        }
        if !stepper.step(&mut state, h, &dw) {
            return Err(Error::BlowUp {
                step: k + 1,
                time: grid.time(k + 1),
            });
        }
    }
    Ok((integral, phi(&state)))
}

/// Monte Carlo estimate of `(P_t φ)(x) = E^x[φ(X_t)]` with Euler–Maruyama
/// paths of `n_steps` steps.
pub fn mc_semigroup(
    model: &SdeModel,
    phi: impl Fn(&[f64]) -> f64 + Sync,
    x: &[f64],
    t: f64,
    n_steps: usize,
    n_paths: usize,
    stream: GaussianStream,
) -> Result<Estimate> {
    mc_feynman_kac(model, |_| 0.0, phi, t, x, n_steps, n_paths, stream)
}

/// Monte Carlo estimate of `E^x[exp(-∫₀ᵗ q(X_s) ds) φ(X_t)]`.
#[allow(clippy::too_many_arguments)]
pub fn mc_feynman_kac(
    model: &SdeModel,
    q: impl Fn(&[f64]) -> f64 + Sync,
    phi: impl Fn(&[f64]) -> f64 + Sync,
    t: f64,
    x: &[f64],
    n_steps: usize,
    n_paths: usize,
    stream: GaussianStream,
) -> Result<Estimate> {
    if x.len() != model.dim {
        return Err(crate::error::invalid("starting point has the wrong dimension"));
    }
    let grid = TimeGrid::horizon(t, n_steps)?;
    let samples = map_indices(n_paths, |i| {
        em_functional(model, x, grid, stream.substream(i), &q, &phi).map(|(integral, value)| (-integral).exp() * value)
    })
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;
    Ok(Estimate::from_samples(&samples))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_observable_is_exact() {
        let e = mc_semigroup(
            &SdeModel::ornstein_uhlenbeck(),
            |_| 1.0,
            &[0.4],
            1.0,
            50,
            200,
            GaussianStream::new(1, 0),
        )
        .unwrap();
        assert_eq!(e.value, 1.0);
        assert_eq!(e.std_error, 0.0);
    }

    #[test]
    fn ou_second_moment() {
        // E^x[X_t²] = x² e^{-2t} + (1 - e^{-2t})/2
        let (x, t) = (1.0, 1.0);
        let e = mc_semigroup(
            &SdeModel::ornstein_uhlenbeck(),
            |y| y[0] * y[0],
            &[x],
            t,
            200,
            20_000,
            GaussianStream::new(2, 0),
        )
        .unwrap();
        let exact = x * x * (-2.0 * t).exp() + 0.5 * (1.0 - (-2.0 * t).exp());
        // Euler bias O(h) ~ 5e-3 relative at h = 5e-3
        assert!((e.value - exact).abs() < 3.0 * e.std_error + 5e-3, "{e:?} vs {exact}");
    }

    #[test]
    fn constant_killing_rate_factors_out() {
        let m = SdeModel::brownian(1);
        let s = GaussianStream::new(3, 0);
        let lambda = 0.7;
        let fk = mc_feynman_kac(&m, |_| lambda, |y| y[0].cos(), 1.0, &[0.2], 100, 5000, s).unwrap();
        let plain = mc_semigroup(&m, |y| y[0].cos(), &[0.2], 1.0, 100, 5000, s).unwrap();
        // same noise: the estimators differ by exactly the constant factor
        assert!((fk.value - (-lambda).exp() * plain.value).abs() < 1e-12);
        // E cos(x + W_1) = cos(x) e^{-1/2}
        let exact = (-lambda).exp() * 0.2f64.cos() * (-0.5f64).exp();
        assert!(fk.within(exact, 4.0), "{fk:?} vs {exact}");
    }

    #[test]
    fn blow_up_propagates() {
        let m = SdeModel::scalar("explode", |x| x * x * x, |_| 0.0);
        let r = mc_semigroup(&m, |_| 1.0, &[5.0], 10.0, 100, 4, GaussianStream::new(1, 0));
        assert!(matches!(r, Err(Error::BlowUp { .. })));
    }
}
