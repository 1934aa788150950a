//! SDE models, the Euler–Maruyama integrator and exact solutions of linear SDEs.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::TimeGrid;
use crate::rng::GaussianStream;
use crate::wiener::{sample_wiener, WienerPath};

/// `out <- F(x)`.
pub type VectorField = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;
pub type ScalarField = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Potential `U` together with its gradient.
#[derive(Clone)]
pub struct Potential {
    pub value: ScalarField,
    pub gradient: VectorField,
}

impl Potential {
    pub fn new(
        value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        Self {
            value: Arc::new(value),
            gradient: Arc::new(gradient),
        }
    }

    /// One-dimensional potential from `U` and `U'`.
    pub fn scalar(
        u: impl Fn(f64) -> f64 + Send + Sync + 'static,
        du: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self::new(move |x| u(x[0]), move |x, out| out[0] = du(x[0]))
    }

    /// `U(x) = |x|^2 / 2` in one dimension.
    pub fn quadratic() -> Self {
        Self::scalar(|x| 0.5 * x * x, |x| x)
    }

    /// `U(x) = x^4/4 - x^2/2`, minima at ±1 and a saddle at 0.
    pub fn double_well() -> Self {
        Self::scalar(|x| 0.25 * x.powi(4) - 0.5 * x * x, |x| x * x * x - x)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }

    pub fn grad(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        (self.gradient)(x, &mut g);
        g
    }

    /// Hessian by central differences of the gradient.
    pub fn hessian(&self, x: &[f64], step: f64) -> Vec<f64> {
        let n = x.len();
        let mut h = vec![0.0; n * n];
        let mut xp = x.to_vec();
        let mut gp = vec![0.0; n];
        let mut gm = vec![0.0; n];
        for j in 0..n {
            xp[j] = x[j] + step;
            (self.gradient)(&xp, &mut gp);
            xp[j] = x[j] - step;
            (self.gradient)(&xp, &mut gm);
            xp[j] = x[j];
            for i in 0..n {
                h[i * n + j] = (gp[i] - gm[i]) / (2.0 * step);
            }
        }
        // symmetrise
        for i in 0..n {
            for j in 0..i {
                let m = 0.5 * (h[i * n + j] + h[j * n + i]);
                h[i * n + j] = m;
                h[j * n + i] = m;
            }
        }
        h
    }
}

/// `dX = f(X) dt + g(X) dW` with `X` in R^n and `W` in R^k.
///
/// The diffusion callback writes the `n x k` matrix row-major.
#[derive(Clone)]
pub struct SdeModel {
    pub name: String,
    pub dim: usize,
    pub noise_dim: usize,
    drift: VectorField,
    diffusion: VectorField,
    potential: Option<Potential>,
}

impl fmt::Debug for SdeModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SdeModel")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("noise_dim", &self.noise_dim)
            .field("gradient_form", &self.potential.is_some())
            .finish()
    }
}

impl SdeModel {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        noise_dim: usize,
        drift: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
        diffusion: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Result<Self> {
        if dim == 0 || noise_dim == 0 {
            return Err(invalid("state and noise dimensions must be positive"));
        }
        Ok(Self {
            name: name.into(),
            dim,
            noise_dim,
            drift: Arc::new(drift),
            diffusion: Arc::new(diffusion),
            potential: None,
        })
    }

    /// Scalar model `dX = f(X) dt + g(X) dW`.
    pub fn scalar(
        name: impl Into<String>,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        g: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            dim: 1,
            noise_dim: 1,
            drift: Arc::new(move |x, out| out[0] = f(x[0])),
            diffusion: Arc::new(move |x, out| out[0] = g(x[0])),
            potential: None,
        }
    }

    /// Standard Brownian motion in R^n.
    pub fn brownian(dim: usize) -> Self {
        Self {
            name: "bm".into(),
            dim,
            noise_dim: dim,
            drift: Arc::new(|_, out| out.fill(0.0)),
            diffusion: Arc::new(move |_, out| identity_into(out, dim, 1.0)),
            potential: None,
        }
    }

    /// `dX = -X dt + dW` in one dimension.
    pub fn ornstein_uhlenbeck() -> Self {
        Self::scalar("ou", |x| -x, |_| 1.0)
    }

    /// `dX = r X dt + X dW`.
    pub fn geometric_brownian(r: f64) -> Self {
        Self::scalar("gbm", move |x| r * x, |x| x)
    }

    /// Gradient system `dX = -∇U(X) dt + √2 dW`, whose invariant density is
    /// proportional to `exp(-U)`.
    pub fn gradient(potential: Potential, dim: usize) -> Self {
        Self::gradient_with_noise(potential, dim, std::f64::consts::SQRT_2)
    }

    /// `dX = -∇U(X) dt + sigma dW`.
    pub fn gradient_with_noise(potential: Potential, dim: usize, sigma: f64) -> Self {
        let grad = potential.gradient.clone();
        Self {
            name: "gradient".into(),
            dim,
            noise_dim: dim,
            drift: Arc::new(move |x, out| {
                grad(x, out);
                out.iter_mut().for_each(|v| *v = -*v);
            }),
            diffusion: Arc::new(move |_, out| identity_into(out, dim, sigma)),
            potential: Some(potential),
        }
    }

    /// Same drift with the diffusion multiplied by `scale` (e.g. `sqrt(eps)`).
    pub fn with_noise_scale(&self, scale: f64) -> Self {
        let diffusion = self.diffusion.clone();
        Self {
            name: self.name.clone(),
            diffusion: Arc::new(move |x, out| {
                diffusion(x, out);
                out.iter_mut().for_each(|v| *v *= scale);
            }),
            ..self.clone()
        }
    }

    pub fn is_gradient_form(&self) -> bool {
        self.potential.is_some()
    }

    pub fn potential(&self) -> Option<&Potential> {
        self.potential.as_ref()
    }

    #[inline]
    pub fn drift_into(&self, x: &[f64], out: &mut [f64]) {
        (self.drift)(x, out)
    }

    #[inline]
    pub fn diffusion_into(&self, x: &[f64], out: &mut [f64]) {
        (self.diffusion)(x, out)
    }

    pub fn drift(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.drift_into(x, &mut out);
        out
    }

    pub fn diffusion(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim * self.noise_dim];
        self.diffusion_into(x, &mut out);
        out
    }

    /// `D = g gᵀ`, row-major `n x n`.
    pub fn diffusion_matrix(&self, x: &[f64]) -> Vec<f64> {
        let g = self.diffusion(x);
        let (n, k) = (self.dim, self.noise_dim);
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                d[i * n + j] = (0..k).map(|l| g[i * k + l] * g[j * k + l]).sum();
            }
        }
        d
    }

    /// Scalar drift of a one-dimensional model.
    #[inline]
    pub fn f1(&self, x: f64) -> f64 {
        let mut out = [0.0];
        (self.drift)(&[x], &mut out);
        out[0]
    }

    /// `g(x)^2` for a one-dimensional model with scalar noise.
    #[inline]
    pub fn d1(&self, x: f64) -> f64 {
        let mut out = [0.0];
        (self.diffusion)(&[x], &mut out);
        out[0] * out[0]
    }

    pub(crate) fn require_scalar(&self) -> Result<()> {
        if self.dim != 1 || self.noise_dim != 1 {
            return Err(invalid(format!(
                "model '{}' must be one-dimensional with scalar noise",
                self.name
            )));
        }
        Ok(())
    }
}

fn identity_into(out: &mut [f64], dim: usize, scale: f64) {
    out.fill(0.0);
    for i in 0..dim {
        out[i * dim + i] = scale;
    }
}

/// Time-indexed states of a solution, row-major like [`WienerPath`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePath {
    pub grid: TimeGrid,
    pub dim: usize,
    pub values: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wiener: Option<WienerPath>,
}

impl SamplePath {
    pub fn state(&self, k: usize) -> &[f64] {
        &self.values[k * self.dim..(k + 1) * self.dim]
    }

    pub fn last(&self) -> &[f64] {
        self.state(self.grid.n_steps)
    }

    pub fn component(&self, j: usize) -> Vec<f64> {
        self.values.iter().skip(j).step_by(self.dim).copied().collect()
    }

    /// Scalar path from node values.
    pub fn scalar(grid: TimeGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(invalid("path length does not match the grid"));
        }
        Ok(Self {
            grid,
            dim: 1,
            values,
            wiener: None,
        })
    }
}

impl From<&WienerPath> for SamplePath {
    fn from(w: &WienerPath) -> Self {
        Self {
            grid: w.grid,
            dim: w.dim,
            values: w.values.clone(),
            wiener: None,
        }
    }
}

/// Scratch buffers for repeated Euler–Maruyama steps.
pub(crate) struct EmStepper<'a> {
    model: &'a SdeModel,
    f: Vec<f64>,
    g: Vec<f64>,
}

impl<'a> EmStepper<'a> {
    pub(crate) fn new(model: &'a SdeModel) -> Self {
        Self {
            model,
            f: vec![0.0; model.dim],
            g: vec![0.0; model.dim * model.noise_dim],
        }
    }

    /// `x <- x + f(x) h + g(x) dw`. Returns false on a non-finite state.
    #[inline]
    pub(crate) fn step(&mut self, x: &mut [f64], h: f64, dw: &[f64]) -> bool {
        let (n, k) = (self.model.dim, self.model.noise_dim);
        self.model.drift_into(x, &mut self.f);
        self.model.diffusion_into(x, &mut self.g);
        let mut finite = true;
        for i in 0..n {
            let mut noise = 0.0;
            for l in 0..k {
                noise += self.g[i * k + l] * dw[l];
            }
            x[i] += self.f[i] * h + noise;
            finite &= x[i].is_finite();
        }
        finite
    }

    /// Trace of `g gᵀ` at `x`.
    pub(crate) fn diffusion_trace(&mut self, x: &[f64]) -> f64 {
        self.model.diffusion_into(x, &mut self.g);
        self.g.iter().map(|v| v * v).sum()
    }
}

/// Euler–Maruyama: `X_{k+1} = X_k + f(X_k) h + g(X_k) ΔW_k` with fresh noise.
pub fn euler_maruyama(model: &SdeModel, x0: &[f64], grid: TimeGrid, stream: GaussianStream) -> Result<SamplePath> {
    let w = sample_wiener(grid, model.noise_dim, stream)?;
    euler_maruyama_on(model, x0, &w)
}

/// Euler–Maruyama driven by a given Wiener path (shared-noise comparisons).
pub fn euler_maruyama_on(model: &SdeModel, x0: &[f64], wiener: &WienerPath) -> Result<SamplePath> {
    if x0.len() != model.dim {
        return Err(invalid("initial condition has the wrong dimension"));
    }
    if wiener.dim != model.noise_dim {
        return Err(invalid("Wiener path dimension differs from the noise dimension"));
    }
    let grid = wiener.grid;
    let h = grid.step();
    let n = model.dim;
    let mut values = Vec::with_capacity(grid.len() * n);
    values.extend_from_slice(x0);
    let mut x = x0.to_vec();
    let mut dw = vec![0.0; model.noise_dim];
    let mut stepper = EmStepper::new(model);
    for k in 0..grid.n_steps {
        for (l, v) in dw.iter_mut().enumerate() {
            *v = wiener.increment(k, l);
        }
        if !stepper.step(&mut x, h, &dw) {
            return Err(Error::BlowUp {
                step: k + 1,
                time: grid.time(k + 1),
            });
        }
        values.extend_from_slice(&x);
    }
    Ok(SamplePath {
        grid,
        dim: n,
        values,
        wiener: Some(wiener.clone()),
    })
}

fn require_scalar_wiener(wiener: &WienerPath) -> Result<()> {
    if wiener.dim != 1 {
        return Err(invalid("exact linear solutions need a scalar Wiener path"));
    }
    Ok(())
}

/// Solution of `dX = a(t) X dt + σ(t) dW`,
/// `X_t = x0 e^{α(t)} + ∫_0^t e^{α(t)-α(s)} σ(s) dW_s` with `α(t) = ∫_0^t a`.
///
/// Both integrals are left-endpoint sums on the Wiener grid (O(h) bias).
pub fn exact_linear_additive(
    a: impl Fn(f64) -> f64,
    sigma: impl Fn(f64) -> f64,
    x0: f64,
    wiener: &WienerPath,
) -> Result<SamplePath> {
    require_scalar_wiener(wiener)?;
    let grid = wiener.grid;
    let h = grid.step();
    let mut values = Vec::with_capacity(grid.len());
    values.push(x0);
    let mut alpha = 0.0f64;
    // Σ e^{-α(t_j)} σ(t_j) ΔW_j
    let mut conv = 0.0;
    for k in 0..grid.n_steps {
        let t = grid.time(k);
        conv += (-alpha).exp() * sigma(t) * wiener.increment(k, 0);
        alpha += a(t) * h;
        values.push(alpha.exp() * (x0 + conv));
    }
    Ok(SamplePath {
        grid,
        dim: 1,
        values,
        wiener: Some(wiener.clone()),
    })
}

/// Solution of `dX = a(t) X dt + σ(t) X dW`,
/// `X_t = x0 exp{∫(a - σ²/2) ds + ∫σ dW}`, left-endpoint sums.
pub fn exact_linear_multiplicative(
    a: impl Fn(f64) -> f64,
    sigma: impl Fn(f64) -> f64,
    x0: f64,
    wiener: &WienerPath,
) -> Result<SamplePath> {
    require_scalar_wiener(wiener)?;
    if x0 <= 0.0 {
        return Err(invalid("multiplicative solution requires x0 > 0"));
    }
    let grid = wiener.grid;
    let h = grid.step();
    let mut values = Vec::with_capacity(grid.len());
    values.push(x0);
    let mut exponent = 0.0;
    for k in 0..grid.n_steps {
        let t = grid.time(k);
        let s = sigma(t);
        exponent += (a(t) - 0.5 * s * s) * h + s * wiener.increment(k, 0);
        values.push(x0 * exponent.exp());
    }
    Ok(SamplePath {
        grid,
        dim: 1,
        values,
        wiener: Some(wiener.clone()),
    })
}

/// `X_t = sin(W_t)` up to the first time `|W|` reaches π/2, then frozen at ±1.
/// Strong solution of `dX = -X/2 dt + sqrt(1 - X²) dW`, `X_0 = 0`.
pub fn sine_fixture(wiener: &WienerPath) -> Result<SamplePath> {
    require_scalar_wiener(wiener)?;
    let half_pi = std::f64::consts::FRAC_PI_2;
    let mut frozen: Option<f64> = None;
    let values = wiener
        .values
        .iter()
        .map(|&w| match frozen {
            Some(v) => v,
            None if w.abs() >= half_pi => {
                let v = w.signum();
                frozen = Some(v);
                v
            }
            None => w.sin(),
        })
        .collect();
    Ok(SamplePath {
        grid: wiener.grid,
        dim: 1,
        values,
        wiener: Some(wiener.clone()),
    })
}

/// The SDE solved by [`sine_fixture`].
pub fn sine_model() -> SdeModel {
    SdeModel::scalar("sine", |x| -0.5 * x, |x| (1.0 - x * x).max(0.0).sqrt())
}

/// Summary of a batch of scalar samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

impl Estimate {
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len() as f64;
        if samples.is_empty() {
            return Self {
                value: f64::NAN,
                std_error: f64::NAN,
            };
        }
        let mean = samples.iter().sum::<f64>() / n;
        let var = if samples.len() > 1 {
            samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Self {
            value: mean,
            std_error: (var / n).sqrt(),
        }
    }

    /// `|value - target| <= k * std_error`, with a small absolute floor for
    /// zero-variance estimates.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.value - target).abs() <= k * self.std_error + 1e-12
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(t: f64, n: usize) -> TimeGrid {
        TimeGrid::horizon(t, n).unwrap()
    }

    #[test]
    fn zero_coefficients_give_constant_path() {
        let m = SdeModel::scalar("zero", |_| 0.0, |_| 0.0);
        let p = euler_maruyama(&m, &[1.5], grid(1.0, 50), GaussianStream::new(1, 0)).unwrap();
        assert!(p.values.iter().all(|&v| v == 1.5));
    }

    #[test]
    fn zero_noise_is_explicit_euler() {
        let m = SdeModel::scalar("decay", |x| -2.0 * x, |_| 0.0);
        let g = grid(1.0, 10);
        let p = euler_maruyama(&m, &[1.0], g, GaussianStream::new(1, 0)).unwrap();
        let mut x: f64 = 1.0;
        for k in 0..=10 {
            assert_eq!(p.values[k], x);
            x += -2.0 * x * g.step();
        }
    }

    #[test]
    fn blow_up_is_reported_with_step() {
        let m = SdeModel::scalar("explode", |x| x * x * x, |_| 0.0);
        let err = euler_maruyama(&m, &[10.0], grid(10.0, 100), GaussianStream::new(1, 0)).unwrap_err();
        match err {
            Error::BlowUp { step, .. } => assert!(step > 0 && step <= 100),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn additive_solution_special_cases() {
        let w = sample_wiener(grid(1.0, 64), 1, GaussianStream::new(4, 0)).unwrap();
        let p = exact_linear_additive(|_| 0.0, |_| 1.0, 0.3, &w).unwrap();
        for k in 0..w.len() {
            assert!((p.values[k] - 0.3 - w.values[k]).abs() < 1e-12);
        }
        let p = exact_linear_additive(|_| -0.5, |_| 0.0, 2.0, &w).unwrap();
        assert!((p.last()[0] - 2.0 * (-0.5f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn multiplicative_solution_special_cases() {
        let w = sample_wiener(grid(1.0, 64), 1, GaussianStream::new(4, 0)).unwrap();
        let g = 0.7;
        let p = exact_linear_multiplicative(|_| 0.0, |_| g, 1.0, &w).unwrap();
        for k in 0..w.len() {
            let t = w.grid.time(k);
            let gbm = (g * w.values[k] - 0.5 * g * g * t).exp();
            assert!((p.values[k] - gbm).abs() < 1e-10 * gbm.max(1.0));
        }
        let p = exact_linear_multiplicative(|_| 0.2, |_| 0.0, 3.0, &w).unwrap();
        assert!((p.last()[0] - 3.0 * 0.2f64.exp()).abs() < 1e-12);
        assert!(exact_linear_multiplicative(|_| 0.0, |_| 1.0, 0.0, &w).is_err());
    }

    #[test]
    fn sine_fixture_properties() {
        let g = grid(4.0, 400);
        let zero = WienerPath {
            grid: g,
            dim: 1,
            values: vec![0.0; g.len()],
        };
        assert!(sine_fixture(&zero).unwrap().values.iter().all(|&v| v == 0.0));
        let s = GaussianStream::new(8, 0);
        for i in 0..200 {
            let w = sample_wiener(g, 1, s.substream(i)).unwrap();
            let p = sine_fixture(&w).unwrap();
            assert!(p.values.iter().all(|v| (-1.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn diffusion_matrix_of_gradient_model() {
        let m = SdeModel::gradient(Potential::quadratic(), 1);
        assert!((m.diffusion_matrix(&[0.3])[0] - 2.0).abs() < 1e-14);
        assert_eq!(m.drift(&[0.3]), vec![-0.3]);
        assert!(m.is_gradient_form());
        let scaled = m.with_noise_scale(0.5);
        assert!((scaled.d1(0.0) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn estimate_basics() {
        let e = Estimate::from_samples(&[1.0, 1.0, 1.0]);
        assert_eq!(e.value, 1.0);
        assert_eq!(e.std_error, 0.0);
        assert!(e.within(1.0, 3.0));
    }
}
