use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::{GaussianSource, GaussianStream};
use crate::stats::linear_fit;

use super::DiscreteKernel;

/// `s(x) m(y) ≤ p(x, y) ≤ L s(x) m(y)` for all states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeBounds {
    pub s: Vec<f64>,
    pub m: Vec<f64>,
    pub l: f64,
}

impl ConeBounds {
    pub fn violations(&self, kernel: &DiscreteKernel) -> usize {
        let mut bad = 0;
        for x in 0..kernel.n {
            for y in 0..kernel.n {
                let p = kernel.entry(x, y);
                let lower = self.s[x] * self.m[y];
                if p < lower || p > self.l * lower {
                    bad += 1;
                }
            }
        }
        bad
    }

    /// Upper bound `2 log L` on the projective diameter.
    pub fn diameter_bound(&self) -> f64 {
        2.0 * self.l.ln()
    }
}

/// `s` = row sums, `m(y) = min_x p(x, y)/s(x)`, `L` the smallest constant
/// completing the sandwich.
pub fn fit_cone_bounds(kernel: &DiscreteKernel) -> Result<ConeBounds> {
    let n = kernel.n;
    for x in 0..n {
        for y in 0..n {
            if !(kernel.entry(x, y) > 0.0) {
                return Err(Error::NotUniformlyPositive(x, y));
            }
        }
    }
    let s = kernel.row_sums();
    let mut m: Vec<f64> = (0..n)
        .map(|y| (0..n).map(|x| kernel.entry(x, y) / s[x]).fold(f64::INFINITY, f64::min))
        .collect();
    // shave m and pad L until the inequalities hold exactly in floating point
    for y in 0..n {
        while (0..n).any(|x| kernel.entry(x, y) < s[x] * m[y]) {
            m[y] *= 1.0 - 4.0 * f64::EPSILON;
        }
    }
    let mut l: f64 = 1.0;
    for x in 0..n {
        for y in 0..n {
            l = l.max(kernel.entry(x, y) / (s[x] * m[y]));
        }
    }
    let mut bounds = ConeBounds { s, m, l };
    while bounds.violations(kernel) > 0 {
        bounds.l *= 1.0 + 4.0 * f64::EPSILON;
    }
    Ok(bounds)
}

/// Hilbert projective distance `|log(α* β*)|` with `α* = min f/g`,
/// `β* = min g/f`. Infinite unless both vectors are strictly positive.
pub fn hilbert_metric(f: &[f64], g: &[f64]) -> f64 {
    if f.len() != g.len() || f.is_empty() {
        return f64::INFINITY;
    }
    if f.iter().chain(g).any(|v| !(*v > 0.0 && v.is_finite())) {
        return f64::INFINITY;
    }
    let mut a = f64::INFINITY;
    let mut b = f64::INFINITY;
    for (x, y) in f.iter().zip(g) {
        a = a.min(x / y);
        b = b.min(y / x);
    }
    (a * b).ln().abs()
}

/// Positive vector with log-uniform entries spanning `e^{±3}`.
pub fn random_positive_vector(n: usize, src: &mut GaussianSource) -> Vec<f64> {
    (0..n).map(|_| (6.0 * src.uniform() - 3.0).exp()).collect()
}

/// Projective diameter of the image cone `𝒫(E⁺)`: the largest distance
/// between columns of `p`, which generate the image, also compared with
/// `n_probe` random positive vectors pushed through the kernel.
pub fn projective_diameter(kernel: &DiscreteKernel, n_probe: usize, stream: GaussianStream) -> Result<f64> {
    let cols: Vec<Vec<f64>> = (0..kernel.n).map(|y| kernel.column(y)).collect();
    let mut delta: f64 = 0.0;
    for i in 0..cols.len() {
        for j in i + 1..cols.len() {
            delta = delta.max(hilbert_metric(&cols[i], &cols[j]));
        }
    }
    if !delta.is_finite() {
        return Err(invalid("kernel is not positive"));
    }
    let mut src = stream.source();
    for _ in 0..n_probe {
        let f = kernel.apply(&random_positive_vector(kernel.n, &mut src));
        let g = kernel.apply(&random_positive_vector(kernel.n, &mut src));
        delta = delta.max(hilbert_metric(&f, &g));
    }
    Ok(delta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectiveContraction {
    pub n_pairs: usize,
    pub max_ratio: f64,
    /// `tanh(Δ/4)`.
    pub bound: f64,
}

/// Largest sampled `θ(𝒫f, 𝒫g) / θ(f, g)` next to Birkhoff's `tanh(Δ/4)`.
pub fn projective_contraction(
    kernel: &DiscreteKernel,
    diameter: f64,
    n_pairs: usize,
    stream: GaussianStream,
) -> ProjectiveContraction {
    let mut src = stream.source();
    let mut max_ratio: f64 = 0.0;
    for _ in 0..n_pairs {
        let f = random_positive_vector(kernel.n, &mut src);
        let g = random_positive_vector(kernel.n, &mut src);
        let before = hilbert_metric(&f, &g);
        if before > 1e-12 {
            max_ratio = max_ratio.max(hilbert_metric(&kernel.apply(&f), &kernel.apply(&g)) / before);
        }
    }
    ProjectiveContraction {
        n_pairs,
        max_ratio,
        bound: (diameter / 4.0).tanh(),
    }
}

/// Principal eigen-triple of a positive kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerronEigen {
    pub lambda0: f64,
    /// Right eigenvector, sup-norm 1.
    pub h0: Vec<f64>,
    /// Left eigenvector, mass 1 (quasistationary distribution when the
    /// kernel is substochastic).
    pub pi0: Vec<f64>,
    /// Geometric decay rate of successive projective distances.
    pub observed_rate: f64,
    pub iterations: usize,
    /// `‖𝒫h₀ − λ₀h₀‖_∞ / ‖h₀‖_∞`.
    pub residual_right: f64,
    /// `‖π₀𝒫 − λ₀π₀‖_∞ / ‖π₀‖_∞`.
    pub residual_left: f64,
    /// `1 − 1/L²` from the cone bounds.
    pub rate_bound: f64,
}

fn sup(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

/// Fits a geometric rate to the distances above the round-off floor.
fn fit_rate(dist: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = dist
        .iter()
        .enumerate()
        .filter(|(_, d)| **d > 1e-11 && d.is_finite())
        .map(|(k, d)| (k as f64, d.ln()))
        .collect();
    if pts.len() < 3 {
        // converged within a couple of steps
        return if dist.len() >= 2 && dist[0] > 0.0 {
            (dist[1] / dist[0]).max(0.0)
        } else {
            0.0
        };
    }
    // drop the transient from a non-eigen start
    let skip = pts.len() / 4;
    let (ks, ls): (Vec<f64>, Vec<f64>) = pts[skip..].iter().copied().unzip();
    if ks.len() < 2 {
        return 0.0;
    }
    linear_fit(&ks, &ls).0.exp()
}

/// Forward iteration `h ← 𝒫h/‖𝒫h‖_∞` and adjoint iteration
/// `π ← π𝒫/‖π𝒫‖₁` until successive projective distances drop below `tol`.
pub fn power_iteration_jentzsch(kernel: &DiscreteKernel, tol: f64, max_iter: usize) -> Result<PerronEigen> {
    let bounds = fit_cone_bounds(kernel)?;
    let n = kernel.n;
    let start: Vec<f64> = (0..n).map(|i| 1.0 + 0.5 * i as f64 / (n.max(2) - 1) as f64).collect();
    let mut h = start.clone();
    let mut pi: Vec<f64> = start.iter().map(|v| v / start.iter().sum::<f64>()).collect();
    let mut dist = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        iterations += 1;
        let mut next = kernel.apply(&h);
        let s = sup(&next);
        next.iter_mut().for_each(|v| *v /= s);
        let mut left = kernel.apply_left(&pi);
        let m: f64 = left.iter().sum();
        left.iter_mut().for_each(|v| *v /= m);
        let dh = hilbert_metric(&h, &next);
        let dp = hilbert_metric(&pi, &left);
        dist.push(dh);
        h = next;
        pi = left;
        if dh < tol && dp < tol {
            converged = true;
            break;
        }
    }
    let ph = kernel.apply(&h);
    let pip = kernel.apply_left(&pi);
    // Rayleigh quotient against the left vector
    let lambda0 =
        pi.iter().zip(&ph).map(|(a, b)| a * b).sum::<f64>() / pi.iter().zip(&h).map(|(a, b)| a * b).sum::<f64>();
    let residual_right = ph
        .iter()
        .zip(&h)
        .map(|(a, b)| (a - lambda0 * b).abs())
        .fold(0.0, f64::max)
        / sup(&h);
    let residual_left = pip
        .iter()
        .zip(&pi)
        .map(|(a, b)| (a - lambda0 * b).abs())
        .fold(0.0, f64::max)
        / sup(&pi);
    if !converged {
        return Err(Error::NonConvergence {
            iterations,
            residual: residual_right.max(residual_left),
        });
    }
    Ok(PerronEigen {
        lambda0,
        h0: h,
        pi0: pi,
        observed_rate: fit_rate(&dist),
        iterations,
        residual_right,
        residual_left,
        rate_bound: 1.0 - 1.0 / (bounds.l * bounds.l),
    })
}
