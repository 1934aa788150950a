use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::GaussianStream;

use super::DiscreteKernel;

/// `(𝒫V)(x) ≤ γ V(x) + d` on every state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftCert {
    pub gamma: f64,
    pub d: f64,
    pub feasible: bool,
    /// `2d/(1−γ) < max V`, i.e. the level set needed by the minorisation
    /// step is a proper subset of the grid.
    pub informative: bool,
}

impl DriftCert {
    /// Threshold `2d/(1−γ)` that the minorisation level must exceed.
    pub fn level_threshold(&self) -> f64 {
        2.0 * self.d / (1.0 - self.gamma)
    }

    /// Number of states violating the inequality.
    pub fn violations(&self, kernel: &DiscreteKernel, v: &[f64]) -> usize {
        let pv = kernel.apply(v);
        pv.iter()
            .zip(v)
            .filter(|(p, v)| **p > self.gamma * **v + self.d)
            .count()
    }
}

fn drift_constant(pv: &[f64], v: &[f64], gamma: f64) -> f64 {
    let mut d = pv.iter().zip(v).map(|(p, v)| p - gamma * v).fold(0.0, f64::max);
    // make the stored inequality hold in floating point, not just on paper
    while pv.iter().zip(v).any(|(p, v)| *p > gamma * v + d) {
        d = d * (1.0 + 4.0 * f64::EPSILON) + f64::MIN_POSITIVE;
    }
    d
}

/// Fits `(γ, d)` with `d(γ) = max(0, max_x[(𝒫V)(x) − γV(x)])` and `γ`
/// minimising the level threshold `2d(γ)/(1−γ)` over `(0, 1)` (ties go to
/// the smallest γ). On a finite grid some `d` always works, so `feasible` is
/// true for any `V ≥ 0`; `informative` says whether the certificate is
/// useful.
pub fn verify_geometric_drift(kernel: &DiscreteKernel, v: &[f64]) -> Result<DriftCert> {
    if v.len() != kernel.n {
        return Err(invalid("V has the wrong length"));
    }
    if v.iter().any(|x| !(*x >= 0.0)) {
        return Err(invalid("V must be non-negative"));
    }
    let pv = kernel.apply(v);
    let v_max = v.iter().copied().fold(0.0, f64::max);
    if v_max == 0.0 {
        return Ok(DriftCert {
            gamma: 0.5,
            d: drift_constant(&pv, v, 0.5),
            feasible: true,
            informative: false,
        });
    }
    let objective = |g: f64| {
        let d = pv.iter().zip(v).map(|(p, v)| p - g * v).fold(0.0, f64::max);
        d / (1.0 - g)
    };
    // the objective is a maximum of monotone functions of γ, hence
    // quasi-convex: scan, then golden-section refine around the best node
    let n_scan = 1000;
    let mut best = (1usize, objective(1.0 / n_scan as f64));
    for i in 2..n_scan {
        let val = objective(i as f64 / n_scan as f64);
        if val < best.1 * (1.0 - 1e-12) {
            best = (i, val);
        }
    }
    let (mut lo, mut hi) = (
        (best.0 as f64 - 1.0) / n_scan as f64,
        (best.0 as f64 + 1.0) / n_scan as f64,
    );
    lo = lo.max(1e-9);
    hi = hi.min(1.0 - 1e-9);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..60 {
        let a = hi - phi * (hi - lo);
        let b = lo + phi * (hi - lo);
        if objective(a) <= objective(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    let refined = 0.5 * (lo + hi);
    let node = best.0 as f64 / n_scan as f64;
    let gamma = if objective(refined) < objective(node) {
        refined
    } else {
        node
    };
    let d = drift_constant(&pv, v, gamma);
    Ok(DriftCert {
        gamma,
        d,
        feasible: true,
        informative: 2.0 * d / (1.0 - gamma) < v_max,
    })
}

/// `𝒫(x, ·) ≥ α ν(·)` for all `x ∈ C = {V < R}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinorisationCert {
    pub c: Vec<usize>,
    pub alpha: f64,
    pub nu: Vec<f64>,
    pub r_level: f64,
}

impl MinorisationCert {
    pub fn violations(&self, kernel: &DiscreteKernel) -> usize {
        self.c
            .iter()
            .map(|&x| {
                (0..kernel.n)
                    .filter(|&y| kernel.entry(x, y) < self.alpha * self.nu[y])
                    .count()
            })
            .sum()
    }
}

/// `ν ∝ min_{x∈C} p(x, ·)` and `α` its mass.
pub fn verify_minorisation(kernel: &DiscreteKernel, r_level: f64, v: &[f64]) -> Result<MinorisationCert> {
    if v.len() != kernel.n {
        return Err(invalid("V has the wrong length"));
    }
    let c: Vec<usize> = (0..kernel.n).filter(|&x| v[x] < r_level).collect();
    if c.is_empty() {
        return Err(invalid(format!("level set {{V < {r_level}}} is empty")));
    }
    let m: Vec<f64> = (0..kernel.n)
        .map(|y| c.iter().map(|&x| kernel.entry(x, y)).fold(f64::INFINITY, f64::min))
        .collect();
    let mut alpha: f64 = m.iter().sum();
    if !(alpha > 0.0) {
        return Err(Error::ZeroMinorisation);
    }
    let nu: Vec<f64> = m.iter().map(|v| v / alpha).collect();
    let mut cert = MinorisationCert { c, alpha, nu, r_level };
    while cert.violations(kernel) > 0 {
        alpha *= 1.0 - 4.0 * f64::EPSILON;
        cert.alpha = alpha;
    }
    Ok(cert)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HmConstants {
    pub beta: f64,
    pub alpha_bar: f64,
}

/// `β = α₀/d`, `ᾱ = max(1 − (α − α₀), (2 + Rβγ₀)/(2 + Rβ))`, valid for
/// `α₀ ∈ (0, α)` and `γ₀ ∈ (γ + 2d/R, 1)`.
pub fn hm_constants(gamma: f64, d: f64, alpha: f64, r_level: f64, alpha0: f64, gamma0: f64) -> Result<HmConstants> {
    if !(0.0 < alpha0 && alpha0 < alpha) {
        return Err(invalid(format!("α₀ = {alpha0} is not in (0, {alpha})")));
    }
    if !(d > 0.0 && r_level > 0.0) {
        return Err(invalid("d and R must be positive"));
    }
    let lower = gamma + 2.0 * d / r_level;
    if lower >= 1.0 {
        return Err(Error::EmptyAdmissibleInterval { lower });
    }
    if !(lower < gamma0 && gamma0 < 1.0) {
        return Err(invalid(format!("γ₀ = {gamma0} is not in ({lower}, 1)")));
    }
    let beta = alpha0 / d;
    let rb = r_level * beta;
    let alpha_bar = (1.0 - (alpha - alpha0)).max((2.0 + rb * gamma0) / (2.0 + rb));
    Ok(HmConstants { beta, alpha_bar })
}

/// `ρ_β(μ, ν) = Σ (1 + βV(x)) |μ(x) − ν(x)|`.
pub fn rho_beta_distance(mu: &[f64], nu: &[f64], v: &[f64], beta: f64) -> Result<f64> {
    if mu.len() != nu.len() || mu.len() != v.len() {
        return Err(invalid("measures and V must live on the same grid"));
    }
    Ok(mu
        .iter()
        .zip(nu)
        .zip(v)
        .map(|((a, b), w)| (1.0 + beta * w) * (a - b).abs())
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContractionReport {
    pub n_pairs: usize,
    pub max_ratio: f64,
    pub alpha_bar: f64,
    /// `max_ratio ≤ ᾱ + 1e-9`.
    pub holds: bool,
}

fn random_probability(n: usize, src: &mut crate::rng::GaussianSource) -> Vec<f64> {
    let kind = (src.uniform() * 3.0) as usize;
    let mut v = vec![0.0; n];
    match kind {
        0 => v[((src.uniform() * n as f64) as usize).min(n - 1)] = 1.0,
        1 => {
            for _ in 0..3 {
                v[((src.uniform() * n as f64) as usize).min(n - 1)] += src.uniform();
            }
        }
        _ => v.iter_mut().for_each(|x| *x = (6.0 * src.uniform()).exp()),
    }
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
    v
}

/// Largest observed `ρ_β(μ𝒫, ν𝒫) / ρ_β(μ, ν)` over random pairs of point
/// masses, sparse and dense probability vectors. Pairs with `μ = ν` count
/// as ratio 0.
pub fn verify_hm_contraction(
    kernel: &DiscreteKernel,
    v: &[f64],
    beta: f64,
    alpha_bar: f64,
    n_pairs: usize,
    stream: GaussianStream,
) -> Result<ContractionReport> {
    if v.len() != kernel.n {
        return Err(invalid("V has the wrong length"));
    }
    let mut src = stream.source();
    let mut max_ratio: f64 = 0.0;
    for _ in 0..n_pairs {
        let mu = random_probability(kernel.n, &mut src);
        let nu = random_probability(kernel.n, &mut src);
        let before = rho_beta_distance(&mu, &nu, v, beta)?;
        if before == 0.0 {
            continue;
        }
        let after = rho_beta_distance(&kernel.apply_left(&mu), &kernel.apply_left(&nu), v, beta)?;
        max_ratio = max_ratio.max(after / before);
    }
    Ok(ContractionReport {
        n_pairs,
        max_ratio,
        alpha_bar,
        holds: max_ratio <= alpha_bar + 1e-9,
    })
}
