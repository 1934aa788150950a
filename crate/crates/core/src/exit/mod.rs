//! Monte Carlo first-exit statistics and closed-form exit/hitting formulas.

mod examples;
mod oracles;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::par::map_indices;
use crate::rng::GaussianStream;
use crate::sde::{EmStepper, Estimate, SdeModel};

pub use examples::{arcsine_cdf, arcsine_occupation, line_hitting_2d, three_set_bound, LineHitting, Occupation};
pub use oracles::{
    ball_exit_expectation, ball_hitting_probability, fk_conditional_mean, fk_joint_mean, fk_laplace_interval,
    fk_laplace_one_sided, gbm_exit, shell_hitting_probability, GbmExit,
};

/// Number of bins of the exit-location histogram.
pub const HISTOGRAM_BINS: usize = 64;

type Membership = Arc<dyn Fn(&[f64]) -> bool + Send + Sync>;
type SignedDistance = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Which side of the hyperplane `x[axis] = level` is inside.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Below,
    Above,
}

/// Region whose first exit is monitored.
#[derive(Clone)]
pub enum Domain {
    /// Open ball `‖x − center‖ < radius`.
    Ball {
        radius: f64,
        center: Vec<f64>,
    },
    /// Open interval `(a, b)` in one dimension.
    Interval {
        a: f64,
        b: f64,
    },
    HalfSpace {
        level: f64,
        axis: usize,
        side: Side,
    },
    /// Arbitrary membership test. `distance` is an optional signed distance to
    /// the boundary (positive inside) used for exit-time interpolation and
    /// boundary-adaptive steps.
    Predicate {
        inside: Membership,
        distance: Option<SignedDistance>,
    },
}

impl fmt::Debug for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Ball { radius, center } => write!(f, "Ball({radius}, {center:?})"),
            Self::Interval { a, b } => write!(f, "Interval({a}, {b})"),
            Self::HalfSpace { level, axis, side } => write!(f, "HalfSpace({level}, {axis}, {side:?})"),
            Self::Predicate { distance, .. } => {
                write!(f, "Predicate(distance: {})", distance.is_some())
            }
        }
    }
}

impl Domain {
    pub fn ball(radius: f64, center: Vec<f64>) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(invalid("ball radius must be positive"));
        }
        Ok(Self::Ball { radius, center })
    }

    pub fn unit_ball(dim: usize) -> Self {
        Self::Ball {
            radius: 1.0,
            center: vec![0.0; dim],
        }
    }

    pub fn interval(a: f64, b: f64) -> Result<Self> {
        if !(a < b) {
            return Err(invalid(format!("empty interval ({a}, {b})")));
        }
        Ok(Self::Interval { a, b })
    }

    pub fn half_space(level: f64, axis: usize, side: Side) -> Self {
        Self::HalfSpace { level, axis, side }
    }

    pub fn predicate(inside: impl Fn(&[f64]) -> bool + Send + Sync + 'static) -> Self {
        Self::Predicate {
            inside: Arc::new(inside),
            distance: None,
        }
    }

    /// Domain `{x : distance(x) > 0}` given by a signed distance.
    pub fn from_signed_distance(distance: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        let distance: SignedDistance = Arc::new(distance);
        let d = distance.clone();
        Self::Predicate {
            inside: Arc::new(move |x| d(x) > 0.0),
            distance: Some(distance),
        }
    }

    /// Spherical shell `inner < ‖x − center‖ < outer`.
    pub fn shell(inner: f64, outer: f64, center: Vec<f64>) -> Result<Self> {
        if !(0.0 < inner && inner < outer) {
            return Err(invalid("shell radii must satisfy 0 < inner < outer"));
        }
        Ok(Self::from_signed_distance(move |x| {
            let r = norm_from(x, &center);
            (r - inner).min(outer - r)
        }))
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Self::Predicate { inside, .. } => inside(x),
            _ => self.signed_distance(x).is_some_and(|d| d > 0.0),
        }
    }

    /// Signed distance to the boundary, positive inside. `None` for predicates
    /// without a distance function.
    pub fn signed_distance(&self, x: &[f64]) -> Option<f64> {
        match self {
            Self::Ball { radius, center } => Some(radius - norm_from(x, center)),
            Self::Interval { a, b } => Some((x[0] - a).min(b - x[0])),
            Self::HalfSpace { level, axis, side } => Some(match side {
                Side::Below => level - x[*axis],
                Side::Above => x[*axis] - level,
            }),
            Self::Predicate { distance, .. } => distance.as_ref().map(|d| d(x)),
        }
    }

    /// Position on the boundary in `[0, 1]`: polar angle of the first two
    /// coordinates for balls, 0/1 for the left/right end of an interval,
    /// `atan` of the first free coordinate for half-spaces, 0 otherwise.
    pub fn boundary_parameter(&self, x: &[f64]) -> f64 {
        use std::f64::consts::PI;
        match self {
            Self::Ball { center, .. } => {
                if x.len() < 2 {
                    return if x[0] < center[0] { 0.0 } else { 1.0 };
                }
                let angle = (x[1] - center[1]).atan2(x[0] - center[0]);
                (angle + PI) / (2.0 * PI)
            }
            Self::Interval { a, b } => {
                if x[0] - a < b - x[0] {
                    0.0
                } else {
                    1.0
                }
            }
            Self::HalfSpace { axis, .. } => match (0..x.len()).find(|j| j != axis) {
                Some(j) => x[j].atan() / PI + 0.5,
                None => 0.0,
            },
            Self::Predicate { .. } => 0.0,
        }
    }

    fn check_dim(&self, dim: usize) -> Result<()> {
        let ok = match self {
            Self::Ball { center, .. } => center.len() == dim,
            Self::Interval { .. } => dim == 1,
            Self::HalfSpace { axis, .. } => *axis < dim,
            Self::Predicate { .. } => true,
        };
        if ok {
            Ok(())
        } else {
            Err(invalid(format!("{self:?} does not live in dimension {dim}")))
        }
    }
}

fn norm_from(x: &[f64], center: &[f64]) -> f64 {
    x.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum::<f64>().sqrt()
}

/// Time-step rule for exit simulations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepControl {
    Fixed(f64),
    /// `h = clamp(safety · dist² / tr(ggᵀ), h_min, h_max)`: large steps far
    /// from the boundary, small ones near it. Needs a signed distance.
    BoundaryAdaptive {
        h_min: f64,
        h_max: f64,
        safety: f64,
    },
}

impl StepControl {
    /// Adaptive rule with per-step noise about a fifth of the distance.
    pub fn adaptive(h_min: f64, h_max: f64) -> Self {
        Self::BoundaryAdaptive {
            h_min,
            h_max,
            safety: 0.04,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Self::Fixed(h) => h > 0.0,
            Self::BoundaryAdaptive { h_min, h_max, safety } => h_min > 0.0 && h_min <= h_max && safety > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(invalid(format!("invalid step control {self:?}")))
        }
    }

    fn is_adaptive(&self) -> bool {
        matches!(self, Self::BoundaryAdaptive { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExitOptions {
    pub step: StepControl,
    pub n_paths: usize,
    /// Paths still inside at `t_max` are censored.
    pub t_max: f64,
    /// Points at which `E[e^{-λτ}]` is estimated.
    pub lambdas: Vec<f64>,
}

impl ExitOptions {
    pub fn new(step: StepControl, n_paths: usize, t_max: f64) -> Self {
        Self {
            step,
            n_paths,
            t_max,
            lambdas: Vec::new(),
        }
    }

    pub fn with_lambdas(mut self, lambdas: &[f64]) -> Self {
        self.lambdas = lambdas.to_vec();
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaplaceEstimate {
    pub lambda: f64,
    pub value: f64,
    pub std_error: f64,
}

/// Outcome of one path. `exit_time` is `None` for censored paths, whose
/// `location` is the state at `t_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExitSample {
    pub path_id: u64,
    pub exit_time: Option<f64>,
    pub location: Vec<f64>,
}

/// Summary of an exit simulation. Means and Laplace transforms are over the
/// uncensored paths; `valid` is false when every path was censored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExitStatistics {
    pub n_paths: usize,
    pub n_exited: usize,
    pub mean_time: f64,
    pub time_std_error: f64,
    pub laplace: Vec<LaplaceEstimate>,
    pub exit_location_histogram: Vec<u64>,
    pub fraction_censored: f64,
    pub valid: bool,
}

impl ExitStatistics {
    pub fn laplace_at(&self, lambda: f64) -> Option<LaplaceEstimate> {
        self.laplace.iter().copied().find(|l| l.lambda == lambda)
    }

    pub fn mean(&self) -> Estimate {
        Estimate {
            value: self.mean_time,
            std_error: self.time_std_error,
        }
    }
}

/// Statistics together with the per-path samples.
#[derive(Debug, Clone)]
pub struct ExitRun {
    pub statistics: ExitStatistics,
    pub samples: Vec<ExitSample>,
}

impl ExitRun {
    pub fn exit_times(&self) -> Vec<f64> {
        self.samples.iter().filter_map(|s| s.exit_time).collect()
    }

    /// Monte Carlo estimate of `E[F(τ, X_τ)]` over uncensored paths.
    pub fn functional(&self, f: impl Fn(f64, &[f64]) -> f64) -> Estimate {
        let values: Vec<f64> = self
            .samples
            .iter()
            .filter_map(|s| s.exit_time.map(|t| f(t, &s.location)))
            .collect();
        Estimate::from_samples(&values)
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let dim = self.samples.first().map_or(0, |s| s.location.len());
        let mut header = vec!["path_id".to_string(), "exit_time".to_string()];
        header.extend((0..dim).map(|j| format!("x{j}")));
        w.write_record(&header)?;
        for s in &self.samples {
            let mut row = vec![
                s.path_id.to_string(),
                s.exit_time.map_or(String::new(), |t| t.to_string()),
            ];
            row.extend(s.location.iter().map(|v| v.to_string()));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Simulates paths from `x0` until they leave `domain` and summarises the
/// exit times. See [`mc_exit_samples`].
pub fn mc_exit(
    model: &SdeModel,
    x0: &[f64],
    domain: &Domain,
    opts: &ExitOptions,
    stream: GaussianStream,
) -> Result<ExitStatistics> {
    mc_exit_samples(model, x0, domain, opts, stream).map(|r| r.statistics)
}

/// Euler–Maruyama exit simulation. The exit is detected at the first step
/// that lands outside the domain; when a signed distance is available the
/// exit time and location are linearly interpolated between the two
/// straddling states, otherwise the step end is used.
pub fn mc_exit_samples(
    model: &SdeModel,
    x0: &[f64],
    domain: &Domain,
    opts: &ExitOptions,
    stream: GaussianStream,
) -> Result<ExitRun> {
    if x0.len() != model.dim {
        return Err(invalid("starting point has the wrong dimension"));
    }
    domain.check_dim(model.dim)?;
    opts.step.validate()?;
    if !(opts.t_max.is_finite() && opts.t_max > 0.0) {
        return Err(invalid("t_max must be finite and positive"));
    }
    if opts.n_paths == 0 {
        return Err(invalid("n_paths must be positive"));
    }
    if opts.lambdas.iter().any(|&l| !(l >= 0.0)) {
        return Err(invalid("Laplace parameters must be non-negative"));
    }
    if !domain.contains(x0) {
        return Err(Error::OutsideDomain);
    }
    if opts.step.is_adaptive() && domain.signed_distance(x0).is_none() {
        return Err(invalid("adaptive steps need a domain with a signed distance"));
    }
    let samples = map_indices(opts.n_paths, |i| {
        exit_path(model, x0, domain, opts, stream.substream(i), i)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let statistics = summarise(&samples, domain, &opts.lambdas);
    Ok(ExitRun { statistics, samples })
}

fn exit_path(
    model: &SdeModel,
    x0: &[f64],
    domain: &Domain,
    opts: &ExitOptions,
    stream: GaussianStream,
    path_id: u64,
) -> Result<ExitSample> {
    let mut src = stream.source();
    let mut stepper = EmStepper::new(model);
    let mut x = x0.to_vec();
    let mut prev = x0.to_vec();
    let mut dw = vec![0.0; model.noise_dim];
    let mut dist = domain.signed_distance(&x);
    let mut t = 0.0;
    let mut k = 0usize;
    while t < opts.t_max {
        let h = match opts.step {
            StepControl::Fixed(h) => h,
            StepControl::BoundaryAdaptive { h_min, h_max, safety } => {
                let d = dist.unwrap_or(0.0);
                let tr = stepper.diffusion_trace(&x).max(f64::MIN_POSITIVE);
                (safety * d * d / tr).clamp(h_min, h_max)
            }
        };
        let sd = h.sqrt();
        for v in dw.iter_mut() {
            *v = sd * src.normal();
        }
        prev.copy_from_slice(&x);
        k += 1;
        if !stepper.step(&mut x, h, &dw) {
            return Err(Error::BlowUp { step: k, time: t + h });
        }
        let new_dist = domain.signed_distance(&x);
        let left = match new_dist {
            Some(d) => d <= 0.0,
            None => !domain.contains(&x),
        };
        if left {
            let s = match (dist, new_dist) {
                (Some(d0), Some(d1)) if d0 > d1 => (d0 / (d0 - d1)).clamp(0.0, 1.0),
                _ => 1.0,
            };
            let location = prev.iter().zip(&x).map(|(a, b)| a + s * (b - a)).collect();
            return Ok(ExitSample {
                path_id,
                exit_time: Some(t + s * h),
                location,
            });
        }
        dist = new_dist;
        t += h;
    }
    Ok(ExitSample {
        path_id,
        exit_time: None,
        location: x,
    })
}

fn summarise(samples: &[ExitSample], domain: &Domain, lambdas: &[f64]) -> ExitStatistics {
    let n_paths = samples.len();
    let times: Vec<f64> = samples.iter().filter_map(|s| s.exit_time).collect();
    let n_exited = times.len();
    let mean = Estimate::from_samples(&times);
    let laplace = lambdas
        .iter()
        .map(|&lambda| {
            let values: Vec<f64> = times.iter().map(|t| (-lambda * t).exp()).collect();
            let e = Estimate::from_samples(&values);
            LaplaceEstimate {
                lambda,
                value: e.value,
                std_error: e.std_error,
            }
        })
        .collect();
    let mut histogram = vec![0u64; HISTOGRAM_BINS];
    for s in samples.iter().filter(|s| s.exit_time.is_some()) {
        let p = domain.boundary_parameter(&s.location);
        let bin = ((p * HISTOGRAM_BINS as f64) as usize).min(HISTOGRAM_BINS - 1);
        histogram[bin] += 1;
    }
    ExitStatistics {
        n_paths,
        n_exited,
        mean_time: mean.value,
        time_std_error: mean.std_error,
        laplace,
        exit_location_histogram: histogram,
        fraction_censored: (n_paths - n_exited) as f64 / n_paths as f64,
        valid: n_exited > 0,
    }
}
