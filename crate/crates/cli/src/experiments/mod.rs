//! Registry of named experiments.

mod calculus;
mod ergodic;
mod exits;
mod large_dev;

use std::fmt::Debug;
use std::path::PathBuf;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::config::{Config, ConfigError, Source};
use crate::model::ModelSpec;
use crate::output::RunContext;

pub const DEFAULT_SEED: u64 = 20_240_611;

pub trait Experiment {
    const NAME: &'static str;
    const ABOUT: &'static str;
    /// Acceptance criterion reproduced by the default configuration.
    const CRITERION: Option<u8> = None;
    type Params: Serialize + DeserializeOwned + Default + Debug + 'static;

    /// Model used when the config has no `[model]` table; `None` means the
    /// experiment fixes its own model and rejects one.
    fn default_model() -> Option<ModelSpec> {
        None
    }

    fn validate(params: &Self::Params, model: Option<&ModelSpec>) -> Result<(), String>;

    fn run(params: &Self::Params, model: Option<&ModelSpec>, ctx: &mut RunContext) -> anyhow::Result<()>;
}

type RunFn = Box<dyn FnOnce(&mut RunContext) -> anyhow::Result<()>>;

/// A validated configuration ready to run.
pub struct Prepared {
    pub experiment: &'static str,
    pub seed: u64,
    pub output: Option<PathBuf>,
    /// Resolved configuration: defaults filled in, seed applied.
    pub resolved: serde_json::Value,
    run: RunFn,
}

impl Prepared {
    pub fn run(self, ctx: &mut RunContext) -> anyhow::Result<()> {
        (self.run)(ctx)
    }
}

pub struct Entry {
    pub name: &'static str,
    pub about: &'static str,
    pub criterion: Option<u8>,
    prepare: fn(&Source, Option<u64>) -> Result<Prepared, ConfigError>,
}

impl Entry {
    pub fn prepare(&self, source: &Source, seed: Option<u64>) -> Result<Prepared, ConfigError> {
        (self.prepare)(source, seed)
    }
}

fn prepare<E: Experiment>(source: &Source, seed_override: Option<u64>) -> Result<Prepared, ConfigError> {
    let cfg = Config::<E::Params>::load(source)?;
    let model = match (E::default_model(), cfg.model) {
        (None, Some(_)) => return Err(source.schema_error(format!("experiment '{}' does not take a model", E::NAME))),
        (None, None) => None,
        (Some(default), given) => Some(given.unwrap_or(default)),
    };
    if let Some(m) = &model {
        m.build().map_err(|e| source.schema_error(format!("model: {e}")))?;
    }
    E::validate(&cfg.params, model.as_ref()).map_err(|e| source.schema_error(format!("params: {e}")))?;
    let seed = seed_override.or(cfg.seed).unwrap_or(DEFAULT_SEED);
    let resolved = serde_json::json!({
        "experiment": E::NAME,
        "seed": seed,
        "model": model,
        "params": cfg.params,
    });
    let params = cfg.params;
    Ok(Prepared {
        experiment: E::NAME,
        seed,
        output: cfg.output,
        resolved,
        run: Box::new(move |ctx| E::run(&params, model.as_ref(), ctx)),
    })
}

macro_rules! registry {
    ($($t:ty),* $(,)?) => {
        &[$(Entry {
            name: <$t>::NAME,
            about: <$t>::ABOUT,
            criterion: <$t>::CRITERION,
            prepare: prepare::<$t>,
        }),*]
    };
}

pub static REGISTRY: &[Entry] = registry![
    exits::ExitBall,
    exits::Recurrence,
    exits::FeynmanKac,
    exits::Arcsine,
    calculus::Ito,
    calculus::FokkerPlanck,
    ergodic::HairerMattingly,
    ergodic::Birkhoff,
    large_dev::SchilderFw,
    large_dev::Quasipotential,
    large_dev::Arrhenius,
    large_dev::EyringKramers,
    ergodic::Certificates,
    calculus::Wiener,
    ergodic::Lyapunov,
    large_dev::MinAction,
    large_dev::Hamilton,
    large_dev::Legendre,
];

pub fn find(name: &str) -> Option<&'static Entry> {
    REGISTRY.iter().find(|e| e.name == name)
}

/// Template configuration for an experiment: all defaults spelled out.
pub fn template(name: &str) -> Option<String> {
    let entry = find(name)?;
    let src = Source::inline(&format!("experiment = \"{name}\""), crate::config::Format::Toml);
    let prepared = entry.prepare(&src, None).ok()?;
    let mut v = prepared.resolved;
    strip_nulls(&mut v);
    toml::to_string_pretty(&v).ok()
}

/// TOML has no null; unset optional fields are simply omitted.
fn strip_nulls(v: &mut serde_json::Value) {
    match v {
        serde_json::Value::Object(map) => {
            map.retain(|_, x| !x.is_null());
            map.values_mut().for_each(strip_nulls);
        }
        serde_json::Value::Array(items) => items.iter_mut().for_each(strip_nulls),
        _ => {}
    }
}

// Validation helpers.

pub(crate) fn positive(name: &str, v: f64) -> Result<(), String> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(format!("{name} must be positive and finite, got {v}"))
    }
}

pub(crate) fn at_least(name: &str, v: usize, min: usize) -> Result<(), String> {
    if v >= min {
        Ok(())
    } else {
        Err(format!("{name} must be at least {min}, got {v}"))
    }
}

pub(crate) fn ordered(name: &str, lo: f64, hi: f64) -> Result<(), String> {
    if lo < hi && lo.is_finite() && hi.is_finite() {
        Ok(())
    } else {
        Err(format!("{name}: need finite lower < upper, got {lo} and {hi}"))
    }
}

pub(crate) fn require_gradient(model: Option<&ModelSpec>) -> Result<(), String> {
    match model {
        Some(ModelSpec::Gradient { .. }) => Ok(()),
        _ => Err("this experiment needs a gradient model (preset = \"gradient\")".into()),
    }
}

pub(crate) fn require_scalar(model: Option<&ModelSpec>) -> Result<(), String> {
    match model {
        Some(m) if m.dim() != 1 => Err("this experiment needs a one-dimensional model".into()),
        _ => Ok(()),
    }
}

pub(crate) fn build(model: Option<&ModelSpec>) -> anyhow::Result<stochlab::SdeModel> {
    model
        .expect("experiment declares a default model")
        .build()
        .map_err(anyhow::Error::msg)
}
