//! Named SDE presets.

use serde::{Deserialize, Serialize};
use stochlab::{Potential, SdeModel};

use crate::expr::Expr;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    /// Standard Brownian motion.
    Bm {
        #[serde(default = "one_usize")]
        dim: usize,
    },
    /// `dX = −θX dt + σ dW`.
    Ou {
        #[serde(default = "one")]
        theta: f64,
        #[serde(default = "one")]
        sigma: f64,
    },
    /// `dX = rX dt + σX dW`.
    Gbm {
        r: f64,
        #[serde(default = "one")]
        sigma: f64,
    },
    /// `dX = −U'(X) dt + noise dW`; `noise` defaults to √2.
    Gradient {
        potential: String,
        #[serde(default)]
        noise: Option<f64>,
    },
}

fn one() -> f64 {
    1.0
}

fn one_usize() -> usize {
    1
}

impl ModelSpec {
    pub fn gradient(potential: &str, noise: Option<f64>) -> Self {
        Self::Gradient {
            potential: potential.into(),
            noise,
        }
    }

    pub fn build(&self) -> Result<SdeModel, String> {
        Ok(match self {
            Self::Bm { dim } => {
                if *dim == 0 {
                    return Err("bm: dim must be positive".into());
                }
                SdeModel::brownian(*dim)
            }
            Self::Ou { theta, sigma } => {
                let (t, s) = (*theta, *sigma);
                if !(s > 0.0) {
                    return Err("ou: sigma must be positive".into());
                }
                SdeModel::scalar("ou", move |x| -t * x, move |_| s)
            }
            Self::Gbm { r, sigma } => {
                let (r, s) = (*r, *sigma);
                SdeModel::scalar("gbm", move |x| r * x, move |x| s * x)
            }
            Self::Gradient { noise, .. } => {
                let pot = self.potential()?.expect("gradient preset");
                match noise {
                    None => SdeModel::gradient(pot, 1),
                    Some(s) if *s > 0.0 => SdeModel::gradient_with_noise(pot, 1, *s),
                    Some(_) => return Err("gradient: noise must be positive".into()),
                }
            }
        })
    }

    /// The potential of a gradient preset, parsed and differentiated.
    pub fn potential(&self) -> Result<Option<Potential>, String> {
        let Self::Gradient { potential, .. } = self else {
            return Ok(None);
        };
        let u = Expr::parse(potential, "x").map_err(|e| format!("potential '{potential}': {e}"))?;
        let du = u.derivative();
        Ok(Some(Potential::scalar(move |x| u.eval(x), move |x| du.eval(x))))
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Bm { dim } => *dim,
            _ => 1,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_build() {
        let m = ModelSpec::Ou { theta: 2.0, sigma: 0.5 }.build().unwrap();
        assert_eq!(m.f1(1.5), -3.0);
        assert_eq!(m.d1(0.0), 0.25);
        let g = ModelSpec::gradient("x^4/4 - x^2/2", None).build().unwrap();
        assert!((g.f1(2.0) + 6.0).abs() < 1e-12);
        assert!((g.d1(0.0) - 2.0).abs() < 1e-12);
        let b = ModelSpec::Bm { dim: 3 }.build().unwrap();
        assert_eq!(b.dim, 3);
    }

    #[test]
    fn bad_presets() {
        assert!(ModelSpec::gradient("x^", None).build().is_err());
        assert!(ModelSpec::Bm { dim: 0 }.build().is_err());
        assert!(ModelSpec::gradient("x^2", Some(-1.0)).build().is_err());
    }

    #[test]
    fn toml_shape() {
        let m: ModelSpec = toml::from_str("preset = \"gbm\"\nr = 0.3").unwrap();
        assert_eq!(m, ModelSpec::Gbm { r: 0.3, sigma: 1.0 });
        assert!(toml::from_str::<ModelSpec>("preset = \"ou\"\nbogus = 1").is_err());
    }
}
