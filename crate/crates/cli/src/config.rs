//! Experiment configuration files (TOML, or JSON by extension).

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::ModelSpec;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{path}: unknown experiment '{name}' (see `stochlab list`)")]
    UnknownExperiment { path: PathBuf, name: String },
    #[error("{path}: {message}")]
    Schema { path: PathBuf, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Toml,
    Json,
}

/// Raw configuration text together with its origin.
#[derive(Debug, Clone)]
pub struct Source {
    pub path: PathBuf,
    pub text: String,
    pub format: Format,
}

impl Source {
    pub fn read(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let format = match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Format::Json,
            _ => Format::Toml,
        };
        Ok(Self {
            path: path.to_path_buf(),
            text,
            format,
        })
    }

    pub fn inline(text: &str, format: Format) -> Self {
        Self {
            path: PathBuf::from("<inline>"),
            text: text.to_string(),
            format,
        }
    }

    fn parse<T: DeserializeOwned>(&self) -> Result<T, ConfigError> {
        let message = match self.format {
            Format::Toml => match toml::from_str(&self.text) {
                Ok(v) => return Ok(v),
                Err(e) => toml_message(&self.text, &e),
            },
            Format::Json => match serde_json::from_str(&self.text) {
                Ok(v) => return Ok(v),
                Err(e) => e.to_string(),
            },
        };
        Err(ConfigError::Parse {
            path: self.path.clone(),
            message,
        })
    }

    /// Name of the experiment, read before the full typed parse.
    pub fn experiment_name(&self) -> Result<String, ConfigError> {
        #[derive(Deserialize)]
        struct Head {
            experiment: String,
        }
        let head: Head = self.parse()?;
        Ok(head.experiment)
    }

    pub fn schema_error(&self, message: impl Into<String>) -> ConfigError {
        ConfigError::Schema {
            path: self.path.clone(),
            message: message.into(),
        }
    }
}

fn toml_message(text: &str, e: &toml::de::Error) -> String {
    let detail = e.message().trim().to_string();
    match e.span() {
        Some(span) => {
            let (line, col) = line_col(text, span.start);
            format!("line {line}, column {col}: {detail}")
        }
        None => detail,
    }
}

/// 1-based line and column of a byte offset.
pub fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, col)
}

/// A whole configuration with experiment-specific parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(deserialize = "P: DeserializeOwned + Default"))]
pub struct Config<P> {
    pub experiment: String,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub model: Option<ModelSpec>,
    #[serde(default)]
    pub params: P,
}

impl<P: DeserializeOwned + Default> Config<P> {
    pub fn load(source: &Source) -> Result<Self, ConfigError> {
        source.parse()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug, Default, Serialize, Deserialize)]
    #[serde(default, deny_unknown_fields)]
    struct P {
        n: usize,
    }

    #[test]
    fn line_and_column() {
        assert_eq!(line_col("ab\ncd", 4), (2, 2));
        assert_eq!(line_col("ab", 0), (1, 1));
    }

    #[test]
    fn unknown_key_reports_position() {
        let src = Source::inline("experiment = \"x\"\n[params]\nn = 3\nbogus = 1\n", Format::Toml);
        let err = Config::<P>::load(&src).unwrap_err().to_string();
        assert!(err.contains("line 4, column 1"), "{err}");
        assert!(err.contains("bogus"), "{err}");
        let src = Source::inline("experiment = \"x\"\nextra = true\n", Format::Toml);
        assert!(Config::<P>::load(&src).unwrap_err().to_string().contains("line 2"));
    }

    #[test]
    fn json_errors_report_position() {
        let src = Source::inline("{\"experiment\": \"x\",\n \"params\": {\"m\": 1}}", Format::Json);
        let err = Config::<P>::load(&src).unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
    }

    #[test]
    fn defaults_apply() {
        let src = Source::inline("experiment = \"x\"", Format::Toml);
        let c = Config::<P>::load(&src).unwrap();
        assert_eq!(c.params.n, 0);
        assert!(c.seed.is_none() && c.model.is_none());
    }
}
