//! Theory configurations: named, ordered lists of proxy features.
//!
//! Configs are TOML documents:
//!
//! ```toml
//! [theory]
//! name = "incongruity"
//!
//! [[feature]]
//! channel = "anger"
//! calculator = "max_change"
//! hypothesis = "sudden surges of anger"
//!
//! [[feature]]
//! channel = "optimism"
//! calculator = "linear_fit"
//! params = { attr = "slope" }
//! hypothesis = "optimism rises over the text"
//! ```
//!
//! Parameter defaults are materialized on read, and written back explicitly.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::featurizer::feature_name;
use crate::tsfeatures::{Calculator, ParamValue};

/// One proxy feature: a calculator applied to one channel, with the
/// qualitative manifestation it is meant to measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawFeature", into = "RawFeature")]
pub struct ProxyFeatureSpec {
    pub channel: String,
    pub calculator: Calculator,
    pub hypothesis: String,
}

impl ProxyFeatureSpec {
    pub fn new(
        channel: impl Into<String>,
        calculator: Calculator,
        hypothesis: impl Into<String>,
    ) -> Self {
        Self {
            channel: channel.into(),
            calculator,
            hypothesis: hypothesis.into(),
        }
    }

    pub fn name(&self) -> String {
        feature_name(self)
    }

    pub fn evaluate(&self, series: &[f64]) -> Option<f64> {
        self.calculator.evaluate(series)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFeature {
    channel: String,
    calculator: String,
    #[serde(default)]
    params: BTreeMap<String, ParamValue>,
    #[serde(default)]
    hypothesis: String,
}

fn validate_channel(channel: &str) -> Result<()> {
    let ok = !channel.is_empty()
        && !channel.contains("__")
        && channel
            .chars()
            .all(|c| c.is_alphanumeric() || c == '_' || c == '-' || c == '.');
    if ok {
        Ok(())
    } else {
        Err(Error::invalid(
            "channel",
            format!("`{channel}` must be non-empty, use [A-Za-z0-9_.-] and not contain `__`"),
        ))
    }
}

impl TryFrom<RawFeature> for ProxyFeatureSpec {
    type Error = Error;

    fn try_from(raw: RawFeature) -> Result<Self> {
        validate_channel(&raw.channel)?;
        let calculator = Calculator::from_params(&raw.calculator, &raw.params)?;
        Ok(ProxyFeatureSpec {
            channel: raw.channel,
            calculator,
            hypothesis: raw.hypothesis,
        })
    }
}

impl From<ProxyFeatureSpec> for RawFeature {
    fn from(spec: ProxyFeatureSpec) -> Self {
        RawFeature {
            params: spec.calculator.params(),
            calculator: spec.calculator.name().to_string(),
            channel: spec.channel,
            hypothesis: spec.hypothesis,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TheoryConfig {
    pub name: String,
    pub features: Vec<ProxyFeatureSpec>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTheoryHeader {
    name: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    theory: RawTheoryHeader,
    #[serde(default)]
    feature: Vec<RawFeature>,
}

impl TheoryConfig {
    pub fn new(name: impl Into<String>, features: Vec<ProxyFeatureSpec>) -> Result<Self> {
        let config = TheoryConfig {
            name: name.into(),
            features,
        };
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<()> {
        if self.name.trim().is_empty() {
            return Err(Error::invalid("theory.name", "must be non-empty"));
        }
        let mut seen = HashSet::new();
        for (i, spec) in self.features.iter().enumerate() {
            let name = spec.name();
            if !seen.insert(name.clone()) {
                return Err(Error::invalid(
                    format!("feature[{i}]"),
                    format!("duplicate feature name `{name}`"),
                ));
            }
        }
        Ok(())
    }

    pub fn feature_names(&self) -> Vec<String> {
        self.features.iter().map(ProxyFeatureSpec::name).collect()
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawConfig =
            toml::from_str(text).map_err(|e| Error::invalid("theory config", e.to_string()))?;
        let features = raw
            .feature
            .into_iter()
            .enumerate()
            .map(|(i, f)| {
                ProxyFeatureSpec::try_from(f)
                    .map_err(|e| Error::invalid(format!("feature[{i}]"), e.to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        TheoryConfig::new(raw.theory.name, features)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        let raw = RawConfig {
            theory: RawTheoryHeader {
                name: self.name.clone(),
            },
            feature: self
                .features
                .iter()
                .cloned()
                .map(RawFeature::from)
                .collect(),
        };
        toml::to_string(&raw).map_err(|e| Error::Serialize(e.to_string()))
    }
}

pub fn read_theory_config(path: impl AsRef<Path>) -> Result<TheoryConfig> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    TheoryConfig::from_toml_str(&text).map_err(|e| match e {
        Error::Invalid { field, message } => Error::Invalid {
            field: format!("{}: {field}", path.display()),
            message,
        },
        other => other,
    })
}

pub fn write_theory_config(config: &TheoryConfig, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, config.to_toml_string()?).map_err(|e| Error::io(path, e))
}
