//! Deterministic synthetic corpora with planted anger bursts and optimism
//! up-trends in the positive class.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::InstanceRecord;
use crate::error::{Error, Result};

/// Every channel the shipped theory configs read.
pub const CHANNELS: [&str; 15] = [
    "offense",
    "attack",
    "hate",
    "neutrality",
    "positivity",
    "negativity",
    "lm_probability",
    "joy",
    "optimism",
    "sadness",
    "anger",
    "subjectivity",
    "adult_language",
    "ambiguity",
    "morphosyntactic_ambiguity",
];

const BURST_CHANNEL: &str = "anger";
const TREND_CHANNEL: &str = "optimism";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    pub instances: usize,
    pub positive_rate: f64,
    pub channels: Vec<String>,
    /// Chance that a positive instance carries the planted signals.
    pub signal_strength: f64,
    pub min_length: usize,
    pub max_length: usize,
    /// Standard deviation of the Gaussian noise added to every value.
    pub noise: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            instances: 1000,
            positive_rate: 0.5,
            channels: CHANNELS.iter().map(|c| c.to_string()).collect(),
            signal_strength: 1.0,
            min_length: 8,
            max_length: 16,
            noise: 0.03,
            seed: 0,
        }
    }
}

// A trend starts below TREND_START and rises by at least MIN_SLOPE per token
// without passing TREND_TOP, which bounds the series length:
// 0.05 + 0.05 * (18 - 1) = 0.9.
const TREND_START: f64 = 0.05;
const MIN_SLOPE: f64 = 0.05;
const MAX_SLOPE: f64 = 0.1;
const TREND_TOP: f64 = 0.95;
pub const MAX_LENGTH: usize = 18;

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let unit = |field: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::invalid(
                    format!("synth.{field}"),
                    "must lie in [0, 1]",
                ))
            }
        };
        unit("positive_rate", self.positive_rate)?;
        unit("signal_strength", self.signal_strength)?;
        if !(self.noise.is_finite() && self.noise >= 0.0) {
            return Err(Error::invalid(
                "synth.noise",
                "must be finite and non-negative",
            ));
        }
        if self.min_length < 2 || self.min_length > self.max_length || self.max_length > MAX_LENGTH
        {
            return Err(Error::invalid(
                "synth.length",
                format!("need 2 <= min_length <= max_length <= {MAX_LENGTH}"),
            ));
        }
        if self.channels.is_empty() {
            return Err(Error::invalid("synth.channels", "must not be empty"));
        }
        let mut seen = std::collections::BTreeSet::new();
        if let Some(dup) = self.channels.iter().find(|c| !seen.insert(c.as_str())) {
            return Err(Error::invalid(
                "synth.channels",
                format!("`{dup}` listed twice"),
            ));
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let spec: SynthSpec =
            toml::from_str(text).map_err(|e| Error::invalid("synth", e.message().to_string()))?;
        spec.validate()?;
        Ok(spec)
    }
}

/// Low flat level plus noise.
fn flat(rng: &mut ChaCha8Rng, len: usize, noise: &Normal<f64>) -> Vec<f64> {
    let level = rng.random_range(0.05..0.35);
    (0..len).map(|_| level + noise.sample(rng)).collect()
}

/// A low level that jumps by at least 0.6 at one token and may fall back a
/// few tokens later.
fn burst(rng: &mut ChaCha8Rng, len: usize, noise: &Normal<f64>) -> Vec<f64> {
    let base = rng.random_range(0.02..0.15);
    let height = rng.random_range(0.65..0.8);
    let start = rng.random_range(1..len);
    let end = start + rng.random_range(1..=3);
    (0..len)
        .map(|t| base + if t >= start && t < end { height } else { 0.0 } + noise.sample(rng))
        .collect()
}

fn trend(rng: &mut ChaCha8Rng, len: usize, noise: &Normal<f64>) -> Vec<f64> {
    let start = rng.random_range(0.0..TREND_START);
    let max_slope = MAX_SLOPE.min((TREND_TOP - start) / (len - 1) as f64);
    let slope = rng.random_range(MIN_SLOPE..=max_slope);
    (0..len)
        .map(|t| start + slope * t as f64 + noise.sample(rng))
        .collect()
}

fn instance(spec: &SynthSpec, noise: &Normal<f64>, index: usize) -> InstanceRecord {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(index as u64);
    let label = u8::from(rng.random_bool(spec.positive_rate));
    let signal = label == 1 && rng.random_bool(spec.signal_strength);
    let len = rng.random_range(spec.min_length..=spec.max_length);
    let channels = spec
        .channels
        .iter()
        .map(|name| {
            let series = match name.as_str() {
                BURST_CHANNEL if signal => burst(&mut rng, len, noise),
                TREND_CHANNEL if signal => trend(&mut rng, len, noise),
                _ => flat(&mut rng, len, noise),
            };
            (
                name.clone(),
                series.into_iter().map(|v| v.clamp(0.0, 1.0)).collect(),
            )
        })
        .collect();
    InstanceRecord {
        id: format!("synth-{index:06}"),
        label: Some(label),
        channels,
        text: None,
    }
}

/// Generates `spec.instances` records. Instance `i` draws from its own
/// stream of the seeded generator, so the output does not depend on thread
/// scheduling.
pub fn generate(spec: &SynthSpec) -> Result<Vec<InstanceRecord>> {
    spec.validate()?;
    let noise =
        Normal::new(0.0, spec.noise).map_err(|e| Error::invalid("synth.noise", e.to_string()))?;
    Ok((0..spec.instances)
        .into_par_iter()
        .map(|i| instance(spec, &noise, i))
        .collect())
}
