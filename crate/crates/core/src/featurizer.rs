//! Applies a theory config to a corpus, one proxy-feature column per spec.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::InstanceRecord;
use crate::matrix::{FeatureMatrix, FeatureRow};
use crate::theory::{ProxyFeatureSpec, TheoryConfig};

/// `<channel>__<calculator>[__<key>=<value>...]`, parameters in key order.
pub fn feature_name(spec: &ProxyFeatureSpec) -> String {
    let mut name = format!("{}__{}", spec.channel, spec.calculator.name());
    for (key, value) in spec.calculator.params() {
        name.push_str(&format!("__{key}={value}"));
    }
    name
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSummary {
    pub name: String,
    pub missing: usize,
    pub missing_rate: f64,
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub mean: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeaturizationReport {
    pub theory: String,
    pub instances: usize,
    pub features: Vec<FeatureSummary>,
    /// Instances lacking each channel the config refers to.
    pub absent_channels: BTreeMap<String, usize>,
}

fn featurize_row(record: &InstanceRecord, specs: &[ProxyFeatureSpec]) -> FeatureRow {
    let values = specs
        .iter()
        .map(|spec| record.channel(&spec.channel).and_then(|s| spec.evaluate(s)))
        .collect();
    FeatureRow {
        id: record.id.clone(),
        label: record.label,
        values,
    }
}

pub fn featurize(
    corpus: &[InstanceRecord],
    config: &TheoryConfig,
) -> (FeatureMatrix, FeaturizationReport) {
    let rows: Vec<FeatureRow> = corpus
        .par_iter()
        .map(|r| featurize_row(r, &config.features))
        .collect();
    let matrix = FeatureMatrix {
        feature_names: config.feature_names(),
        rows,
    };
    let report = build_report(&matrix, corpus, config);
    (matrix, report)
}

fn build_report(
    matrix: &FeatureMatrix,
    corpus: &[InstanceRecord],
    config: &TheoryConfig,
) -> FeaturizationReport {
    let n = matrix.n_rows();
    let features = matrix
        .feature_names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let present: Vec<f64> = matrix.column(j).flatten().collect();
            let missing = n - present.len();
            let (min, max, mean) = if present.is_empty() {
                (None, None, None)
            } else {
                (
                    Some(present.iter().copied().fold(f64::INFINITY, f64::min)),
                    Some(present.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
                    Some(present.iter().sum::<f64>() / present.len() as f64),
                )
            };
            FeatureSummary {
                name: name.clone(),
                missing,
                missing_rate: if n == 0 {
                    0.0
                } else {
                    missing as f64 / n as f64
                },
                min,
                max,
                mean,
            }
        })
        .collect();
    let mut absent_channels = BTreeMap::new();
    for spec in &config.features {
        absent_channels
            .entry(spec.channel.clone())
            .or_insert_with(|| {
                corpus
                    .iter()
                    .filter(|r| r.channel(&spec.channel).is_none())
                    .count()
            });
    }
    FeaturizationReport {
        theory: config.name.clone(),
        instances: n,
        features,
        absent_channels,
    }
}
