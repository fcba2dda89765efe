use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::binning::FeatureBins;
use super::settings::TrainSettings;
use crate::error::{Error, Result};
use crate::matrix::FeatureMatrix;
use crate::theory::ProxyFeatureSpec;

pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TermKind {
    Main {
        feature: usize,
    },
    /// Features `(first, second)` with `first < second`.
    Pair {
        first: usize,
        second: usize,
    },
}

/// One additive term: a lookup table over bins (main) or bin pairs (pair,
/// row-major `[bin_first * cols + bin_second]`), with the per-cell range of
/// the bagged estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermFunction {
    pub name: String,
    #[serde(flatten)]
    pub kind: TermKind,
    /// Table shape: `(bins, 1)` for mains, `(bins_first, bins_second)` for pairs.
    pub shape: (usize, usize),
    pub table: Vec<f64>,
    pub envelope_min: Vec<f64>,
    pub envelope_max: Vec<f64>,
    /// Training rows per cell.
    pub counts: Vec<u64>,
}

impl TermFunction {
    pub fn is_pair(&self) -> bool {
        matches!(self.kind, TermKind::Pair { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMeta {
    pub name: String,
    /// Present when the model was trained together with its theory config.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec: Option<ProxyFeatureSpec>,
}

impl FeatureMeta {
    pub fn hypothesis(&self) -> Option<&str> {
        self.spec.as_ref().map(|s| s.hypothesis.as_str())
    }
}

/// Loss history of one boosting stage in one bag. Index 0 is the loss before
/// the first epoch.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTrace {
    pub epochs: usize,
    /// Epoch whose tables were kept.
    pub best_epoch: usize,
    /// Bootstrap-weighted log-loss on the bag's inner training rows.
    pub train_loss: Vec<f64>,
    pub validation_loss: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BagMetrics {
    /// Distinct rows drawn into the bootstrap sample.
    pub train_rows: usize,
    pub validation_rows: usize,
    pub mains: StageTrace,
    pub pairs: StageTrace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainMetrics {
    pub rows: usize,
    pub positives: usize,
    pub train_log_loss: f64,
    pub train_accuracy: f64,
    /// Per-term means over the training rows removed into the intercept.
    pub term_means: Vec<f64>,
    pub bags: Vec<BagMetrics>,
}

/// A trained additive model: `logit = intercept + sum(mains) + sum(pairs)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ga2mModel {
    pub version: u32,
    pub theory: String,
    pub settings: TrainSettings,
    pub features: Vec<FeatureMeta>,
    pub bins: Vec<FeatureBins>,
    /// Coarsened bins used by pair terms.
    pub pair_bins: Vec<FeatureBins>,
    pub intercept: f64,
    pub mains: Vec<TermFunction>,
    pub pairs: Vec<TermFunction>,
    pub metrics: TrainMetrics,
}

/// A term's share of one prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermContribution {
    pub term: String,
    pub value: f64,
    pub envelope: (f64, f64),
}

pub fn sigmoid(logit: f64) -> f64 {
    1.0 / (1.0 + (-logit).exp())
}

impl Ga2mModel {
    pub fn feature_names(&self) -> Vec<&str> {
        self.features.iter().map(|f| f.name.as_str()).collect()
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }

    pub fn terms(&self) -> impl Iterator<Item = &TermFunction> {
        self.mains.iter().chain(&self.pairs)
    }

    pub fn term(&self, name: &str) -> Option<&TermFunction> {
        self.terms().find(|t| t.name == name)
    }

    fn check_row(&self, row: &[Option<f64>]) -> Result<()> {
        if row.len() != self.features.len() {
            return Err(Error::invalid(
                "row",
                format!(
                    "has {} values, model expects {}",
                    row.len(),
                    self.features.len()
                ),
            ));
        }
        Ok(())
    }

    /// Cell of `term` that `row` falls in.
    pub fn cell(&self, term: &TermFunction, row: &[Option<f64>]) -> usize {
        match term.kind {
            TermKind::Main { feature } => self.bins[feature].bin(row[feature]),
            TermKind::Pair { first, second } => {
                let a = self.pair_bins[first].bin(row[first]);
                let b = self.pair_bins[second].bin(row[second]);
                a * term.shape.1 + b
            }
        }
    }

    /// Every term's contribution for a row in model feature order: mains in
    /// feature order, then pairs.
    pub fn term_contributions(&self, row: &[Option<f64>]) -> Result<Vec<TermContribution>> {
        self.check_row(row)?;
        Ok(self
            .terms()
            .map(|term| {
                let cell = self.cell(term, row);
                TermContribution {
                    term: term.name.clone(),
                    value: term.table[cell],
                    envelope: (term.envelope_min[cell], term.envelope_max[cell]),
                }
            })
            .collect())
    }

    /// Intercept plus contributions, added left to right. Given the output of
    /// [`Self::term_contributions`] this is the model logit bit for bit.
    pub fn logit_from(&self, contributions: &[TermContribution]) -> f64 {
        contributions
            .iter()
            .fold(self.intercept, |acc, c| acc + c.value)
    }

    pub fn predict_logit(&self, row: &[Option<f64>]) -> Result<f64> {
        Ok(self.logit_from(&self.term_contributions(row)?))
    }

    pub fn predict_proba(&self, row: &[Option<f64>]) -> Result<f64> {
        self.predict_logit(row).map(sigmoid)
    }

    /// For each model feature, its column in `names`; errors on the first
    /// model feature the matrix lacks.
    pub fn column_map(&self, names: &[String]) -> Result<Vec<usize>> {
        self.features
            .iter()
            .map(|f| {
                names
                    .iter()
                    .position(|n| *n == f.name)
                    .ok_or_else(|| Error::UnknownFeature(f.name.clone()))
            })
            .collect()
    }

    /// Matrix rows rearranged into model feature order.
    pub fn rows_of(&self, matrix: &FeatureMatrix) -> Result<Vec<Vec<Option<f64>>>> {
        let map = self.column_map(&matrix.feature_names)?;
        Ok(matrix
            .rows
            .iter()
            .map(|r| map.iter().map(|&j| r.values[j]).collect())
            .collect())
    }

    pub fn predict_matrix(&self, matrix: &FeatureMatrix) -> Result<Vec<f64>> {
        self.rows_of(matrix)?
            .iter()
            .map(|row| self.predict_proba(row))
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string(self).map_err(|e| Error::Serialize(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: Ga2mModel =
            serde_json::from_str(text).map_err(|e| Error::invalid("model", e.to_string()))?;
        if model.version != MODEL_VERSION {
            return Err(Error::invalid(
                "model.version",
                format!(
                    "unsupported version {}, expected {MODEL_VERSION}",
                    model.version
                ),
            ));
        }
        model.validate()?;
        Ok(model)
    }

    fn validate(&self) -> Result<()> {
        let d = self.features.len();
        if self.bins.len() != d || self.pair_bins.len() != d || self.mains.len() != d {
            return Err(Error::invalid(
                "model",
                "feature, bin and main-term counts differ",
            ));
        }
        for term in self.terms() {
            let (rows, cols) = term.shape;
            let expected = match term.kind {
                TermKind::Main { feature } if feature < d => (self.bins[feature].n_bins(), 1),
                TermKind::Pair { first, second } if first < second && second < d => (
                    self.pair_bins[first].n_bins(),
                    self.pair_bins[second].n_bins(),
                ),
                _ => {
                    return Err(Error::invalid(
                        "model",
                        format!("term `{}` has bad features", term.name),
                    ))
                }
            };
            let len = rows * cols;
            if (rows, cols) != expected
                || term.table.len() != len
                || term.envelope_min.len() != len
                || term.envelope_max.len() != len
                || term.counts.len() != len
            {
                return Err(Error::invalid(
                    "model",
                    format!("term `{}` has inconsistent tables", term.name),
                ));
            }
        }
        Ok(())
    }
}

pub fn write_model(model: &Ga2mModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, model.to_json()?).map_err(|e| Error::io(path, e))
}

pub fn read_model(path: impl AsRef<Path>) -> Result<Ga2mModel> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ga2mModel::from_json(&text)
}
