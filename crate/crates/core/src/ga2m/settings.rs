use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Boosting hyperparameters. Every field has a default, so a TOML or JSON
/// settings file only needs the keys it changes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSettings {
    pub learning_rate: f64,
    /// Minimum drop in inner-validation log-loss that counts as progress.
    pub tolerance: f64,
    /// Epochs without progress before a stage stops.
    pub patience: usize,
    pub bags: usize,
    pub validation_fraction: f64,
    pub max_epochs: usize,
    pub max_leaves: usize,
    /// Value bins per dimension of a pair table.
    pub pair_resolution: usize,
    /// Number of pair terms; `None` means every pair.
    pub pair_budget: Option<usize>,
    pub max_bins: usize,
    /// Smallest bootstrap weight a tree leaf may hold.
    pub min_leaf_weight: f64,
    pub seed: u64,
}

impl Default for TrainSettings {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            tolerance: 1e-4,
            patience: 50,
            bags: 8,
            validation_fraction: 0.15,
            max_epochs: 5000,
            max_leaves: 3,
            pair_resolution: 32,
            pair_budget: None,
            max_bins: 100,
            min_leaf_weight: 2.0,
            seed: 0,
        }
    }
}

impl TrainSettings {
    pub fn validate(&self) -> Result<()> {
        let positive = |field: &str, ok: bool| {
            if ok {
                Ok(())
            } else {
                Err(Error::invalid(
                    format!("settings.{field}"),
                    "must be positive",
                ))
            }
        };
        positive(
            "learning_rate",
            self.learning_rate.is_finite() && self.learning_rate > 0.0,
        )?;
        positive(
            "tolerance",
            self.tolerance.is_finite() && self.tolerance > 0.0,
        )?;
        positive("patience", self.patience > 0)?;
        positive("bags", self.bags > 0)?;
        positive("max_epochs", self.max_epochs > 0)?;
        positive("max_leaves", self.max_leaves > 0)?;
        positive(
            "min_leaf_weight",
            self.min_leaf_weight.is_finite() && self.min_leaf_weight > 0.0,
        )?;
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return Err(Error::invalid(
                "settings.validation_fraction",
                "must lie in (0, 1)",
            ));
        }
        if !(2..=255).contains(&self.max_bins) {
            return Err(Error::invalid("settings.max_bins", "must lie in 2..=255"));
        }
        if !(2..=self.max_bins).contains(&self.pair_resolution) {
            return Err(Error::invalid(
                "settings.pair_resolution",
                "must lie in 2..=max_bins",
            ));
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let settings: TrainSettings = toml::from_str(text)
            .map_err(|e| Error::invalid("settings", e.message().to_string()))?;
        settings.validate()?;
        Ok(settings)
    }
}
