//! Weighted soft voting over theory classifiers, Nelder–Mead weight fitting
//! and the evaluation metrics.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const ENSEMBLE_VERSION: u32 = 1;

fn check_weights(weights: &[f64]) -> Result<f64> {
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::invalid("weights", "must be finite and non-negative"));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::invalid("weights", "must not all be zero"));
    }
    Ok(total)
}

/// Normalized weighted positive-class probability, `sum w_j p_j / sum w_j`.
pub fn ensemble_score(weights: &[f64], probas: &[f64]) -> Result<f64> {
    if weights.len() != probas.len() {
        return Err(Error::invalid(
            "probas",
            format!(
                "{} probabilities for {} weights",
                probas.len(),
                weights.len()
            ),
        ));
    }
    let total = check_weights(weights)?;
    Ok(vote(weights, total, probas.iter().copied()))
}

fn vote(weights: &[f64], total: f64, probas: impl Iterator<Item = f64>) -> f64 {
    weights.iter().zip(probas).map(|(w, p)| w / total * p).sum()
}

/// Class 1 iff the score is strictly above one half.
pub fn predict_class(score: f64) -> u8 {
    u8::from(score > 0.5)
}

/// Rows ordered by descending score, ties in original order.
fn ranking(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    order
}

/// Mean over positives of the precision at each positive's rank.
pub fn average_precision(labels: &[u8], scores: &[f64]) -> Result<f64> {
    if labels.len() != scores.len() {
        return Err(Error::invalid("scores", "length differs from labels"));
    }
    let positives = labels.iter().filter(|&&l| l == 1).count();
    if positives == 0 {
        return Err(Error::invalid(
            "labels",
            "average precision needs at least one positive",
        ));
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (rank, &i) in ranking(scores).iter().enumerate() {
        if labels[i] == 1 {
            hits += 1;
            sum += hits as f64 / (rank + 1) as f64;
        }
    }
    Ok(sum / positives as f64)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Confusion {
    pub fn from_predictions(labels: &[u8], predictions: &[u8]) -> Self {
        let mut c = Confusion::default();
        for (&y, &p) in labels.iter().zip(predictions) {
            match (y == 1, p == 1) {
                (true, true) => c.tp += 1,
                (false, true) => c.fp += 1,
                (false, false) => c.tn += 1,
                (true, false) => c.fn_ += 1,
            }
        }
        c
    }

    pub fn f1_positive(&self) -> f64 {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = ratio(self.tp, self.tp + self.fp);
        let recall = ratio(self.tp, self.tp + self.fn_);
        if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        }
    }
}

/// F1 of the positive class; 0 when precision and recall are both 0.
pub fn f1_positive(labels: &[u8], predictions: &[u8]) -> f64 {
    Confusion::from_predictions(labels, predictions).f1_positive()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimplexSettings {
    pub reflection: f64,
    pub expansion: f64,
    pub contraction: f64,
    pub shrink: f64,
    pub initial_weight: f64,
    pub initial_step: f64,
    pub max_iterations: usize,
    /// Converged once the spread of vertex values and the simplex diameter
    /// both fall below these.
    pub value_tolerance: f64,
    pub diameter_tolerance: f64,
}

impl Default for SimplexSettings {
    fn default() -> Self {
        Self {
            reflection: 1.0,
            expansion: 2.0,
            contraction: 0.5,
            shrink: 0.5,
            initial_weight: 1.0,
            initial_step: 0.25,
            max_iterations: 500,
            value_tolerance: 1e-6,
            diameter_tolerance: 1e-6,
        }
    }
}

impl SimplexSettings {
    pub fn validate(&self) -> Result<()> {
        let check = |field: &str, ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::invalid(format!("simplex.{field}"), what.to_string()))
            }
        };
        check("reflection", self.reflection > 0.0, "must be positive")?;
        check("expansion", self.expansion > 1.0, "must exceed 1")?;
        check(
            "contraction",
            self.contraction > 0.0 && self.contraction < 1.0,
            "must lie in (0, 1)",
        )?;
        check(
            "shrink",
            self.shrink > 0.0 && self.shrink < 1.0,
            "must lie in (0, 1)",
        )?;
        check("initial_step", self.initial_step > 0.0, "must be positive")?;
        check(
            "initial_weight",
            self.initial_weight.is_finite(),
            "must be finite",
        )?;
        check(
            "value_tolerance",
            self.value_tolerance >= 0.0,
            "must not be negative",
        )?;
        check(
            "diameter_tolerance",
            self.diameter_tolerance >= 0.0,
            "must not be negative",
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

/// Minimizes `f` from `start` with the downhill simplex method. The initial
/// simplex is `start` plus one vertex per axis offset by `initial_step`.
pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    start: &[f64],
    settings: &SimplexSettings,
) -> SimplexResult {
    let n = start.len();
    let mut evaluations = 0;
    let mut eval = |x: &[f64]| {
        evaluations += 1;
        f(x)
    };
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((start.to_vec(), eval(start)));
    for axis in 0..n {
        let mut x = start.to_vec();
        x[axis] += settings.initial_step;
        let v = eval(&x);
        simplex.push((x, v));
    }
    let along = |from: &[f64], to: &[f64], t: f64| -> Vec<f64> {
        from.iter().zip(to).map(|(a, b)| a + t * (b - a)).collect()
    };

    let mut iterations = 0;
    let mut converged = false;
    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spread = simplex[n].1 - simplex[0].1;
        let diameter = simplex[1..]
            .iter()
            .flat_map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if n == 0 || (spread < settings.value_tolerance && diameter < settings.diameter_tolerance) {
            converged = true;
            break;
        }
        if iterations >= settings.max_iterations {
            break;
        }
        iterations += 1;

        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, v) in centroid.iter_mut().zip(x) {
                *c += v / n as f64;
            }
        }
        let (worst, worst_value) = simplex[n].clone();
        let best_value = simplex[0].1;
        let second_worst = simplex[n - 1].1;

        let reflected = along(&centroid, &worst, -settings.reflection);
        let fr = eval(&reflected);
        if fr < best_value {
            let expanded = along(&centroid, &reflected, settings.expansion);
            let fe = eval(&expanded);
            simplex[n] = if fe < fr {
                (expanded, fe)
            } else {
                (reflected, fr)
            };
            continue;
        }
        if fr < second_worst {
            simplex[n] = (reflected, fr);
            continue;
        }
        let (contracted, fc, accept) = if fr < worst_value {
            let x = along(&centroid, &reflected, settings.contraction);
            let v = eval(&x);
            (x, v, v <= fr)
        } else {
            let x = along(&centroid, &worst, settings.contraction);
            let v = eval(&x);
            (x, v, v < worst_value)
        };
        if accept {
            simplex[n] = (contracted, fc);
            continue;
        }
        let best = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            let x = along(&best, &vertex.0, settings.shrink);
            let v = eval(&x);
            *vertex = (x, v);
        }
    }
    let (x, value) = simplex.swap_remove(0);
    SimplexResult {
        x,
        value,
        iterations,
        evaluations,
        converged,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    /// Where the fitting probabilities came from, as given by the caller.
    pub fit_split: String,
    pub rows: usize,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    pub average_precision: f64,
    pub uniform_average_precision: f64,
    /// True when the simplex result was replaced by uniform weights.
    pub uniform_fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleModel {
    pub version: u32,
    pub classifiers: Vec<String>,
    pub weights: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<FitDiagnostics>,
}

impl EnsembleModel {
    pub fn new(classifiers: Vec<String>, weights: Vec<f64>) -> Result<Self> {
        let model = Self {
            version: ENSEMBLE_VERSION,
            classifiers,
            weights,
            diagnostics: None,
        };
        model.validate()?;
        Ok(model)
    }

    fn validate(&self) -> Result<()> {
        if self.classifiers.len() != self.weights.len() {
            return Err(Error::invalid(
                "ensemble",
                "one weight per classifier is required",
            ));
        }
        check_weights(&self.weights).map(|_| ())
    }

    pub fn score(&self, probas: &[f64]) -> Result<f64> {
        ensemble_score(&self.weights, probas)
    }

    /// Scores every row given one probability column per classifier.
    pub fn score_columns(&self, columns: &[Vec<f64>]) -> Result<Vec<f64>> {
        let n = aligned_rows(columns, self.classifiers.len())?;
        (0..n)
            .map(|i| self.score(&columns.iter().map(|c| c[i]).collect::<Vec<_>>()))
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Serialize(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: Self =
            serde_json::from_str(text).map_err(|e| Error::invalid("ensemble", e.to_string()))?;
        if model.version != ENSEMBLE_VERSION {
            return Err(Error::invalid(
                "ensemble.version",
                format!(
                    "unsupported version {}, expected {ENSEMBLE_VERSION}",
                    model.version
                ),
            ));
        }
        model.validate()?;
        Ok(model)
    }
}

pub fn write_ensemble(model: &EnsembleModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, model.to_json()?).map_err(|e| Error::io(path, e))
}

pub fn read_ensemble(path: impl AsRef<Path>) -> Result<EnsembleModel> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    EnsembleModel::from_json(&text)
}

/// Row count shared by `expected` probability columns.
fn aligned_rows(columns: &[Vec<f64>], expected: usize) -> Result<usize> {
    if columns.len() != expected {
        return Err(Error::invalid(
            "probas",
            format!("{} classifier columns, expected {expected}", columns.len()),
        ));
    }
    let n = columns.first().map_or(0, Vec::len);
    if columns.iter().any(|c| c.len() != n) {
        return Err(Error::invalid(
            "probas",
            "classifier columns differ in length",
        ));
    }
    if columns.iter().flatten().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::invalid("probas", "probabilities must lie in [0, 1]"));
    }
    Ok(n)
}

fn weighted_scores(weights: &[f64], columns: &[Vec<f64>], n: usize) -> Vec<f64> {
    let total: f64 = weights.iter().sum();
    (0..n)
        .map(|i| vote(weights, total, columns.iter().map(|c| c[i])))
        .collect()
}

/// Learns voting weights that maximize average precision of the ensemble
/// score on `labels`. `columns[j][i]` is classifier `j`'s probability for row `i`.
pub fn fit_weights(
    names: &[String],
    columns: &[Vec<f64>],
    labels: &[u8],
    fit_split: &str,
    settings: &SimplexSettings,
) -> Result<EnsembleModel> {
    settings.validate()?;
    let m = names.len();
    if m < 2 {
        return Err(Error::invalid(
            "classifiers",
            "an ensemble needs at least two",
        ));
    }
    let n = aligned_rows(columns, m)?;
    if labels.len() != n {
        return Err(Error::invalid(
            "labels",
            format!("{} labels for {n} rows", labels.len()),
        ));
    }
    if !labels.contains(&0) || !labels.contains(&1) {
        return Err(Error::invalid(
            "labels",
            "weight fitting needs both classes",
        ));
    }
    let ap_of = |w: &[f64]| -> f64 {
        let clamped: Vec<f64> = w.iter().map(|v| v.max(0.0)).collect();
        if clamped.iter().sum::<f64>() <= 0.0 {
            return 0.0;
        }
        average_precision(labels, &weighted_scores(&clamped, columns, n))
            .expect("labels hold a positive")
    };
    let start = vec![settings.initial_weight; m];
    let result = nelder_mead(|w| -ap_of(w), &start, settings);

    let uniform = vec![1.0; m];
    let uniform_ap = ap_of(&uniform);
    let mut weights: Vec<f64> = result.x.iter().map(|v| v.max(0.0)).collect();
    let mut fallback = false;
    if weights.iter().sum::<f64>() <= 0.0 {
        log::warn!("simplex ended at all-zero weights; using uniform weights");
        weights = uniform.clone();
        fallback = true;
    } else if ap_of(&weights) < uniform_ap {
        weights = uniform.clone();
        fallback = true;
    }
    let fitted_ap = ap_of(&weights);
    let mut model = EnsembleModel::new(names.to_vec(), weights)?;
    model.diagnostics = Some(FitDiagnostics {
        fit_split: fit_split.to_string(),
        rows: n,
        iterations: result.iterations,
        evaluations: result.evaluations,
        converged: result.converged,
        average_precision: fitted_ap,
        uniform_average_precision: uniform_ap,
        uniform_fallback: fallback,
    });
    Ok(model)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierMetrics {
    pub name: String,
    pub f1_positive: f64,
    pub average_precision: Option<f64>,
    pub confusion: Confusion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub rows: usize,
    pub positives: usize,
    pub weights: Vec<f64>,
    pub ensemble: ClassifierMetrics,
    pub classifiers: Vec<ClassifierMetrics>,
}

fn metrics(name: &str, labels: &[u8], scores: &[f64]) -> ClassifierMetrics {
    let predictions: Vec<u8> = scores.iter().map(|&s| predict_class(s)).collect();
    let confusion = Confusion::from_predictions(labels, &predictions);
    ClassifierMetrics {
        name: name.to_string(),
        f1_positive: confusion.f1_positive(),
        average_precision: average_precision(labels, scores).ok(),
        confusion,
    }
}

pub fn evaluate(
    ensemble: &EnsembleModel,
    columns: &[Vec<f64>],
    labels: &[u8],
) -> Result<EvaluationReport> {
    let n = aligned_rows(columns, ensemble.classifiers.len())?;
    if labels.len() != n {
        return Err(Error::invalid(
            "labels",
            format!("{} labels for {n} rows", labels.len()),
        ));
    }
    let scores = ensemble.score_columns(columns)?;
    Ok(EvaluationReport {
        rows: n,
        positives: labels.iter().filter(|&&l| l == 1).count(),
        weights: ensemble.weights.clone(),
        ensemble: metrics("ensemble", labels, &scores),
        classifiers: ensemble
            .classifiers
            .iter()
            .zip(columns)
            .map(|(name, column)| metrics(name, labels, column))
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn voting_arithmetic() {
        assert!((ensemble_score(&[1.0, 1.0], &[0.8, 0.4]).unwrap() - 0.6).abs() < 1e-15);
        assert_eq!(predict_class(0.6), 1);
        assert_eq!(predict_class(0.5), 0);
        assert_eq!(ensemble_score(&[3.0], &[0.37]).unwrap(), 0.37);
        let w = [1.342, 0.573, 0.442, 1.591];
        assert!((ensemble_score(&w, &[0.5; 4]).unwrap() - 0.5).abs() < 1e-15);
        assert!(ensemble_score(&[1.0], &[0.5, 0.5]).is_err());
        assert!(ensemble_score(&[0.0, 0.0], &[0.5, 0.5]).is_err());
        assert!(ensemble_score(&[-1.0, 2.0], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn hand_computed_precision() {
        assert_eq!(average_precision(&[1, 0], &[0.9, 0.1]).unwrap(), 1.0);
        assert_eq!(average_precision(&[0, 1], &[0.9, 0.1]).unwrap(), 0.5);
        // ties keep input order: the negative at index 0 ranks first
        assert_eq!(average_precision(&[0, 1], &[0.5, 0.5]).unwrap(), 0.5);
        assert!(average_precision(&[0, 0], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn f1_conventions() {
        assert_eq!(f1_positive(&[1, 0, 1], &[1, 0, 1]), 1.0);
        assert_eq!(f1_positive(&[1, 0, 1], &[0, 0, 0]), 0.0);
        assert_eq!(f1_positive(&[0, 0], &[0, 0]), 0.0);
        assert!((f1_positive(&[1, 1, 0, 0], &[1, 0, 1, 0]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn simplex_settings_validate() {
        assert!(SimplexSettings::default().validate().is_ok());
        let bad = SimplexSettings {
            expansion: 1.0,
            ..SimplexSettings::default()
        };
        assert!(bad.validate().is_err());
    }
}
