//! Feature-function export, per-instance contribution reports, global
//! importances and hypothesis overlays.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ga2m::{Ga2mModel, TermKind};
use crate::matrix::FeatureMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinView {
    pub bin: usize,
    pub missing: bool,
    /// Value range `[lower, upper)`; `None` is unbounded (or the missing bin).
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub logit: f64,
    pub envelope_min: f64,
    pub envelope_max: f64,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureFunctionView {
    pub feature: String,
    pub hypothesis: Option<String>,
    /// Missing bin first, then value bins in increasing order.
    pub bins: Vec<BinView>,
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

pub fn export_feature_function(model: &Ga2mModel, feature: &str) -> Result<FeatureFunctionView> {
    let j = model
        .feature_index(feature)
        .ok_or_else(|| Error::UnknownFeature(feature.to_string()))?;
    let term = &model.mains[j];
    let bins = &model.bins[j];
    let views = (0..term.table.len())
        .map(|b| {
            let (lower, upper) = bins
                .bin_range(b)
                .map_or((None, None), |(lo, hi)| (finite(lo), finite(hi)));
            BinView {
                bin: b,
                missing: b == 0,
                lower,
                upper,
                logit: term.table[b],
                envelope_min: term.envelope_min[b],
                envelope_max: term.envelope_max[b],
                count: term.counts[b],
            }
        })
        .collect();
    Ok(FeatureFunctionView {
        feature: feature.to_string(),
        hypothesis: model.features[j].hypothesis().map(str::to_string),
        bins: views,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalTerm {
    pub term: String,
    pub contribution: f64,
    pub envelope: (f64, f64),
    pub hypothesis: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalExplanation {
    pub id: String,
    pub proba: f64,
    pub logit: f64,
    pub intercept: f64,
    /// Largest `|contribution|` first.
    pub terms: Vec<LocalTerm>,
    /// Sum of the contributions cut off by `top_k` (0 when none are).
    pub remainder: f64,
}

fn term_hypothesis(model: &Ga2mModel, name: &str) -> Option<String> {
    match model.term(name)?.kind {
        TermKind::Main { feature } => model.features[feature].hypothesis().map(str::to_string),
        TermKind::Pair { .. } => None,
    }
}

/// Explains one row given in model feature order.
pub fn explain_row(
    model: &Ga2mModel,
    id: &str,
    row: &[Option<f64>],
    top_k: Option<usize>,
) -> Result<LocalExplanation> {
    let mut contributions = model.term_contributions(row)?;
    let logit = model.logit_from(&contributions);
    contributions.sort_by(|a, b| b.value.abs().total_cmp(&a.value.abs()));
    let keep = top_k
        .unwrap_or(contributions.len())
        .min(contributions.len());
    let remainder = contributions[keep..].iter().map(|c| c.value).sum();
    contributions.truncate(keep);
    Ok(LocalExplanation {
        id: id.to_string(),
        proba: crate::ga2m::sigmoid(logit),
        logit,
        intercept: model.intercept,
        terms: contributions
            .into_iter()
            .map(|c| LocalTerm {
                hypothesis: term_hypothesis(model, &c.term),
                term: c.term,
                contribution: c.value,
                envelope: c.envelope,
            })
            .collect(),
        remainder,
    })
}

pub fn explain_local(
    model: &Ga2mModel,
    matrix: &FeatureMatrix,
    id: &str,
    top_k: Option<usize>,
) -> Result<LocalExplanation> {
    let map = model.column_map(&matrix.feature_names)?;
    let row = matrix
        .row_by_id(id)
        .ok_or_else(|| Error::invalid("id", format!("`{id}` is not in the matrix")))?;
    let values: Vec<Option<f64>> = map.iter().map(|&j| row.values[j]).collect();
    explain_row(model, id, &values, top_k)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalTerm {
    pub term: String,
    pub importance: f64,
    pub hypothesis: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalImportanceReport {
    pub rows: usize,
    /// Most important first; ties keep model term order.
    pub terms: Vec<GlobalTerm>,
}

/// Weighted mean absolute contribution of every term over `matrix`.
pub fn explain_global(
    model: &Ga2mModel,
    matrix: &FeatureMatrix,
    weights: Option<&[f64]>,
) -> Result<GlobalImportanceReport> {
    let rows = model.rows_of(matrix)?;
    let uniform;
    let weights = match weights {
        Some(w) => {
            if w.len() != rows.len() {
                return Err(Error::invalid(
                    "weights",
                    format!("{} weights for {} rows", w.len(), rows.len()),
                ));
            }
            if w.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::invalid("weights", "must be finite and non-negative"));
            }
            w
        }
        None => {
            uniform = vec![1.0; rows.len()];
            &uniform
        }
    };
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::invalid("weights", "must not all be zero"));
    }
    let mut sums = vec![0.0; model.mains.len() + model.pairs.len()];
    for (row, &w) in rows.iter().zip(weights) {
        for (t, term) in model.terms().enumerate() {
            sums[t] += w * term.table[model.cell(term, row)].abs();
        }
    }
    let mut terms: Vec<GlobalTerm> = model
        .terms()
        .zip(sums)
        .map(|(term, s)| GlobalTerm {
            term: term.name.clone(),
            importance: s / total,
            hypothesis: term_hypothesis(model, &term.name),
        })
        .collect();
    terms.sort_by(|a, b| b.importance.total_cmp(&a.importance));
    Ok(GlobalImportanceReport {
        rows: rows.len(),
        terms,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OverlayShape {
    Increasing,
    Decreasing,
    StepUp,
    StepDown,
}

impl OverlayShape {
    pub const ALL: [OverlayShape; 4] = [
        Self::Increasing,
        Self::Decreasing,
        Self::StepUp,
        Self::StepDown,
    ];

    fn name(self) -> &'static str {
        match self {
            Self::Increasing => "increasing",
            Self::Decreasing => "decreasing",
            Self::StepUp => "step-up",
            Self::StepDown => "step-down",
        }
    }

    /// Hypothesized logit at position `t` in [-1, 1] of the value range.
    fn at(self, t: f64, magnitude: f64) -> f64 {
        let step = if t > 0.0 {
            1.0
        } else if t < 0.0 {
            -1.0
        } else {
            0.0
        };
        magnitude
            * match self {
                Self::Increasing => t,
                Self::Decreasing => -t,
                Self::StepUp => step,
                Self::StepDown => -step,
            }
    }
}

impl fmt::Display for OverlayShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OverlayShape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|shape| shape.name() == s).ok_or_else(|| {
            Error::invalid("overlay", format!("unknown shape `{s}`; expected increasing, decreasing, step-up or step-down"))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Overlay {
    pub shape: OverlayShape,
    pub magnitude: f64,
    /// One value per view bin; the missing bin has no hypothesis and gets 0.
    pub values: Vec<f64>,
    /// Count-weighted sign agreement in [-1, 1] over the decisive bins.
    pub agreement: f64,
    /// Bins whose logit clears the envelope half-width and whose overlay is
    /// non-zero.
    pub decisive_bins: usize,
}

/// Positions of the value bins in [-1, 1]: the training-row quantile at each
/// bin's midpoint, or the bin rank when the view carries no counts.
fn positions(view: &FeatureFunctionView) -> Vec<f64> {
    let values: Vec<&BinView> = view.bins.iter().filter(|b| !b.missing).collect();
    let total: u64 = values.iter().map(|b| b.count).sum();
    let mut out = Vec::with_capacity(values.len());
    let mut before = 0.0;
    for (i, b) in values.iter().enumerate() {
        let q = if total > 0 {
            (before + b.count as f64 / 2.0) / total as f64
        } else {
            (i as f64 + 0.5) / values.len() as f64
        };
        before += b.count as f64;
        out.push(2.0 * q - 1.0);
    }
    out
}

pub fn hypothesis_overlay(
    view: &FeatureFunctionView,
    shape: OverlayShape,
    magnitude: f64,
) -> Overlay {
    let mut positions = positions(view).into_iter();
    let values: Vec<f64> = view
        .bins
        .iter()
        .map(|b| {
            if b.missing {
                0.0
            } else {
                shape.at(positions.next().unwrap(), magnitude)
            }
        })
        .collect();
    let decisive: Vec<(&BinView, f64)> = view
        .bins
        .iter()
        .zip(&values)
        .filter(|(b, &o)| o != 0.0 && b.logit.abs() > (b.envelope_max - b.envelope_min) / 2.0)
        .map(|(b, &o)| (b, o))
        .collect();
    let counted = decisive.iter().any(|(b, _)| b.count > 0);
    let weight = |b: &BinView| if counted { b.count as f64 } else { 1.0 };
    let total: f64 = decisive.iter().map(|(b, _)| weight(b)).sum();
    let agreement = if total > 0.0 {
        decisive
            .iter()
            .map(|(b, o)| {
                weight(b)
                    * if b.logit.signum() == o.signum() {
                        1.0
                    } else {
                        -1.0
                    }
            })
            .sum::<f64>()
            / total
    } else {
        0.0
    };
    Overlay {
        shape,
        magnitude,
        values,
        agreement,
        decisive_bins: decisive.len(),
    }
}

fn cell(v: Option<f64>) -> String {
    v.map(|v| format!("{v:?}")).unwrap_or_default()
}

/// Plot data, one row per bin: `bin,lower,upper,logit,envelope_min,envelope_max,count[,overlay]`.
pub fn write_view_csv<W: Write>(
    view: &FeatureFunctionView,
    overlay: Option<&Overlay>,
    out: W,
) -> Result<()> {
    let ser = |e: csv::Error| Error::Serialize(e.to_string());
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    let mut header = vec![
        "bin",
        "lower",
        "upper",
        "logit",
        "envelope_min",
        "envelope_max",
        "count",
    ];
    if overlay.is_some() {
        header.push("overlay");
    }
    w.write_record(&header).map_err(ser)?;
    for (i, b) in view.bins.iter().enumerate() {
        let bin = if b.missing {
            "missing".to_string()
        } else {
            b.bin.to_string()
        };
        let mut record = vec![
            bin,
            cell(b.lower),
            cell(b.upper),
            cell(Some(b.logit)),
            cell(Some(b.envelope_min)),
            cell(Some(b.envelope_max)),
            b.count.to_string(),
        ];
        if let Some(o) = overlay {
            record.push(cell(Some(o.values[i])));
        }
        w.write_record(&record).map_err(ser)?;
    }
    w.flush().map_err(|e| Error::Serialize(e.to_string()))
}
