use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Names of every calculator, in catalog order.
pub const CATALOG: [&str; 19] = [
    "abs_energy",
    "mean_abs_change",
    "max_change",
    "max_change_timing",
    "cid_ce",
    "linear_fit",
    "agg_linear_trend",
    "skewness",
    "symmetry_looking",
    "large_std",
    "crossings_ratio",
    "peaks_ratio",
    "cwt_peaks_ratio",
    "beyond_sigma_ratio",
    "energy_ratio_chunks",
    "index_mass_quantile",
    "first_location_of_maximum",
    "first_location_of_minimum",
    "mean_second_derivative_central",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitAttr {
    Slope,
    Stderr,
}

impl FitAttr {
    fn as_str(self) -> &'static str {
        match self {
            FitAttr::Slope => "slope",
            FitAttr::Stderr => "stderr",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChunkAgg {
    Mean,
}

/// A parameter value as written in a theory config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Bool(bool),
    Number(f64),
    Text(String),
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Bool(b) => write!(f, "{b}"),
            ParamValue::Number(v) => write!(f, "{v}"),
            ParamValue::Text(s) => f.write_str(s),
        }
    }
}

/// A calculator together with its fully materialized parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum Calculator {
    AbsEnergy,
    MeanAbsChange,
    MaxChange,
    MaxChangeTiming,
    CidCe {
        normalize: bool,
    },
    LinearFit {
        attr: FitAttr,
    },
    AggLinearTrend {
        chunk_len: usize,
        agg: ChunkAgg,
        attr: FitAttr,
    },
    Skewness,
    SymmetryLooking {
        r: f64,
    },
    LargeStd {
        r: f64,
    },
    CrossingsRatio {
        m: f64,
    },
    PeaksRatio {
        support: usize,
    },
    /// Wavelet widths `1..=max_width`.
    CwtPeaksRatio {
        max_width: usize,
    },
    BeyondSigmaRatio {
        r: f64,
    },
    EnergyRatioChunks {
        num_segments: usize,
        focus: usize,
    },
    IndexMassQuantile {
        q: f64,
    },
    FirstLocationOfMaximum,
    FirstLocationOfMinimum,
    MeanSecondDerivativeCentral,
}

struct ParamReader<'a> {
    calculator: &'a str,
    params: &'a BTreeMap<String, ParamValue>,
    used: Vec<&'static str>,
}

impl<'a> ParamReader<'a> {
    fn field(&self, key: &str) -> String {
        format!("{}.{}", self.calculator, key)
    }

    fn take(&mut self, key: &'static str) -> Option<&'a ParamValue> {
        self.used.push(key);
        self.params.get(key)
    }

    fn number(&mut self, key: &'static str, default: Option<f64>) -> Result<f64> {
        match self.take(key) {
            Some(ParamValue::Number(v)) if v.is_finite() => Ok(*v),
            Some(other) => Err(Error::invalid(
                self.field(key),
                format!("expected a finite number, got `{other}`"),
            )),
            None => default.ok_or_else(|| Error::invalid(self.field(key), "parameter is required")),
        }
    }

    fn integer(&mut self, key: &'static str, default: Option<usize>, min: usize) -> Result<usize> {
        let v = self.number(key, default.map(|d| d as f64))?;
        if v.fract() != 0.0 || v < min as f64 || v > u32::MAX as f64 {
            return Err(Error::invalid(
                self.field(key),
                format!("expected an integer >= {min}, got {v}"),
            ));
        }
        Ok(v as usize)
    }

    fn boolean(&mut self, key: &'static str, default: bool) -> Result<bool> {
        match self.take(key) {
            Some(ParamValue::Bool(b)) => Ok(*b),
            Some(other) => Err(Error::invalid(
                self.field(key),
                format!("expected true or false, got `{other}`"),
            )),
            None => Ok(default),
        }
    }

    fn text(&mut self, key: &'static str, default: &'static str) -> Result<&'a str> {
        match self.take(key) {
            Some(ParamValue::Text(s)) => Ok(s.as_str()),
            Some(other) => Err(Error::invalid(
                self.field(key),
                format!("expected a string, got `{other}`"),
            )),
            None => Ok(default),
        }
    }

    fn fit_attr(&mut self) -> Result<FitAttr> {
        match self.text("attr", "slope")? {
            "slope" => Ok(FitAttr::Slope),
            "stderr" => Ok(FitAttr::Stderr),
            other => Err(Error::invalid(
                self.field("attr"),
                format!("expected `slope` or `stderr`, got `{other}`"),
            )),
        }
    }

    fn positive(&mut self, key: &'static str, default: Option<f64>) -> Result<f64> {
        let v = self.number(key, default)?;
        if v <= 0.0 {
            return Err(Error::invalid(
                self.field(key),
                format!("must be > 0, got {v}"),
            ));
        }
        Ok(v)
    }

    fn finish(self) -> Result<()> {
        for key in self.params.keys() {
            if !self.used.contains(&key.as_str()) {
                return Err(Error::invalid(
                    self.field(key),
                    format!("unknown parameter for `{}`", self.calculator),
                ));
            }
        }
        Ok(())
    }
}

impl Calculator {
    /// Resolves a calculator by name, filling defaults and checking every
    /// parameter against its domain.
    pub fn from_params(name: &str, params: &BTreeMap<String, ParamValue>) -> Result<Self> {
        let mut p = ParamReader {
            calculator: name,
            params,
            used: Vec::new(),
        };
        let calc = match name {
            "abs_energy" => Calculator::AbsEnergy,
            "mean_abs_change" => Calculator::MeanAbsChange,
            "max_change" => Calculator::MaxChange,
            "max_change_timing" => Calculator::MaxChangeTiming,
            "cid_ce" => Calculator::CidCe {
                normalize: p.boolean("normalize", false)?,
            },
            "linear_fit" => Calculator::LinearFit {
                attr: p.fit_attr()?,
            },
            "agg_linear_trend" => {
                let chunk_len = p.integer("chunk_len", Some(5), 1)?;
                let agg = match p.text("agg", "mean")? {
                    "mean" => ChunkAgg::Mean,
                    other => {
                        return Err(Error::invalid(
                            p.field("agg"),
                            format!("expected `mean`, got `{other}`"),
                        ))
                    }
                };
                let attr = p.fit_attr()?;
                Calculator::AggLinearTrend {
                    chunk_len,
                    agg,
                    attr,
                }
            }
            "skewness" => Calculator::Skewness,
            "symmetry_looking" => Calculator::SymmetryLooking {
                r: p.positive("r", Some(0.25))?,
            },
            "large_std" => Calculator::LargeStd {
                r: p.positive("r", Some(0.25))?,
            },
            "crossings_ratio" => Calculator::CrossingsRatio {
                m: p.number("m", None)?,
            },
            "peaks_ratio" => Calculator::PeaksRatio {
                support: p.integer("support", Some(3), 1)?,
            },
            "cwt_peaks_ratio" => Calculator::CwtPeaksRatio {
                max_width: p.integer("max_width", Some(5), 1)?,
            },
            "beyond_sigma_ratio" => Calculator::BeyondSigmaRatio {
                r: p.positive("r", None)?,
            },
            "energy_ratio_chunks" => {
                let num_segments = p.integer("num_segments", None, 1)?;
                let focus = p.integer("focus", None, 0)?;
                if focus >= num_segments {
                    return Err(Error::invalid(
                        p.field("focus"),
                        format!("must be < num_segments ({num_segments}), got {focus}"),
                    ));
                }
                Calculator::EnergyRatioChunks {
                    num_segments,
                    focus,
                }
            }
            "index_mass_quantile" => {
                let q = p.number("q", None)?;
                if !(q > 0.0 && q < 1.0) {
                    return Err(Error::invalid(
                        p.field("q"),
                        format!("must lie in (0, 1), got {q}"),
                    ));
                }
                Calculator::IndexMassQuantile { q }
            }
            "first_location_of_maximum" => Calculator::FirstLocationOfMaximum,
            "first_location_of_minimum" => Calculator::FirstLocationOfMinimum,
            "mean_second_derivative_central" => Calculator::MeanSecondDerivativeCentral,
            other => {
                return Err(Error::invalid(
                    "calculator",
                    format!(
                        "unknown calculator `{other}`; valid: {}",
                        CATALOG.join(", ")
                    ),
                ))
            }
        };
        p.finish()?;
        Ok(calc)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Calculator::AbsEnergy => "abs_energy",
            Calculator::MeanAbsChange => "mean_abs_change",
            Calculator::MaxChange => "max_change",
            Calculator::MaxChangeTiming => "max_change_timing",
            Calculator::CidCe { .. } => "cid_ce",
            Calculator::LinearFit { .. } => "linear_fit",
            Calculator::AggLinearTrend { .. } => "agg_linear_trend",
            Calculator::Skewness => "skewness",
            Calculator::SymmetryLooking { .. } => "symmetry_looking",
            Calculator::LargeStd { .. } => "large_std",
            Calculator::CrossingsRatio { .. } => "crossings_ratio",
            Calculator::PeaksRatio { .. } => "peaks_ratio",
            Calculator::CwtPeaksRatio { .. } => "cwt_peaks_ratio",
            Calculator::BeyondSigmaRatio { .. } => "beyond_sigma_ratio",
            Calculator::EnergyRatioChunks { .. } => "energy_ratio_chunks",
            Calculator::IndexMassQuantile { .. } => "index_mass_quantile",
            Calculator::FirstLocationOfMaximum => "first_location_of_maximum",
            Calculator::FirstLocationOfMinimum => "first_location_of_minimum",
            Calculator::MeanSecondDerivativeCentral => "mean_second_derivative_central",
        }
    }

    /// Materialized parameters, sorted by key.
    pub fn params(&self) -> BTreeMap<String, ParamValue> {
        use ParamValue::{Bool, Number, Text};
        let pairs: Vec<(&str, ParamValue)> = match self {
            Calculator::CidCe { normalize } => vec![("normalize", Bool(*normalize))],
            Calculator::LinearFit { attr } => vec![("attr", Text(attr.as_str().into()))],
            Calculator::AggLinearTrend {
                chunk_len,
                agg,
                attr,
            } => vec![
                (
                    "agg",
                    Text(
                        match agg {
                            ChunkAgg::Mean => "mean",
                        }
                        .into(),
                    ),
                ),
                ("attr", Text(attr.as_str().into())),
                ("chunk_len", Number(*chunk_len as f64)),
            ],
            Calculator::SymmetryLooking { r }
            | Calculator::LargeStd { r }
            | Calculator::BeyondSigmaRatio { r } => vec![("r", Number(*r))],
            Calculator::CrossingsRatio { m } => vec![("m", Number(*m))],
            Calculator::PeaksRatio { support } => vec![("support", Number(*support as f64))],
            Calculator::CwtPeaksRatio { max_width } => {
                vec![("max_width", Number(*max_width as f64))]
            }
            Calculator::EnergyRatioChunks {
                num_segments,
                focus,
            } => vec![
                ("focus", Number(*focus as f64)),
                ("num_segments", Number(*num_segments as f64)),
            ],
            Calculator::IndexMassQuantile { q } => vec![("q", Number(*q))],
            _ => Vec::new(),
        };
        pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }

    pub fn evaluate(&self, x: &[f64]) -> Option<f64> {
        use super::*;
        if x.is_empty() {
            return None;
        }
        let value = match *self {
            Calculator::AbsEnergy => abs_energy(x),
            Calculator::MeanAbsChange => mean_abs_change(x),
            Calculator::MaxChange => max_change(x),
            Calculator::MaxChangeTiming => max_change_timing(x),
            Calculator::CidCe { normalize } => cid_ce(x, normalize),
            Calculator::LinearFit { attr } => linear_fit(x, attr),
            Calculator::AggLinearTrend {
                chunk_len,
                agg,
                attr,
            } => agg_linear_trend(x, chunk_len, agg, attr),
            Calculator::Skewness => skewness(x),
            Calculator::SymmetryLooking { r } => symmetry_looking(x, r),
            Calculator::LargeStd { r } => large_std(x, r),
            Calculator::CrossingsRatio { m } => crossings_ratio(x, m),
            Calculator::PeaksRatio { support } => peaks_ratio(x, support),
            Calculator::CwtPeaksRatio { max_width } => cwt_peaks_ratio(x, max_width),
            Calculator::BeyondSigmaRatio { r } => beyond_sigma_ratio(x, r),
            Calculator::EnergyRatioChunks {
                num_segments,
                focus,
            } => energy_ratio_chunks(x, num_segments, focus),
            Calculator::IndexMassQuantile { q } => index_mass_quantile(x, q),
            Calculator::FirstLocationOfMaximum => first_location_of_maximum(x),
            Calculator::FirstLocationOfMinimum => first_location_of_minimum(x),
            Calculator::MeanSecondDerivativeCentral => mean_second_derivative_central(x),
        };
        value.filter(|v| v.is_finite())
    }
}
