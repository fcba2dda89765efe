//! Brute-force reference implementations of every calculator, written from
//! the textbook definitions and deliberately along different arithmetic
//! routes than the library (Cramer's rule for line fits, sample-moment
//! skewness, telescoped second derivative, explicit segment tables).

#![allow(dead_code)]

use serde::Deserialize;
use thinc_core::tsfeatures::{Calculator, ChunkAgg, FitAttr};

fn constant(x: &[f64]) -> bool {
    x.iter().all(|&v| v == x[0])
}

fn mean(x: &[f64]) -> f64 {
    let mut s = 0.0;
    for v in x {
        s += v;
    }
    s / x.len() as f64
}

fn pop_std(x: &[f64]) -> f64 {
    let m = mean(x);
    let mut s = 0.0;
    for v in x {
        s += (v - m).powi(2);
    }
    (s / x.len() as f64).sqrt()
}

pub fn abs_energy(x: &[f64]) -> Option<f64> {
    Some(x.iter().map(|v| v.powi(2)).sum())
}

pub fn mean_abs_change(x: &[f64]) -> Option<f64> {
    let n = x.len();
    if n < 2 {
        return None;
    }
    let mut s = 0.0;
    for i in 0..n - 1 {
        s += (x[i + 1] - x[i]).abs();
    }
    Some(s / (n - 1) as f64)
}

pub fn max_change(x: &[f64]) -> Option<f64> {
    let n = x.len();
    if n < 2 {
        return None;
    }
    let mut best = 0.0f64;
    for i in 0..n - 1 {
        best = best.max((x[i + 1] - x[i]).abs());
    }
    Some(best)
}

pub fn max_change_timing(x: &[f64]) -> Option<f64> {
    let n = x.len();
    if n < 2 {
        return None;
    }
    let steps: Vec<f64> = (0..n - 1).map(|i| (x[i + 1] - x[i]).abs()).collect();
    let top = steps.iter().cloned().fold(f64::MIN, f64::max);
    let first = steps.iter().position(|&s| s == top).unwrap();
    Some(first as f64 / (n - 1) as f64)
}

pub fn cid_ce(x: &[f64], normalize: bool) -> Option<f64> {
    let n = x.len();
    if n < 2 {
        return None;
    }
    let y: Vec<f64> = if normalize {
        if constant(x) {
            return None;
        }
        let (m, s) = (mean(x), pop_std(x));
        x.iter().map(|v| (v - m) / s).collect()
    } else {
        x.to_vec()
    };
    let mut s = 0.0;
    for i in 1..n {
        s += (y[i] - y[i - 1]).powi(2);
    }
    Some(s.sqrt())
}

/// Intercept and slope from the 2x2 normal equations by Cramer's rule, plus
/// the slope's standard error from explicit residuals.
fn ols(y: &[f64]) -> Option<(f64, f64, Option<f64>)> {
    let n = y.len();
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let (mut si, mut sii, mut sy, mut siy) = (0.0, 0.0, 0.0, 0.0);
    for (i, &v) in y.iter().enumerate() {
        let t = i as f64;
        si += t;
        sii += t * t;
        sy += v;
        siy += t * v;
    }
    let det = nf * sii - si * si;
    let intercept = (sy * sii - si * siy) / det;
    let slope = (nf * siy - si * sy) / det;
    let stderr = (n >= 3).then(|| {
        let t_mean = si / nf;
        let mut sse = 0.0;
        let mut sxx = 0.0;
        for (i, &v) in y.iter().enumerate() {
            sse += (v - intercept - slope * i as f64).powi(2);
            sxx += (i as f64 - t_mean).powi(2);
        }
        (sse / (nf - 2.0) / sxx).sqrt()
    });
    Some((intercept, slope, stderr))
}

pub fn linear_fit(x: &[f64], attr: FitAttr) -> Option<f64> {
    let (_, slope, stderr) = ols(x)?;
    match attr {
        FitAttr::Slope => Some(slope),
        FitAttr::Stderr => stderr,
    }
}

pub fn agg_linear_trend(x: &[f64], chunk_len: usize, attr: FitAttr) -> Option<f64> {
    let chunks = x.len() / chunk_len;
    if chunks < 2 {
        return None;
    }
    let mut agg = Vec::new();
    for c in 0..chunks {
        let mut s = 0.0;
        for k in 0..chunk_len {
            s += x[c * chunk_len + k];
        }
        agg.push(s / chunk_len as f64);
    }
    linear_fit(&agg, attr)
}

/// `n / ((n-1)(n-2)) * sum(((x - mean) / s)^3)` with the sample standard
/// deviation `s`, algebraically equal to the adjusted Fisher-Pearson form.
pub fn skewness(x: &[f64]) -> Option<f64> {
    let n = x.len();
    if n < 3 || constant(x) {
        return None;
    }
    let nf = n as f64;
    let m = mean(x);
    let s = (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (nf - 1.0)).sqrt();
    let cubes: f64 = x.iter().map(|v| ((v - m) / s).powi(3)).sum();
    Some(nf / ((nf - 1.0) * (nf - 2.0)) * cubes)
}

fn median(x: &[f64]) -> f64 {
    let mut v = x.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n.is_multiple_of(2) {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    } else {
        v[n / 2]
    }
}

fn range(x: &[f64]) -> f64 {
    let hi = x.iter().cloned().fold(f64::MIN, f64::max);
    let lo = x.iter().cloned().fold(f64::MAX, f64::min);
    hi - lo
}

pub fn symmetry_looking(x: &[f64], r: f64) -> Option<f64> {
    if constant(x) {
        return Some(1.0);
    }
    Some(((mean(x) - median(x)).abs() < r * range(x)) as u8 as f64)
}

pub fn large_std(x: &[f64], r: f64) -> Option<f64> {
    if constant(x) {
        return Some(0.0);
    }
    Some((pop_std(x) > r * range(x)) as u8 as f64)
}

pub fn crossings_ratio(x: &[f64], m: f64) -> Option<f64> {
    let n = x.len();
    if n < 2 {
        return None;
    }
    let sign = |v: f64| if v - m >= 0.0 { 1.0 } else { -1.0 };
    let count = (0..n - 1)
        .filter(|&i| sign(x[i]) * sign(x[i + 1]) < 0.0)
        .count();
    Some(count as f64 / (n - 1) as f64)
}

pub fn peaks_ratio(x: &[f64], support: usize) -> Option<f64> {
    let n = x.len();
    if n < 2 * support + 1 {
        return None;
    }
    let mut count = 0;
    for i in support..n - support {
        let neighbours = x[i - support..i].iter().chain(&x[i + 1..=i + support]);
        let top = neighbours.cloned().fold(f64::MIN, f64::max);
        if x[i] > top {
            count += 1;
        }
    }
    Some(count as f64 / n as f64)
}

pub fn beyond_sigma_ratio(x: &[f64], r: f64) -> Option<f64> {
    if constant(x) {
        return Some(0.0);
    }
    let (m, s) = (mean(x), pop_std(x));
    let count = x.iter().filter(|&&v| (v - m).abs() > r * s).count();
    Some(count as f64 / x.len() as f64)
}

pub fn energy_ratio_chunks(x: &[f64], segments: usize, focus: usize) -> Option<f64> {
    let total: f64 = x.iter().map(|v| v * v).sum();
    if total == 0.0 {
        return None;
    }
    // explicit segment-size table, remainder handed to the earliest segments
    let n = x.len();
    let mut sizes = vec![n / segments; segments];
    for size in sizes.iter_mut().take(n % segments) {
        *size += 1;
    }
    let start: usize = sizes[..focus].iter().sum();
    let part: f64 = x[start..start + sizes[focus]].iter().map(|v| v * v).sum();
    Some(part / total)
}

pub fn index_mass_quantile(x: &[f64], q: f64) -> Option<f64> {
    let total: f64 = x.iter().map(|v| v.abs()).sum();
    if total == 0.0 {
        return None;
    }
    let mut cum = 0.0;
    for (i, v) in x.iter().enumerate() {
        cum += v.abs();
        if cum >= q * total {
            return Some((i + 1) as f64 / x.len() as f64);
        }
    }
    Some(1.0)
}

pub fn first_location_of_maximum(x: &[f64]) -> Option<f64> {
    let top = x.iter().cloned().fold(f64::MIN, f64::max);
    Some(x.iter().position(|&v| v == top).unwrap() as f64 / x.len() as f64)
}

pub fn first_location_of_minimum(x: &[f64]) -> Option<f64> {
    let bottom = x.iter().cloned().fold(f64::MAX, f64::min);
    Some(x.iter().position(|&v| v == bottom).unwrap() as f64 / x.len() as f64)
}

/// The central second differences telescope to the end slopes.
pub fn mean_second_derivative_central(x: &[f64]) -> Option<f64> {
    let n = x.len();
    if n < 3 {
        return None;
    }
    Some((x[n - 1] - x[n - 2] - x[1] + x[0]) / (2.0 * (n - 2) as f64))
}

/// Dispatches a catalog calculator to its oracle. The wavelet calculator has
/// no closed form; its reference values come from [`CwtReference`].
pub fn oracle(calc: &Calculator, x: &[f64]) -> Option<f64> {
    match *calc {
        Calculator::AbsEnergy => abs_energy(x),
        Calculator::MeanAbsChange => mean_abs_change(x),
        Calculator::MaxChange => max_change(x),
        Calculator::MaxChangeTiming => max_change_timing(x),
        Calculator::CidCe { normalize } => cid_ce(x, normalize),
        Calculator::LinearFit { attr } => linear_fit(x, attr),
        Calculator::AggLinearTrend {
            chunk_len,
            agg: ChunkAgg::Mean,
            attr,
        } => agg_linear_trend(x, chunk_len, attr),
        Calculator::Skewness => skewness(x),
        Calculator::SymmetryLooking { r } => symmetry_looking(x, r),
        Calculator::LargeStd { r } => large_std(x, r),
        Calculator::CrossingsRatio { m } => crossings_ratio(x, m),
        Calculator::PeaksRatio { support } => peaks_ratio(x, support),
        Calculator::CwtPeaksRatio { .. } => panic!("wavelet peaks use the frozen reference"),
        Calculator::BeyondSigmaRatio { r } => beyond_sigma_ratio(x, r),
        Calculator::EnergyRatioChunks {
            num_segments,
            focus,
        } => energy_ratio_chunks(x, num_segments, focus),
        Calculator::IndexMassQuantile { q } => index_mass_quantile(x, q),
        Calculator::FirstLocationOfMaximum => first_location_of_maximum(x),
        Calculator::FirstLocationOfMinimum => first_location_of_minimum(x),
        Calculator::MeanSecondDerivativeCentral => mean_second_derivative_central(x),
    }
}

/// `|a - b| <= tol * max(|a|, |b|, 1)`; both missing also agrees.
pub fn agrees(actual: Option<f64>, expected: Option<f64>, tol: f64) -> bool {
    match (actual, expected) {
        (None, None) => true,
        (Some(a), Some(b)) => a == b || (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0),
        _ => false,
    }
}

#[derive(Deserialize)]
pub struct CwtCase {
    pub x: Vec<f64>,
    pub widths: Vec<usize>,
    pub peaks: Vec<usize>,
}

#[derive(Deserialize)]
pub struct CwtReference {
    pub cases: Vec<CwtCase>,
}

/// Peak locations produced by the reference wavelet peak finder, frozen by
/// `tests/data/gen_cwt_reference.py`.
pub fn cwt_reference() -> CwtReference {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/cwt_reference.json");
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// A calculator for every catalog entry, with the parameterizations the
/// shipped configs use plus a few off-default ones.
pub fn calculator_grid() -> Vec<Calculator> {
    use Calculator::*;
    vec![
        AbsEnergy,
        MeanAbsChange,
        MaxChange,
        MaxChangeTiming,
        CidCe { normalize: false },
        CidCe { normalize: true },
        LinearFit {
            attr: FitAttr::Slope,
        },
        LinearFit {
            attr: FitAttr::Stderr,
        },
        AggLinearTrend {
            chunk_len: 5,
            agg: ChunkAgg::Mean,
            attr: FitAttr::Slope,
        },
        AggLinearTrend {
            chunk_len: 3,
            agg: ChunkAgg::Mean,
            attr: FitAttr::Stderr,
        },
        Skewness,
        SymmetryLooking { r: 0.25 },
        SymmetryLooking { r: 0.05 },
        LargeStd { r: 0.25 },
        LargeStd { r: 0.3 },
        CrossingsRatio { m: 0.5 },
        CrossingsRatio { m: 0.9 },
        PeaksRatio { support: 3 },
        PeaksRatio { support: 1 },
        CwtPeaksRatio { max_width: 5 },
        BeyondSigmaRatio { r: 1.0 },
        BeyondSigmaRatio { r: 2.0 },
        EnergyRatioChunks {
            num_segments: 4,
            focus: 0,
        },
        EnergyRatioChunks {
            num_segments: 4,
            focus: 3,
        },
        EnergyRatioChunks {
            num_segments: 3,
            focus: 2,
        },
        IndexMassQuantile { q: 0.5 },
        IndexMassQuantile { q: 0.25 },
        FirstLocationOfMaximum,
        FirstLocationOfMinimum,
        MeanSecondDerivativeCentral,
    ]
}
