//! Scalar statistics over a single real-valued series.
//!
//! Every calculator is a pure function of its input. Inputs where a statistic
//! is undefined (too short, zero variance, zero energy) yield `None` rather
//! than an error or a non-finite value. Indices are 0-based and the standard
//! deviation is the population one (divide by `n`) unless noted otherwise.

mod catalog;
mod cwt;

pub use catalog::{Calculator, ChunkAgg, FitAttr, ParamValue, CATALOG};
pub use cwt::{cwt_peak_locations, ricker};

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn population_std(x: &[f64]) -> f64 {
    let m = mean(x);
    (x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / x.len() as f64).sqrt()
}

fn min_max(x: &[f64]) -> (f64, f64) {
    x.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        })
}

fn is_constant(x: &[f64]) -> bool {
    let (lo, hi) = min_max(x);
    lo == hi
}

fn median(x: &[f64]) -> f64 {
    let mut sorted = x.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

/// Sum of squares.
pub fn abs_energy(x: &[f64]) -> Option<f64> {
    finite(x.iter().map(|v| v * v).sum())
}

pub fn mean_abs_change(x: &[f64]) -> Option<f64> {
    if x.len() < 2 {
        return None;
    }
    let total: f64 = x.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
    finite(total / (x.len() - 1) as f64)
}

/// Largest absolute step between consecutive values.
pub fn max_change(x: &[f64]) -> Option<f64> {
    if x.len() < 2 {
        return None;
    }
    finite(
        x.windows(2)
            .map(|w| (w[1] - w[0]).abs())
            .fold(0.0, f64::max),
    )
}

/// Relative position in `[0, 1)` of the first largest absolute step.
pub fn max_change_timing(x: &[f64]) -> Option<f64> {
    if x.len() < 2 {
        return None;
    }
    let mut best = 0usize;
    let mut best_step = f64::NEG_INFINITY;
    for (i, w) in x.windows(2).enumerate() {
        let step = (w[1] - w[0]).abs();
        if step > best_step {
            best_step = step;
            best = i;
        }
    }
    finite(best as f64 / (x.len() - 1) as f64)
}

/// Complexity estimate: length of the series' difference curve.
pub fn cid_ce(x: &[f64], normalize: bool) -> Option<f64> {
    if x.len() < 2 {
        return None;
    }
    let scaled;
    let series = if normalize {
        if is_constant(x) {
            return None;
        }
        let m = mean(x);
        let s = population_std(x);
        scaled = x.iter().map(|v| (v - m) / s).collect::<Vec<_>>();
        &scaled[..]
    } else {
        x
    };
    let ss: f64 = series
        .windows(2)
        .map(|w| (w[1] - w[0]) * (w[1] - w[0]))
        .sum();
    finite(ss.sqrt())
}

struct LineFit {
    slope: f64,
    stderr: Option<f64>,
}

/// Ordinary least squares of `y[i]` against `i`.
fn fit_line(y: &[f64]) -> Option<LineFit> {
    let n = y.len();
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let x_mean = (nf - 1.0) / 2.0;
    let y_mean = mean(y);
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (i, &v) in y.iter().enumerate() {
        let dx = i as f64 - x_mean;
        let dy = v - y_mean;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let slope = sxy / sxx;
    let stderr = (n >= 3).then(|| {
        let sse = (syy - slope * sxy).max(0.0);
        (sse / (nf - 2.0) / sxx).sqrt()
    });
    Some(LineFit { slope, stderr })
}

pub fn linear_fit(x: &[f64], attr: FitAttr) -> Option<f64> {
    let fit = fit_line(x)?;
    match attr {
        FitAttr::Slope => finite(fit.slope),
        FitAttr::Stderr => fit.stderr.and_then(finite),
    }
}

/// Linear fit over per-chunk aggregates; a ragged tail shorter than
/// `chunk_len` is dropped.
pub fn agg_linear_trend(x: &[f64], chunk_len: usize, agg: ChunkAgg, attr: FitAttr) -> Option<f64> {
    if chunk_len == 0 {
        return None;
    }
    let aggregated: Vec<f64> = x
        .chunks_exact(chunk_len)
        .map(|chunk| match agg {
            ChunkAgg::Mean => mean(chunk),
        })
        .collect();
    if aggregated.len() < 2 {
        return None;
    }
    linear_fit(&aggregated, attr)
}

/// Adjusted Fisher-Pearson sample skewness.
pub fn skewness(x: &[f64]) -> Option<f64> {
    let n = x.len();
    if n < 3 || is_constant(x) {
        return None;
    }
    let nf = n as f64;
    let m = mean(x);
    let (m2, m3) = x.iter().fold((0.0, 0.0), |(s2, s3), v| {
        let d = v - m;
        (s2 + d * d, s3 + d * d * d)
    });
    let (m2, m3) = (m2 / nf, m3 / nf);
    let g1 = m3 / m2.powf(1.5);
    finite(g1 * (nf * (nf - 1.0)).sqrt() / (nf - 2.0))
}

pub fn symmetry_looking(x: &[f64], r: f64) -> Option<f64> {
    if x.is_empty() {
        return None;
    }
    let (lo, hi) = min_max(x);
    if lo == hi {
        return Some(1.0);
    }
    let symmetric = (mean(x) - median(x)).abs() < r * (hi - lo);
    Some(if symmetric { 1.0 } else { 0.0 })
}

pub fn large_std(x: &[f64], r: f64) -> Option<f64> {
    if x.is_empty() {
        return None;
    }
    let (lo, hi) = min_max(x);
    if lo == hi {
        return Some(0.0);
    }
    Some(if population_std(x) > r * (hi - lo) {
        1.0
    } else {
        0.0
    })
}

/// Fraction of consecutive pairs that cross level `m`. A value equal to `m`
/// counts as above it.
pub fn crossings_ratio(x: &[f64], m: f64) -> Option<f64> {
    if x.len() < 2 {
        return None;
    }
    let crossings = x
        .windows(2)
        .filter(|w| (w[0] - m >= 0.0) != (w[1] - m >= 0.0))
        .count();
    finite(crossings as f64 / (x.len() - 1) as f64)
}

/// Fraction of positions that strictly exceed every neighbour within
/// `support` steps on both sides.
pub fn peaks_ratio(x: &[f64], support: usize) -> Option<f64> {
    let n = x.len();
    if support == 0 || n < 2 * support + 1 {
        return None;
    }
    let peaks = (support..n - support)
        .filter(|&i| (1..=support).all(|k| x[i] > x[i - k] && x[i] > x[i + k]))
        .count();
    finite(peaks as f64 / n as f64)
}

/// Fraction of positions reported as peaks by ridge-line analysis of a
/// Ricker-wavelet transform with widths `1..=max_width`.
pub fn cwt_peaks_ratio(x: &[f64], max_width: usize) -> Option<f64> {
    if x.is_empty() || max_width == 0 {
        return None;
    }
    let widths: Vec<usize> = (1..=max_width).collect();
    let peaks = cwt_peak_locations(x, &widths).len();
    finite(peaks as f64 / x.len() as f64)
}

pub fn beyond_sigma_ratio(x: &[f64], r: f64) -> Option<f64> {
    if x.is_empty() {
        return None;
    }
    if is_constant(x) {
        return Some(0.0);
    }
    let m = mean(x);
    let s = population_std(x);
    let beyond = x.iter().filter(|v| (*v - m).abs() > r * s).count();
    finite(beyond as f64 / x.len() as f64)
}

/// Energy share of one of `num_segments` near-equal consecutive segments.
/// Segments at the front absorb the remainder of `n / num_segments`.
pub fn energy_ratio_chunks(x: &[f64], num_segments: usize, focus: usize) -> Option<f64> {
    if num_segments == 0 || focus >= num_segments {
        return None;
    }
    let total: f64 = x.iter().map(|v| v * v).sum();
    if total == 0.0 {
        return None;
    }
    let n = x.len();
    let base = n / num_segments;
    let extra = n % num_segments;
    let start = focus * base + focus.min(extra);
    let len = base + usize::from(focus < extra);
    let part: f64 = x[start..start + len].iter().map(|v| v * v).sum();
    finite(part / total)
}

/// Relative index at which the cumulative absolute mass first reaches `q`.
pub fn index_mass_quantile(x: &[f64], q: f64) -> Option<f64> {
    let total: f64 = x.iter().map(|v| v.abs()).sum();
    if total == 0.0 || !total.is_finite() {
        return None;
    }
    let mut cumulative = 0.0;
    for (i, v) in x.iter().enumerate() {
        cumulative += v.abs();
        if cumulative / total >= q {
            return finite((i + 1) as f64 / x.len() as f64);
        }
    }
    Some(1.0)
}

pub fn first_location_of_maximum(x: &[f64]) -> Option<f64> {
    let (idx, _) =
        x.iter()
            .enumerate()
            .fold(None, |best: Option<(usize, f64)>, (i, &v)| match best {
                Some((_, b)) if v <= b => best,
                _ => Some((i, v)),
            })?;
    Some(idx as f64 / x.len() as f64)
}

pub fn first_location_of_minimum(x: &[f64]) -> Option<f64> {
    let (idx, _) =
        x.iter()
            .enumerate()
            .fold(None, |best: Option<(usize, f64)>, (i, &v)| match best {
                Some((_, b)) if v >= b => best,
                _ => Some((i, v)),
            })?;
    Some(idx as f64 / x.len() as f64)
}

pub fn mean_second_derivative_central(x: &[f64]) -> Option<f64> {
    if x.len() < 3 {
        return None;
    }
    let total: f64 = x.windows(3).map(|w| (w[2] - 2.0 * w[1] + w[0]) / 2.0).sum();
    finite(total / (x.len() - 2) as f64)
}
