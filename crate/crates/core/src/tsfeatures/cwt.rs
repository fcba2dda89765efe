//! Ridge-line peak detection on a Ricker-wavelet transform.
//!
//! Follows the widely used reference procedure: relative maxima of every
//! transform row are linked from the coarsest width down to the finest, a
//! line dies after more than `gap_thresh` rows without a new maximum, and
//! surviving lines are kept when long enough and above a local noise floor.
//! Defaults: `gap_thresh = ceil(widths[0])`, `max_distance = width / 4`,
//! `min_length = ceil(len(widths) / 4)`, noise window `ceil(n / 20)`,
//! noise percentile 10, minimum SNR 1.

/// Ricker (Mexican hat) wavelet sampled at `points` positions centred on
/// zero, with width parameter `a`.
pub fn ricker(points: usize, a: f64) -> Vec<f64> {
    let amplitude = 2.0 / ((3.0 * a).sqrt() * std::f64::consts::PI.powf(0.25));
    let wsq = a * a;
    let centre = (points as f64 - 1.0) / 2.0;
    (0..points)
        .map(|i| {
            let t = i as f64 - centre;
            let xsq = t * t;
            let modulation = 1.0 - xsq / wsq;
            let gauss = (-xsq / (2.0 * wsq)).exp();
            amplitude * modulation * gauss
        })
        .collect()
}

/// One transform row per width: the data convolved with the (reversed)
/// wavelet, cropped to the input length around the centre of the full
/// convolution.
fn transform(data: &[f64], widths: &[usize]) -> Vec<Vec<f64>> {
    let n = data.len();
    widths
        .iter()
        .map(|&w| {
            let points = (10 * w).min(n);
            let mut kernel = ricker(points, w as f64);
            kernel.reverse();
            let offset = (points - 1) / 2;
            (0..n)
                .map(|i| {
                    let j = i + offset;
                    let lo = j.saturating_sub(points - 1);
                    let hi = j.min(n - 1);
                    (lo..=hi).map(|k| data[k] * kernel[j - k]).sum()
                })
                .collect()
        })
        .collect()
}

/// Strict relative maxima of a row; edge samples compare against themselves
/// and so never qualify.
fn relative_maxima(row: &[f64]) -> Vec<usize> {
    let n = row.len();
    (0..n)
        .filter(|&i| {
            let left = row[i.saturating_sub(1)];
            let right = row[(i + 1).min(n - 1)];
            row[i] > left && row[i] > right
        })
        .collect()
}

struct Ridge {
    rows: Vec<usize>,
    cols: Vec<usize>,
    gap: usize,
}

fn identify_ridge_lines(cwt: &[Vec<f64>], max_distances: &[f64], gap_thresh: f64) -> Vec<Ridge> {
    let maxima: Vec<Vec<usize>> = cwt.iter().map(|row| relative_maxima(row)).collect();
    let Some(start_row) = maxima.iter().rposition(|m| !m.is_empty()) else {
        return Vec::new();
    };
    let mut active: Vec<Ridge> = maxima[start_row]
        .iter()
        .map(|&col| Ridge {
            rows: vec![start_row],
            cols: vec![col],
            gap: 0,
        })
        .collect();
    let mut finished = Vec::new();

    for row in (0..start_row).rev() {
        for line in &mut active {
            line.gap += 1;
        }
        // Snapshot of line ends before this row's maxima are attached.
        let prev_cols: Vec<usize> = active.iter().map(|l| *l.cols.last().unwrap()).collect();
        for &col in &maxima[row] {
            let closest = prev_cols
                .iter()
                .enumerate()
                .map(|(idx, &c)| (idx, col.abs_diff(c)))
                .min_by_key(|&(idx, d)| (d, idx));
            match closest {
                Some((idx, d)) if d as f64 <= max_distances[row] => {
                    let line = &mut active[idx];
                    line.rows.push(row);
                    line.cols.push(col);
                    line.gap = 0;
                }
                _ => active.push(Ridge {
                    rows: vec![row],
                    cols: vec![col],
                    gap: 0,
                }),
            }
        }
        let mut i = active.len();
        while i > 0 {
            i -= 1;
            if active[i].gap as f64 > gap_thresh {
                finished.push(active.remove(i));
            }
        }
    }
    finished.extend(active);
    finished
}

/// Linear-interpolated percentile of an unsorted window.
fn score_at_percentile(window: &[f64], per: f64) -> f64 {
    let mut sorted = window.to_vec();
    sorted.sort_by(f64::total_cmp);
    let idx = per / 100.0 * (sorted.len() - 1) as f64;
    let i = idx as usize;
    if i as f64 == idx {
        sorted[i]
    } else {
        let w0 = (i + 1) as f64 - idx;
        let w1 = idx - i as f64;
        (sorted[i] * w0 + sorted[i + 1] * w1) / (w0 + w1)
    }
}

/// Column positions of the detected peaks, ascending.
pub fn cwt_peak_locations(data: &[f64], widths: &[usize]) -> Vec<usize> {
    if data.is_empty() || widths.is_empty() {
        return Vec::new();
    }
    let cwt = transform(data, widths);
    let max_distances: Vec<f64> = widths.iter().map(|&w| w as f64 / 4.0).collect();
    let gap_thresh = (widths[0] as f64).ceil();
    let ridges = identify_ridge_lines(&cwt, &max_distances, gap_thresh);

    let n = data.len();
    let min_length = (widths.len() as f64 / 4.0).ceil();
    let window = n.div_ceil(20);
    let (half, odd) = (window / 2, window % 2);
    let first_row = &cwt[0];
    let noise: Vec<f64> = (0..n)
        .map(|i| {
            let start = i.saturating_sub(half);
            let end = (i + half + odd).min(n);
            score_at_percentile(&first_row[start..end], 10.0)
        })
        .collect();

    let mut peaks: Vec<usize> = ridges
        .iter()
        .filter(|line| {
            if (line.rows.len() as f64) < min_length {
                return false;
            }
            // The finest-scale point of the line is the last one attached.
            let row = *line.rows.last().unwrap();
            let col = *line.cols.last().unwrap();
            let snr = (cwt[row][col] / noise[col]).abs();
            // NaN (0/0) is not below the threshold and keeps the line.
            snr >= 1.0 || snr.is_nan()
        })
        .map(|line| *line.cols.last().unwrap())
        .collect();
    peaks.sort_unstable();
    peaks
}
