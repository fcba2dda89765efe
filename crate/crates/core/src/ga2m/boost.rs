//! Bagged cyclic gradient boosting of main and pair terms.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::binning::{build_bins, FeatureBins};
use super::model::{
    sigmoid, BagMetrics, FeatureMeta, Ga2mModel, StageTrace, TermFunction, TermKind, TrainMetrics,
    MODEL_VERSION,
};
use super::settings::TrainSettings;
use crate::error::{Error, Result};
use crate::matrix::{FeatureMatrix, FeatureRow};
use crate::theory::{ProxyFeatureSpec, TheoryConfig};

/// Log-loss of one row, `log(1 + e^s) - y s`, without overflow.
fn log_loss(score: f64, y: f64) -> f64 {
    score.max(0.0) + (-score.abs()).exp().ln_1p() - y * score
}

fn logit(p: f64) -> f64 {
    let p = p.clamp(1e-6, 1.0 - 1e-6);
    (p / (1.0 - p)).ln()
}

/// A term's table geometry: `rows x cols` cells, `cols == 1` for mains.
#[derive(Debug, Clone, Copy)]
struct Geometry {
    rows: usize,
    cols: usize,
}

impl Geometry {
    fn cells(&self) -> usize {
        self.rows * self.cols
    }
}

/// Binned training data shared by every bag.
struct Binned {
    labels: Vec<f64>,
    fine: Vec<Vec<u8>>,
    coarse: Vec<Vec<u8>>,
    fine_bins: Vec<FeatureBins>,
    coarse_bins: Vec<FeatureBins>,
}

impl Binned {
    fn new(matrix: &FeatureMatrix, labels: &[u8], settings: &TrainSettings) -> Self {
        let fine_bins = build_bins(matrix, settings.max_bins);
        let coarse_bins: Vec<FeatureBins> = fine_bins
            .iter()
            .map(|b| b.coarsened(settings.pair_resolution))
            .collect();
        let column = |bins: &FeatureBins, j: usize| -> Vec<u8> {
            matrix.column(j).map(|v| bins.bin(v) as u8).collect()
        };
        Self {
            labels: labels.iter().map(|&l| f64::from(l)).collect(),
            fine: fine_bins
                .iter()
                .enumerate()
                .map(|(j, b)| column(b, j))
                .collect(),
            coarse: coarse_bins
                .iter()
                .enumerate()
                .map(|(j, b)| column(b, j))
                .collect(),
            fine_bins,
            coarse_bins,
        }
    }

    fn n(&self) -> usize {
        self.labels.len()
    }

    fn main_geometry(&self, j: usize) -> Geometry {
        Geometry {
            rows: self.fine_bins[j].n_bins(),
            cols: 1,
        }
    }

    fn pair_geometry(&self, a: usize, b: usize) -> Geometry {
        Geometry {
            rows: self.coarse_bins[a].n_bins(),
            cols: self.coarse_bins[b].n_bins(),
        }
    }

    fn main_cells(&self, j: usize, rows: &[u32]) -> Vec<u16> {
        rows.iter()
            .map(|&r| u16::from(self.fine[j][r as usize]))
            .collect()
    }

    fn pair_cells(&self, (a, b): (usize, usize), rows: &[u32]) -> Vec<u16> {
        let cols = self.coarse_bins[b].n_bins();
        rows.iter()
            .map(|&r| {
                let r = r as usize;
                (usize::from(self.coarse[a][r]) * cols + usize::from(self.coarse[b][r])) as u16
            })
            .collect()
    }
}

/// One bag's rows: a bootstrap sample (distinct rows with their draw counts)
/// and a disjoint inner-validation set.
struct BagRows {
    train: Vec<u32>,
    weight: Vec<f64>,
    validation: Vec<u32>,
}

/// Stratified holdout first, then a bootstrap of the remaining rows, so that
/// no validation row is also drawn for training.
fn sample_bag(labels: &[f64], settings: &TrainSettings, bag: usize) -> BagRows {
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    rng.set_stream(bag as u64);
    let mut validation = Vec::new();
    let mut rest = Vec::new();
    for class in [0.0, 1.0] {
        let mut rows: Vec<u32> = (0..labels.len() as u32)
            .filter(|&i| labels[i as usize] == class)
            .collect();
        rows.shuffle(&mut rng);
        let held = ((rows.len() as f64 * settings.validation_fraction).round() as usize)
            .min(rows.len().saturating_sub(1));
        validation.extend_from_slice(&rows[..held]);
        rest.extend_from_slice(&rows[held..]);
    }
    validation.sort_unstable();
    rest.sort_unstable();
    let mut draws = vec![0u32; rest.len()];
    for _ in 0..rest.len() {
        draws[rng.random_range(0..rest.len())] += 1;
    }
    let (train, weight) = rest
        .iter()
        .zip(&draws)
        .filter(|(_, &c)| c > 0)
        .map(|(&r, &c)| (r, f64::from(c)))
        .unzip();
    BagRows {
        train,
        weight,
        validation,
    }
}

/// Best split of a 1-D histogram slice into two contiguous parts, as
/// `(score, split)` where the score is `sum G^2/W` over the parts.
fn best_split(g: &[f64], w: &[f64], min_weight: f64) -> Option<(f64, usize)> {
    let total_g: f64 = g.iter().sum();
    let total_w: f64 = w.iter().sum();
    let mut best: Option<(f64, usize)> = None;
    let (mut lg, mut lw) = (0.0, 0.0);
    for k in 1..g.len() {
        lg += g[k - 1];
        lw += w[k - 1];
        let (rg, rw) = (total_g - lg, total_w - lw);
        if lw < min_weight || rw < min_weight {
            continue;
        }
        let score = lg * lg / lw + rg * rg / rw;
        if best.is_none_or(|(s, _)| score > s) {
            best = Some((score, k));
        }
    }
    best
}

fn leaf_score(g: f64, w: f64) -> f64 {
    if w > 0.0 {
        g * g / w
    } else {
        0.0
    }
}

fn leaf_value(g: f64, w: f64, learning_rate: f64) -> f64 {
    if w > 0.0 {
        learning_rate * g / w
    } else {
        0.0
    }
}

/// Greedy best-first tree over ordered bins: repeatedly split the segment
/// whose best split gains most, up to `max_leaves` segments.
fn fit_line(
    g: &[f64],
    w: &[f64],
    max_leaves: usize,
    min_weight: f64,
    learning_rate: f64,
) -> Vec<f64> {
    let mut segments = vec![(0, g.len())];
    while segments.len() < max_leaves {
        let mut best: Option<(f64, usize, usize)> = None;
        for (s, &(lo, hi)) in segments.iter().enumerate() {
            if let Some((score, k)) = best_split(&g[lo..hi], &w[lo..hi], min_weight) {
                let whole = leaf_score(g[lo..hi].iter().sum(), w[lo..hi].iter().sum());
                let gain = score - whole;
                if gain > 0.0 && best.is_none_or(|(b, _, _)| gain > b) {
                    best = Some((gain, s, lo + k));
                }
            }
        }
        let Some((_, s, at)) = best else { break };
        let (lo, hi) = segments[s];
        segments[s] = (lo, at);
        segments.insert(s + 1, (at, hi));
    }
    let mut delta = vec![0.0; g.len()];
    for (lo, hi) in segments {
        let v = leaf_value(
            g[lo..hi].iter().sum(),
            w[lo..hi].iter().sum(),
            learning_rate,
        );
        delta[lo..hi].fill(v);
    }
    delta
}

/// A two-level tree on a grid: one cut across `outer`, then each side gets
/// its own optional cut across the inner dimension.
#[derive(Debug, Clone, Copy)]
struct GridSplit {
    gain: f64,
    transpose: bool,
    cut: usize,
    first: Option<usize>,
    second: Option<usize>,
}

/// Best split of one side of a grid cut, as `(score, cut)` where the score
/// is the larger of the unsplit and split leaf scores. Candidate scores
/// `lg^2/lw + rg^2/rw` are compared as fractions to avoid a division per bin.
fn best_side(sg: &[f64], sw: &[f64], tg: f64, tw: f64, min_weight: f64) -> (f64, Option<usize>) {
    let (mut best_num, mut best_den, mut best_k) = (0.0, 1.0, None);
    let (mut lg, mut lw) = (0.0, 0.0);
    for k in 1..sg.len() {
        lg += sg[k - 1];
        lw += sw[k - 1];
        let (rg, rw) = (tg - lg, tw - lw);
        if lw < min_weight || rw < min_weight {
            continue;
        }
        let num = lg * lg * rw + rg * rg * lw;
        let den = lw * rw;
        if best_k.is_none() || num * best_den > best_num * den {
            (best_num, best_den, best_k) = (num, den, Some(k));
        }
    }
    let whole = leaf_score(tg, tw);
    match best_k {
        Some(k) if best_num / best_den > whole => (best_num / best_den, Some(k)),
        _ => (whole, None),
    }
}

fn best_grid_split(
    g: &[f64],
    w: &[f64],
    geom: Geometry,
    transpose: bool,
    min_weight: f64,
) -> Option<GridSplit> {
    let (outer, inner) = if transpose {
        (geom.cols, geom.rows)
    } else {
        (geom.rows, geom.cols)
    };
    // outer-major copies so each slice along the inner dimension is contiguous
    let (g, w) = if transpose {
        let t = |v: &[f64]| -> Vec<f64> {
            (0..outer * inner)
                .map(|x| v[(x % inner) * geom.cols + x / inner])
                .collect()
        };
        (t(g), t(w))
    } else {
        (g.to_vec(), w.to_vec())
    };
    let mut all_g = vec![0.0; inner];
    let mut all_w = vec![0.0; inner];
    for o in 0..outer {
        for i in 0..inner {
            all_g[i] += g[o * inner + i];
            all_w[i] += w[o * inner + i];
        }
    }
    let (total_g, total_w): (f64, f64) = (all_g.iter().sum(), all_w.iter().sum());
    let total = leaf_score(total_g, total_w);
    let mut top_g = vec![0.0; inner];
    let mut top_w = vec![0.0; inner];
    let mut bottom_g = vec![0.0; inner];
    let mut bottom_w = vec![0.0; inner];
    let (mut tg, mut tw) = (0.0, 0.0);
    let mut best: Option<GridSplit> = None;
    for cut in 1..outer {
        let row = (cut - 1) * inner;
        for i in 0..inner {
            top_g[i] += g[row + i];
            top_w[i] += w[row + i];
            bottom_g[i] = all_g[i] - top_g[i];
            bottom_w[i] = all_w[i] - top_w[i];
            tg += g[row + i];
            tw += w[row + i];
        }
        let (bg, bw) = (total_g - tg, total_w - tw);
        if tw < min_weight || bw < min_weight {
            continue;
        }
        let (ts, first) = best_side(&top_g, &top_w, tg, tw, min_weight);
        let (bs, second) = best_side(&bottom_g, &bottom_w, bg, bw, min_weight);
        let gain = ts + bs - total;
        if gain > 0.0 && best.is_none_or(|b| gain > b.gain) {
            best = Some(GridSplit {
                gain,
                transpose,
                cut,
                first,
                second,
            });
        }
    }
    best
}

fn best_pair_split(g: &[f64], w: &[f64], geom: Geometry, min_weight: f64) -> Option<GridSplit> {
    let rows_first = best_grid_split(g, w, geom, false, min_weight);
    let cols_first = best_grid_split(g, w, geom, true, min_weight);
    match (rows_first, cols_first) {
        (Some(a), Some(b)) if b.gain > a.gain => Some(b),
        (None, b) => b,
        (a, _) => a,
    }
}

fn fit_grid(g: &[f64], w: &[f64], geom: Geometry, min_weight: f64, learning_rate: f64) -> Vec<f64> {
    let split = best_pair_split(g, w, geom, min_weight);
    let leaf_of = |cell: usize| -> usize {
        let Some(split) = split else { return 0 };
        let (r, c) = (cell / geom.cols, cell % geom.cols);
        let (o, i) = if split.transpose { (c, r) } else { (r, c) };
        if o < split.cut {
            usize::from(split.first.is_some_and(|k| i >= k))
        } else {
            2 + usize::from(split.second.is_some_and(|k| i >= k))
        }
    };
    let leaves: Vec<u8> = (0..geom.cells()).map(|cell| leaf_of(cell) as u8).collect();
    let mut sums = [(0.0, 0.0); 4];
    for (cell, &leaf) in leaves.iter().enumerate() {
        let leaf = &mut sums[usize::from(leaf)];
        leaf.0 += g[cell];
        leaf.1 += w[cell];
    }
    let values = sums.map(|(lg, lw)| leaf_value(lg, lw, learning_rate));
    leaves
        .iter()
        .map(|&leaf| values[usize::from(leaf)])
        .collect()
}

/// Per-term cell indices of a bag's training and validation rows.
struct StageInput<'a> {
    geometry: Vec<Geometry>,
    train_cells: Vec<Vec<u16>>,
    validation_cells: Vec<Vec<u16>>,
    grid: bool,
    train_y: &'a [f64],
    train_w: &'a [f64],
    validation_y: &'a [f64],
}

fn weighted_loss(scores: &[f64], y: &[f64], w: &[f64]) -> f64 {
    let (mut loss, mut total) = (0.0, 0.0);
    for ((&s, &y), &w) in scores.iter().zip(y).zip(w) {
        loss += w * log_loss(s, y);
        total += w;
    }
    loss / total
}

fn mean_loss(scores: &[f64], y: &[f64]) -> f64 {
    if scores.is_empty() {
        return f64::NAN;
    }
    scores
        .iter()
        .zip(y)
        .map(|(&s, &y)| log_loss(s, y))
        .sum::<f64>()
        / scores.len() as f64
}

/// Cyclic boosting over the input's terms starting from the given scores.
/// Returns the tables from the epoch with the best stopping loss.
fn boost_stage(
    input: &StageInput,
    train_scores: &mut [f64],
    validation_scores: &mut [f64],
    settings: &TrainSettings,
) -> (Vec<Vec<f64>>, StageTrace) {
    let mut tables: Vec<Vec<f64>> = input
        .geometry
        .iter()
        .map(|g| vec![0.0; g.cells()])
        .collect();
    let mut best_tables = tables.clone();
    let mut trace = StageTrace {
        train_loss: vec![weighted_loss(train_scores, input.train_y, input.train_w)],
        validation_loss: vec![mean_loss(validation_scores, input.validation_y)],
        ..StageTrace::default()
    };
    if tables.is_empty() {
        return (tables, trace);
    }
    let stopping = |t: &StageTrace| {
        let v = *t.validation_loss.last().unwrap();
        if v.is_nan() {
            *t.train_loss.last().unwrap()
        } else {
            v
        }
    };
    let mut best = stopping(&trace);
    let mut stale = 0;
    let mut g = Vec::new();
    let mut w = Vec::new();
    for epoch in 1..=settings.max_epochs {
        for (t, geom) in input.geometry.iter().enumerate() {
            g.clear();
            g.resize(geom.cells(), 0.0);
            w.clear();
            w.resize(geom.cells(), 0.0);
            let cells = &input.train_cells[t];
            for i in 0..cells.len() {
                let c = usize::from(cells[i]);
                let wi = input.train_w[i];
                g[c] += wi * (input.train_y[i] - sigmoid(train_scores[i]));
                w[c] += wi;
            }
            let delta = if input.grid {
                fit_grid(
                    &g,
                    &w,
                    *geom,
                    settings.min_leaf_weight,
                    settings.learning_rate,
                )
            } else {
                fit_line(
                    &g,
                    &w,
                    settings.max_leaves,
                    settings.min_leaf_weight,
                    settings.learning_rate,
                )
            };
            for (c, d) in delta.iter().enumerate() {
                tables[t][c] += d;
            }
            for (s, &c) in train_scores.iter_mut().zip(cells) {
                *s += delta[usize::from(c)];
            }
            for (s, &c) in validation_scores.iter_mut().zip(&input.validation_cells[t]) {
                *s += delta[usize::from(c)];
            }
        }
        trace.epochs = epoch;
        trace
            .train_loss
            .push(weighted_loss(train_scores, input.train_y, input.train_w));
        trace
            .validation_loss
            .push(mean_loss(validation_scores, input.validation_y));
        let loss = stopping(&trace);
        if loss < best - settings.tolerance {
            best = loss;
            stale = 0;
            trace.best_epoch = epoch;
            best_tables.clone_from(&tables);
        } else {
            stale += 1;
            if stale >= settings.patience {
                break;
            }
        }
    }
    (best_tables, trace)
}

fn add_tables(scores: &mut [f64], tables: &[Vec<f64>], cells: &[Vec<u16>]) {
    for (table, cells) in tables.iter().zip(cells) {
        for (s, &c) in scores.iter_mut().zip(cells) {
            *s += table[usize::from(c)];
        }
    }
}

/// A bag after the mains stage.
struct MainsBag {
    rows: BagRows,
    intercept: f64,
    mains: Vec<Vec<f64>>,
    trace: StageTrace,
}

struct FinishedBag {
    intercept: f64,
    mains: Vec<Vec<f64>>,
    pairs: Vec<Vec<f64>>,
    metrics: BagMetrics,
}

fn gather(values: &[f64], rows: &[u32]) -> Vec<f64> {
    rows.iter().map(|&r| values[r as usize]).collect()
}

fn bag_intercept(data: &Binned, rows: &BagRows) -> f64 {
    let total: f64 = rows.weight.iter().sum();
    let positive: f64 = rows
        .train
        .iter()
        .zip(&rows.weight)
        .map(|(&r, &w)| w * data.labels[r as usize])
        .sum();
    logit(positive / total)
}

fn train_mains(data: &Binned, settings: &TrainSettings, bag: usize) -> MainsBag {
    let rows = sample_bag(&data.labels, settings, bag);
    let intercept = bag_intercept(data, &rows);
    let d = data.fine.len();
    let train_y = gather(&data.labels, &rows.train);
    let validation_y = gather(&data.labels, &rows.validation);
    let input = StageInput {
        geometry: (0..d).map(|j| data.main_geometry(j)).collect(),
        train_cells: (0..d).map(|j| data.main_cells(j, &rows.train)).collect(),
        validation_cells: (0..d)
            .map(|j| data.main_cells(j, &rows.validation))
            .collect(),
        grid: false,
        train_y: &train_y,
        train_w: &rows.weight,
        validation_y: &validation_y,
    };
    let mut train_scores = vec![intercept; rows.train.len()];
    let mut validation_scores = vec![intercept; rows.validation.len()];
    let (mains, trace) = boost_stage(&input, &mut train_scores, &mut validation_scores, settings);
    MainsBag {
        rows,
        intercept,
        mains,
        trace,
    }
}

fn train_pairs(
    data: &Binned,
    settings: &TrainSettings,
    pairs: &[(usize, usize)],
    bag: MainsBag,
) -> FinishedBag {
    let rows = &bag.rows;
    let d = data.fine.len();
    let mut train_scores = vec![bag.intercept; rows.train.len()];
    let mut validation_scores = vec![bag.intercept; rows.validation.len()];
    let main_train: Vec<Vec<u16>> = (0..d).map(|j| data.main_cells(j, &rows.train)).collect();
    let main_validation: Vec<Vec<u16>> = (0..d)
        .map(|j| data.main_cells(j, &rows.validation))
        .collect();
    add_tables(&mut train_scores, &bag.mains, &main_train);
    add_tables(&mut validation_scores, &bag.mains, &main_validation);
    let train_y = gather(&data.labels, &rows.train);
    let validation_y = gather(&data.labels, &rows.validation);
    let input = StageInput {
        geometry: pairs
            .iter()
            .map(|&(a, b)| data.pair_geometry(a, b))
            .collect(),
        train_cells: pairs
            .iter()
            .map(|&p| data.pair_cells(p, &rows.train))
            .collect(),
        validation_cells: pairs
            .iter()
            .map(|&p| data.pair_cells(p, &rows.validation))
            .collect(),
        grid: true,
        train_y: &train_y,
        train_w: &rows.weight,
        validation_y: &validation_y,
    };
    let (pair_tables, pair_trace) =
        boost_stage(&input, &mut train_scores, &mut validation_scores, settings);
    FinishedBag {
        intercept: bag.intercept,
        mains: bag.mains,
        pairs: pair_tables,
        metrics: BagMetrics {
            train_rows: rows.train.len(),
            validation_rows: rows.validation.len(),
            mains: bag.trace,
            pairs: pair_trace,
        },
    }
}

/// Orders candidate pairs by how much a single grid tree fitted to the
/// residuals of the bag-averaged mains improves the fit, strongest first.
fn rank_pairs(data: &Binned, bags: &[MainsBag], settings: &TrainSettings) -> Vec<(usize, usize)> {
    let d = data.fine.len();
    let n = data.n();
    let all_rows: Vec<u32> = (0..n as u32).collect();
    let scale = 1.0 / bags.len() as f64;
    let mut scores = vec![bags.iter().map(|b| b.intercept).sum::<f64>() * scale; n];
    for j in 0..d {
        let cells = data.main_cells(j, &all_rows);
        for (s, &c) in scores.iter_mut().zip(&cells) {
            *s += bags.iter().map(|b| b.mains[j][usize::from(c)]).sum::<f64>() * scale;
        }
    }
    let residual: Vec<f64> = scores
        .iter()
        .zip(&data.labels)
        .map(|(&s, &y)| y - sigmoid(s))
        .collect();
    let candidates: Vec<(usize, usize)> = (0..d)
        .flat_map(|a| (a + 1..d).map(move |b| (a, b)))
        .collect();
    let mut ranked: Vec<(f64, usize)> = candidates
        .par_iter()
        .enumerate()
        .map(|(k, &(a, b))| {
            let geom = data.pair_geometry(a, b);
            let mut g = vec![0.0; geom.cells()];
            let mut w = vec![0.0; geom.cells()];
            for (&c, &r) in data.pair_cells((a, b), &all_rows).iter().zip(&residual) {
                g[usize::from(c)] += r;
                w[usize::from(c)] += 1.0;
            }
            let gain =
                best_pair_split(&g, &w, geom, settings.min_leaf_weight).map_or(0.0, |s| s.gain);
            (gain, k)
        })
        .collect();
    ranked.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));
    ranked.into_iter().map(|(_, k)| candidates[k]).collect()
}

fn select_pairs(data: &Binned, bags: &[MainsBag], settings: &TrainSettings) -> Vec<(usize, usize)> {
    let d = data.fine.len();
    let all = d * d.saturating_sub(1) / 2;
    match settings.pair_budget {
        Some(0) => Vec::new(),
        Some(budget) if budget < all => {
            let mut chosen: Vec<(usize, usize)> = rank_pairs(data, bags, settings)
                .into_iter()
                .take(budget)
                .collect();
            chosen.sort_unstable();
            chosen
        }
        _ => (0..d)
            .flat_map(|a| (a + 1..d).map(move |b| (a, b)))
            .collect(),
    }
}

/// Mean of `table` over all training rows given per-cell row counts.
fn weighted_mean(table: &[f64], counts: &[u64], n: usize) -> f64 {
    table
        .iter()
        .zip(counts)
        .map(|(&v, &c)| v * c as f64)
        .sum::<f64>()
        / n as f64
}

struct Averaged {
    table: Vec<f64>,
    envelope_min: Vec<f64>,
    envelope_max: Vec<f64>,
}

fn average(tables: &[&Vec<f64>]) -> Averaged {
    let cells = tables[0].len();
    let scale = tables.len() as f64;
    let mut out = Averaged {
        table: Vec::with_capacity(cells),
        envelope_min: Vec::with_capacity(cells),
        envelope_max: Vec::with_capacity(cells),
    };
    for c in 0..cells {
        let (mut sum, mut lo, mut hi) = (0.0, f64::INFINITY, f64::NEG_INFINITY);
        for t in tables {
            sum += t[c];
            lo = lo.min(t[c]);
            hi = hi.max(t[c]);
        }
        // rounding in the mean must not leave the envelope
        out.table.push((sum / scale).clamp(lo, hi));
        out.envelope_min.push(lo);
        out.envelope_max.push(hi);
    }
    out
}

fn cell_counts(cells: &[u16], n_cells: usize) -> Vec<u64> {
    let mut counts = vec![0; n_cells];
    for &c in cells {
        counts[usize::from(c)] += 1;
    }
    counts
}

fn check_trainable(matrix: &FeatureMatrix) -> Result<Vec<u8>> {
    if matrix.is_empty() {
        return Err(Error::invalid("matrix", "has no rows"));
    }
    let labels = matrix.labels()?;
    if !labels.contains(&0) || !labels.contains(&1) {
        return Err(Error::invalid("labels", "training needs both classes"));
    }
    Ok(labels)
}

fn fit(
    matrix: &FeatureMatrix,
    settings: &TrainSettings,
    theory: String,
    specs: Vec<Option<ProxyFeatureSpec>>,
) -> Result<Ga2mModel> {
    settings.validate()?;
    let labels = check_trainable(matrix)?;
    let data = Binned::new(matrix, &labels, settings);
    let n = data.n();
    let d = matrix.n_features();

    let mains_bags: Vec<MainsBag> = (0..settings.bags)
        .into_par_iter()
        .map(|b| train_mains(&data, settings, b))
        .collect();
    let pairs = select_pairs(&data, &mains_bags, settings);
    let mut bags: Vec<FinishedBag> = mains_bags
        .into_par_iter()
        .map(|bag| train_pairs(&data, settings, &pairs, bag))
        .collect();

    let all_rows: Vec<u32> = (0..n as u32).collect();
    let main_counts: Vec<Vec<u64>> = (0..d)
        .map(|j| {
            cell_counts(
                &data.main_cells(j, &all_rows),
                data.main_geometry(j).cells(),
            )
        })
        .collect();
    let pair_counts: Vec<Vec<u64>> = pairs
        .iter()
        .map(|&(a, b)| {
            cell_counts(
                &data.pair_cells((a, b), &all_rows),
                data.pair_geometry(a, b).cells(),
            )
        })
        .collect();

    // center each bag's terms over the training rows
    let mut term_means = vec![0.0; d + pairs.len()];
    for bag in &mut bags {
        let terms = bag
            .mains
            .iter_mut()
            .zip(&main_counts)
            .chain(bag.pairs.iter_mut().zip(&pair_counts));
        for (t, (table, counts)) in terms.enumerate() {
            let mean = weighted_mean(table, counts, n);
            table.iter_mut().for_each(|v| *v -= mean);
            bag.intercept += mean;
            term_means[t] += mean / settings.bags as f64;
        }
    }

    let intercept = bags.iter().map(|b| b.intercept).sum::<f64>() / settings.bags as f64;
    let mains: Vec<TermFunction> = (0..d)
        .map(|j| {
            let avg = average(&bags.iter().map(|b| &b.mains[j]).collect::<Vec<_>>());
            TermFunction {
                name: matrix.feature_names[j].clone(),
                kind: TermKind::Main { feature: j },
                shape: (data.fine_bins[j].n_bins(), 1),
                table: avg.table,
                envelope_min: avg.envelope_min,
                envelope_max: avg.envelope_max,
                counts: main_counts[j].clone(),
            }
        })
        .collect();
    let pair_terms: Vec<TermFunction> = pairs
        .iter()
        .enumerate()
        .map(|(k, &(a, b))| {
            let avg = average(&bags.iter().map(|bag| &bag.pairs[k]).collect::<Vec<_>>());
            let geom = data.pair_geometry(a, b);
            TermFunction {
                name: pair_name(&matrix.feature_names[a], &matrix.feature_names[b]),
                kind: TermKind::Pair {
                    first: a,
                    second: b,
                },
                shape: (geom.rows, geom.cols),
                table: avg.table,
                envelope_min: avg.envelope_min,
                envelope_max: avg.envelope_max,
                counts: pair_counts[k].clone(),
            }
        })
        .collect();

    let mut model = Ga2mModel {
        version: MODEL_VERSION,
        theory,
        settings: settings.clone(),
        features: matrix
            .feature_names
            .iter()
            .zip(specs)
            .map(|(name, spec)| FeatureMeta {
                name: name.clone(),
                spec,
            })
            .collect(),
        bins: data.fine_bins.clone(),
        pair_bins: data.coarse_bins.clone(),
        intercept,
        mains,
        pairs: pair_terms,
        metrics: TrainMetrics {
            rows: n,
            positives: labels.iter().filter(|&&l| l == 1).count(),
            train_log_loss: 0.0,
            train_accuracy: 0.0,
            term_means,
            bags: bags.into_iter().map(|b| b.metrics).collect(),
        },
    };
    let (mut loss, mut correct) = (0.0, 0usize);
    for (row, y) in matrix.rows.iter().zip(&data.labels) {
        let s = model.predict_logit(&row.values)?;
        loss += log_loss(s, *y);
        correct += usize::from((s > 0.0) == (*y == 1.0));
    }
    model.metrics.train_log_loss = loss / n as f64;
    model.metrics.train_accuracy = correct as f64 / n as f64;
    Ok(model)
}

pub fn pair_name(first: &str, second: &str) -> String {
    format!("{first} & {second}")
}

/// Trains on every column of `matrix`; the model carries no theory specs.
pub fn train(matrix: &FeatureMatrix, settings: &TrainSettings) -> Result<Ga2mModel> {
    let specs = vec![None; matrix.n_features()];
    fit(matrix, settings, String::new(), specs)
}

/// Trains on the columns `config` defines, in config order, recording each
/// feature's spec and hypothesis in the model.
pub fn train_theory(
    matrix: &FeatureMatrix,
    config: &TheoryConfig,
    settings: &TrainSettings,
) -> Result<Ga2mModel> {
    let names = config.feature_names();
    let columns = names
        .iter()
        .map(|name| {
            matrix
                .feature_index(name)
                .ok_or_else(|| Error::UnknownFeature(name.clone()))
        })
        .collect::<Result<Vec<_>>>()?;
    let selected = FeatureMatrix {
        feature_names: names,
        rows: matrix
            .rows
            .iter()
            .map(|r| FeatureRow {
                id: r.id.clone(),
                label: r.label,
                values: columns.iter().map(|&j| r.values[j]).collect(),
            })
            .collect(),
    };
    let specs = config.features.iter().cloned().map(Some).collect();
    fit(&selected, settings, config.name.clone(), specs)
}
