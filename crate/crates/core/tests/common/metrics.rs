//! Brute-force references for the ranking and classification metrics.

/// Precision at each positive's rank, with ranks counted directly: a row
/// ranks ahead of `i` if its score is higher, or equal and earlier.
pub fn ap_oracle(labels: &[u8], scores: &[f64]) -> f64 {
    let n = labels.len();
    let ahead = |i: usize, j: usize| scores[j] > scores[i] || (scores[j] == scores[i] && j < i);
    let positives = labels.iter().filter(|&&l| l == 1).count();
    let mut total = 0.0;
    for i in (0..n).filter(|&i| labels[i] == 1) {
        let rank = 1 + (0..n).filter(|&j| ahead(i, j)).count();
        let hits = 1 + (0..n).filter(|&j| labels[j] == 1 && ahead(i, j)).count();
        total += hits as f64 / rank as f64;
    }
    total / positives as f64
}

pub fn f1_oracle(labels: &[u8], predictions: &[u8]) -> f64 {
    let count = |y: u8, p: u8| {
        labels
            .iter()
            .zip(predictions)
            .filter(|&(&a, &b)| a == y && b == p)
            .count() as f64
    };
    let (tp, fp, fn_) = (count(1, 1), count(0, 1), count(1, 0));
    let precision = if tp + fp > 0.0 { tp / (tp + fp) } else { 0.0 };
    let recall = if tp + fn_ > 0.0 { tp / (tp + fn_) } else { 0.0 };
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}
