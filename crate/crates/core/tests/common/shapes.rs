//! Synthetic feature-function views for overlay scoring.

use rand::Rng;
use thinc_core::explain::{BinView, FeatureFunctionView};

use super::rng;

fn build(logits: Vec<f64>, half_widths: Vec<f64>, counts: Vec<u64>) -> FeatureFunctionView {
    let mut bins = vec![BinView {
        bin: 0,
        missing: true,
        lower: None,
        upper: None,
        logit: 0.0,
        envelope_min: 0.0,
        envelope_max: 0.0,
        count: 0,
    }];
    for (i, ((l, h), c)) in logits.into_iter().zip(half_widths).zip(counts).enumerate() {
        bins.push(BinView {
            bin: i + 1,
            missing: false,
            lower: (i > 0).then_some(i as f64 / 100.0),
            upper: Some((i + 1) as f64 / 100.0),
            logit: l,
            envelope_min: l - h,
            envelope_max: l + h,
            count: c,
        });
    }
    FeatureFunctionView {
        feature: "synthetic".into(),
        hypothesis: None,
        bins,
    }
}

/// A rising, saturating function: strongly negative for small values,
/// strongly positive for large ones, with narrow bands and small wiggles.
pub fn rising_with_narrow_band(seed: u64, bins: usize) -> FeatureFunctionView {
    let mut rng = rng(seed);
    let t: Vec<f64> = (0..bins)
        .map(|i| 2.0 * (i as f64 + 0.5) / bins as f64 - 1.0)
        .collect();
    let logits = t
        .iter()
        .map(|&t| 1.5 * (3.0 * t).tanh() + rng.random_range(-0.1..0.1))
        .collect();
    let half = (0..bins).map(|_| rng.random_range(0.05..0.2)).collect();
    let counts = (0..bins).map(|_| rng.random_range(15..25)).collect();
    build(logits, half, counts)
}

/// A function that falls where an increase is expected: positive over the
/// low values, oscillating and negative over the high values, with wide
/// bands in the sparse tails.
pub fn falling_with_wide_tails(seed: u64, bins: usize) -> FeatureFunctionView {
    let mut rng = rng(seed);
    let t: Vec<f64> = (0..bins)
        .map(|i| 2.0 * (i as f64 + 0.5) / bins as f64 - 1.0)
        .collect();
    let logits = t
        .iter()
        .map(|&t| -0.6 * t + 0.3 * (7.0 * t).sin() + rng.random_range(-0.1..0.1))
        .collect();
    let half = t.iter().map(|&t| 0.1 + 0.8 * t.abs().powi(3)).collect();
    let counts = t
        .iter()
        .map(|&t| (40.0 * (1.0 - 0.8 * t.abs())) as u64 + rng.random_range(0..5))
        .collect();
    build(logits, half, counts)
}
