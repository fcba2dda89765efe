//! Feature matrices with known decision rules.

use rand::Rng;
use thinc_core::{FeatureMatrix, FeatureRow};

use super::rng;

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn matrix(names: &[&str], columns: Vec<Vec<f64>>, labels: Vec<u8>) -> FeatureMatrix {
    let mut m = FeatureMatrix::new(names.iter().map(|s| s.to_string()).collect());
    for (i, label) in labels.into_iter().enumerate() {
        m.push(FeatureRow {
            id: format!("r{i}"),
            label: Some(label),
            values: columns.iter().map(|c| Some(c[i])).collect(),
        })
        .unwrap();
    }
    m
}

fn uniform(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random::<f64>()).collect()
}

/// `d` uniform noise features; labels are Bernoulli(`p`) independent of them.
pub fn no_signal(seed: u64, n: usize, d: usize, p: f64) -> FeatureMatrix {
    let mut rng = rng(seed);
    let columns: Vec<Vec<f64>> = (0..d).map(|_| uniform(&mut rng, n)).collect();
    let labels = (0..n).map(|_| u8::from(rng.random_bool(p))).collect();
    let names: Vec<String> = (0..d).map(|j| format!("noise{j}")).collect();
    matrix(
        &names.iter().map(String::as_str).collect::<Vec<_>>(),
        columns,
        labels,
    )
}

/// `y = 1` iff `a > median(a)`, plus one noise column `b`.
pub fn threshold_rule(seed: u64, n: usize) -> FeatureMatrix {
    let mut rng = rng(seed);
    let a = uniform(&mut rng, n);
    let b = uniform(&mut rng, n);
    let m = median(&a);
    let labels = a.iter().map(|&v| u8::from(v > m)).collect();
    matrix(&["a", "b"], vec![a, b], labels)
}

/// `y = (a > median(a)) xor (b > median(b))`.
pub fn xor_rule(seed: u64, n: usize) -> FeatureMatrix {
    let mut rng = rng(seed);
    let a = uniform(&mut rng, n);
    let b = uniform(&mut rng, n);
    let (ma, mb) = (median(&a), median(&b));
    let labels = a
        .iter()
        .zip(&b)
        .map(|(&x, &y)| u8::from((x > ma) != (y > mb)))
        .collect();
    matrix(&["a", "b"], vec![a, b], labels)
}

/// Labels drawn from a smooth logistic function of several features, with a
/// share of missing cells.
pub fn logistic(seed: u64, n: usize, d: usize, missing: f64) -> FeatureMatrix {
    let mut rng = rng(seed);
    let mut m = FeatureMatrix::new((0..d).map(|j| format!("f{j}")).collect());
    for i in 0..n {
        let x: Vec<f64> = (0..d).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        let z: f64 = x
            .iter()
            .enumerate()
            .map(|(j, v)| v * (j as f64 + 1.0) * if j % 2 == 0 { 1.0 } else { -1.0 })
            .sum();
        let y = u8::from(rng.random::<f64>() < 1.0 / (1.0 + (-z).exp()));
        let values = x
            .into_iter()
            .map(|v| (!rng.random_bool(missing)).then_some(v))
            .collect();
        m.push(FeatureRow {
            id: format!("r{i}"),
            label: Some(y),
            values,
        })
        .unwrap();
    }
    m
}

pub fn accuracy(predicted: &[f64], matrix: &FeatureMatrix) -> f64 {
    let labels = matrix.labels().unwrap();
    let correct = predicted
        .iter()
        .zip(&labels)
        .filter(|(&p, &y)| (p > 0.5) == (y == 1))
        .count();
    correct as f64 / labels.len() as f64
}
