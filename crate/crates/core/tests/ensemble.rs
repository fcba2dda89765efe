mod common;

use common::metrics::{ap_oracle, f1_oracle};
use rand::Rng;
use thinc_core::ensemble::{
    average_precision, ensemble_score, evaluate, f1_positive, fit_weights, nelder_mead,
    predict_class, read_ensemble, write_ensemble, EnsembleModel, SimplexSettings,
};

#[test]
fn average_precision_matches_the_quadratic_oracle() {
    let mut rng = common::rng(71);
    for trial in 0..200 {
        let labels: Vec<u8> = (0..200).map(|_| u8::from(rng.random_bool(0.3))).collect();
        if !labels.contains(&1) {
            continue;
        }
        // coarse scores in half the trials so that ties occur
        let scores: Vec<f64> = (0..200)
            .map(|_| {
                let s: f64 = rng.random();
                if trial % 2 == 0 {
                    (s * 10.0).round() / 10.0
                } else {
                    s
                }
            })
            .collect();
        let fast = average_precision(&labels, &scores).unwrap();
        assert!(
            (fast - ap_oracle(&labels, &scores)).abs() <= 1e-12,
            "trial {trial}"
        );
    }
}

#[test]
fn f1_matches_the_confusion_oracle() {
    let mut rng = common::rng(72);
    for _ in 0..500 {
        let n = rng.random_range(0..60);
        let rate = rng.random::<f64>();
        let labels: Vec<u8> = (0..n).map(|_| u8::from(rng.random_bool(rate))).collect();
        let predictions: Vec<u8> = (0..n).map(|_| u8::from(rng.random_bool(0.5))).collect();
        assert!(
            (f1_positive(&labels, &predictions) - f1_oracle(&labels, &predictions)).abs() <= 1e-15
        );
    }
}

#[test]
fn simplex_finds_the_quadratic_minimum() {
    let settings = SimplexSettings::default();
    let result = nelder_mead(
        |w| (w[0] - 1.0).powi(2) + (w[1] - 2.0).powi(2),
        &[1.0, 1.0],
        &settings,
    );
    assert!(result.converged);
    assert!(result.iterations <= 200, "{} iterations", result.iterations);
    assert!(
        (result.x[0] - 1.0).abs() <= 1e-4 && (result.x[1] - 2.0).abs() <= 1e-4,
        "{:?}",
        result.x
    );
    let again = nelder_mead(
        |w| (w[0] - 1.0).powi(2) + (w[1] - 2.0).powi(2),
        &[1.0, 1.0],
        &settings,
    );
    assert_eq!(again, result);
}

#[test]
fn simplex_handles_a_curved_valley() {
    let settings = SimplexSettings {
        max_iterations: 5000,
        value_tolerance: 1e-14,
        diameter_tolerance: 1e-10,
        ..SimplexSettings::default()
    };
    let rosenbrock = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
    let result = nelder_mead(rosenbrock, &[-1.2, 1.0], &settings);
    assert!(
        (result.x[0] - 1.0).abs() < 1e-4 && (result.x[1] - 1.0).abs() < 1e-4,
        "{:?}",
        result.x
    );
}

#[test]
fn score_is_scale_free_and_matches_the_two_class_argmax() {
    let mut rng = common::rng(73);
    for _ in 0..2000 {
        let m = rng.random_range(1..6);
        let w: Vec<f64> = (0..m).map(|_| rng.random_range(0.01..3.0)).collect();
        let p: Vec<f64> = (0..m).map(|_| rng.random()).collect();
        let s = ensemble_score(&w, &p).unwrap();
        let w3: Vec<f64> = w.iter().map(|v| 3.0 * v).collect();
        assert!((s - ensemble_score(&w3, &p).unwrap()).abs() <= 1e-12);
        assert!((0.0..=1.0).contains(&s));
        // class scores over both classes with p_j0 = 1 - p_j1; ties go to class 0
        let votes0: f64 = w.iter().zip(&p).map(|(w, p)| w * (1.0 - p)).sum();
        let votes1: f64 = w.iter().zip(&p).map(|(w, p)| w * p).sum();
        let argmax = u8::from(votes1 > votes0);
        assert_eq!(predict_class(s), argmax);
    }
}

/// One classifier that separates the classes with a small margin around
/// one half and one that is pure noise.
fn perfect_and_random(seed: u64, n: usize) -> (Vec<Vec<f64>>, Vec<u8>) {
    let mut rng = common::rng(seed);
    let labels: Vec<u8> = (0..n).map(|_| u8::from(rng.random_bool(0.4))).collect();
    let perfect = labels
        .iter()
        .map(|&y| {
            if y == 1 {
                rng.random_range(0.52..1.0)
            } else {
                rng.random_range(0.0..0.48)
            }
        })
        .collect();
    let random = (0..n).map(|_| rng.random()).collect();
    (vec![perfect, random], labels)
}

fn names(m: usize) -> Vec<String> {
    (0..m).map(|j| format!("c{j}")).collect()
}

#[test]
fn fitted_weights_favour_the_perfect_classifier() {
    let (columns, labels) = perfect_and_random(74, 400);
    let model = fit_weights(
        &names(2),
        &columns,
        &labels,
        "validation",
        &SimplexSettings::default(),
    )
    .unwrap();
    let (wp, wr) = (model.weights[0], model.weights[1]);
    assert!(wr == 0.0 || wp / wr >= 5.0, "weights {wp} {wr}");
    let scores = model.score_columns(&columns).unwrap();
    assert_eq!(average_precision(&labels, &scores).unwrap(), 1.0);
    let d = model.diagnostics.as_ref().unwrap();
    assert_eq!(d.average_precision, 1.0);
    assert_eq!(d.fit_split, "validation");
}

#[test]
fn identical_classifiers_keep_the_single_classifier_precision() {
    let mut rng = common::rng(75);
    let labels: Vec<u8> = (0..300).map(|_| u8::from(rng.random_bool(0.5))).collect();
    let p: Vec<f64> = labels
        .iter()
        .map(|&y| (0.3 * f64::from(y) + rng.random::<f64>() * 0.7).min(1.0))
        .collect();
    let columns = vec![p.clone(), p.clone(), p.clone()];
    let model = fit_weights(
        &names(3),
        &columns,
        &labels,
        "validation",
        &SimplexSettings::default(),
    )
    .unwrap();
    let d = model.diagnostics.unwrap();
    assert!(d.iterations <= SimplexSettings::default().max_iterations);
    assert_eq!(d.average_precision, average_precision(&labels, &p).unwrap());
}

#[test]
fn fitting_never_loses_to_uniform_weights() {
    let mut rng = common::rng(76);
    for trial in 0..30 {
        let n = 150;
        let labels: Vec<u8> = (0..n).map(|_| u8::from(rng.random_bool(0.5))).collect();
        let columns: Vec<Vec<f64>> = (0..3)
            .map(|j| {
                labels
                    .iter()
                    .map(|&y| (0.15 * j as f64 * f64::from(y) + rng.random::<f64>() * 0.8).min(1.0))
                    .collect()
            })
            .collect();
        let model = fit_weights(
            &names(3),
            &columns,
            &labels,
            "v",
            &SimplexSettings::default(),
        )
        .unwrap();
        let uniform = average_precision(
            &labels,
            &EnsembleModel::new(names(3), vec![1.0; 3])
                .unwrap()
                .score_columns(&columns)
                .unwrap(),
        )
        .unwrap();
        let fitted = average_precision(&labels, &model.score_columns(&columns).unwrap()).unwrap();
        assert!(fitted >= uniform, "trial {trial}: {fitted} < {uniform}");
        assert!(model.weights.iter().all(|&w| w >= 0.0));
        let again = fit_weights(
            &names(3),
            &columns,
            &labels,
            "v",
            &SimplexSettings::default(),
        )
        .unwrap();
        assert_eq!(again, model);
    }
}

#[test]
fn degenerate_fits_are_rejected() {
    let s = SimplexSettings::default();
    assert!(fit_weights(&names(1), &[vec![0.5, 0.6]], &[0, 1], "v", &s).is_err());
    assert!(fit_weights(
        &names(2),
        &[vec![0.5, 0.6], vec![0.5, 0.6]],
        &[1, 1],
        "v",
        &s
    )
    .is_err());
    assert!(fit_weights(&names(2), &[vec![0.5, 0.6], vec![0.5]], &[0, 1], "v", &s).is_err());
    assert!(fit_weights(
        &names(2),
        &[vec![0.5, 1.6], vec![0.5, 0.2]],
        &[0, 1],
        "v",
        &s
    )
    .is_err());
}

#[test]
fn evaluation_recomputes_each_metric() {
    let mut rng = common::rng(77);
    let labels: Vec<u8> = (0..250).map(|_| u8::from(rng.random_bool(0.45))).collect();
    let columns: Vec<Vec<f64>> = (0..4)
        .map(|_| (0..250).map(|_| rng.random()).collect())
        .collect();
    let model = EnsembleModel::new(names(4), vec![1.342, 0.573, 0.442, 1.591]).unwrap();
    let report = evaluate(&model, &columns, &labels).unwrap();
    for (j, c) in report.classifiers.iter().enumerate() {
        let predictions: Vec<u8> = columns[j].iter().map(|&p| u8::from(p > 0.5)).collect();
        assert!((c.f1_positive - f1_oracle(&labels, &predictions)).abs() <= 1e-15);
        assert!((c.average_precision.unwrap() - ap_oracle(&labels, &columns[j])).abs() <= 1e-12);
    }
    let scores = model.score_columns(&columns).unwrap();
    let predictions: Vec<u8> = scores.iter().map(|&s| predict_class(s)).collect();
    assert_eq!(
        report.ensemble.f1_positive,
        f1_oracle(&labels, &predictions)
    );
    let c = report.ensemble.confusion;
    assert_eq!(c.tp + c.fp + c.tn + c.fn_, 250);

    let perfect: Vec<Vec<f64>> = vec![labels.iter().map(|&y| f64::from(y)).collect(); 2];
    let report = evaluate(
        &EnsembleModel::new(names(2), vec![1.0, 2.0]).unwrap(),
        &perfect,
        &labels,
    )
    .unwrap();
    assert_eq!(report.ensemble.f1_positive, 1.0);
    assert!(evaluate(&model, &columns[..3], &labels).is_err());
    assert!(evaluate(&model, &columns, &labels[1..]).is_err());
}

#[test]
fn ensemble_files_round_trip() {
    let (columns, labels) = perfect_and_random(78, 100);
    let model = fit_weights(
        &names(2),
        &columns,
        &labels,
        "validation",
        &SimplexSettings::default(),
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ensemble.json");
    write_ensemble(&model, &path).unwrap();
    let back = read_ensemble(&path).unwrap();
    assert_eq!(back, model);
    assert_eq!(back.to_json().unwrap(), model.to_json().unwrap());
    assert!(
        EnsembleModel::from_json(r#"{"version":1,"classifiers":["a"],"weights":[0.0]}"#).is_err()
    );
    assert!(
        EnsembleModel::from_json(r#"{"version":2,"classifiers":["a"],"weights":[1.0]}"#).is_err()
    );
}
