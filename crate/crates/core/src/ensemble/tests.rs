use std::collections::HashSet;

use rand::Rng;

use super::*;
use crate::forecast_neural::{init_params, Arch};
use crate::stats::evaluate_metrics;

fn dataset(m: usize, seed: u64) -> WindowedDataset {
    let (l, n) = (6, 2);
    let mut rng = seeded(seed);
    let windows: Vec<f64> = (0..m * l * n).map(|_| rng.random_range(0.0..1.0)).collect();
    // target depends on the last step so networks have something to learn
    let targets = (0..m)
        .map(|i| {
            let last = &windows[(i * l + l - 1) * n..(i * l + l) * n];
            last[0] - 0.5 * last[1] + 0.1 * rng.random_range(-1.0..1.0)
        })
        .collect();
    WindowedDataset::new(windows, targets, l, n, Some(0)).unwrap()
}

fn cfg() -> NetworkConfig {
    NetworkConfig {
        arch: Arch::Gru,
        hidden_size: 4,
        batch_size: 16,
        max_epochs: 4,
        learning_rate: 1e-2,
        seed: 3,
        ..NetworkConfig::default()
    }
}

#[test]
fn bootstrap_basics() {
    let ds = dataset(1, 0);
    let s = bootstrap_sample(&ds, 7, 1).unwrap();
    assert_eq!(s.len(), 7);
    assert!(s.targets().iter().all(|&t| t == ds.target(0)));
    let big = dataset(50, 1);
    assert_eq!(bootstrap_sample(&big, 50, 9).unwrap(), bootstrap_sample(&big, 50, 9).unwrap());
    let empty = big.select(&[]);
    assert!(bootstrap_sample(&empty, 3, 0).is_err());
    assert!(bootstrap_sample(&big, 0, 0).is_err());
}

#[test]
fn bootstrap_unique_fraction() {
    let n = 100_000;
    let idx = bootstrap_indices(n, n, 42);
    let unique = idx.iter().collect::<HashSet<_>>().len() as f64 / n as f64;
    assert!((unique - (1.0 - (-1.0f64).exp())).abs() < 0.01, "{unique}");
}

#[test]
fn mean_and_stacker_combination() {
    let p = init_params(&cfg(), 2, 6).unwrap();
    let ds = dataset(5, 2);
    let single = EnsembleModel {
        method: EnsembleMethod::Bagging,
        members: vec![p.clone()],
        combiner: Combiner::Mean,
        boost_threshold: None,
    };
    let copies = EnsembleModel {
        members: vec![p.clone(); 5],
        ..single.clone()
    };
    let constant = EnsembleModel {
        combiner: Combiner::Stacker {
            weights: vec![0.0; 5],
            bias: 2.5,
        },
        ..copies.clone()
    };
    for w in ds.views() {
        let y = forecast_neural::predict(&p, w).unwrap();
        assert_eq!(ensemble_predict(&single, w).unwrap(), y);
        assert!((ensemble_predict(&copies, w).unwrap() - y).abs() < 1e-15);
        assert_eq!(ensemble_predict(&constant, w).unwrap(), 2.5);
    }
    let batch = ensemble_predict_batch(&copies, &ds).unwrap();
    for (i, b) in batch.iter().enumerate() {
        assert_eq!(*b, ensemble_predict(&copies, ds.view(i)).unwrap());
    }
    assert_eq!(combine(&Combiner::Mean, [1.0, 2.0, 3.0].into_iter()), 2.0);
}

#[test]
fn stacker_examples() {
    let y: Vec<f64> = (0..40).map(|i| (i as f64 * 0.37).sin()).collect();
    let perfect = fit_stacker_on_predictions(std::slice::from_ref(&y), &y).unwrap();
    assert!(!perfect.mean_fallback);
    let Combiner::Stacker { weights, bias } = perfect.combiner else { panic!() };
    assert!((weights[0] - 1.0).abs() < 1e-6 && bias.abs() < 1e-6);

    let twins = fit_stacker_on_predictions(&[y.clone(), y.clone()], &y).unwrap();
    assert!(twins.mean_fallback);

    let up: Vec<f64> = y.iter().map(|v| v + 1.0).collect();
    let down: Vec<f64> = y.iter().map(|v| v - 1.0).collect();
    let fit = fit_stacker_on_predictions(&[up, down], &y).unwrap();
    let Combiner::Stacker { weights, bias } = fit.combiner else { panic!() };
    assert!((weights[0] - 0.5).abs() < 1e-6 && (weights[1] - 0.5).abs() < 1e-6 && bias.abs() < 1e-6);
}

#[test]
fn stacker_recovers_weights() {
    let mut rng = seeded(5);
    let a: Vec<f64> = (0..60).map(|_| rng.random_range(-1.0..1.0)).collect();
    let b: Vec<f64> = (0..60).map(|_| rng.random_range(-1.0..1.0)).collect();
    let y: Vec<f64> = a.iter().zip(&b).map(|(a, b)| 0.3 * a + 0.9 * b - 0.2).collect();
    let fit = fit_stacker_on_predictions(&[a, b], &y).unwrap();
    let Combiner::Stacker { weights, bias } = fit.combiner else { panic!() };
    assert!((weights[0] - 0.3).abs() < 1e-9 && (weights[1] - 0.9).abs() < 1e-9 && (bias + 0.2).abs() < 1e-9);
}

#[test]
fn bagging_is_deterministic_and_convex() {
    let train = dataset(400, 7);
    let val = dataset(60, 8);
    let test = dataset(100, 9);
    let a = train_bagging(&cfg(), 3, &train, &val).unwrap();
    let b = train_bagging(&cfg(), 3, &train, &val).unwrap();
    assert_eq!(a.model, b.model);
    assert_eq!(a.members.len(), 3);
    assert_ne!(a.model.members[0], a.model.members[1]);

    let combined = ensemble_predict_batch(&a.model, &test).unwrap();
    let ens_mse = evaluate_metrics(test.targets(), &combined).unwrap().mse;
    let member_mse: f64 = member_predictions(&a.model, &test)
        .unwrap()
        .iter()
        .map(|p| evaluate_metrics(test.targets(), p).unwrap().mse)
        .sum::<f64>()
        / 3.0;
    assert!(ens_mse <= member_mse + 1e-12);
    assert!(train_bagging(&cfg(), 0, &train, &val).is_err());
}

#[test]
fn boosting_next_sets_exceed_threshold() {
    let train = dataset(300, 10);
    let val = dataset(40, 11);
    let threshold = 0.1;
    for scope in [ResidualScope::Original, ResidualScope::Current] {
        let fit = train_boosting(&cfg(), 4, threshold, scope, &train, &val).unwrap();
        assert_eq!(fit.rounds.len(), fit.members.len());
        for (round, member) in fit.rounds.iter().zip(&fit.members) {
            let preds = predict_batch(&member.params, &train).unwrap();
            for &k in &round.next_indices {
                assert!((train.target(k) - preds[k]).abs() > threshold);
            }
            assert_eq!(round.train_size, member.train_size);
        }
        for pair in fit.rounds.windows(2) {
            assert_eq!(pair[1].train_size, pair[0].next_indices.len());
        }
    }
}

#[test]
fn boosting_stops_early() {
    let train = dataset(200, 12);
    let val = dataset(30, 13);
    let fit = train_boosting(&cfg(), 5, f64::INFINITY, ResidualScope::Original, &train, &val).unwrap();
    assert_eq!(fit.model.members.len(), 1);
    assert!(fit.rounds[0].next_indices.is_empty());
    assert!(train_boosting(&cfg(), 5, 0.0, ResidualScope::Original, &train, &val).is_err());
    assert!(train_boosting(&cfg(), 5, -1.0, ResidualScope::Original, &train, &val).is_err());
}
