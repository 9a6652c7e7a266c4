use episim_core::neuralnet::{
    self, MlpConfig, MlpModel, OutputActivation, TrainConfig, UpdateMode,
};
use rand::Rng;

fn loss(m: &MlpModel, x: f64, y: f64) -> f64 {
    let e = m.predict(x) - y;
    0.5 * e * e
}

#[test]
fn backprop_matches_central_differences() {
    let mut rng = episim_core::seed::rng(21);
    let eps = 1e-6;
    let mut worst: f64 = 0.0;
    for draw in 0..50 {
        let activation = if draw % 2 == 0 {
            OutputActivation::Identity
        } else {
            OutputActivation::Tanh
        };
        let model = neuralnet::init_model(&MlpConfig {
            init_scale: 1.0,
            output_activation: activation,
            seed: draw,
            ..MlpConfig::default()
        })
        .unwrap();
        let x = rng.gen_range(-2.0..2.0);
        let y = rng.gen_range(-2.0..2.0);
        let g = model.gradient(&[x], &[y]);
        for (i, analytic) in g.iter().enumerate() {
            let mut plus = model.clone();
            let mut minus = model.clone();
            *plus.params.iter_mut().nth(i).unwrap() += eps;
            *minus.params.iter_mut().nth(i).unwrap() -= eps;
            let numeric = (loss(&plus, x, y) - loss(&minus, x, y)) / (2.0 * eps);
            let scale = analytic.abs().max(numeric.abs()).max(1e-8);
            worst = worst.max((analytic - numeric).abs() / scale);
        }
    }
    assert!(worst < 1e-5, "max relative error {worst}");
}

fn line(n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .map(|i| {
            let x = -1.0 + 2.0 * i as f64 / (n - 1) as f64;
            (x, x)
        })
        .collect()
}

#[test]
fn full_batch_descent_is_monotone() {
    let model = neuralnet::init_model(&MlpConfig {
        seed: 4,
        ..MlpConfig::default()
    })
    .unwrap();
    let data: Vec<(f64, f64)> = line(25).into_iter().map(|(x, _)| (x, x * x)).collect();
    let start = model.mse(&data);
    let out = neuralnet::train(
        model,
        &data,
        &TrainConfig {
            learning_rate: 0.01,
            momentum: 0.0,
            max_epochs: 100,
            target_mse: 0.0,
            mode: UpdateMode::FullBatch,
            ..TrainConfig::default()
        },
    )
    .unwrap();
    assert_eq!(out.loss_history.len(), 100);
    assert!(out.loss_history[0] <= start);
    for w in out.loss_history.windows(2) {
        assert!(w[1] <= w[0], "{} -> {}", w[0], w[1]);
    }
}

#[test]
fn lipschitz_bound_holds() {
    let mut rng = episim_core::seed::rng(8);
    for seed in 0..20 {
        let m = neuralnet::init_model(&MlpConfig {
            init_scale: 2.0,
            seed,
            ..MlpConfig::default()
        })
        .unwrap();
        let l = m.lipschitz_bound();
        for _ in 0..50 {
            let (a, b): (f64, f64) = (rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
            assert!((m.predict(a) - m.predict(b)).abs() <= l * (a - b).abs() + 1e-12);
        }
    }
}

#[test]
fn learns_the_identity() {
    let model = neuralnet::init_model(&MlpConfig {
        seed: 1,
        ..MlpConfig::default()
    })
    .unwrap();
    let out = neuralnet::train(
        model,
        &line(50),
        &TrainConfig {
            learning_rate: 0.05,
            momentum: 0.9,
            max_epochs: 2000,
            target_mse: 1e-3,
            shuffle_seed: 2,
            ..TrainConfig::default()
        },
    )
    .unwrap();
    assert!(out.model.final_mse.unwrap() < 1e-3);
    assert!(out.model.epochs_run <= 2000);
}

#[test]
fn training_is_reproducible() {
    let run = || {
        let m = neuralnet::init_model(&MlpConfig {
            seed: 9,
            ..MlpConfig::default()
        })
        .unwrap();
        let cfg = TrainConfig {
            max_epochs: 50,
            shuffle_seed: 10,
            ..TrainConfig::default()
        };
        neuralnet::train(m, &line(20), &cfg).unwrap()
    };
    assert_eq!(run(), run());
}
