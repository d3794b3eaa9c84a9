use nct_core::dataset::{blob_means, generate_blobs, LabeledDataset};
use nct_core::noise::{corrupt, NoiseKind};
use nct_core::rng::{ids, stream, StreamIds};
use nct_core::schedules::{alpha_at_epoch, lr_at_epoch, variability_rate_at_epoch};
use nct_core::trainer::{
    evaluate, memorization_metrics, train, train_dml, train_nct, InferenceMode, Method, Predictor, TrainConfig,
};
use nct_core::{Error, MlpModel, Tensor};

fn blobs(n: usize, sep: f64, seed: u64) -> LabeledDataset {
    generate_blobs(n, 2, 2, sep, &mut stream(seed, ids::BLOBS)).unwrap()
}

fn noisy_blobs(seed: u64) -> (LabeledDataset, LabeledDataset) {
    let train = blobs(400, 3.0, seed);
    let train = corrupt(&train, NoiseKind::SymmetricExclusive, 0.3, &mut stream(seed, ids::CORRUPTION)).unwrap();
    (train, blobs(400, 3.0, seed + 1000))
}

fn config(method: Method, epochs: usize) -> TrainConfig {
    let mut cfg = TrainConfig::new(method, vec![2, 16, 16, 2], epochs);
    cfg.batch_size = 32;
    cfg
}

#[test]
fn zero_epochs_returns_initial_models() {
    let (train_ds, test) = noisy_blobs(1);
    let cfg = config(Method::Nct, 0);
    let (state, metrics) = train_nct(&train_ds, &test, &cfg).unwrap();
    assert!(metrics.is_empty());
    assert_eq!(state.epoch, 0);
    let init = MlpModel::init(&cfg.layer_dims, &mut stream(0, ids::INIT_MODEL_1)).unwrap();
    assert_eq!(state.model1, init);
}

#[test]
fn training_is_deterministic() {
    let (train_ds, test) = noisy_blobs(2);
    for method in Method::ALL {
        let a = train(&train_ds, &test, &config(method, 4)).unwrap();
        let b = train(&train_ds, &test, &config(method, 4)).unwrap();
        assert_eq!(a.metrics, b.metrics, "{method}");
        assert_eq!(a.models.models(), b.models.models(), "{method}");
    }
}

#[test]
fn swapping_streams_swaps_models() {
    let (train_ds, test) = noisy_blobs(3);
    let cfg = config(Method::Nct, 5);
    let mut swapped = cfg.clone();
    swapped.streams = cfg.streams.swapped();
    let (a, ma) = train_nct(&train_ds, &test, &cfg).unwrap();
    let (b, mb) = train_nct(&train_ds, &test, &swapped).unwrap();
    assert_eq!(a.model1, b.model2);
    assert_eq!(a.model2, b.model1);
    for (x, y) in ma.iter().zip(&mb) {
        assert_eq!(x.train_loss, vec![y.train_loss[1], y.train_loss[0]]);
        assert_eq!(x.test_acc_ensemble, y.test_acc_ensemble);
    }
}

#[test]
fn metrics_follow_schedules() {
    let (train_ds, test) = noisy_blobs(4);
    let mut cfg = config(Method::Nct, 10);
    cfg.schedule.ramp_len = 6;
    cfg.schedule.lr_decay_epoch = 8;
    let (_, metrics) = train_nct(&train_ds, &test, &cfg).unwrap();
    assert_eq!(metrics.len(), 10);
    for m in &metrics {
        assert_eq!(m.alpha_d, alpha_at_epoch(m.epoch, &cfg.schedule).unwrap());
        assert_eq!(m.r_d, variability_rate_at_epoch(m.epoch, &cfg.schedule).unwrap());
        assert_eq!(m.lr, lr_at_epoch(m.epoch, &cfg.schedule).unwrap());
    }
    assert_eq!(metrics[6].lr, 0.02);
    assert_eq!(metrics[7].lr, 0.002);
}

#[test]
fn eval_every_thins_metrics_but_keeps_last_epoch() {
    let (train_ds, test) = noisy_blobs(5);
    let mut cfg = config(Method::Dml, 7);
    cfg.eval_every = 3;
    let (_, metrics) = train_dml(&train_ds, &test, &cfg).unwrap();
    let epochs: Vec<usize> = metrics.iter().map(|m| m.epoch).collect();
    assert_eq!(epochs, vec![3, 6, 7]);
}

#[test]
fn nct_with_flat_balance_and_no_variability_is_dml() {
    let (train_ds, test) = noisy_blobs(6);
    let mut nct = config(Method::Nct, 6);
    nct.schedule.ramp_len = 1;
    nct.schedule.r_max = 0.0;
    nct.schedule.alpha_max = 0.5;
    let mut dml = config(Method::Dml, 6);
    dml.loss.alpha = 0.5;
    let (a, ma) = train_nct(&train_ds, &test, &nct).unwrap();
    let (b, mb) = train_dml(&train_ds, &test, &dml).unwrap();
    assert_eq!(a.model1, b.model1);
    assert_eq!(a.model2, b.model2);
    for (x, y) in ma.iter().zip(&mb) {
        assert_eq!(x.train_loss, y.train_loss);
    }
}

#[test]
fn clean_separable_blobs_are_learned() {
    let train_ds = blobs(1000, 6.0, 7);
    let test = blobs(1000, 6.0, 1007);
    let mut cfg = TrainConfig::new(Method::Nct, vec![2, 32, 32, 2], 30);
    cfg.schedule.r_max = 0.0;
    let (state, metrics) = train_nct(&train_ds, &test, &cfg).unwrap();
    assert!(metrics.last().unwrap().test_acc > 0.95);
    assert!(evaluate(state.predictor(InferenceMode::Single), &test).unwrap() > 0.95);
}

#[test]
fn zero_model_scores_half_on_balanced_binary_data() {
    let test = blobs(10_000, 3.0, 8);
    let zero = MlpModel::from_params(
        &[2, 4, 2],
        vec![Tensor::zeros(&[2, 4]), Tensor::zeros(&[4]), Tensor::zeros(&[4, 2]), Tensor::zeros(&[2])],
    )
    .unwrap();
    let acc = evaluate(Predictor::Single(&zero), &test).unwrap();
    assert!((acc - 0.5).abs() <= 0.015);
}

#[test]
fn self_ensemble_matches_single_model() {
    let test = blobs(500, 2.0, 9);
    let model = MlpModel::init(&[2, 8, 2], &mut stream(9, ids::INIT_MODEL_1)).unwrap();
    assert_eq!(
        Predictor::Single(&model).predict(test.features()).unwrap(),
        Predictor::Ensemble(&model, &model).predict(test.features()).unwrap()
    );
}

#[test]
fn memorization_metrics_split_by_corruption() {
    let clean = blobs(200, 3.0, 10);
    let model = MlpModel::init(&[2, 8, 2], &mut stream(10, ids::INIT_MODEL_1)).unwrap();
    let m = memorization_metrics(Predictor::Single(&model), &clean).unwrap();
    assert_eq!(m.clean.unwrap().count, 200);
    assert!(m.noisy.is_none());

    let noisy = corrupt(&clean, NoiseKind::SymmetricExclusive, 1.0, &mut stream(10, ids::CORRUPTION)).unwrap();
    let m = memorization_metrics(Predictor::Single(&model), &noisy).unwrap();
    assert!(m.clean.is_none());
    assert_eq!(m.noisy.unwrap().count, 200);
}

#[test]
fn diverging_training_is_reported() {
    let (train_ds, test) = noisy_blobs(11);
    let mut cfg = config(Method::Standard, 5);
    cfg.schedule.lr_initial = 1e250;
    let err = train(&train_ds, &test, &cfg).unwrap_err();
    assert!(
        matches!(err, Error::NonFiniteLoss { .. } | Error::NonFiniteGradient { .. }),
        "{err}"
    );
}

#[test]
fn mismatched_test_set_is_rejected() {
    let (train_ds, _) = noisy_blobs(12);
    let other = generate_blobs(50, 3, 2, 3.0, &mut stream(12, ids::BLOBS)).unwrap();
    let err = train(&train_ds, &other, &config(Method::Nct, 3)).unwrap_err();
    assert!(matches!(err, Error::DatasetMismatch(_)), "{err}");
}

#[test]
fn blobs_admit_near_perfect_linear_rule() {
    let ds = blobs(10_000, 6.0, 13);
    let means = blob_means(2, 2, 6.0);
    // Nearest mean is linear for two equal-covariance classes.
    let correct = (0..ds.len())
        .filter(|&i| {
            let x = ds.features().row(i);
            let dist = |m: &Vec<f64>| x.iter().zip(m).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
            usize::from(dist(&means[1]) < dist(&means[0])) == ds.labels()[i]
        })
        .count();
    assert!(correct as f64 / ds.len() as f64 > 0.99);
}

#[test]
fn coincident_blobs_are_chance_level() {
    let c = 4;
    let ds = generate_blobs(8000, 3, c, 0.0, &mut stream(14, ids::BLOBS)).unwrap();
    let model = MlpModel::init(&[3, 8, c], &mut stream(14, ids::INIT_MODEL_1)).unwrap();
    let acc = evaluate(Predictor::Single(&model), &ds).unwrap();
    let sigma = (0.25f64 * 0.75 / 8000.0).sqrt();
    assert!((acc - 0.25).abs() < 4.0 * sigma, "{acc}");
}

#[test]
fn custom_stream_ids_change_initialization() {
    let (train_ds, test) = noisy_blobs(15);
    let mut cfg = config(Method::Nct, 0);
    cfg.streams = StreamIds { init_model1: 40, ..StreamIds::default() };
    let (a, _) = train_nct(&train_ds, &test, &cfg).unwrap();
    let (b, _) = train_nct(&train_ds, &test, &config(Method::Nct, 0)).unwrap();
    assert_ne!(a.model1, b.model1);
    assert_eq!(a.model2, b.model2);
}
