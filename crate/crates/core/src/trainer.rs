//! Concurrent two-model training with dynamic balancing and target
//! variability, its ablations, the single-model cross-entropy baseline, and
//! evaluation / memorization tracking.
//!
//! Per epoch `e` (1-indexed) the mimicry weight `α_d`, the variability rate
//! `r_d` and the learning rate are computed once. The training set is then
//! shuffled and, for every mini-batch, both models see the same samples:
//! each gets its own perturbed targets, both run forward, each model's loss
//! uses the other's temperature-softened prediction as a fixed target, and
//! both take an SGD step.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::losses::{self, cross_entropy, ensemble_predict, nct_loss, softmax_rows, LossParams};
use crate::nn::{sgd_step, MlpModel, SgdState};
use crate::noise::target_variability_batch;
use crate::rng::{stream, StreamIds};
use crate::schedules::{alpha_at_epoch, lr_at_epoch, variability_rate_at_epoch, ScheduleParams};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Nct,
    /// Full training, single-model (model 1) inference.
    NctNoEn,
    /// No target variability.
    NctNoTv,
    /// Fixed balance, no target variability.
    Dml,
    Standard,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Nct, Method::NctNoEn, Method::NctNoTv, Method::Dml, Method::Standard];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Nct => "nct",
            Method::NctNoEn => "nct_no_en",
            Method::NctNoTv => "nct_no_tv",
            Method::Dml => "dml",
            Method::Standard => "standard",
        }
    }

    fn inference(self) -> InferenceMode {
        match self {
            Method::NctNoEn | Method::Standard => InferenceMode::Single,
            _ => InferenceMode::Ensemble,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Parameter(format!("unknown method {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InferenceMode {
    Ensemble,
    Single,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    pub momentum: f64,
    pub weight_decay: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            momentum: 0.9,
            weight_decay: 1e-5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub method: Method,
    pub layer_dims: Vec<usize>,
    pub batch_size: usize,
    pub schedule: ScheduleParams,
    /// `tau` is the mimicry temperature; `alpha` is the fixed balance used by DML.
    pub loss: LossParams,
    pub optimizer: OptimizerConfig,
    pub seed_master: u64,
    pub streams: StreamIds,
    pub eval_every: usize,
}

impl TrainConfig {
    pub fn new(method: Method, layer_dims: Vec<usize>, total_epochs: usize) -> Self {
        Self {
            method,
            layer_dims,
            batch_size: 128,
            schedule: ScheduleParams::with_total_epochs(total_epochs),
            loss: LossParams { tau: 4.0, alpha: 0.5 },
            optimizer: OptimizerConfig::default(),
            seed_master: 0,
            streams: StreamIds::default(),
            eval_every: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Parameter("batch_size must be at least 1".into()));
        }
        if self.eval_every == 0 {
            return Err(Error::Parameter("eval_every must be at least 1".into()));
        }
        LossParams::new(self.loss.tau, self.loss.alpha)?;
        self.schedule.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualModelState {
    pub model1: MlpModel,
    pub model2: MlpModel,
    pub opt1: SgdState,
    pub opt2: SgdState,
    pub epoch: usize,
}

impl DualModelState {
    pub fn predictor(&self, mode: InferenceMode) -> Predictor<'_> {
        match mode {
            InferenceMode::Ensemble => Predictor::Ensemble(&self.model1, &self.model2),
            InferenceMode::Single => Predictor::Single(&self.model1),
        }
    }
}

/// Cross-entropy and accuracy with respect to the working labels on one part
/// of the training set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubsetMetrics {
    pub count: usize,
    pub loss: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MemorizationMetrics {
    /// Samples whose working label equals the clean label.
    pub clean: Option<SubsetMetrics>,
    /// Samples whose working label was corrupted; `None` for a clean dataset.
    pub noisy: Option<SubsetMetrics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub alpha_d: f64,
    pub r_d: f64,
    pub lr: f64,
    /// Mean training loss of each model over the epoch.
    pub train_loss: Vec<f64>,
    /// Test accuracy under the method's inference mode.
    pub test_acc: f64,
    pub test_acc_ensemble: Option<f64>,
    pub test_acc_models: Vec<f64>,
    pub train_acc_clean_subset: Option<f64>,
    pub train_acc_noisy_subset: Option<f64>,
    pub train_loss_clean_subset: Option<f64>,
    pub train_loss_noisy_subset: Option<f64>,
}

/// Best/last test accuracy over the evaluated epochs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub method: Method,
    pub best_test_acc: f64,
    pub best_epoch: usize,
    pub last_test_acc: f64,
    pub last_epoch: usize,
}

pub fn summarize(method: Method, metrics: &[EpochMetrics]) -> Option<RunSummary> {
    let last = metrics.last()?;
    // First epoch attaining the maximum.
    let best = metrics
        .iter()
        .fold(None::<&EpochMetrics>, |acc, m| match acc {
            Some(b) if b.test_acc >= m.test_acc => Some(b),
            _ => Some(m),
        })?;
    Some(RunSummary {
        method,
        best_test_acc: best.test_acc,
        best_epoch: best.epoch,
        last_test_acc: last.test_acc,
        last_epoch: last.epoch,
    })
}

#[derive(Debug, Clone, Copy)]
pub enum Predictor<'a> {
    Single(&'a MlpModel),
    Ensemble(&'a MlpModel, &'a MlpModel),
}

const EVAL_CHUNK: usize = 1024;

impl Predictor<'_> {
    /// Class probabilities for every row of `x` (softmax at τ = 1).
    pub fn probabilities(&self, x: &Tensor) -> Result<Tensor> {
        let n = x.rows();
        let mut rows = Vec::with_capacity(n);
        for start in (0..n).step_by(EVAL_CHUNK) {
            let idx: Vec<usize> = (start..(start + EVAL_CHUNK).min(n)).collect();
            let chunk = x.select_rows(&idx);
            match self {
                Predictor::Single(m) => {
                    let p = softmax_rows(&m.logits(&chunk)?, 1.0)?;
                    rows.extend_from_slice(p.data());
                }
                Predictor::Ensemble(m1, m2) => {
                    let (z1, z2) = (m1.logits(&chunk)?, m2.logits(&chunk)?);
                    for i in 0..idx.len() {
                        rows.extend(ensemble_predict(z1.row(i), z2.row(i))?);
                    }
                }
            }
        }
        let c = rows.len() / n.max(1);
        Tensor::new(vec![n, c], rows)
    }

    pub fn predict(&self, x: &Tensor) -> Result<Vec<usize>> {
        let p = self.probabilities(x)?;
        Ok((0..p.rows()).map(|i| argmax(p.row(i))).collect())
    }
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &x)| if x > bv { (i, x) } else { (bi, bv) })
        .0
}

/// Top-1 accuracy against the clean labels of `test`.
pub fn evaluate(predictor: Predictor<'_>, test: &LabeledDataset) -> Result<f64> {
    if test.is_empty() {
        return Err(Error::EmptyDataset("test set".into()));
    }
    let pred = predictor.predict(test.features())?;
    let correct = pred.iter().zip(test.clean_labels()).filter(|(p, y)| p == y).count();
    Ok(correct as f64 / test.len() as f64)
}

/// Loss and accuracy against the working labels, split by whether the
/// working label is the clean one.
pub fn memorization_metrics(predictor: Predictor<'_>, ds: &LabeledDataset) -> Result<MemorizationMetrics> {
    let probs = predictor.probabilities(ds.features())?;
    let mut acc = [(0usize, 0.0f64, 0usize); 2]; // (count, loss sum, correct) for clean, noisy
    for i in 0..ds.len() {
        let (y, clean) = (ds.labels()[i], ds.clean_labels()[i]);
        let slot = &mut acc[usize::from(y != clean)];
        let p = probs.row(i);
        slot.0 += 1;
        slot.1 += cross_entropy(p, y)?;
        slot.2 += usize::from(argmax(p) == y);
    }
    let finish = |(count, loss, correct): (usize, f64, usize)| {
        (count > 0).then(|| SubsetMetrics {
            count,
            loss: loss / count as f64,
            accuracy: correct as f64 / count as f64,
        })
    };
    Ok(MemorizationMetrics {
        clean: finish(acc[0]),
        noisy: finish(acc[1]),
    })
}

fn check_data(ds: &LabeledDataset, test: &LabeledDataset, cfg: &TrainConfig) -> Result<()> {
    let dims = &cfg.layer_dims;
    let (d_in, c) = (dims.first().copied(), dims.last().copied());
    for (name, set) in [("training", ds), ("test", test)] {
        if set.is_empty() {
            return Err(Error::EmptyDataset(format!("{name} set")));
        }
        if Some(set.num_features()) != d_in {
            return Err(Error::DatasetMismatch(format!(
                "{name} set has {} features, model input width is {d_in:?}",
                set.num_features()
            )));
        }
        if Some(set.num_classes()) != c {
            return Err(Error::DatasetMismatch(format!(
                "{name} set has {} classes, model output width is {c:?}",
                set.num_classes()
            )));
        }
    }
    Ok(())
}

fn batches(n: usize, batch_size: usize, rng: &mut crate::rng::Stream) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    order.chunks(batch_size).map(<[usize]>::to_vec).collect()
}

fn epoch_record(
    epoch: usize,
    (alpha_d, r_d, lr): (f64, f64, f64),
    train_loss: Vec<f64>,
    models: &[&MlpModel],
    mode: InferenceMode,
    ds: &LabeledDataset,
    test: &LabeledDataset,
) -> Result<EpochMetrics> {
    let test_acc_models = models
        .iter()
        .map(|m| evaluate(Predictor::Single(m), test))
        .collect::<Result<Vec<_>>>()?;
    let test_acc_ensemble = match models {
        [m1, m2] => Some(evaluate(Predictor::Ensemble(m1, m2), test)?),
        _ => None,
    };
    let (predictor, test_acc) = match (mode, models) {
        (InferenceMode::Ensemble, [m1, m2]) => (Predictor::Ensemble(m1, m2), test_acc_ensemble.unwrap()),
        _ => (Predictor::Single(models[0]), test_acc_models[0]),
    };
    let mem = memorization_metrics(predictor, ds)?;
    Ok(EpochMetrics {
        epoch,
        alpha_d,
        r_d,
        lr,
        train_loss,
        test_acc,
        test_acc_ensemble,
        test_acc_models,
        train_acc_clean_subset: mem.clean.map(|s| s.accuracy),
        train_acc_noisy_subset: mem.noisy.map(|s| s.accuracy),
        train_loss_clean_subset: mem.clean.map(|s| s.loss),
        train_loss_noisy_subset: mem.noisy.map(|s| s.loss),
    })
}

fn should_eval(epoch: usize, cfg: &TrainConfig) -> bool {
    epoch.is_multiple_of(cfg.eval_every) || epoch == cfg.schedule.total_epochs
}

fn init_dual(cfg: &TrainConfig) -> Result<DualModelState> {
    let model1 = MlpModel::init(&cfg.layer_dims, &mut stream(cfg.seed_master, cfg.streams.init_model1))?;
    let model2 = MlpModel::init(&cfg.layer_dims, &mut stream(cfg.seed_master, cfg.streams.init_model2))?;
    let lr = cfg.schedule.lr_initial;
    let OptimizerConfig { momentum, weight_decay } = cfg.optimizer;
    Ok(DualModelState {
        opt1: SgdState::new(&model1, lr, momentum, weight_decay)?,
        opt2: SgdState::new(&model2, lr, momentum, weight_decay)?,
        model1,
        model2,
        epoch: 0,
    })
}

/// Two-model training loop shared by NCT, its ablations and DML.
fn train_dual(ds: &LabeledDataset, test: &LabeledDataset, cfg: &TrainConfig) -> Result<(DualModelState, Vec<EpochMetrics>)> {
    cfg.validate()?;
    check_data(ds, test, cfg)?;
    let method = cfg.method;
    let sched = &cfg.schedule;
    let use_tv = matches!(method, Method::Nct | Method::NctNoEn);
    let c = ds.num_classes();
    let n = ds.len();

    let mut state = init_dual(cfg)?;
    let mut shuffle = stream(cfg.seed_master, cfg.streams.shuffle);
    let mut tv1 = stream(cfg.seed_master, cfg.streams.tv_model1);
    let mut tv2 = stream(cfg.seed_master, cfg.streams.tv_model2);
    let mut metrics = Vec::new();

    for epoch in 1..=sched.total_epochs {
        let alpha_d = match method {
            Method::Dml => cfg.loss.alpha,
            _ => alpha_at_epoch(epoch, sched)?,
        };
        let r_d = if use_tv { variability_rate_at_epoch(epoch, sched)? } else { 0.0 };
        let lr = lr_at_epoch(epoch, sched)?;
        state.opt1.learning_rate = lr;
        state.opt2.learning_rate = lr;
        let params = LossParams::new(cfg.loss.tau, alpha_d)?;

        let mut loss_sums = [0.0; 2];
        for (batch_no, idx) in batches(n, cfg.batch_size, &mut shuffle).into_iter().enumerate() {
            let x = ds.features().select_rows(&idx);
            let y: Vec<usize> = idx.iter().map(|&i| ds.labels()[i]).collect();
            let (t1, t2) = if use_tv {
                let (a, b) = target_variability_batch(&y, r_d, c, &mut tv1, &mut tv2)?;
                (a.perturbed, b.perturbed)
            } else {
                (y.clone(), y)
            };

            let (z1, cache1) = state.model1.forward(&x)?;
            let (z2, cache2) = state.model2.forward(&x)?;
            let q1 = softmax_rows(&z1, params.tau)?;
            let q2 = softmax_rows(&z2, params.tau)?;
            let (l1, g1) = nct_loss(&z1, &q2, &t1, params)?;
            let (l2, g2) = nct_loss(&z2, &q1, &t2, params)?;
            for (loss, model) in [(l1, "model1"), (l2, "model2")] {
                if !loss.is_finite() {
                    return Err(Error::NonFiniteLoss { epoch, batch: batch_no, model });
                }
            }
            let grads1 = state.model1.backward(&cache1, &g1)?;
            let grads2 = state.model2.backward(&cache2, &g2)?;
            sgd_step(&mut state.model1, &grads1, &mut state.opt1)?;
            sgd_step(&mut state.model2, &grads2, &mut state.opt2)?;
            loss_sums[0] += l1 * idx.len() as f64;
            loss_sums[1] += l2 * idx.len() as f64;
        }
        state.epoch = epoch;

        if should_eval(epoch, cfg) {
            metrics.push(epoch_record(
                epoch,
                (alpha_d, r_d, lr),
                loss_sums.iter().map(|s| s / n as f64).collect(),
                &[&state.model1, &state.model2],
                method.inference(),
                ds,
                test,
            )?);
        }
    }
    Ok((state, metrics))
}

/// Noisy concurrent training (`nct`) and its ablations `nct_no_en` and `nct_no_tv`.
pub fn train_nct(ds: &LabeledDataset, test: &LabeledDataset, cfg: &TrainConfig) -> Result<(DualModelState, Vec<EpochMetrics>)> {
    if !matches!(cfg.method, Method::Nct | Method::NctNoEn | Method::NctNoTv) {
        return Err(Error::Parameter(format!("train_nct called with method {}", cfg.method)));
    }
    train_dual(ds, test, cfg)
}

/// Deep mutual learning: the two-model loop with `α ≡ cfg.loss.alpha` and no
/// target variability.
pub fn train_dml(ds: &LabeledDataset, test: &LabeledDataset, cfg: &TrainConfig) -> Result<(DualModelState, Vec<EpochMetrics>)> {
    if cfg.method != Method::Dml {
        return Err(Error::Parameter(format!("train_dml called with method {}", cfg.method)));
    }
    train_dual(ds, test, cfg)
}

/// Single model, plain cross-entropy. Uses the `init_model1` stream.
pub fn train_standard(ds: &LabeledDataset, test: &LabeledDataset, cfg: &TrainConfig) -> Result<(MlpModel, SgdState, Vec<EpochMetrics>)> {
    if cfg.method != Method::Standard {
        return Err(Error::Parameter(format!("train_standard called with method {}", cfg.method)));
    }
    cfg.validate()?;
    check_data(ds, test, cfg)?;
    let sched = &cfg.schedule;
    let n = ds.len();
    let mut model = MlpModel::init(&cfg.layer_dims, &mut stream(cfg.seed_master, cfg.streams.init_model1))?;
    let mut opt = SgdState::new(&model, sched.lr_initial, cfg.optimizer.momentum, cfg.optimizer.weight_decay)?;
    let mut shuffle = stream(cfg.seed_master, cfg.streams.shuffle);
    let mut metrics = Vec::new();

    for epoch in 1..=sched.total_epochs {
        let lr = lr_at_epoch(epoch, sched)?;
        opt.learning_rate = lr;
        let mut loss_sum = 0.0;
        for (batch_no, idx) in batches(n, cfg.batch_size, &mut shuffle).into_iter().enumerate() {
            let x = ds.features().select_rows(&idx);
            let y: Vec<usize> = idx.iter().map(|&i| ds.labels()[i]).collect();
            let (z, cache) = model.forward(&x)?;
            let (loss, g) = losses::cross_entropy_loss(&z, &y)?;
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, batch: batch_no, model: "model1" });
            }
            let grads = model.backward(&cache, &g)?;
            sgd_step(&mut model, &grads, &mut opt)?;
            loss_sum += loss * idx.len() as f64;
        }
        if should_eval(epoch, cfg) {
            metrics.push(epoch_record(
                epoch,
                (0.0, 0.0, lr),
                vec![loss_sum / n as f64],
                &[&model],
                InferenceMode::Single,
                ds,
                test,
            )?);
        }
    }
    Ok((model, opt, metrics))
}

#[derive(Debug, Clone)]
pub enum TrainedModels {
    Single(MlpModel),
    Dual(Box<DualModelState>),
}

impl TrainedModels {
    pub fn models(&self) -> Vec<&MlpModel> {
        match self {
            TrainedModels::Single(m) => vec![m],
            TrainedModels::Dual(s) => vec![&s.model1, &s.model2],
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub models: TrainedModels,
    pub metrics: Vec<EpochMetrics>,
}

impl TrainOutcome {
    pub fn summary(&self, method: Method) -> Option<RunSummary> {
        summarize(method, &self.metrics)
    }
}

/// Dispatches on `cfg.method`.
pub fn train(ds: &LabeledDataset, test: &LabeledDataset, cfg: &TrainConfig) -> Result<TrainOutcome> {
    Ok(match cfg.method {
        Method::Standard => {
            let (model, _, metrics) = train_standard(ds, test, cfg)?;
            TrainOutcome { models: TrainedModels::Single(model), metrics }
        }
        Method::Dml => {
            let (state, metrics) = train_dml(ds, test, cfg)?;
            TrainOutcome { models: TrainedModels::Dual(Box::new(state)), metrics }
        }
        _ => {
            let (state, metrics) = train_nct(ds, test, cfg)?;
            TrainOutcome { models: TrainedModels::Dual(Box::new(state)), metrics }
        }
    })
}
