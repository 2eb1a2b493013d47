//! The inversion network: construction from a config, mini-batch training,
//! fine-tuning from a checkpoint and decoding predictions into layer stacks.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use gprwi_nn::{l1_loss, l1_loss_grad, read_checkpoint, AdamState, Mode, Network, NetworkSpec, Scalar, Tensor};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::{load_sample, sample_seed, DatasetManifest};
use crate::defaults::{
    BATCH_SIZE, BSCAN_SAMPLES, BSCAN_TRACES, CONV_CHANNELS, EPOCHS, FLATTEN_DIM, KERNEL, LAYER_PRESENCE_THRESHOLD_M,
    LEARNING_RATE, LINEAR_SIZES, MAX_LAYERS, PATIENCE, TARGET_LEN,
};
use crate::em::BScan;
use crate::error::{Error, Result};
use crate::eval::{evaluate, MaterialCatalog, MetricsReport};
use crate::scene::{Layer, TargetVector, WallConfig};
use crate::signal::normalize;

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub conv_channels: Vec<usize>,
    pub kernel: (usize, usize),
    pub linear_sizes: Vec<usize>,
    /// Expected flattened feature size; checked against the conv stack.
    pub flatten_dim: usize,
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Stop after this many epochs without a test-loss improvement; 0 disables.
    pub patience: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            conv_channels: CONV_CHANNELS.to_vec(),
            kernel: KERNEL,
            linear_sizes: LINEAR_SIZES.to_vec(),
            flatten_dim: FLATTEN_DIM,
            lr: LEARNING_RATE,
            epochs: EPOCHS,
            batch_size: BATCH_SIZE,
            seed: 0,
            patience: PATIENCE,
        }
    }
}

impl ModelConfig {
    pub fn spec(&self) -> NetworkSpec {
        NetworkSpec {
            input: [1, BSCAN_SAMPLES, BSCAN_TRACES],
            conv_channels: self.conv_channels.clone(),
            kernel: self.kernel,
            linear_sizes: self.linear_sizes.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let spec = self.spec();
        spec.validate().map_err(|e| Error::Config(e.to_string()))?;
        if spec.output_dim() != TARGET_LEN {
            return Err(Error::Config(format!("last linear size is {}, expected {TARGET_LEN}", spec.output_dim())));
        }
        let flat = spec.flatten_dim().map_err(|e| Error::Config(e.to_string()))?;
        if flat != self.flatten_dim {
            return Err(Error::Config(format!(
                "conv stack flattens to {flat} features but the first linear layer expects {}",
                self.flatten_dim
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be positive".into()));
        }
        if !(self.lr.is_finite() && self.lr >= 0.0) {
            return Err(Error::Config(format!("learning rate {}", self.lr)));
        }
        Ok(())
    }
}

pub fn build_model<T: Scalar>(cfg: &ModelConfig) -> Result<Network<T>> {
    cfg.validate()?;
    Ok(Network::init(&cfg.spec(), cfg.seed)?)
}

/// Normalized scans and targets held in memory, `[n][1][255][40]` and `[n][12]`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SampleSet {
    pub ids: Vec<u64>,
    inputs: Vec<f32>,
    targets: Vec<f64>,
}

const SCAN_LEN: usize = BSCAN_SAMPLES * BSCAN_TRACES;

impl SampleSet {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Adds one sample after normalizing the scan.
    pub fn push(&mut self, id: u64, scan: &BScan, target: &TargetVector) -> Result<()> {
        let data = |message: String| Error::Data { id, message };
        scan.ensure_canonical().map_err(|e| data(e.to_string()))?;
        if !target.is_consistent() {
            return Err(data("target is not a valid layer encoding".into()));
        }
        let scan = normalize(scan).map_err(|e| data(e.to_string()))?;
        self.ids.push(id);
        self.inputs.extend(scan.data.iter());
        self.targets.extend_from_slice(&target.0);
        Ok(())
    }

    pub fn from_manifest(m: &DatasetManifest) -> Result<Self> {
        let mut set = Self::default();
        for e in &m.entries {
            let (scan, target) = load_sample(m, e.id)?;
            set.push(e.id, &scan, &target)?;
        }
        Ok(set)
    }

    pub fn target(&self, i: usize) -> TargetVector {
        let mut v = [0.0; TARGET_LEN];
        v.copy_from_slice(&self.targets[i * TARGET_LEN..(i + 1) * TARGET_LEN]);
        TargetVector(v)
    }

    pub fn targets(&self) -> Vec<TargetVector> {
        (0..self.len()).map(|i| self.target(i)).collect()
    }

    /// Mean target over the set.
    pub fn mean_target(&self) -> TargetVector {
        let mut v = [0.0; TARGET_LEN];
        for row in self.targets.chunks_exact(TARGET_LEN) {
            for (a, b) in v.iter_mut().zip(row) {
                *a += b;
            }
        }
        v.iter_mut().for_each(|a| *a /= self.len().max(1) as f64);
        TargetVector(v)
    }

    fn batch<T: Scalar>(&self, idx: &[usize]) -> Result<(Tensor<T>, Tensor<T>)> {
        let mut x = Vec::with_capacity(idx.len() * SCAN_LEN);
        let mut t = Vec::with_capacity(idx.len() * TARGET_LEN);
        for &i in idx {
            x.extend(self.inputs[i * SCAN_LEN..(i + 1) * SCAN_LEN].iter().map(|&v| T::of(f64::from(v))));
            t.extend(self.targets[i * TARGET_LEN..(i + 1) * TARGET_LEN].iter().map(|&v| T::of(v)));
        }
        Ok((
            Tensor::new(vec![idx.len(), 1, BSCAN_SAMPLES, BSCAN_TRACES], x)?,
            Tensor::new(vec![idx.len(), TARGET_LEN], t)?,
        ))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    pub train_loss: f64,
    pub test_loss: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainReport {
    pub epochs: Vec<EpochRecord>,
    /// Epoch whose parameters were kept, if any epoch ran.
    pub best_epoch: Option<usize>,
    pub best_test_loss: Option<f64>,
    pub pretrained: bool,
    pub parameter_count: usize,
    /// Metrics of the kept parameters on the test set.
    pub final_metrics: Option<MetricsReport>,
}

impl TrainReport {
    /// `epoch,train_loss,test_loss,seconds`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train_loss,test_loss,seconds\n");
        for r in &self.epochs {
            let _ = writeln!(out, "{},{},{},{:.3}", r.epoch, r.train_loss, r.test_loss, r.seconds);
        }
        out
    }

    /// Loss columns only, so runs can be compared byte for byte.
    pub fn loss_csv(&self) -> String {
        let mut out = String::from("epoch,train_loss,test_loss\n");
        for r in &self.epochs {
            let _ = writeln!(out, "{},{},{}", r.epoch, r.train_loss, r.test_loss);
        }
        out
    }
}

/// Result of a training run. `model` holds the parameters of the best test
/// epoch; `adam` is the optimizer state after the last epoch.
#[derive(Debug, Clone)]
pub struct TrainOutcome<T: Scalar = f32> {
    pub model: Network<T>,
    pub adam: AdamState<T>,
    pub report: TrainReport,
}

fn mean_l1<T: Scalar>(net: &Network<T>, set: &SampleSet, batch: usize) -> Result<f64> {
    let idx: Vec<usize> = (0..set.len()).collect();
    let mut sum = 0.0;
    for chunk in idx.chunks(batch) {
        let (x, t) = set.batch::<T>(chunk)?;
        let y = net.predict(&x)?;
        sum += l1_loss(&y, &t)?.as_f64() * chunk.len() as f64;
    }
    Ok(sum / set.len() as f64)
}

/// Evaluation-mode predictions for every sample of `set`.
pub fn predict_set<T: Scalar>(net: &Network<T>, set: &SampleSet, batch: usize) -> Result<Vec<TargetVector>> {
    let idx: Vec<usize> = (0..set.len()).collect();
    let mut out = Vec::with_capacity(set.len());
    for chunk in idx.chunks(batch.max(1)) {
        let (x, _) = set.batch::<T>(chunk)?;
        let y = net.predict(&x)?;
        for row in y.values().chunks_exact(TARGET_LEN) {
            out.push(TargetVector(std::array::from_fn(|k| row[k].as_f64())));
        }
    }
    Ok(out)
}

fn copy_state<T: Scalar>(dst: &mut Network<T>, src: &Network<T>) {
    for (d, (_, s)) in dst.state_mut().into_iter().zip(src.state()) {
        d.values_mut().copy_from_slice(s.values());
    }
}

/// Shuffled mini-batch Adam on the L1 loss. `on_epoch` sees every finished
/// epoch.
pub fn train<T: Scalar>(
    model: Network<T>,
    train_set: &SampleSet,
    test_set: &SampleSet,
    cfg: &ModelConfig,
    on_epoch: &mut dyn FnMut(&EpochRecord),
) -> Result<TrainOutcome<T>> {
    cfg.validate()?;
    if model.spec() != &cfg.spec() {
        return Err(Error::Config("model topology does not match the configuration".into()));
    }
    if train_set.is_empty() || test_set.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut net = model;
    let mut adam = AdamState::<T>::new(net.parameter_count(), cfg.lr);
    let mut best = net.clone();
    best.clear_grads();
    let mut report = TrainReport { parameter_count: net.parameter_count(), ..TrainReport::default() };
    let mut since_best = 0;

    for epoch in 1..=cfg.epochs {
        let start = Instant::now();
        let mut order: Vec<usize> = (0..train_set.len()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(sample_seed(cfg.seed, epoch as u64)));
        let mut loss_sum = 0.0;
        for (b, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let (x, t) = train_set.batch::<T>(chunk)?;
            net.zero_grad();
            let (y, tape) = net.forward(&x, Mode::Train)?;
            let loss = l1_loss(&y, &t)?.as_f64();
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, batch: b });
            }
            net.backward(&tape, &l1_loss_grad(&y, &t)?)
                .map_err(|_| Error::NonFiniteLoss { epoch, batch: b })?;
            net.update_running_stats(&tape)?;
            adam.step(&mut net.params_mut())?;
            loss_sum += loss * chunk.len() as f64;
        }
        let test_loss = mean_l1(&net, test_set, cfg.batch_size)?;
        if !test_loss.is_finite() {
            return Err(Error::NonFiniteLoss { epoch, batch: 0 });
        }
        let rec = EpochRecord {
            epoch,
            train_loss: loss_sum / train_set.len() as f64,
            test_loss,
            seconds: start.elapsed().as_secs_f64(),
        };
        on_epoch(&rec);
        report.epochs.push(rec);
        if report.best_test_loss.is_none_or(|b| test_loss < b) {
            report.best_test_loss = Some(test_loss);
            report.best_epoch = Some(epoch);
            copy_state(&mut best, &net);
            since_best = 0;
        } else {
            since_best += 1;
            if cfg.patience > 0 && since_best >= cfg.patience {
                break;
            }
        }
    }
    if report.best_epoch.is_none() {
        copy_state(&mut best, &net);
    }
    let preds = predict_set(&best, test_set, cfg.batch_size)?;
    report.final_metrics = Some(evaluate(&preds, &test_set.targets(), Some(&MaterialCatalog::builtin()))?);
    Ok(TrainOutcome { model: best, adam, report })
}

/// Training initialized from a checkpoint. The optimizer starts fresh.
pub fn fine_tune<T: Scalar>(
    checkpoint: &Path,
    train_set: &SampleSet,
    test_set: &SampleSet,
    cfg: &ModelConfig,
    on_epoch: &mut dyn FnMut(&EpochRecord),
) -> Result<TrainOutcome<T>> {
    cfg.validate()?;
    let ck = read_checkpoint::<T>(checkpoint).map_err(|e| match e {
        gprwi_nn::NnError::Io { .. } => Error::Nn(e),
        other => Error::Checkpoint(other.to_string()),
    })?;
    if ck.network.spec() != &cfg.spec() {
        return Err(Error::Checkpoint(format!(
            "checkpoint topology {:?} does not match the configured {:?}",
            ck.network.spec(),
            cfg.spec()
        )));
    }
    let mut out = train(ck.network, train_set, test_set, cfg, on_epoch)?;
    out.report.pretrained = true;
    Ok(out)
}

/// Side-by-side table of a fine-tuned and a freshly trained run.
pub fn compare_reports(pretrained: &TrainReport, fresh: &TrainReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:>6} {:>14} {:>14} {:>14} {:>14}", "epoch", "pre train", "pre test", "fresh train", "fresh test");
    let n = pretrained.epochs.len().max(fresh.epochs.len());
    let col = |r: Option<&EpochRecord>, f: fn(&EpochRecord) -> f64| r.map_or_else(|| "-".to_string(), |r| format!("{:.6}", f(r)));
    for i in 0..n {
        let (p, q) = (pretrained.epochs.get(i), fresh.epochs.get(i));
        let _ = writeln!(
            out,
            "{:>6} {:>14} {:>14} {:>14} {:>14}",
            i + 1,
            col(p, |r| r.train_loss),
            col(p, |r| r.test_loss),
            col(q, |r| r.train_loss),
            col(q, |r| r.test_loss)
        );
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "{:<32} {:>14} {:>14}", "", "pretrained", "fresh");
    let metric = |r: &TrainReport, f: fn(&MetricsReport) -> Option<f64>, scale: f64| {
        r.final_metrics.as_ref().and_then(f).map_or_else(|| "-".to_string(), |v| format!("{:.1}", v * scale))
    };
    let rows: [(&str, fn(&MetricsReport) -> Option<f64>, f64); 5] = [
        ("thickness error (mm)", |m| Some(m.thickness.overall), 1e3),
        ("thickness error (%)", |m| Some(m.thickness.overall_pct), 1.0),
        ("permittivity error", |m| Some(m.permittivity.overall), 1.0),
        ("permittivity error (%)", |m| Some(m.permittivity.overall_pct), 1.0),
        ("classification accuracy (%)", |m| m.accuracy, 100.0),
    ];
    for (label, f, scale) in rows {
        let _ = writeln!(out, "{label:<32} {:>14} {:>14}", metric(pretrained, f, scale), metric(fresh, f, scale));
    }
    out
}

/// Layer stack read from a raw prediction: slots are taken from the front
/// while the thickness is at least 1.5 cm.
pub fn decode_prediction(raw: &TargetVector) -> WallConfig {
    let layers = (0..MAX_LAYERS)
        .take_while(|&i| raw.thickness(i) >= LAYER_PRESENCE_THRESHOLD_M)
        .map(|i| Layer::new(raw.thickness(i), raw.eps(i)))
        .collect();
    WallConfig::from_layers(layers)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub wall: WallConfig,
    pub raw: TargetVector,
}

/// Runs one canonical, normalized scan through the network in evaluation mode.
pub fn predict<T: Scalar>(model: &Network<T>, scan: &BScan) -> Result<Prediction> {
    scan.ensure_canonical()?;
    let x = Tensor::new(
        vec![1, 1, BSCAN_SAMPLES, BSCAN_TRACES],
        scan.data.iter().map(|&v| T::of(f64::from(v))).collect(),
    )?;
    let y = model.predict(&x)?;
    let raw = TargetVector(std::array::from_fn(|k| y.values()[k].as_f64()));
    Ok(Prediction { wall: decode_prediction(&raw), raw })
}
