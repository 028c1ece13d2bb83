//! Windowing, scaling, loss, Adam and the full-batch training loop with
//! early stopping.

mod adam;
mod windows;

pub use crate::scaler::MinMaxScaler;
pub use adam::{adam_step, AdamConfig, AdamState};
pub use windows::{
    build_samples, fit_scaler, make_windows, split_windows, DataSplit, TrainingSample, WindowSample,
};

use std::fmt;
use std::io::Write;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::DriftSeries;
use crate::error::{Error, Result};
use crate::exec::{map_chunks, Execution};
use crate::model::{init_parameters, ModelConfig, Network, ParameterSet};
use crate::physics::PhysicsConfig;

/// Samples per work unit when a batch is spread over threads. Fixed so the
/// reduction order, and therefore every bit of the result, does not depend
/// on the thread count.
pub const BATCH_CHUNK: usize = 16;

/// Optimizer, stopping and split settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub max_epochs: usize,
    /// Epochs without a strictly lower validation loss before stopping.
    pub patience: usize,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub val_fraction: f64,
    pub test_fraction: f64,
    /// Seed for dropout masks.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-4,
            max_epochs: 500,
            patience: 100,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            val_fraction: 0.1,
            test_fraction: 0.1,
            seed: 7,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return fail(format!(
                "train.learning_rate must be > 0, got {}",
                self.learning_rate
            ));
        }
        if self.max_epochs == 0 {
            return fail("train.max_epochs must be >= 1".into());
        }
        if self.patience == 0 || self.patience > self.max_epochs {
            return fail(format!(
                "train.patience must lie in [1, max_epochs = {}], got {}",
                self.max_epochs, self.patience
            ));
        }
        for (name, b) in [
            ("adam_beta1", self.adam_beta1),
            ("adam_beta2", self.adam_beta2),
        ] {
            if !(0.0..1.0).contains(&b) {
                return fail(format!("train.{name} must lie in [0, 1), got {b}"));
            }
        }
        if self.adam_eps.is_nan() || self.adam_eps <= 0.0 {
            return fail(format!("train.adam_eps must be > 0, got {}", self.adam_eps));
        }
        if !(self.val_fraction > 0.0 && self.test_fraction > 0.0)
            || self.val_fraction + self.test_fraction >= 1.0
        {
            return fail(format!(
                "train.val_fraction ({}) and train.test_fraction ({}) must be positive with sum < 1",
                self.val_fraction, self.test_fraction
            ));
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            beta1: self.adam_beta1,
            beta2: self.adam_beta2,
            eps: self.adam_eps,
        }
    }
}

/// Mean over samples and both coordinates of the squared error.
pub fn mse_loss(pred: &[[f64; 2]], truth: &[[f64; 2]]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::LengthMismatch(format!(
            "{} predictions vs {} targets",
            pred.len(),
            truth.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::EmptySequence);
    }
    let sse: f64 = pred
        .iter()
        .zip(truth)
        .map(|(p, t)| (p[0] - t[0]).powi(2) + (p[1] - t[1]).powi(2))
        .sum();
    Ok(sse / (2 * pred.len()) as f64)
}

/// Dropout stream for one sample in one epoch.
pub fn sample_rng(seed: u64, epoch: usize, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((epoch as u64) << 32) | index as u64);
    rng
}

/// Inference-mode loss over `samples`.
pub fn evaluate_loss(net: &Network, samples: &[TrainingSample], exec: Execution) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptySequence);
    }
    let parts = map_chunks(samples, BATCH_CHUNK, exec, |_, chunk| -> Result<f64> {
        let mut sse = 0.0;
        for s in chunk {
            let (out, _) = net.forward_trace(&s.window, &s.context, None)?;
            for ((b, o), t) in s.base.iter().zip(&out).zip(&s.target) {
                sse += (b + o - t).powi(2);
            }
        }
        Ok(sse)
    });
    let mut sse = 0.0;
    for p in parts {
        sse += p?;
    }
    Ok(sse / (2 * samples.len()) as f64)
}

/// Training-mode loss and its gradient over the full batch. Dropout masks
/// come from [`sample_rng`]`(seed, epoch, index)`.
pub fn loss_and_gradients(
    net: &Network,
    samples: &[TrainingSample],
    seed: u64,
    epoch: usize,
    exec: Execution,
) -> Result<(f64, ParameterSet)> {
    if samples.is_empty() {
        return Err(Error::EmptySequence);
    }
    let scale = 1.0 / samples.len() as f64;
    let dropout = net.config().dropout > 0.0;
    let parts = map_chunks(samples, BATCH_CHUNK, exec, |ci, chunk| -> Result<_> {
        let mut acc = net.accumulator();
        let mut sse = 0.0;
        for (j, s) in chunk.iter().enumerate() {
            let mut rng = dropout.then(|| sample_rng(seed, epoch, ci * BATCH_CHUNK + j));
            let (out, trace) = net.forward_trace(&s.window, &s.context, rng.as_mut())?;
            let err = [
                s.base[0] + out[0] - s.target[0],
                s.base[1] + out[1] - s.target[1],
            ];
            sse += err[0] * err[0] + err[1] * err[1];
            net.backward(&trace, [err[0] * scale, err[1] * scale], &mut acc);
        }
        Ok((sse, acc))
    });
    let mut total = 0.0;
    let mut merged = None;
    for part in parts {
        let (sse, acc) = part?;
        total += sse;
        match merged.as_mut() {
            None => merged = Some(acc),
            Some(m) => m.merge(&acc),
        }
    }
    let grads = net.gradients(&merged.expect("non-empty batch"));
    Ok((total * 0.5 * scale, grads))
}

/// Tracks the best validation loss; improvement means strictly lower.
#[derive(Debug, Clone, PartialEq)]
pub struct EarlyStopping {
    patience: usize,
    best: f64,
    best_epoch: usize,
    stale: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        Self {
            patience,
            best: f64::INFINITY,
            best_epoch: 0,
            stale: 0,
        }
    }

    /// Records an epoch's loss and reports whether it is a new best.
    pub fn observe(&mut self, epoch: usize, loss: f64) -> bool {
        if loss < self.best {
            self.best = loss;
            self.best_epoch = epoch;
            self.stale = 0;
            true
        } else {
            self.stale += 1;
            false
        }
    }

    pub fn should_stop(&self) -> bool {
        self.stale >= self.patience
    }

    pub fn best(&self) -> f64 {
        self.best
    }

    pub fn best_epoch(&self) -> usize {
        self.best_epoch
    }
}

/// One epoch's numbers. `Display` gives the log line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochReport {
    pub epoch: usize,
    pub train_mse: f64,
    pub val_mse: f64,
    pub best: bool,
}

impl fmt::Display for EpochReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "epoch={} train_mse={} val_mse={} best={}",
            self.epoch, self.train_mse, self.val_mse, self.best
        )
    }
}

/// Per-epoch losses. Epochs are numbered from 1; `best_epoch` indexes the
/// lowest validation loss. Equality ignores wall time.
#[derive(Debug, Clone)]
pub struct TrainHistory {
    pub train_mse: Vec<f64>,
    pub val_mse: Vec<f64>,
    pub best_epoch: usize,
    pub wall_time: Duration,
}

impl PartialEq for TrainHistory {
    fn eq(&self, other: &Self) -> bool {
        self.train_mse == other.train_mse
            && self.val_mse == other.val_mse
            && self.best_epoch == other.best_epoch
    }
}

impl TrainHistory {
    pub fn epochs(&self) -> usize {
        self.train_mse.len()
    }

    pub fn best_val_mse(&self) -> f64 {
        self.val_mse[self.best_epoch - 1]
    }

    /// `epoch,train_mse,val_mse`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "epoch,train_mse,val_mse")?;
        for (k, (t, v)) in self.train_mse.iter().zip(&self.val_mse).enumerate() {
            writeln!(out, "{},{t},{v}", k + 1)?;
        }
        Ok(())
    }
}

/// Everything a training run produces.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters from the best validation epoch.
    pub params: ParameterSet,
    pub scaler: MinMaxScaler,
    pub history: TrainHistory,
    pub windows: Vec<WindowSample>,
    pub split: DataSplit,
}

/// Windows, split and training-only scaler for a series.
pub fn prepare_split(
    series: &DriftSeries,
    model_cfg: &ModelConfig,
    train_cfg: &TrainConfig,
) -> Result<(Vec<WindowSample>, DataSplit, MinMaxScaler)> {
    let windows = make_windows(series, model_cfg.window)?;
    let split = split_windows(
        windows.len(),
        train_cfg.val_fraction,
        train_cfg.test_fraction,
    )?;
    let scaler = fit_scaler(series, &windows[split.train.clone()])?;
    Ok((windows, split, scaler))
}

pub fn train_model(
    series: &DriftSeries,
    model_cfg: &ModelConfig,
    train_cfg: &TrainConfig,
    phys: &PhysicsConfig,
) -> Result<TrainOutcome> {
    train_model_with(
        series,
        model_cfg,
        train_cfg,
        phys,
        Execution::default(),
        &mut |_| {},
    )
}

/// Full-batch training: one Adam step per epoch over the whole training
/// split, validation after every step, early stopping on validation loss.
pub fn train_model_with(
    series: &DriftSeries,
    model_cfg: &ModelConfig,
    train_cfg: &TrainConfig,
    phys: &PhysicsConfig,
    exec: Execution,
    on_epoch: &mut dyn FnMut(&EpochReport),
) -> Result<TrainOutcome> {
    model_cfg.validate()?;
    train_cfg.validate()?;
    phys.validate()?;
    let started = Instant::now();
    let (windows, split, scaler) = prepare_split(series, model_cfg, train_cfg)?;
    let train = build_samples(
        &windows[split.train.clone()],
        &scaler,
        model_cfg.ablate_physics,
        phys,
    )?;
    let val = build_samples(
        &windows[split.val.clone()],
        &scaler,
        model_cfg.ablate_physics,
        phys,
    )?;

    let adam = train_cfg.adam();
    let mut params = init_parameters(model_cfg)?;
    let mut state = AdamState::new(&params);
    let mut stopper = EarlyStopping::new(train_cfg.patience);
    let mut best_params = params.clone();
    let mut history = TrainHistory {
        train_mse: Vec::new(),
        val_mse: Vec::new(),
        best_epoch: 0,
        wall_time: Duration::ZERO,
    };
    for epoch in 1..=train_cfg.max_epochs {
        let net = Network::new(model_cfg.clone(), params)?;
        let (train_mse, grads) = loss_and_gradients(&net, &train, train_cfg.seed, epoch, exec)?;
        if !train_mse.is_finite() {
            return Err(Error::DivergedLoss {
                epoch,
                which: "train",
            });
        }
        params = net.into_params();
        adam_step(&mut params, &grads, &mut state, &adam)?;

        let net = Network::new(model_cfg.clone(), params)?;
        let val_mse = evaluate_loss(&net, &val, exec)?;
        params = net.into_params();
        if !val_mse.is_finite() {
            return Err(Error::DivergedLoss {
                epoch,
                which: "validation",
            });
        }
        let best = stopper.observe(epoch, val_mse);
        if best {
            best_params.clone_from(&params);
        }
        history.train_mse.push(train_mse);
        history.val_mse.push(val_mse);
        on_epoch(&EpochReport {
            epoch,
            train_mse,
            val_mse,
            best,
        });
        if stopper.should_stop() {
            break;
        }
    }
    history.best_epoch = stopper.best_epoch();
    history.wall_time = started.elapsed();
    Ok(TrainOutcome {
        params: best_params,
        scaler,
        history,
        windows,
        split,
    })
}
