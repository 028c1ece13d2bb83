use std::ops::Range;

use crate::data::DriftSeries;
use crate::error::{Error, Result};
use crate::geo::GeoPosition;
use crate::model::{baseline_normalized, feature_row, ContextVector, FeatureWindow};
use crate::physics::{EnvSample, PhysicsConfig};
use crate::scaler::{self, MinMaxScaler, N_FEATURES};

/// One supervised example in raw units: rows `start..start+L` of the series
/// as input, row `start+L` as the target.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSample {
    pub start: usize,
    pub positions: Vec<GeoPosition>,
    pub env: Vec<EnvSample>,
    pub target: GeoPosition,
    /// Forcing at the target step.
    pub env_next: EnvSample,
    /// Position at the last window step.
    pub prev: GeoPosition,
}

impl WindowSample {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Scaled `L × 7` feature window.
    pub fn features(&self, scaler: &MinMaxScaler) -> FeatureWindow {
        let mut data = Vec::with_capacity(self.len() * N_FEATURES);
        for (p, e) in self.positions.iter().zip(&self.env) {
            data.extend(feature_row(*p, e, scaler));
        }
        FeatureWindow::from_vec(self.len(), N_FEATURES, data).expect("L x 7 rows")
    }
}

/// Every window of `window` consecutive days followed by a target day.
/// On a gap-free series the count is `len − window`.
pub fn make_windows(series: &DriftSeries, window: usize) -> Result<Vec<WindowSample>> {
    if window == 0 || series.len() <= window {
        return Err(Error::InsufficientData(format!(
            "{} rows cannot form a {window}-step window plus a target",
            series.len()
        )));
    }
    let mut out = Vec::with_capacity(series.len() - window);
    for start in 0..series.len() - window {
        let end = start + window;
        if !series.is_contiguous(start, end) {
            continue;
        }
        out.push(WindowSample {
            start,
            positions: series.positions()[start..end].to_vec(),
            env: series.env()[start..end].to_vec(),
            target: series.positions()[end],
            env_next: series.env()[end],
            prev: series.positions()[end - 1],
        });
    }
    if out.is_empty() {
        return Err(Error::InsufficientData(format!(
            "no run of {} consecutive days in the series",
            window + 1
        )));
    }
    Ok(out)
}

/// Chronological train / validation / test ranges over window indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataSplit {
    pub train: Range<usize>,
    pub val: Range<usize>,
    pub test: Range<usize>,
}

/// Splits `n` windows in time order. Validation and test each get at least
/// one window; training keeps the rest and must not be empty.
pub fn split_windows(n: usize, val_fraction: f64, test_fraction: f64) -> Result<DataSplit> {
    let n_val = ((n as f64 * val_fraction).round() as usize).max(1);
    let n_test = ((n as f64 * test_fraction).round() as usize).max(1);
    if n < n_val + n_test + 1 {
        return Err(Error::InsufficientData(format!(
            "{n} windows cannot be split into train/validation/test"
        )));
    }
    let n_train = n - n_val - n_test;
    Ok(DataSplit {
        train: 0..n_train,
        val: n_train..n_train + n_val,
        test: n_train + n_val..n,
    })
}

/// Fits the scaler on the rows the training windows touch, targets included.
pub fn fit_scaler(series: &DriftSeries, windows: &[WindowSample]) -> Result<MinMaxScaler> {
    let mut used = vec![false; series.len()];
    for w in windows {
        for flag in &mut used[w.start..=w.start + w.len()] {
            *flag = true;
        }
    }
    let rows: Vec<[f64; N_FEATURES]> = (0..series.len())
        .filter(|t| used[*t])
        .map(|t| series.raw_row(t))
        .collect();
    MinMaxScaler::fit(rows.iter())
}

/// A window in the units the network trains on.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSample {
    pub window: FeatureWindow,
    pub context: ContextVector,
    /// Scaled physics forecast (or the ablated constant) the residual is
    /// added to.
    pub base: [f64; 2],
    /// Scaled true position.
    pub target: [f64; 2],
}

impl TrainingSample {
    pub fn new(
        w: &WindowSample,
        scaler: &MinMaxScaler,
        ablate_physics: bool,
        phys: &PhysicsConfig,
    ) -> Result<Self> {
        Ok(Self {
            window: w.features(scaler),
            context: ContextVector::new(&w.env_next, w.prev, scaler),
            base: baseline_normalized(&w.env_next, w.prev, ablate_physics, phys, scaler)?,
            target: [
                scaler.transform_value(scaler::LAT, w.target.lat()),
                scaler.transform_value(scaler::LON, w.target.lon()),
            ],
        })
    }

    /// What the network output should be for a perfect prediction.
    pub fn residual_target(&self) -> [f64; 2] {
        [self.target[0] - self.base[0], self.target[1] - self.base[1]]
    }
}

pub fn build_samples(
    windows: &[WindowSample],
    scaler: &MinMaxScaler,
    ablate_physics: bool,
    phys: &PhysicsConfig,
) -> Result<Vec<TrainingSample>> {
    windows
        .iter()
        .map(|w| TrainingSample::new(w, scaler, ablate_physics, phys))
        .collect()
}
