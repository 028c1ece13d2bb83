//! Autoregressive multi-step forecasting: each prediction is fed back into
//! the input window together with the known forcing for that step.

use crate::error::{Error, Result};
use crate::geo::GeoPosition;
use crate::metrics::DisplacementReport;
use crate::model::{feature_row, forward, FeatureWindow, ResidualNet};
use crate::physics::{physics_step, EnvSample, PhysicsConfig};
use crate::scaler::{MinMaxScaler, N_FEATURES};

/// Starting state and future forcing of a rollout.
#[derive(Debug, Clone, PartialEq)]
pub struct RolloutPlan {
    /// Scaled `L × 7` window ending at `start`.
    pub window: FeatureWindow,
    /// Forcing for each forecast step, in order.
    pub forcing: Vec<EnvSample>,
    /// Last known position.
    pub start: GeoPosition,
}

impl RolloutPlan {
    /// Checks that the forcing covers exactly `horizon` steps.
    pub fn new(
        window: FeatureWindow,
        forcing: Vec<EnvSample>,
        start: GeoPosition,
        horizon: usize,
    ) -> Result<Self> {
        if horizon == 0 || forcing.len() != horizon {
            return Err(Error::HorizonMismatch(format!(
                "horizon {horizon} needs exactly {horizon} forcing rows, got {}",
                forcing.len()
            )));
        }
        if window.channels() != N_FEATURES {
            return Err(Error::ShapeMismatch(format!(
                "rollout window has {} channels, expected {N_FEATURES}",
                window.channels()
            )));
        }
        Ok(Self {
            window,
            forcing,
            start,
        })
    }

    pub fn horizon(&self) -> usize {
        self.forcing.len()
    }
}

/// Rolls the hybrid model forward one step per forcing row. The oldest window
/// row is dropped after each step and `[prediction, forcing]` appended.
pub fn rollout<N: ResidualNet + ?Sized>(
    plan: &RolloutPlan,
    net: &N,
    ablate_physics: bool,
    phys: &PhysicsConfig,
    scaler: &MinMaxScaler,
) -> Result<Vec<GeoPosition>> {
    if plan.forcing.is_empty() {
        return Err(Error::HorizonMismatch("horizon must be at least 1".into()));
    }
    let steps = plan.window.steps();
    let mut window = plan.window.clone();
    let mut prev = plan.start;
    let mut out = Vec::with_capacity(plan.horizon());
    for env in &plan.forcing {
        let next = forward(net, &window, env, prev, ablate_physics, phys, scaler)?;
        let data = window.as_mut_slice();
        data.copy_within(N_FEATURES.., 0);
        data[(steps - 1) * N_FEATURES..].copy_from_slice(&feature_row(next, env, scaler));
        out.push(next);
        prev = next;
    }
    Ok(out)
}

/// Iterated physics forecast with no learned correction.
pub fn physics_rollout(
    start: GeoPosition,
    forcing: &[EnvSample],
    phys: &PhysicsConfig,
) -> Result<Vec<GeoPosition>> {
    let mut pos = start;
    forcing
        .iter()
        .map(|env| {
            pos = physics_step(pos, env, phys)?;
            Ok(pos)
        })
        .collect()
}

/// A rollout scored against the true trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastRun {
    pub predictions: Vec<GeoPosition>,
    pub report: DisplacementReport,
}

pub fn rollout_with_errors<N: ResidualNet + ?Sized>(
    plan: &RolloutPlan,
    truth: &[GeoPosition],
    net: &N,
    ablate_physics: bool,
    phys: &PhysicsConfig,
    scaler: &MinMaxScaler,
) -> Result<ForecastRun> {
    if truth.len() != plan.horizon() {
        return Err(Error::LengthMismatch(format!(
            "{} true positions for a {}-step rollout",
            truth.len(),
            plan.horizon()
        )));
    }
    let predictions = rollout(plan, net, ablate_physics, phys, scaler)?;
    let report = DisplacementReport::compute(&predictions, truth)?;
    Ok(ForecastRun {
        predictions,
        report,
    })
}
