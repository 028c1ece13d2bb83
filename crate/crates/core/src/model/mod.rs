//! The hybrid drift network: a Gabor spectral encoder over the recent
//! feature window, a spectral decoder conditioned on the next-step context,
//! and the physics forecast the decoder output is added to.

mod checkpoint;
mod network;
mod params;

pub use checkpoint::{
    load_parameters, load_parameters_for, save_parameters, Checkpoint, CHECKPOINT_MAGIC,
    CHECKPOINT_VERSION,
};
pub use network::{decode, encode, BlockTrace, GradAccumulator, Network, SampleTrace};
pub use params::{count_parameters, init_parameters, ParameterSet, Tensor};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::GeoPosition;
use crate::physics::{self, EnvSample, PhysicsConfig};
use crate::scaler::{self, MinMaxScaler, N_FEATURES};
use crate::spectral::SequenceBlock;

/// `window × features` block of scaled features, rows in
/// [`FEATURE_NAMES`](crate::scaler::FEATURE_NAMES) order.
pub type FeatureWindow = SequenceBlock;

/// Width of the decoder context vector.
pub const CONTEXT_LEN: usize = 7;

/// Normalized baseline the decoder output is added to when the physics
/// branch is ablated: the centre of the scaled coordinate range.
pub const ABLATED_BASELINE: f64 = 0.5;

/// Architecture and ablation switches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    /// Timesteps per input window.
    pub window: usize,
    /// Channels per timestep.
    pub features: usize,
    /// Width of every hidden spectral block.
    pub hidden: usize,
    pub encoder_blocks: usize,
    pub decoder_blocks: usize,
    /// Dropout after each spectral block, training only.
    pub dropout: f64,
    /// Predict positions from the network alone (no physics forecast).
    pub ablate_physics: bool,
    /// Skip the dyadic channel rotation.
    pub ablate_rotate: bool,
    /// Replace every Gabor mask with ones.
    pub ablate_gabor: bool,
    /// Seed for parameter initialisation.
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            window: 5,
            features: N_FEATURES,
            hidden: 96,
            encoder_blocks: 2,
            decoder_blocks: 2,
            dropout: 0.2,
            ablate_physics: false,
            ablate_rotate: false,
            ablate_gabor: false,
            seed: 7,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidConfig(msg));
        if self.window < 2 {
            return fail(format!("model.window must be >= 2, got {}", self.window));
        }
        if self.features != N_FEATURES {
            return fail(format!(
                "model.features must be {N_FEATURES} (lat, lon, area, u10, v10, uo, vo), got {}",
                self.features
            ));
        }
        if self.hidden < self.features {
            return fail(format!(
                "model.hidden ({}) must be >= model.features ({})",
                self.hidden, self.features
            ));
        }
        if self.encoder_blocks == 0 || self.decoder_blocks == 0 {
            return fail("model.encoder_blocks and model.decoder_blocks must be >= 1".into());
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return fail(format!(
                "model.dropout must lie in [0, 1), got {}",
                self.dropout
            ));
        }
        Ok(())
    }

    /// Spectral modes kept for the configured window.
    pub fn modes(&self) -> usize {
        self.window / 2 + 1
    }

    /// (d_in, d_out) of every spectral block, encoder first.
    pub fn block_dims(&self) -> Vec<(usize, usize)> {
        let mut dims = Vec::with_capacity(self.encoder_blocks + self.decoder_blocks);
        for b in 0..self.encoder_blocks {
            let d_in = if b == 0 { self.features } else { self.hidden };
            dims.push((d_in, self.hidden));
        }
        for b in 0..self.decoder_blocks {
            let d_in = if b == 0 {
                self.hidden + CONTEXT_LEN
            } else {
                self.hidden
            };
            dims.push((d_in, self.hidden));
        }
        dims
    }
}

/// Decoder context: next-step forcing plus the previous position, scaled.
/// Order: `[u10, v10, uo, vo, area, prev_lat, prev_lon]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContextVector(pub [f64; CONTEXT_LEN]);

impl ContextVector {
    pub fn new(env_next: &EnvSample, prev: GeoPosition, scaler: &MinMaxScaler) -> Self {
        Self([
            scaler.transform_value(scaler::U10, env_next.u10),
            scaler.transform_value(scaler::V10, env_next.v10),
            scaler.transform_value(scaler::UO, env_next.uo),
            scaler.transform_value(scaler::VO, env_next.vo),
            scaler.transform_value(scaler::AREA, env_next.area),
            scaler.transform_value(scaler::LAT, prev.lat()),
            scaler.transform_value(scaler::LON, prev.lon()),
        ])
    }
}

/// Scales a raw `[lat, lon, area, u10, v10, uo, vo]` row.
pub fn feature_row(pos: GeoPosition, env: &EnvSample, scaler: &MinMaxScaler) -> [f64; N_FEATURES] {
    scaler.transform(&[
        pos.lat(),
        pos.lon(),
        env.area,
        env.u10,
        env.v10,
        env.uo,
        env.vo,
    ])
}

/// Anything that can supply the learned residual correction, in scaled
/// coordinate units. The trained network is one implementation; tests plug in
/// oracles.
pub trait ResidualNet {
    fn residual(&self, window: &FeatureWindow, context: &ContextVector) -> Result<[f64; 2]>;
}

impl<T: ResidualNet + ?Sized> ResidualNet for &T {
    fn residual(&self, window: &FeatureWindow, context: &ContextVector) -> Result<[f64; 2]> {
        (**self).residual(window, context)
    }
}

/// Scaled-space baseline the residual is added to: the scaled physics
/// forecast, or [`ABLATED_BASELINE`] when the physics branch is ablated.
pub fn baseline_normalized(
    env_next: &EnvSample,
    prev: GeoPosition,
    ablate_physics: bool,
    phys: &PhysicsConfig,
    scaler: &MinMaxScaler,
) -> Result<[f64; 2]> {
    if ablate_physics {
        return Ok([ABLATED_BASELINE; 2]);
    }
    let forecast = physics::physics_step(prev, env_next, phys)?;
    Ok([
        scaler.transform_value(scaler::LAT, forecast.lat()),
        scaler.transform_value(scaler::LON, forecast.lon()),
    ])
}

/// Hybrid one-step prediction in scaled coordinates: baseline + residual.
pub fn predict_normalized<N: ResidualNet + ?Sized>(
    net: &N,
    window: &FeatureWindow,
    env_next: &EnvSample,
    prev: GeoPosition,
    ablate_physics: bool,
    phys: &PhysicsConfig,
    scaler: &MinMaxScaler,
) -> Result<[f64; 2]> {
    let base = baseline_normalized(env_next, prev, ablate_physics, phys, scaler)?;
    let context = ContextVector::new(env_next, prev, scaler);
    let delta = net.residual(window, &context)?;
    Ok([base[0] + delta[0], base[1] + delta[1]])
}

/// Maps a scaled `[lat, lon]` pair back to a position, clamping latitude.
pub fn denormalize_position(z: [f64; 2], scaler: &MinMaxScaler) -> Result<GeoPosition> {
    GeoPosition::clamped(
        scaler.inverse_value(scaler::LAT, z[0]),
        scaler.inverse_value(scaler::LON, z[1]),
    )
}

/// Hybrid one-step forecast as a geographic position.
pub fn forward<N: ResidualNet + ?Sized>(
    net: &N,
    window: &FeatureWindow,
    env_next: &EnvSample,
    prev: GeoPosition,
    ablate_physics: bool,
    phys: &PhysicsConfig,
    scaler: &MinMaxScaler,
) -> Result<GeoPosition> {
    let z = predict_normalized(net, window, env_next, prev, ablate_physics, phys, scaler)?;
    denormalize_position(z, scaler)
}
