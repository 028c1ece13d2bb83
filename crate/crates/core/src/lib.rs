//! Hybrid iceberg drift forecasting.
//!
//! A closed-form wind/current/Coriolis drift model produces a one-day
//! position forecast; a Gabor spectral network trained on the recent
//! trajectory and forcing predicts the correction on top of it.
//!
//! Module map:
//! - [`geo`]: positions, Coriolis parameter, haversine, displacement
//! - [`physics`]: the analytical drift model and residual targets
//! - [`spectral`]: real DFT, channel rotation, Gabor spectral layer
//! - [`model`]: network parameters, forward/backward pass, checkpoints
//! - [`train`]: scaling, windowing, Adam, the training loop
//! - [`infer`]: autoregressive rollout
//! - [`metrics`]: ADE/FDE in degrees and kilometres
//! - [`data`]: CSV ingestion, daily aggregation, outer join and gap filling
//! - [`synthetic`]: physics-generated tracks with a known bias
//! - [`experiment`]: full model, ablations and the physics-only baseline
//! - [`exec`]: chunked parallel map with a sequential fallback

pub mod data;
pub mod error;
pub mod exec;
pub mod experiment;
pub mod geo;
pub mod infer;
pub mod metrics;
pub mod model;
pub mod physics;
pub mod scaler;
pub mod spectral;
pub mod synthetic;
pub mod train;

pub use error::{Error, Result};
