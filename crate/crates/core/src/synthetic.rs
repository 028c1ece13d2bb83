//! Physics-generated trajectories with a known unmodelled bias, for sanity
//! experiments and tests.

use std::f64::consts::TAU;

use chrono::NaiveDate;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::data::DriftSeries;
use crate::error::Result;
use crate::geo::{displace, GeoPosition, VelocityEN};
use crate::physics::{physics_step, EnvSample, PhysicsConfig};

/// Shape of a synthetic track.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub steps: usize,
    pub start_lat: f64,
    pub start_lon: f64,
    pub start_date: NaiveDate,
    /// Mean iceberg area, km².
    pub area: f64,
    /// Speed of the extra current the physics model does not know about, m/s.
    pub bias_speed: f64,
    /// Days for the extra current to turn through a full circle.
    pub bias_period_days: f64,
    /// Standard deviation of the position noise added to observations, degrees.
    pub noise_deg: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            steps: 200,
            start_lat: -60.0,
            start_lon: -45.0,
            start_date: NaiveDate::from_ymd_opt(2020, 1, 1).expect("valid date"),
            area: 3000.0,
            bias_speed: 0.05,
            bias_period_days: 120.0,
            noise_deg: 0.002,
            seed: 7,
        }
    }
}

/// A generated track: the noisy observed series plus the noise-free
/// positions behind it.
#[derive(Debug, Clone)]
pub struct SyntheticTrack {
    pub series: DriftSeries,
    pub clean: Vec<GeoPosition>,
}

/// Smooth, zero-mean forcing for day `t`.
pub fn synthetic_forcing(t: usize, area: f64) -> EnvSample {
    let t = t as f64;
    let s = |period: f64, phase: f64| (TAU * t / period + phase).sin();
    EnvSample {
        u10: 6.0 * s(17.0, 0.3) + 3.0 * s(41.0, 1.1),
        v10: 5.0 * s(23.0, 2.0) + 2.0 * s(9.0, 0.7),
        uo: 0.08 * s(31.0, 0.5) + 0.03 * s(13.0, 2.4),
        vo: 0.08 * s(37.0, 1.9) + 0.03 * s(11.0, 0.2),
        area: area * (1.0 + 0.05 * s(60.0, 0.0)),
    }
}

/// Daily track driven by [`synthetic_forcing`]: each day the physics step
/// plus a slowly rotating bias current, observed with Gaussian noise.
pub fn generate(cfg: &SyntheticConfig, phys: &PhysicsConfig) -> Result<SyntheticTrack> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let noise = Normal::new(0.0, cfg.noise_deg.max(0.0)).expect("finite std");
    let mut clean = Vec::with_capacity(cfg.steps);
    let mut observed = Vec::with_capacity(cfg.steps);
    let mut env = Vec::with_capacity(cfg.steps);
    let mut pos = GeoPosition::new(cfg.start_lat, cfg.start_lon)?;
    for t in 0..cfg.steps {
        let e = synthetic_forcing(t, cfg.area);
        if t > 0 {
            let angle = TAU * t as f64 / cfg.bias_period_days;
            let bias = VelocityEN::new(cfg.bias_speed * angle.cos(), cfg.bias_speed * angle.sin())?;
            pos = displace(physics_step(pos, &e, phys)?, bias, phys.dt)?;
        }
        clean.push(pos);
        observed.push(GeoPosition::new(
            pos.lat() + noise.sample(&mut rng),
            pos.lon() + noise.sample(&mut rng),
        )?);
        env.push(e);
    }
    let dates = (0..cfg.steps)
        .map(|t| cfg.start_date + chrono::Days::new(t as u64))
        .collect();
    Ok(SyntheticTrack {
        series: DriftSeries::new(dates, observed, env)?,
        clean,
    })
}
