//! Analytical wind/current/Coriolis drift model.
//!
//! The iceberg moves with the surface current plus a wind-driven term whose
//! along-wind and cross-wind fractions (b, a) depend on a dimensionless ratio
//! L of wind forcing to Coriolis response. Small bergs in light wind follow
//! the current (L → 0, a, b → 0); large L drifts with the wind (a → 0, b → 1).
//!
//! Hemisphere handling: L is built from |f| so the coefficients stay real,
//! and the cross-wind deflection carries sign(f), which gives leftward
//! deflection south of the equator and rightward deflection north of it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{self, GeoPosition, VelocityEN};

/// Latitude band around the equator where the drift parameter is undefined.
pub const EQUATOR_GUARD_DEG: f64 = 0.5;
/// Sanity bound on each wind component, m/s.
pub const MAX_WIND: f64 = 120.0;
/// Sanity bound on each current component, m/s.
pub const MAX_CURRENT: f64 = 10.0;

/// One timestep of environmental forcing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvSample {
    /// 10 m wind, eastward, m/s.
    pub u10: f64,
    /// 10 m wind, northward, m/s.
    pub v10: f64,
    /// Surface current, eastward, m/s.
    pub uo: f64,
    /// Surface current, northward, m/s.
    pub vo: f64,
    /// Iceberg area, km².
    pub area: f64,
}

impl EnvSample {
    pub fn new(u10: f64, v10: f64, uo: f64, vo: f64, area: f64) -> Result<Self> {
        let env = Self {
            u10,
            v10,
            uo,
            vo,
            area,
        };
        env.validate()?;
        Ok(env)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v, bound) in [
            ("u10", self.u10, MAX_WIND),
            ("v10", self.v10, MAX_WIND),
            ("uo", self.uo, MAX_CURRENT),
            ("vo", self.vo, MAX_CURRENT),
        ] {
            if !v.is_finite() || v.abs() >= bound {
                return Err(Error::InvalidInput(format!(
                    "{name} = {v} outside (-{bound}, {bound}) m/s"
                )));
            }
        }
        if !(self.area.is_finite() && self.area > 0.0) {
            return Err(Error::NonPositiveArea(self.area));
        }
        Ok(())
    }

    pub fn wind(&self) -> VelocityEN {
        VelocityEN {
            east: self.u10,
            north: self.v10,
        }
    }

    pub fn current(&self) -> VelocityEN {
        VelocityEN {
            east: self.uo,
            north: self.vo,
        }
    }
}

/// Constants of the drift model. Every field is overridable from the
/// `[physics]` section of a run configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysicsConfig {
    /// Gravitational acceleration, m/s².
    pub g: f64,
    /// Water drag coefficient.
    pub c_w: f64,
    /// Wind coupling coefficient.
    pub gamma: f64,
    /// Earth rotation rate, rad/s.
    pub omega: f64,
    /// Timestep between observations, s.
    pub dt: f64,
    /// Below this L the coefficients come from their power series.
    pub small_l_threshold: f64,
}

impl Default for PhysicsConfig {
    fn default() -> Self {
        Self {
            g: 9.81,
            c_w: 0.9,
            gamma: 0.018,
            omega: geo::EARTH_ROTATION_RATE,
            dt: 86_400.0,
            small_l_threshold: 0.3,
        }
    }
}

impl PhysicsConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("g", self.g),
            ("c_w", self.c_w),
            ("gamma", self.gamma),
            ("omega", self.omega),
            ("dt", self.dt),
            ("small_l_threshold", self.small_l_threshold),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "physics.{name} must be > 0, got {v}"
                )));
            }
        }
        if self.gamma > 0.1 {
            return Err(Error::InvalidConfig(format!(
                "physics.gamma must lie in (0, 0.1], got {}",
                self.gamma
            )));
        }
        if self.small_l_threshold >= 1.0 {
            return Err(Error::InvalidConfig(format!(
                "physics.small_l_threshold must lie in (0, 1), got {}",
                self.small_l_threshold
            )));
        }
        Ok(())
    }
}

/// Cross-wind (a) and along-wind (b) response fractions for a drift parameter L.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftCoefficients {
    pub a: f64,
    pub b: f64,
    pub l: f64,
}

/// Characteristic length S = A / (2√A) in metres for an area in km².
pub fn length_scale(area_km2: f64) -> Result<f64> {
    if !(area_km2.is_finite() && area_km2 > 0.0) {
        return Err(Error::NonPositiveArea(area_km2));
    }
    let area_m2 = area_km2 * 1e6;
    Ok(area_m2 / (2.0 * area_m2.sqrt()))
}

/// Dimensionless drift parameter L = g·C_w·‖v_a‖ / (π·|f|·S).
pub fn drift_parameter(
    wind: VelocityEN,
    length_scale_m: f64,
    lat_deg: f64,
    cfg: &PhysicsConfig,
) -> Result<f64> {
    if lat_deg.abs() <= EQUATOR_GUARD_DEG {
        return Err(Error::EquatorialSingularity { lat: lat_deg });
    }
    if length_scale_m.is_nan() || length_scale_m <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "length scale must be > 0, got {length_scale_m}"
        )));
    }
    let f = geo::coriolis_parameter_with(lat_deg, cfg.omega).abs();
    Ok(cfg.g * cfg.c_w * wind.norm() / (std::f64::consts::PI * f * length_scale_m))
}

// a/L = Σ (−1)^k C_k u^k with u = L⁴ (Catalan numbers).
const A_SERIES: [f64; 10] = [
    1.0, -1.0, 2.0, -5.0, 14.0, -42.0, 132.0, -429.0, 1430.0, -4862.0,
];
// Radicand of b divided by 2u³.
const B_RADICAND_SERIES: [f64; 10] = [
    1.0, -3.0, 9.0, -28.0, 90.0, -297.0, 1001.0, -3432.0, 11934.0, -41990.0,
];

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

/// Closed-form coefficients. Loses all precision in `b` for small L.
pub fn wind_coefficients_exact(l: f64) -> (f64, f64) {
    let l3 = l * l * l;
    let l4 = l3 * l;
    let root = (1.0 + 4.0 * l4).sqrt();
    let a = (root - 1.0) / (2.0 * l3);
    let radicand = ((1.0 + l4) * root - 3.0 * l4 - 1.0).max(0.0);
    let b = radicand.sqrt() / (std::f64::consts::SQRT_2 * l3);
    (a, b)
}

/// Power-series coefficients; converges for L < 0.7 and is accurate to
/// double precision up to L ≈ 0.3.
pub fn wind_coefficients_series(l: f64) -> (f64, f64) {
    let u = l.powi(4);
    let a = l * horner(&A_SERIES, u);
    let b = l.powi(3) * horner(&B_RADICAND_SERIES, u).sqrt();
    (a, b)
}

/// Wind response coefficients, switching to the series branch at or below
/// `cfg.small_l_threshold` where the radicand of `b` cancels catastrophically.
pub fn wind_coefficients(l: f64, cfg: &PhysicsConfig) -> Result<DriftCoefficients> {
    if !(l.is_finite() && l >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "drift parameter must be >= 0, got {l}"
        )));
    }
    let (a, b) = if l <= cfg.small_l_threshold {
        wind_coefficients_series(l)
    } else {
        wind_coefficients_exact(l)
    };
    Ok(DriftCoefficients { a, b, l })
}

/// Wind-induced drift v = −a·sign(f)·rot90(v_a) + b·v_a.
pub fn wind_induced_drift(
    wind: VelocityEN,
    coeffs: &DriftCoefficients,
    lat_deg: f64,
) -> VelocityEN {
    let hemisphere = if lat_deg < 0.0 { -1.0 } else { 1.0 };
    wind.rot90()
        .scale(-coeffs.a * hemisphere)
        .add(&wind.scale(coeffs.b))
}

/// Net iceberg velocity v_i = v_w + γ·v_wind.
pub fn iceberg_velocity(
    env: &EnvSample,
    pos: GeoPosition,
    cfg: &PhysicsConfig,
) -> Result<VelocityEN> {
    let s = length_scale(env.area)?;
    let l = drift_parameter(env.wind(), s, pos.lat(), cfg)?;
    let coeffs = wind_coefficients(l, cfg)?;
    let v_wind = wind_induced_drift(env.wind(), &coeffs, pos.lat());
    Ok(env.current().add(&v_wind.scale(cfg.gamma)))
}

/// One-step physics forecast: advect `pos` by the iceberg velocity for `cfg.dt`.
pub fn physics_step(pos: GeoPosition, env: &EnvSample, cfg: &PhysicsConfig) -> Result<GeoPosition> {
    let v = iceberg_velocity(env, pos, cfg)?;
    geo::displace(pos, v, cfg.dt)
}

/// Residuals r_t = y_t − physics_step(y_{t−1}, e_t) in degrees, t = 1..n−1.
///
/// `envs[t]` is the forcing that drives the move from `positions[t-1]` to
/// `positions[t]`; `envs[0]` is unused but keeps the sequences aligned.
pub fn residual_targets(
    positions: &[GeoPosition],
    envs: &[EnvSample],
    cfg: &PhysicsConfig,
) -> Result<Vec<(f64, f64)>> {
    if positions.len() != envs.len() {
        return Err(Error::LengthMismatch(format!(
            "{} positions vs {} forcing samples",
            positions.len(),
            envs.len()
        )));
    }
    if positions.len() < 2 {
        return Err(Error::LengthMismatch(format!(
            "residuals need at least 2 positions, got {}",
            positions.len()
        )));
    }
    positions
        .windows(2)
        .zip(&envs[1..])
        .map(|(pair, env)| {
            let forecast = physics_step(pair[0], env, cfg)?;
            Ok((
                pair[1].lat() - forecast.lat(),
                pair[1].lon() - forecast.lon(),
            ))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> PhysicsConfig {
        PhysicsConfig::default()
    }

    fn wind(e: f64, n: f64) -> VelocityEN {
        VelocityEN::new(e, n).unwrap()
    }

    #[test]
    fn length_scale_examples() {
        assert!((length_scale(1.0).unwrap() - 500.0).abs() < 1e-9);
        assert!((length_scale(4.0).unwrap() - 1000.0).abs() < 1e-9);
        assert!((length_scale(3.5).unwrap() - 935.414).abs() < 1e-3);
        assert!(matches!(length_scale(0.0), Err(Error::NonPositiveArea(_))));
        assert!(matches!(length_scale(-2.0), Err(Error::NonPositiveArea(_))));
    }

    #[test]
    fn drift_parameter_examples() {
        let c = cfg();
        assert_eq!(
            drift_parameter(wind(0.0, 0.0), 500.0, -70.0, &c).unwrap(),
            0.0
        );
        // 9.81*0.9*10 / (pi * 2*7.2921e-5*sin(70deg) * 500) = 410.13
        let l = drift_parameter(wind(10.0, 0.0), 500.0, -70.0, &c).unwrap();
        assert!((l - 410.13).abs() < 0.1, "{l}");
        let l = drift_parameter(wind(0.01, 0.0), 5000.0, -70.0, &c).unwrap();
        assert!((l - 0.04101).abs() < 1e-4, "{l}");
        assert!(matches!(
            drift_parameter(wind(1.0, 0.0), 500.0, 0.3, &c),
            Err(Error::EquatorialSingularity { .. })
        ));
    }

    #[test]
    fn coefficient_spot_values() {
        let c = cfg();
        let k = wind_coefficients(1.0, &c).unwrap();
        assert!((k.a - (5f64.sqrt() - 1.0) / 2.0).abs() < 1e-12);
        assert!((k.b - 0.48587).abs() < 1e-4);
        let k = wind_coefficients(0.0, &c).unwrap();
        assert_eq!((k.a, k.b), (0.0, 0.0));
        let k = wind_coefficients(1e3, &c).unwrap();
        assert!((k.a - 1e-3).abs() < 1e-6);
        assert!((k.b - 1.0).abs() < 1e-6);
    }

    #[test]
    fn series_matches_high_precision_reference() {
        // Reference values from 50-digit evaluation of the closed forms.
        let (a, b) = wind_coefficients_series(0.1);
        assert!((a / 0.099_990_001_999_500_14 - 1.0).abs() < 1e-14);
        assert!((b / 0.000_999_850_033_741_065 - 1.0).abs() < 1e-14);
        let (a, b) = wind_coefficients_series(0.3);
        assert!((a / 0.297_608_586_489_685_5 - 1.0).abs() < 1e-13);
        assert!((b / 0.026_677_803_405_022_557 - 1.0).abs() < 1e-13);
    }

    #[test]
    fn branches_agree_at_threshold() {
        let l = cfg().small_l_threshold;
        let (ea, eb) = wind_coefficients_exact(l);
        let (sa, sb) = wind_coefficients_series(l);
        assert!(((ea - sa) / ea).abs() < 1e-6);
        assert!(((eb - sb) / eb).abs() < 1e-6);
    }

    #[test]
    fn wind_drift_examples() {
        let zero = DriftCoefficients {
            a: 0.0,
            b: 0.0,
            l: 0.0,
        };
        assert_eq!(wind_induced_drift(wind(3.0, 4.0), &zero, -60.0).norm(), 0.0);

        let half = DriftCoefficients {
            a: 0.5,
            b: 0.5,
            l: 1.0,
        };
        let south = wind_induced_drift(wind(10.0, 0.0), &half, -70.0);
        assert!((south.east - 5.0).abs() < 1e-12 && (south.north - 5.0).abs() < 1e-12);
        let north = wind_induced_drift(wind(10.0, 0.0), &half, 70.0);
        assert!((north.east - 5.0).abs() < 1e-12 && (north.north + 5.0).abs() < 1e-12);
    }

    #[test]
    fn iceberg_velocity_examples() {
        let c = cfg();
        let pos = GeoPosition::new(-70.0, 10.0).unwrap();

        let env = EnvSample::new(0.0, 0.0, 0.3, -0.1, 1.0).unwrap();
        let v = iceberg_velocity(&env, pos, &c).unwrap();
        assert_eq!((v.east, v.north), (0.3, -0.1));

        let env = EnvSample::new(10.0, 0.0, 0.0, 0.0, 1.0).unwrap();
        let v = iceberg_velocity(&env, pos, &c).unwrap();
        assert!((v.east - 0.18).abs() < 1e-5, "{v:?}");
        assert!((v.north - 0.000439).abs() < 2e-6, "{v:?}");

        let no_wind = PhysicsConfig { gamma: 0.0, ..c };
        let env = EnvSample::new(15.0, -7.0, 0.2, 0.05, 12.0).unwrap();
        let v = iceberg_velocity(&env, pos, &no_wind).unwrap();
        assert_eq!((v.east, v.north), (0.2, 0.05));
    }

    #[test]
    fn physics_step_examples() {
        let c = cfg();
        let pos = GeoPosition::new(-60.0, -45.0).unwrap();
        let still = EnvSample::new(0.0, 0.0, 0.0, 0.0, 50.0).unwrap();
        assert_eq!(physics_step(pos, &still, &c).unwrap(), pos);

        let north = EnvSample::new(0.0, 0.0, 0.0, 1.2884, 50.0).unwrap();
        let next = physics_step(pos, &north, &c).unwrap();
        assert!((next.lat() + 59.0).abs() < 1e-4);
        assert_eq!(next.lon(), -45.0);
    }

    #[test]
    fn residuals_of_self_consistent_track_vanish() {
        let c = cfg();
        let envs: Vec<_> = (0..6)
            .map(|k| EnvSample::new(5.0 + k as f64, -3.0, 0.1, 0.05 * k as f64, 300.0).unwrap())
            .collect();
        let mut track = vec![GeoPosition::new(-62.0, -40.0).unwrap()];
        for env in &envs[1..] {
            let last = *track.last().unwrap();
            track.push(physics_step(last, env, &c).unwrap());
        }
        for (dlat, dlon) in residual_targets(&track, &envs, &c).unwrap() {
            assert!(dlat.abs() < 1e-12 && dlon.abs() < 1e-12);
        }
    }

    #[test]
    fn residuals_of_stationary_track_undo_physics() {
        let c = cfg();
        let pos = GeoPosition::new(-65.0, 20.0).unwrap();
        let env = EnvSample::new(0.0, 0.0, 0.2, -0.1, 100.0).unwrap();
        let moved = physics_step(pos, &env, &c).unwrap();
        let r = residual_targets(&[pos, pos], &[env, env], &c).unwrap();
        assert_eq!(r.len(), 1);
        assert!((r[0].0 + (moved.lat() - pos.lat())).abs() < 1e-12);
        assert!((r[0].1 + (moved.lon() - pos.lon())).abs() < 1e-12);
    }

    #[test]
    fn residuals_need_two_points() {
        let c = cfg();
        let pos = GeoPosition::new(-65.0, 20.0).unwrap();
        let env = EnvSample::new(0.0, 0.0, 0.2, -0.1, 100.0).unwrap();
        assert!(matches!(
            residual_targets(&[pos], &[env], &c),
            Err(Error::LengthMismatch(_))
        ));
        assert!(matches!(
            residual_targets(&[pos, pos], &[env], &c),
            Err(Error::LengthMismatch(_))
        ));
    }

    #[test]
    fn env_sanity_bounds() {
        assert!(EnvSample::new(130.0, 0.0, 0.0, 0.0, 1.0).is_err());
        assert!(EnvSample::new(0.0, 0.0, 11.0, 0.0, 1.0).is_err());
        assert!(matches!(
            EnvSample::new(0.0, 0.0, 0.0, 0.0, 0.0),
            Err(Error::NonPositiveArea(_))
        ));
    }
}
