//! Geographic primitives: positions, local velocities, Coriolis parameter,
//! velocity-to-degree displacement and great-circle distance.
//!
//! Distances use a spherical Earth (haversine, mean radius 6371.0088 km).
//! Against the WGS84 ellipsoid the error stays below 0.6 %.

use crate::error::{Error, Result};

/// Sidereal rotation rate of the Earth, rad/s.
pub const EARTH_ROTATION_RATE: f64 = 7.2921e-5;
/// IUGG mean Earth radius in kilometres.
pub const EARTH_RADIUS_KM: f64 = 6371.0088;
/// Length of one degree of latitude in metres (local tangent plane).
pub const METERS_PER_DEGREE: f64 = 111_320.0;
/// Latitude band around the poles where longitude displacement is undefined.
pub const POLE_GUARD_DEG: f64 = 89.9;

/// Latitude/longitude pair in degrees.
///
/// Latitude is validated to [-90, 90]; longitude is wrapped into [-180, 180).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeoPosition {
    lat: f64,
    lon: f64,
}

impl GeoPosition {
    pub fn new(lat: f64, lon: f64) -> Result<Self> {
        if !lat.is_finite() || !lon.is_finite() {
            return Err(Error::InvalidCoordinate(format!(
                "non-finite coordinate ({lat}, {lon})"
            )));
        }
        if !(-90.0..=90.0).contains(&lat) {
            return Err(Error::InvalidCoordinate(format!(
                "latitude {lat} outside [-90, 90]"
            )));
        }
        Ok(Self {
            lat,
            lon: wrap_longitude(lon),
        })
    }

    /// Builds a position, clamping latitude into [-90, 90] instead of failing.
    pub fn clamped(lat: f64, lon: f64) -> Result<Self> {
        Self::new(lat.clamp(-90.0, 90.0), lon)
    }

    pub fn lat(&self) -> f64 {
        self.lat
    }

    pub fn lon(&self) -> f64 {
        self.lon
    }
}

/// Wraps a longitude into [-180, 180).
pub fn wrap_longitude(lon: f64) -> f64 {
    if (-180.0..180.0).contains(&lon) {
        return lon;
    }
    let wrapped = (lon + 180.0).rem_euclid(360.0) - 180.0;
    // rem_euclid can round up to exactly 360 for tiny negative inputs.
    if wrapped >= 180.0 {
        wrapped - 360.0
    } else {
        wrapped
    }
}

/// Horizontal velocity in a local east/north frame, m/s.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct VelocityEN {
    pub east: f64,
    pub north: f64,
}

impl VelocityEN {
    pub const ZERO: VelocityEN = VelocityEN {
        east: 0.0,
        north: 0.0,
    };

    pub fn new(east: f64, north: f64) -> Result<Self> {
        if !east.is_finite() || !north.is_finite() {
            return Err(Error::InvalidInput(format!(
                "non-finite velocity ({east}, {north})"
            )));
        }
        Ok(Self { east, north })
    }

    pub fn norm(&self) -> f64 {
        self.east.hypot(self.north)
    }

    /// Counter-clockwise rotation by 90 degrees: (x, y) -> (-y, x).
    pub fn rot90(&self) -> Self {
        Self {
            east: -self.north,
            north: self.east,
        }
    }

    pub fn scale(&self, k: f64) -> Self {
        Self {
            east: self.east * k,
            north: self.north * k,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            east: self.east + other.east,
            north: self.north + other.north,
        }
    }
}

/// Coriolis parameter f = 2Ω sin(lat), 1/s. Negative in the Southern Hemisphere.
pub fn coriolis_parameter(lat_deg: f64) -> f64 {
    coriolis_parameter_with(lat_deg, EARTH_ROTATION_RATE)
}

pub fn coriolis_parameter_with(lat_deg: f64, omega: f64) -> f64 {
    2.0 * omega * lat_deg.to_radians().sin()
}

/// Great-circle distance in kilometres.
pub fn haversine_km(a: GeoPosition, b: GeoPosition) -> f64 {
    let (phi1, phi2) = (a.lat.to_radians(), b.lat.to_radians());
    let dphi = phi2 - phi1;
    let dlambda = (b.lon - a.lon).to_radians();
    let h = (dphi * 0.5).sin().powi(2) + phi1.cos() * phi2.cos() * (dlambda * 0.5).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * h.clamp(0.0, 1.0).sqrt().asin()
}

/// Moves `pos` by `v` over `dt` seconds on the local tangent plane.
///
/// Latitude advances by `north·dt / 111320`; longitude by
/// `east·dt / (111320·cos lat)` evaluated at the starting latitude.
pub fn displace(pos: GeoPosition, v: VelocityEN, dt: f64) -> Result<GeoPosition> {
    if pos.lat.abs() >= POLE_GUARD_DEG {
        return Err(Error::PoleProximity { lat: pos.lat });
    }
    let (dlat, dlon) = displacement_degrees(pos.lat, v, dt);
    let lat = pos.lat + dlat;
    if !(-90.0..=90.0).contains(&lat) {
        return Err(Error::PoleProximity { lat });
    }
    GeoPosition::new(lat, pos.lon + dlon)
}

/// Degree increments (dlat, dlon) for a velocity held for `dt` seconds at `lat`.
pub fn displacement_degrees(lat_deg: f64, v: VelocityEN, dt: f64) -> (f64, f64) {
    let dlat = v.north * dt / METERS_PER_DEGREE;
    let dlon = v.east * dt / (METERS_PER_DEGREE * lat_deg.to_radians().cos());
    (dlat, dlon)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(lat: f64, lon: f64) -> GeoPosition {
        GeoPosition::new(lat, lon).unwrap()
    }

    #[test]
    fn coriolis_spot_values() {
        assert_eq!(coriolis_parameter(0.0), 0.0);
        assert!((coriolis_parameter(90.0) - 1.45842e-4).abs() < 1e-12);
        // 2 * 7.2921e-5 * sin(-70 deg), evaluated independently
        assert!((coriolis_parameter(-70.0) + 1.370467e-4).abs() < 1e-9);
    }

    #[test]
    fn haversine_fixtures() {
        assert_eq!(haversine_km(p(0.0, 0.0), p(0.0, 0.0)), 0.0);
        assert!((haversine_km(p(0.0, 0.0), p(1.0, 0.0)) - 111.195).abs() < 1e-3);
        assert!((haversine_km(p(0.0, 0.0), p(0.0, 180.0)) - 20015.1).abs() < 0.1);
    }

    #[test]
    fn longitude_is_wrapped() {
        assert_eq!(p(0.0, 180.0).lon(), -180.0);
        assert_eq!(p(0.0, 190.0).lon(), -170.0);
        assert_eq!(p(0.0, -190.0).lon(), 170.0);
        assert_eq!(p(0.0, 359.0).lon(), -1.0);
        assert!(GeoPosition::new(91.0, 0.0).is_err());
        assert!(GeoPosition::new(f64::NAN, 0.0).is_err());
    }

    #[test]
    fn displace_examples() {
        let start = p(12.5, 40.0);
        assert_eq!(displace(start, VelocityEN::ZERO, 86400.0).unwrap(), start);

        let north = displace(p(0.0, 0.0), VelocityEN::new(0.0, 1.2884).unwrap(), 86400.0).unwrap();
        assert!((north.lat() - 1.0).abs() < 1e-4);

        let east = displace(p(-60.0, 0.0), VelocityEN::new(1.0, 0.0).unwrap(), 86400.0).unwrap();
        assert!((east.lon() - 1.5523).abs() < 1e-4);
        assert_eq!(east.lat(), -60.0);
    }

    #[test]
    fn displace_rejects_poles() {
        let err = displace(p(89.95, 0.0), VelocityEN::ZERO, 1.0).unwrap_err();
        assert!(matches!(err, Error::PoleProximity { .. }));
        let err = displace(p(-89.9, 0.0), VelocityEN::ZERO, 1.0).unwrap_err();
        assert!(matches!(err, Error::PoleProximity { .. }));
    }

    #[test]
    fn rot90_turns_east_into_north() {
        let r = VelocityEN::new(1.0, 0.0).unwrap().rot90();
        assert_eq!((r.east, r.north), (-0.0, 1.0));
    }
}
