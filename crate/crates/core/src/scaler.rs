//! Per-feature MinMax scaling into [0, 1].

use crate::error::{Error, Result};

/// Feature order shared by the scaler, feature windows and merged datasets.
pub const FEATURE_NAMES: [&str; 7] = ["lat", "lon", "area", "u10", "v10", "uo", "vo"];
pub const N_FEATURES: usize = 7;

pub const LAT: usize = 0;
pub const LON: usize = 1;
pub const AREA: usize = 2;
pub const U10: usize = 3;
pub const V10: usize = 4;
pub const UO: usize = 5;
pub const VO: usize = 6;

/// Affine map of each feature onto [0, 1] using the training-split extremes.
///
/// Later data may fall outside [0, 1]; that is allowed. A constant feature
/// (max = min) maps to 0.5 and inverts back to its single value.
#[derive(Debug, Clone, PartialEq)]
pub struct MinMaxScaler {
    min: [f64; N_FEATURES],
    max: [f64; N_FEATURES],
}

impl MinMaxScaler {
    pub fn fit<'a, I>(rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a [f64; N_FEATURES]>,
    {
        let mut min = [f64::INFINITY; N_FEATURES];
        let mut max = [f64::NEG_INFINITY; N_FEATURES];
        let mut seen = false;
        for row in rows {
            seen = true;
            for k in 0..N_FEATURES {
                min[k] = min[k].min(row[k]);
                max[k] = max[k].max(row[k]);
            }
        }
        if !seen {
            return Err(Error::EmptyDataset);
        }
        Self::from_bounds(min, max)
    }

    pub fn from_bounds(min: [f64; N_FEATURES], max: [f64; N_FEATURES]) -> Result<Self> {
        for k in 0..N_FEATURES {
            if !(min[k].is_finite() && max[k].is_finite() && max[k] >= min[k]) {
                return Err(Error::InvalidInput(format!(
                    "scaler bounds for `{}` are invalid: [{}, {}]",
                    FEATURE_NAMES[k], min[k], max[k]
                )));
            }
        }
        Ok(Self { min, max })
    }

    pub fn min(&self) -> &[f64; N_FEATURES] {
        &self.min
    }

    pub fn max(&self) -> &[f64; N_FEATURES] {
        &self.max
    }

    #[inline]
    pub fn transform_value(&self, feature: usize, x: f64) -> f64 {
        let range = self.max[feature] - self.min[feature];
        if range > 0.0 {
            (x - self.min[feature]) / range
        } else {
            0.5
        }
    }

    #[inline]
    pub fn inverse_value(&self, feature: usize, z: f64) -> f64 {
        let range = self.max[feature] - self.min[feature];
        if range > 0.0 {
            z * range + self.min[feature]
        } else {
            self.min[feature]
        }
    }

    pub fn transform(&self, row: &[f64; N_FEATURES]) -> [f64; N_FEATURES] {
        std::array::from_fn(|k| self.transform_value(k, row[k]))
    }

    pub fn inverse(&self, row: &[f64; N_FEATURES]) -> [f64; N_FEATURES] {
        std::array::from_fn(|k| self.inverse_value(k, row[k]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(values: &[[f64; N_FEATURES]]) -> MinMaxScaler {
        MinMaxScaler::fit(values.iter()).unwrap()
    }

    #[test]
    fn midpoint_maps_to_half() {
        let s = rows(&[[2.0; N_FEATURES], [4.0; N_FEATURES]]);
        assert_eq!(s.transform_value(LAT, 3.0), 0.5);
        assert_eq!(s.transform_value(VO, 2.0), 0.0);
        assert_eq!(s.transform_value(VO, 4.0), 1.0);
    }

    #[test]
    fn constant_feature_maps_to_half() {
        let s = rows(&[[7.0; N_FEATURES], [7.0; N_FEATURES]]);
        assert_eq!(s.transform_value(AREA, 7.0), 0.5);
        assert_eq!(s.transform_value(AREA, -100.0), 0.5);
        assert_eq!(s.inverse_value(AREA, 0.5), 7.0);
    }

    #[test]
    fn out_of_range_is_permitted() {
        let s = rows(&[[0.0; N_FEATURES], [1.0; N_FEATURES]]);
        assert_eq!(s.transform_value(LON, 2.0), 2.0);
        assert_eq!(s.transform_value(LON, -1.0), -1.0);
    }

    #[test]
    fn empty_fit_fails() {
        let none: [[f64; N_FEATURES]; 0] = [];
        assert!(matches!(
            MinMaxScaler::fit(none.iter()),
            Err(Error::EmptyDataset)
        ));
    }
}
