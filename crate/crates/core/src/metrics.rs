//! Average and final displacement errors, in planar degrees and in
//! great-circle kilometres.

use std::io::Write;

use crate::error::{Error, Result};
use crate::geo::{haversine_km, GeoPosition};

fn check(pred: &[GeoPosition], truth: &[GeoPosition]) -> Result<()> {
    if pred.len() != truth.len() {
        return Err(Error::LengthMismatch(format!(
            "{} predicted points vs {} true points",
            pred.len(),
            truth.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::EmptySequence);
    }
    Ok(())
}

/// Planar distance in degree space. No longitude wraparound.
#[inline]
pub fn euclidean_deg(a: GeoPosition, b: GeoPosition) -> f64 {
    (a.lat() - b.lat()).hypot(a.lon() - b.lon())
}

pub fn per_step_euclidean(pred: &[GeoPosition], truth: &[GeoPosition]) -> Result<Vec<f64>> {
    check(pred, truth)?;
    Ok(pred
        .iter()
        .zip(truth)
        .map(|(p, t)| euclidean_deg(*p, *t))
        .collect())
}

pub fn per_step_geodesic(pred: &[GeoPosition], truth: &[GeoPosition]) -> Result<Vec<f64>> {
    check(pred, truth)?;
    Ok(pred
        .iter()
        .zip(truth)
        .map(|(p, t)| haversine_km(*p, *t))
        .collect())
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn ade_euclidean(pred: &[GeoPosition], truth: &[GeoPosition]) -> Result<f64> {
    Ok(mean(&per_step_euclidean(pred, truth)?))
}

pub fn fde_euclidean(pred: &[GeoPosition], truth: &[GeoPosition]) -> Result<f64> {
    check(pred, truth)?;
    Ok(euclidean_deg(pred[pred.len() - 1], truth[truth.len() - 1]))
}

pub fn ade_geodesic(pred: &[GeoPosition], truth: &[GeoPosition]) -> Result<f64> {
    Ok(mean(&per_step_geodesic(pred, truth)?))
}

pub fn fde_geodesic(pred: &[GeoPosition], truth: &[GeoPosition]) -> Result<f64> {
    check(pred, truth)?;
    Ok(haversine_km(pred[pred.len() - 1], truth[truth.len() - 1]))
}

/// Both error families for one predicted trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct DisplacementReport {
    pub ade_deg: f64,
    pub fde_deg: f64,
    pub ade_km: f64,
    pub fde_km: f64,
    pub per_step_deg: Vec<f64>,
    pub per_step_km: Vec<f64>,
}

impl DisplacementReport {
    pub fn compute(pred: &[GeoPosition], truth: &[GeoPosition]) -> Result<Self> {
        let per_step_deg = per_step_euclidean(pred, truth)?;
        let per_step_km = per_step_geodesic(pred, truth)?;
        Ok(Self {
            ade_deg: mean(&per_step_deg),
            fde_deg: per_step_deg[per_step_deg.len() - 1],
            ade_km: mean(&per_step_km),
            fde_km: per_step_km[per_step_km.len() - 1],
            per_step_deg,
            per_step_km,
        })
    }

    /// `step,err_deg,err_km`, steps numbered from 1.
    pub fn write_steps_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "step,err_deg,err_km")?;
        for (k, (d, km)) in self.per_step_deg.iter().zip(&self.per_step_km).enumerate() {
            writeln!(out, "{},{d},{km}", k + 1)?;
        }
        Ok(())
    }

    /// `ade_deg,fde_deg,ade_km,fde_km` header plus one value line.
    pub fn write_summary_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "ade_deg,fde_deg,ade_km,fde_km")?;
        writeln!(
            out,
            "{},{},{},{}",
            self.ade_deg, self.fde_deg, self.ade_km, self.fde_km
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(lat: f64, lon: f64) -> GeoPosition {
        GeoPosition::new(lat, lon).unwrap()
    }

    #[test]
    fn three_four_five() {
        assert_eq!(ade_euclidean(&[p(3.0, 4.0)], &[p(0.0, 0.0)]).unwrap(), 5.0);
    }

    #[test]
    fn final_offset_in_degrees() {
        let pred = [p(1.0, 1.0), p(-60.0, 10.64)];
        let truth = [p(0.0, 0.0), p(-60.0, 10.0)];
        assert!((fde_euclidean(&pred, &truth).unwrap() - 0.64).abs() < 1e-12);
    }

    #[test]
    fn one_degree_of_latitude_everywhere() {
        let truth = vec![p(0.0, 0.0); 4];
        let pred = vec![p(1.0, 0.0); 4];
        let r = DisplacementReport::compute(&pred, &truth).unwrap();
        assert!((r.ade_km - 111.195).abs() < 1e-3);
        assert_eq!(r.ade_km, r.fde_km);
    }

    #[test]
    fn identical_tracks_report_zero() {
        let t = [p(-60.0, -45.0), p(-60.1, -45.3)];
        let r = DisplacementReport::compute(&t, &t).unwrap();
        assert_eq!([r.ade_deg, r.fde_deg, r.ade_km, r.fde_km], [0.0; 4]);
    }

    #[test]
    fn errors() {
        assert!(matches!(ade_geodesic(&[], &[]), Err(Error::EmptySequence)));
        assert!(matches!(
            fde_geodesic(&[p(0.0, 0.0)], &[]),
            Err(Error::LengthMismatch(_))
        ));
    }

    #[test]
    fn csv_layout() {
        let r = DisplacementReport::compute(&[p(3.0, 4.0)], &[p(0.0, 0.0)]).unwrap();
        let mut steps = Vec::new();
        r.write_steps_csv(&mut steps).unwrap();
        let text = String::from_utf8(steps).unwrap();
        assert!(text.starts_with("step,err_deg,err_km\n1,5,"));
        let mut summary = Vec::new();
        r.write_summary_csv(&mut summary).unwrap();
        assert!(String::from_utf8(summary)
            .unwrap()
            .starts_with("ade_deg,fde_deg,ade_km,fde_km\n5,5,"));
    }
}
