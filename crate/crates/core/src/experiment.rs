//! Train-and-evaluate runs for the full model, its ablations and the
//! physics-only baseline, all on the same chronological split.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use crate::data::DriftSeries;
use crate::error::{Error, Result};
use crate::exec::{map_items, Execution};
use crate::geo::GeoPosition;
use crate::infer::{physics_rollout, rollout_with_errors, ForecastRun, RolloutPlan};
use crate::metrics::DisplacementReport;
use crate::model::{ModelConfig, Network};
use crate::physics::{EnvSample, PhysicsConfig};
use crate::train::{
    prepare_split, train_model_with, DataSplit, TrainConfig, TrainHistory, WindowSample,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AblationMode {
    Full,
    NoPhysics,
    NoRotate,
    NoGabor,
    PhysicsOnly,
}

impl AblationMode {
    pub const ALL: [AblationMode; 5] = [
        AblationMode::Full,
        AblationMode::NoPhysics,
        AblationMode::NoRotate,
        AblationMode::NoGabor,
        AblationMode::PhysicsOnly,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AblationMode::Full => "full",
            AblationMode::NoPhysics => "no_physics",
            AblationMode::NoRotate => "no_rotate",
            AblationMode::NoGabor => "no_gabor",
            AblationMode::PhysicsOnly => "physics_only",
        }
    }

    /// `base` with this mode's switch turned on.
    pub fn apply(self, base: &ModelConfig) -> ModelConfig {
        let mut cfg = base.clone();
        match self {
            AblationMode::NoPhysics => cfg.ablate_physics = true,
            AblationMode::NoRotate => cfg.ablate_rotate = true,
            AblationMode::NoGabor => cfg.ablate_gabor = true,
            AblationMode::Full | AblationMode::PhysicsOnly => {}
        }
        cfg
    }
}

impl fmt::Display for AblationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AblationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.as_str() == s.trim())
            .ok_or_else(|| {
                Error::InvalidConfig(format!(
                    "unknown mode `{s}`; valid modes: {}",
                    Self::ALL.map(|m| m.as_str()).join(", ")
                ))
            })
    }
}

/// The stretch of consecutive test targets a rollout is scored on.
#[derive(Debug, Clone, PartialEq)]
pub struct TestSegment {
    /// Window index the rollout starts from.
    pub first: usize,
    pub start: GeoPosition,
    pub forcing: Vec<EnvSample>,
    pub truth: Vec<GeoPosition>,
}

/// Targets of the test windows, from the first one up to the first date gap.
pub fn test_segment(windows: &[WindowSample], split: &DataSplit) -> TestSegment {
    let first = split.test.start;
    let head = &windows[first];
    let run = windows[split.test.clone()]
        .iter()
        .enumerate()
        .take_while(|(k, w)| w.start == head.start + k)
        .map(|(_, w)| w)
        .collect::<Vec<_>>();
    TestSegment {
        first,
        start: head.prev,
        forcing: run.iter().map(|w| w.env_next).collect(),
        truth: run.iter().map(|w| w.target).collect(),
    }
}

/// Outcome of one mode.
#[derive(Debug, Clone)]
pub struct ModeResult {
    pub mode: AblationMode,
    pub run: ForecastRun,
    /// Absent for the physics-only baseline, which does not train.
    pub history: Option<TrainHistory>,
}

impl ModeResult {
    pub fn report(&self) -> &DisplacementReport {
        &self.run.report
    }
}

/// Trains (unless physics-only) and rolls out over the test segment.
pub fn run_mode(
    series: &DriftSeries,
    mode: AblationMode,
    model_cfg: &ModelConfig,
    train_cfg: &TrainConfig,
    phys: &PhysicsConfig,
    exec: Execution,
) -> Result<ModeResult> {
    if mode == AblationMode::PhysicsOnly {
        model_cfg.validate()?;
        train_cfg.validate()?;
        let (windows, split, _) = prepare_split(series, model_cfg, train_cfg)?;
        let seg = test_segment(&windows, &split);
        let predictions = physics_rollout(seg.start, &seg.forcing, phys)?;
        let report = DisplacementReport::compute(&predictions, &seg.truth)?;
        return Ok(ModeResult {
            mode,
            run: ForecastRun {
                predictions,
                report,
            },
            history: None,
        });
    }
    let cfg = mode.apply(model_cfg);
    let outcome = train_model_with(series, &cfg, train_cfg, phys, exec, &mut |_| {})?;
    let seg = test_segment(&outcome.windows, &outcome.split);
    let plan = RolloutPlan::new(
        outcome.windows[seg.first].features(&outcome.scaler),
        seg.forcing.clone(),
        seg.start,
        seg.forcing.len(),
    )?;
    let net = Network::new(cfg.clone(), outcome.params)?;
    let run = rollout_with_errors(
        &plan,
        &seg.truth,
        &net,
        cfg.ablate_physics,
        phys,
        &outcome.scaler,
    )?;
    Ok(ModeResult {
        mode,
        run,
        history: Some(outcome.history),
    })
}

/// Runs every requested mode with the same seed and split. Modes are
/// independent and run concurrently under [`Execution::Parallel`].
pub fn run_ablation(
    series: &DriftSeries,
    modes: &[AblationMode],
    model_cfg: &ModelConfig,
    train_cfg: &TrainConfig,
    phys: &PhysicsConfig,
    exec: Execution,
) -> Result<Vec<ModeResult>> {
    map_items(modes, exec, |m| {
        run_mode(series, *m, model_cfg, train_cfg, phys, exec)
    })
    .into_iter()
    .collect()
}

/// `mode,ade_deg,fde_deg,ade_km,fde_km,epochs,best_epoch`; the last two are
/// empty for modes that do not train.
pub fn write_comparison_csv<W: Write>(results: &[ModeResult], mut out: W) -> std::io::Result<()> {
    writeln!(out, "mode,ade_deg,fde_deg,ade_km,fde_km,epochs,best_epoch")?;
    for r in results {
        let rep = r.report();
        let (epochs, best) = match &r.history {
            Some(h) => (h.epochs().to_string(), h.best_epoch.to_string()),
            None => (String::new(), String::new()),
        };
        writeln!(
            out,
            "{},{},{},{},{},{epochs},{best}",
            r.mode, rep.ade_deg, rep.fde_deg, rep.ade_km, rep.fde_km
        )?;
    }
    Ok(())
}
