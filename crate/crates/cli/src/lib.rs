//! Command-line front end: ingest, train, forecast, evaluate and ablate.

pub mod config;
mod error;

pub use error::CliError;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};
use idriftnet_core::data::{self, load_merged_csv, parse_date, DriftSeries};
use idriftnet_core::exec::Execution;
use idriftnet_core::experiment::{run_ablation, write_comparison_csv, AblationMode};
use idriftnet_core::geo::GeoPosition;
use idriftnet_core::infer::{rollout, RolloutPlan};
use idriftnet_core::metrics::DisplacementReport;
use idriftnet_core::model::{
    feature_row, load_parameters, save_parameters, Checkpoint, FeatureWindow, Network,
};
use idriftnet_core::scaler::N_FEATURES;
use idriftnet_core::synthetic::{generate, SyntheticConfig};
use idriftnet_core::train::train_model_with;
use idriftnet_core::Error as CoreError;

use config::{config_help, RunConfig};

pub const CHECKPOINT_FILE: &str = "model.ckpt";
pub const HISTORY_FILE: &str = "history.csv";
pub const RESOLVED_CONFIG_FILE: &str = "config.toml";
pub const COMPARISON_FILE: &str = "comparison.csv";

#[derive(Debug, Parser)]
#[command(
    name = "idriftnet",
    version,
    about = "Hybrid physics and spectral-network iceberg drift forecasting"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Merge a position CSV with forcing CSVs into one daily table
    Ingest(IngestArgs),
    /// Train a model on a merged CSV
    Train(TrainArgs),
    /// Roll a trained model forward over the trailing forcing rows
    Forecast(ForecastArgs),
    /// Score a predicted trajectory against the truth
    Evaluate(EvaluateArgs),
    /// Train and score ablated variants on a shared split
    Ablate(AblateArgs),
    /// Write a physics-generated track with a known bias as a merged CSV
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Iceberg positions: date, lat, lon and optionally area
    #[arg(long)]
    pub positions: PathBuf,
    /// Forcing files with any of area, u10, v10, uo, vo (repeatable)
    #[arg(long = "env", required = true)]
    pub env: Vec<PathBuf>,
    /// Merged CSV to write; provenance goes to `<stem>.provenance.csv` beside it
    #[arg(long)]
    pub out: PathBuf,
    /// Leave out days whose position was interpolated rather than observed
    #[arg(long)]
    pub drop_filled_positions: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Merged CSV
    #[arg(long)]
    pub data: PathBuf,
    /// Configuration file; defaults apply when omitted
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory for the checkpoint, history and resolved config
    #[arg(long)]
    pub out: PathBuf,
    /// Run on the calling thread only
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Debug, Args)]
pub struct ForecastArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Merged CSV whose last `horizon` rows supply the forcing
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub horizon: usize,
    /// Trajectory CSV to write: step,date,lat,lon
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Predicted trajectory (lat, lon, optional date)
    #[arg(long)]
    pub pred: PathBuf,
    /// True trajectory; when both files carry dates, rows are matched by date
    #[arg(long)]
    pub truth: PathBuf,
    /// Per-step CSV to write; the summary goes to `<stem>.summary.csv`
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Comma-separated modes: full, no_physics, no_rotate, no_gabor, physics_only
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "full,no_physics,no_rotate,no_gabor,physics_only"
    )]
    pub modes: Vec<String>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 200)]
    pub steps: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Speed of the unmodelled rotating current, m/s
    #[arg(long, default_value_t = 0.05)]
    pub bias_speed: f64,
    /// Observation noise, degrees
    #[arg(long, default_value_t = 0.002)]
    pub noise_deg: f64,
}

/// Parses arguments, attaching the configuration key listing to `--help`.
pub fn parse_args<I, T>(args: I) -> Result<Cli, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let help = config_help();
    let cmd = Cli::command()
        .after_help(help.clone())
        .mut_subcommand("train", |c| c.after_help(help.clone()))
        .mut_subcommand("ablate", |c| c.after_help(help.clone()));
    let matches = cmd.try_get_matches_from(args)?;
    Cli::from_arg_matches(&matches)
}

/// Runs a parsed command, writing progress lines to `log`.
pub fn run(cli: Cli, log: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Ingest(a) => ingest(&a, log),
        Command::Train(a) => train(&a, log),
        Command::Forecast(a) => forecast(&a, log),
        Command::Evaluate(a) => evaluate(&a, log),
        Command::Ablate(a) => ablate(&a, log),
        Command::Synth(a) => synth(&a, log),
    }
}

fn say(log: &mut dyn Write, line: impl AsRef<str>) {
    // Progress output is best effort; a closed pipe must not fail the run.
    let _ = writeln!(log, "{}", line.as_ref());
}

fn create(path: &Path) -> Result<std::io::BufWriter<fs::File>, CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    fs::File::create(path)
        .map(std::io::BufWriter::new)
        .map_err(|e| CliError::io(path, e))
}

fn finish(mut w: std::io::BufWriter<fs::File>, path: &Path) -> Result<(), CliError> {
    w.flush().map_err(|e| CliError::io(path, e))
}

/// `dir/stem.suffix.csv` next to `path`.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    path.with_file_name(format!("{stem}.{suffix}.csv"))
}

fn ingest(a: &IngestArgs, log: &mut dyn Write) -> Result<(), CliError> {
    let positions = data::load_position_csv(&a.positions)?;
    let env = a
        .env
        .iter()
        .map(data::load_env_csv)
        .collect::<Result<Vec<_>, _>>()?;
    let mut merged = data::merge_on_date(&positions.records, &env)?;
    let total = merged.len();
    if a.drop_filled_positions {
        merged = merged.without_filled_positions();
    }
    let mut w = create(&a.out)?;
    merged.write_csv(&mut w)?;
    finish(w, &a.out)?;
    let prov_path = sibling(&a.out, "provenance");
    let mut w = create(&prov_path)?;
    merged.write_provenance_csv(&mut w)?;
    finish(w, &prov_path)?;

    let per_field: Vec<String> = idriftnet_core::scaler::FEATURE_NAMES
        .iter()
        .enumerate()
        .map(|(k, name)| {
            let n = merged
                .flags
                .iter()
                .filter(|f| f[k] == data::CellFlag::Filled)
                .count();
            format!("{name}={n}")
        })
        .collect();
    say(
        log,
        format!(
            "rows={} dropped_filled_positions={} duplicate_position_dates={} filled_cells={} ({})",
            merged.len(),
            total - merged.len(),
            positions.duplicate_dates,
            merged.filled_count(),
            per_field.join(" ")
        ),
    );
    Ok(())
}

fn execution(sequential: bool) -> Execution {
    if sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    }
}

fn write_resolved(dir: &Path, cfg: &RunConfig) -> Result<(), CliError> {
    let path = dir.join(RESOLVED_CONFIG_FILE);
    fs::write(&path, cfg.to_toml()).map_err(|e| CliError::io(&path, e))
}

fn train(a: &TrainArgs, log: &mut dyn Write) -> Result<(), CliError> {
    let cfg = RunConfig::load(a.config.as_deref())?;
    let series = load_merged_csv(&a.data)?;
    fs::create_dir_all(&a.out).map_err(|e| CliError::io(&a.out, e))?;
    write_resolved(&a.out, &cfg)?;
    let outcome = train_model_with(
        &series,
        &cfg.model,
        &cfg.train,
        &cfg.physics,
        execution(a.sequential),
        &mut |r| say(log, r.to_string()),
    )?;
    let history_path = a.out.join(HISTORY_FILE);
    let mut w = create(&history_path)?;
    outcome
        .history
        .write_csv(&mut w)
        .map_err(|e| CliError::io(&history_path, e))?;
    finish(w, &history_path)?;
    let checkpoint = Checkpoint {
        model: cfg.model.clone(),
        physics: cfg.physics,
        scaler: outcome.scaler,
        params: outcome.params,
    };
    save_parameters(a.out.join(CHECKPOINT_FILE), &checkpoint)?;
    say(
        log,
        format!(
            "epochs={} best_epoch={} best_val_mse={} wall_time_s={:.1}",
            outcome.history.epochs(),
            outcome.history.best_epoch,
            outcome.history.best_val_mse(),
            outcome.history.wall_time.as_secs_f64()
        ),
    );
    Ok(())
}

/// Positions predicted for the last `horizon` rows of `series`, starting
/// from the window just before them.
pub fn forecast_series(
    ckpt: &Checkpoint,
    series: &DriftSeries,
    horizon: usize,
) -> Result<Vec<GeoPosition>, CliError> {
    let window = ckpt.model.window;
    if horizon == 0 || series.len() < window + horizon {
        return Err(CoreError::HorizonMismatch(format!(
            "horizon {horizon} with a {window}-step window needs at least {} rows, the data has {}",
            window + horizon,
            series.len()
        ))
        .into());
    }
    let first = series.len() - horizon - window;
    if !series.is_contiguous(first, series.len() - 1) {
        return Err(CoreError::InvalidInput(
            "the window and forecast rows must be consecutive days".into(),
        )
        .into());
    }
    let mut rows = Vec::with_capacity(window * N_FEATURES);
    for t in first..first + window {
        rows.extend(feature_row(
            series.positions()[t],
            &series.env()[t],
            &ckpt.scaler,
        ));
    }
    let plan = RolloutPlan::new(
        FeatureWindow::from_vec(window, N_FEATURES, rows)?,
        series.env()[series.len() - horizon..].to_vec(),
        series.positions()[first + window - 1],
        horizon,
    )?;
    let net = Network::new(ckpt.model.clone(), ckpt.params.clone())?;
    Ok(rollout(
        &plan,
        &net,
        ckpt.model.ablate_physics,
        &ckpt.physics,
        &ckpt.scaler,
    )?)
}

fn forecast(a: &ForecastArgs, log: &mut dyn Write) -> Result<(), CliError> {
    let ckpt = load_parameters(&a.checkpoint)?;
    let series = load_merged_csv(&a.data)?;
    let predicted = forecast_series(&ckpt, &series, a.horizon)?;
    let dates = &series.dates()[series.len() - a.horizon..];
    let mut w = create(&a.out)?;
    let io = |e| CliError::io(&a.out, e);
    writeln!(w, "step,date,lat,lon").map_err(io)?;
    for (k, (d, p)) in dates.iter().zip(&predicted).enumerate() {
        writeln!(
            w,
            "{},{},{},{}",
            k + 1,
            d.format("%Y-%m-%d"),
            p.lat(),
            p.lon()
        )
        .map_err(io)?;
    }
    finish(w, &a.out)?;
    say(log, format!("forecast_steps={}", predicted.len()));
    Ok(())
}

/// A trajectory file: `lat`/`latitude`, `lon`/`long`/`longitude` and an
/// optional date column.
pub fn read_track(
    path: &Path,
) -> Result<(Option<Vec<chrono::NaiveDate>>, Vec<GeoPosition>), CliError> {
    let file = fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut rdr = csv::Reader::from_reader(file);
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| CliError::Core(CoreError::InvalidInput(format!("{}: {e}", path.display()))))?
        .iter()
        .map(|h| h.trim().to_ascii_lowercase())
        .collect();
    let find = |names: &[&str]| headers.iter().position(|h| names.contains(&h.as_str()));
    let missing = |column: &str| {
        CliError::Core(CoreError::MissingColumn {
            path: path.to_path_buf(),
            column: column.into(),
        })
    };
    let lat_col = find(&["lat", "latitude"]).ok_or_else(|| missing("lat"))?;
    let lon_col = find(&["lon", "long", "longitude"]).ok_or_else(|| missing("lon"))?;
    let date_col = find(&["date"]);
    let mut dates = Vec::new();
    let mut track = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            CliError::Core(CoreError::InvalidInput(format!("{}: {e}", path.display())))
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let fail = |column: &str, content: &str, message: &str| {
            CliError::Core(CoreError::ParseFailure {
                path: path.to_path_buf(),
                line,
                column: column.into(),
                content: content.into(),
                message: message.into(),
            })
        };
        let num = |c: usize, name: &str| {
            let s = rec.get(c).unwrap_or("").trim();
            s.parse::<f64>()
                .map_err(|_| fail(name, s, "expected a number"))
        };
        track.push(GeoPosition::new(
            num(lat_col, "lat")?,
            num(lon_col, "lon")?,
        )?);
        if let Some(c) = date_col {
            let s = rec.get(c).unwrap_or("").trim();
            dates.push(parse_date(s).ok_or_else(|| fail("date", s, "expected YYYY-MM-DD"))?);
        }
    }
    Ok((date_col.map(|_| dates), track))
}

fn evaluate(a: &EvaluateArgs, log: &mut dyn Write) -> Result<(), CliError> {
    let (pred_dates, pred) = read_track(&a.pred)?;
    let (truth_dates, truth) = read_track(&a.truth)?;
    let truth = match (pred_dates, truth_dates) {
        (Some(pd), Some(td)) => pd
            .iter()
            .map(|d| {
                td.binary_search(d).map(|k| truth[k]).map_err(|_| {
                    CliError::Core(CoreError::LengthMismatch(format!(
                        "truth has no row for predicted date {d}"
                    )))
                })
            })
            .collect::<Result<Vec<_>, _>>()?,
        _ => truth,
    };
    let report = DisplacementReport::compute(&pred, &truth)?;
    let mut w = create(&a.out)?;
    report
        .write_steps_csv(&mut w)
        .map_err(|e| CliError::io(&a.out, e))?;
    finish(w, &a.out)?;
    let summary_path = sibling(&a.out, "summary");
    let mut w = create(&summary_path)?;
    report
        .write_summary_csv(&mut w)
        .map_err(|e| CliError::io(&summary_path, e))?;
    finish(w, &summary_path)?;
    say(
        log,
        format!(
            "ade_deg={} fde_deg={} ade_km={} fde_km={}",
            report.ade_deg, report.fde_deg, report.ade_km, report.fde_km
        ),
    );
    Ok(())
}

fn ablate(a: &AblateArgs, log: &mut dyn Write) -> Result<(), CliError> {
    let modes = a
        .modes
        .iter()
        .map(|m| m.parse::<AblationMode>().map_err(CliError::from))
        .collect::<Result<Vec<_>, _>>()?;
    let cfg = RunConfig::load(a.config.as_deref())?;
    let series = load_merged_csv(&a.data)?;
    fs::create_dir_all(&a.out).map_err(|e| CliError::io(&a.out, e))?;
    write_resolved(&a.out, &cfg)?;
    let results = run_ablation(
        &series,
        &modes,
        &cfg.model,
        &cfg.train,
        &cfg.physics,
        execution(a.sequential),
    )?;
    for r in &results {
        let dir = a.out.join(r.mode.as_str());
        fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
        if let Some(h) = &r.history {
            let path = dir.join(HISTORY_FILE);
            let mut w = create(&path)?;
            h.write_csv(&mut w).map_err(|e| CliError::io(&path, e))?;
            finish(w, &path)?;
        }
        let path = dir.join("errors.csv");
        let mut w = create(&path)?;
        r.report()
            .write_steps_csv(&mut w)
            .map_err(|e| CliError::io(&path, e))?;
        finish(w, &path)?;
        say(
            log,
            format!(
                "mode={} ade_km={} fde_km={}",
                r.mode,
                r.report().ade_km,
                r.report().fde_km
            ),
        );
    }
    let path = a.out.join(COMPARISON_FILE);
    let mut w = create(&path)?;
    write_comparison_csv(&results, &mut w).map_err(|e| CliError::io(&path, e))?;
    finish(w, &path)
}

fn synth(a: &SynthArgs, log: &mut dyn Write) -> Result<(), CliError> {
    let cfg = SyntheticConfig {
        steps: a.steps,
        seed: a.seed,
        bias_speed: a.bias_speed,
        noise_deg: a.noise_deg,
        ..SyntheticConfig::default()
    };
    let track = generate(&cfg, &Default::default())?;
    let mut w = create(&a.out)?;
    track.series.write_csv(&mut w)?;
    finish(w, &a.out)?;
    say(log, format!("rows={}", track.series.len()));
    Ok(())
}
