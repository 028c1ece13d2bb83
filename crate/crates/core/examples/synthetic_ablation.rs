//! Trains every ablation mode on the default synthetic track and prints the
//! comparison table.
//!
//! `cargo run --release --example synthetic_ablation [modes]`

use std::time::Instant;

use idriftnet_core::exec::Execution;
use idriftnet_core::experiment::{run_ablation, write_comparison_csv, AblationMode};
use idriftnet_core::model::ModelConfig;
use idriftnet_core::physics::PhysicsConfig;
use idriftnet_core::synthetic::{generate, SyntheticConfig};
use idriftnet_core::train::TrainConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let modes = match std::env::args().nth(1) {
        Some(list) => list
            .split(',')
            .map(str::parse)
            .collect::<Result<Vec<AblationMode>, _>>()?,
        None => AblationMode::ALL.to_vec(),
    };
    let phys = PhysicsConfig::default();
    let track = generate(&SyntheticConfig::default(), &phys)?;
    let started = Instant::now();
    let results = run_ablation(
        &track.series,
        &modes,
        &ModelConfig::default(),
        &TrainConfig::default(),
        &phys,
        Execution::Parallel,
    )?;
    write_comparison_csv(&results, std::io::stdout())?;
    eprintln!("elapsed: {:.1?}", started.elapsed());
    Ok(())
}
