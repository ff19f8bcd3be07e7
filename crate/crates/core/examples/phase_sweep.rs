//! A coarse lambda sweep on Z, written as CSV.

use std::sync::Arc;

use brw::graph::{make_family, FamilySpec};
use brw::sim::{sweep_lambda, Arena, BreedingMode, SimConfig};

fn main() -> brw::Result<()> {
    let z = make_family(&FamilySpec::Lattice { d: 1 })?;
    let template = SimConfig::new(Arc::new(Arena::from_family(&z, 40)?), BreedingMode::Edge, 0.0)
        .with_horizon(40.0)
        .with_cap(5_000)
        .with_seed(99);
    let grid: Vec<f64> = (0..6).map(|i| 0.4 + 0.05 * i as f64).collect();
    println!("lambda,global_freq,local_freq");
    for row in sweep_lambda(&template, &grid, 300, Some(20.0))? {
        println!("{:.2},{:.4},{:.4}", row.lambda, row.global.freq, row.local.freq);
    }
    Ok(())
}
