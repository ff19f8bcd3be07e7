//! Survival frequencies of the edge-breeding process on the 3-regular tree.

use std::sync::Arc;

use brw::graph::{make_family, FamilySpec};
use brw::sim::{estimate_survival, Arena, BreedingMode, SimConfig};

fn main() -> brw::Result<()> {
    let tree = make_family(&FamilySpec::RegularTree { k: 3 })?;
    let arena = Arc::new(Arena::from_family(&tree, 10)?);
    for lambda in [0.3, 0.4, 0.5] {
        let cfg = SimConfig::new(arena.clone(), BreedingMode::Edge, lambda)
            .with_horizon(30.0)
            .with_cap(5_000)
            .with_seed(2024);
        let e = estimate_survival(&cfg, 400, None)?;
        println!(
            "lambda={lambda:.2} global={:.3} [{:.3},{:.3}] local={:.3} killed={:.4}",
            e.global.freq, e.global.lo, e.global.hi, e.local.freq, e.killed_fraction
        );
    }
    Ok(())
}
