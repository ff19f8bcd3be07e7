//! Project a simulated trajectory on the pendant tree onto its quotient.

use std::sync::Arc;

use brw::graph::{make_family, FamilySpec};
use brw::quotient::certify_known_quotient;
use brw::sim::{project, run_trial, Arena, BreedingMode, SimConfig};

fn main() -> brw::Result<()> {
    let mut f = make_family(&FamilySpec::PendantTree3)?;
    certify_known_quotient(&mut f, 6)?;
    let map = f.known_quotient().expect("family ships a quotient");

    let arena = Arc::new(Arena::from_family(&f, 8)?);
    let mut cfg = SimConfig::new(arena.clone(), BreedingMode::Edge, 0.45).with_horizon(6.0).with_seed(5);
    cfg.record_sites = true;
    // first trial still alive at the horizon
    let out = (0..)
        .map(|i| run_trial(&cfg, i))
        .find(|o| o.as_ref().map_or(true, |o| o.status.survived()))
        .unwrap()?;
    let p = project(&out, &arena, map)?;
    println!("t     class0 class1 total");
    for (t, row) in p.sample_times.iter().zip(&p.counts) {
        println!("{t:<5} {:<6} {:<6} {}", row[0], row[1], row.iter().sum::<u64>());
    }
    Ok(())
}
