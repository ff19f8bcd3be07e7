//! Exact walk counts on the integer line and on a small random multigraph.

use brw::graph::{make_family, random::random_multigraph, random::RandomGraphSpec, FamilySpec};
use brw::Rooted;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> brw::Result<()> {
    let z = make_family(&FamilySpec::Lattice { d: 1 })?;
    let root = Rooted::family_root(&z);
    let returns = root.return_counts(20)?;
    let first = root.first_returns(20)?;
    println!("n  gamma_00  phi_00");
    for n in (0..=20).step_by(2) {
        println!("{n:<2} {:<9} {}", returns.render(n), first.render(n));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let g = random_multigraph(&mut rng, RandomGraphSpec { vertices: 5, ..Default::default() })?;
    let x = Rooted::graph(&g, 0)?;
    let table = x.path_counts(8)?;
    println!("\nrandom graph on {} vertices, period {:?}", g.len(), x.period(32)?.value());
    for n in 0..=8 {
        println!("T^{n} = {}", table.totals().render(n));
    }
    Ok(())
}
