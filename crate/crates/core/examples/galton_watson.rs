//! Extinction probability of a Galton-Watson process, exact and simulated.

use brw::branching::{
    extinction_iterates, powerhouse_bound, simulate_gw, smallest_fixed_point, OffspringLaw, DEFAULT_FIXED_POINT_TOL,
    DEFAULT_GW_THRESHOLD,
};

fn main() -> brw::Result<()> {
    let law = OffspringLaw::finite(vec![0.25, 0.0, 0.75])?;
    let fp = smallest_fixed_point(&law, DEFAULT_FIXED_POINT_TOL)?;
    println!("mean {:.3}, delta {:.12} after {} iterations", fp.mean, fp.delta, fp.iterations);
    println!("P(extinct by n): {:?}", &extinction_iterates(&law, 6)[1..]);

    let sim = simulate_gw(&law, 40, 20_000, 7, DEFAULT_GW_THRESHOLD)?;
    let p = sim.extinct_by[40];
    println!("simulated: {p:.4} +- {:.4}", sim.standard_error(p));

    let laws = [law, OffspringLaw::parse("0.1,0.3,0.6")?];
    println!("{}", serde_json::to_string_pretty(&powerhouse_bound(&laws)?).unwrap());
    Ok(())
}
