//! Brackets for the strong critical value and the weak value from a quotient.

use brw::genfun::{lambda_s_bracket, ms_growth_estimate, DEFAULT_TOL};
use brw::graph::{make_family, FamilySpec};
use brw::spectral::mw_of_family;
use brw::Rooted;

fn main() -> brw::Result<()> {
    for spec in [
        FamilySpec::Loops { k: 3 },
        FamilySpec::Lattice { d: 1 },
        FamilySpec::RegularTree { k: 3 },
        FamilySpec::PendantTree3,
    ] {
        let f = make_family(&spec)?;
        let x = Rooted::family_root(&f);
        let n_max = if f.degree_bound() > 3.0 { 24 } else { 30 };
        let b = lambda_s_bracket(&x, n_max, DEFAULT_TOL)?;
        let ms = ms_growth_estimate(&x, n_max)?;
        let mw = mw_of_family(&f)?;
        println!(
            "{:<14} lambda_s in [{:.5}, {:.5}]  ms >= {:.4}  lambda_w = {:.5} ({:?})",
            spec.name(),
            b.lo,
            b.hi,
            ms.last().unwrap_or(0.0),
            mw.lambda_w,
            mw.lambda_w_relation,
        );
    }
    Ok(())
}
