//! Spectral classification: ball norms against the Perron root of a quotient.

use brw::graph::{make_family, FamilySpec};
use brw::quotient::certify_known_quotient;
use brw::spectral::{classify, DEFAULT_MARGIN};

fn main() -> brw::Result<()> {
    for spec in [FamilySpec::Lattice { d: 1 }, FamilySpec::RegularTree { k: 3 }, FamilySpec::Bridge { k: 3 }] {
        let mut f = make_family(&spec)?;
        if f.known_quotient().is_some() {
            certify_known_quotient(&mut f, 6)?;
        }
        let r = classify(&f, 18, DEFAULT_MARGIN)?;
        println!(
            "{:<13} mw={:.4} ms={:.4} gap={:.4} {:?}",
            spec.name(),
            r.mw.value,
            r.ms_final,
            r.gap,
            r.verdict
        );
    }
    Ok(())
}
