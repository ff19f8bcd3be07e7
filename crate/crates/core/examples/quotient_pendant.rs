//! Certify the two-vertex quotient of the pendant tree and compare walk totals.

use brw::graph::{make_family, FamilySpec};
use brw::quotient::{build_quotient, certify_known_quotient, refine_partition};
use brw::Rooted;

fn main() -> brw::Result<()> {
    let mut f = make_family(&FamilySpec::PendantTree3)?;
    let report = certify_known_quotient(&mut f, 6)?;
    let map = f.known_quotient().expect("family ships a quotient");
    println!("verified: {} at radius {}", report.passed, report.radius);
    println!("matrix: {:?}", map.matrix());

    let y_root = map.class_of(&f.root())?;
    let tx = Rooted::family_root(&f).walk_totals(10)?;
    let ty = Rooted::graph(map.codomain(), y_root)?.walk_totals(10)?;
    for n in 0..=10 {
        println!("n={n:<2} X: {:<8} Y: {}", tx.render(n), ty.render(n));
    }

    // color refinement on a finite ball recovers the same classes in the interior
    let ball = f.ball(&f.root(), 4)?;
    let p = refine_partition(ball.graph(), None);
    let (q, _) = build_quotient(ball.graph(), &p)?;
    println!("ball of radius 4: {} vertices, {} refinement classes, quotient size {}", ball.len(), p.len(), q.len());
    Ok(())
}
