//! Propagation of singularities: a cone midway between the stable and
//! unstable covector directions, controlled by its trajectory and image.

use anosov_lab::lp_calculus::{ConeSymbol, Grid2Field, RadialProfile};
use anosov_lab::source_lab::*;
use anosov_lab::systems::{cat_map_system, suspension_flow, SystemRef, CAT};

fn main() -> anosov_lab::Result<()> {
    let flow = suspension_flow(&cat_map_system(CAT)?, &Grid2Field::constant(16, 1.0)?)?;
    let sys = SystemRef::Flow(&flow);
    let cs = Section::of(sys)?.cov_s;
    let mid = [cs[0] - cs[1], cs[1] + cs[0]];
    let a = ConeSymbol::cone(&mid, 0.2, 0.25, RadialProfile::annulus(30.0, 40.0, 80.0, 100.0)?)?;
    let fam = FamilySpec { n: 128, samples: 10, seed: 5, kind: FamilyKind::Smooth { max_mode: 40, decay: 1.5 } };
    for t in [1.0, 2.0, 3.0] {
        let d = pushforward_cover(sys, &a, t)?;
        let b = trajectory_cover(sys, &a, t)?;
        let r = propagation_sweep(sys, &a, &b, &d, 0.5, 4.0, t, &fam, None)?;
        println!("T = {t}: max ratio {:.4}, median {:.4}, {} covectors checked", r.max_ratio, r.median_ratio, r.covectors_checked);
    }
    Ok(())
}
