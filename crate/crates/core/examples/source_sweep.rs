//! Source estimate below and above the threshold of a constant weight on
//! the unit-roof suspension of the cat map.

use anosov_lab::cohomology::CocycleWeight;
use anosov_lab::lp_calculus::Grid2Field;
use anosov_lab::source_lab::*;
use anosov_lab::systems::{cat_map_system, suspension_flow, SystemRef, CAT};

fn main() -> anosov_lab::Result<()> {
    let cat = cat_map_system(CAT)?;
    let flow = suspension_flow(&cat, &Grid2Field::constant(16, 1.0)?)?;
    let sys = SystemRef::Flow(&flow);
    let pair = make_radial_pair(sys, 0.75, 0.5, None)?;
    let fam = FamilySpec { n: 128, samples: 6, seed: 4, kind: FamilyKind::Quasimode };
    let h_list = [1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0];
    let w = CocycleWeight::Potential(Grid2Field::constant(16, cat.log_lambda())?);
    for (rho, weight) in [(0.5, None), (0.5, Some(&w)), (1.25, Some(&w))] {
        let r = source_estimate_sweep(sys, &pair, rho, 4.0, &h_list, &fam, weight)?;
        let slope = r.median_fit.map(|f| f.slope).unwrap_or(f64::NAN);
        println!("rho = {rho}, omega = {:.3}: {:?}, median slope {slope:.3}, spread {:.3}", r.omega, r.regime, r.max_ratio_spread());
    }
    Ok(())
}
