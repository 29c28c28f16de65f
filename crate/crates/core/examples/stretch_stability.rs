//! Stability constant between the coboundary-free size of a roof change and
//! the orbit lower bound of its stretch.

use anosov_lab::lp_calculus::Grid2Field;
use anosov_lab::mls_stretch::{mixed_perturbation_family, stability_experiment};
use anosov_lab::systems::{cat_map_system, CAT};

fn main() -> anosov_lab::Result<()> {
    let n = 32;
    let base = cat_map_system(CAT)?;
    let r0 = Grid2Field::constant(n, 1.0)?;
    for amp in [1e-3, 1e-2] {
        let fam = mixed_perturbation_family(CAT, n, 12, amp, 8)?;
        let rep = stability_experiment(&base, &r0, &fam, 8, 0.5)?;
        println!("amplitude {amp:.0e}: constant {:.6}, {} coboundaries skipped", rep.constant.unwrap_or(f64::NAN), rep.skipped);
    }
    Ok(())
}
