//! Two roofs over the cat map: the stretch between them reproduces every
//! closed-orbit period, and coboundary changes of the roof are invisible.

use std::f64::consts::PI;

use anosov_lab::lp_calculus::Grid2Field;
use anosov_lab::mls_stretch::{mls_compare, stretch_from_roofs};
use anosov_lab::systems::{cat_map_system, suspension_flow, CAT};

fn main() -> anosov_lab::Result<()> {
    let n = 32;
    let base = cat_map_system(CAT)?;
    let r = Grid2Field::from_real_fn(n, |x| 1.0 + 0.2 * (2.0 * PI * x[1]).cos())?;
    let rp = Grid2Field::from_real_fn(n, |x| 1.3 + 0.25 * (2.0 * PI * (x[0] + x[1])).cos())?;
    let cmp = mls_compare(&suspension_flow(&base, &r)?, &suspension_flow(&base, &rp)?, 8)?;
    println!("{} orbits, max |L_r'(gamma) - stretch integral| = {:.2e}", cmp.rows.len(), cmp.max_abs_residual);
    for row in cmp.rows.iter().take(5) {
        println!("  {:>12}: L = {:.6} -> {:.6}", row.id, row.length_ref, row.length_target);
    }
    let w = Grid2Field::from_real_fn(n, |x| 0.05 * (2.0 * PI * x[0]).sin())?;
    let shifted = r.add(&w.compose_linear(CAT).sub(&w));
    let cob = mls_compare(&suspension_flow(&base, &r)?, &suspension_flow(&base, &shifted)?, 8)?;
    let worst = cob.rows.iter().map(|x| x.ratio_minus_one.abs()).fold(0.0, f64::max);
    println!("coboundary roof change: max |L'/L - 1| = {worst:.2e}");
    let a = stretch_from_roofs(&r, &rp)?;
    println!("stretch {} -> {}, sup |a - 1| = {:.4}", a.reference, a.target, a.deviation().max_abs());
    Ok(())
}
