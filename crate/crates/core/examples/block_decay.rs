//! Exponential decay of the radial block norm along critical fields.

use anosov_lab::lp_calculus::Grid2Field;
use anosov_lab::source_lab::*;
use anosov_lab::systems::{cat_map_system, suspension_flow, SystemRef, CAT};

fn main() -> anosov_lab::Result<()> {
    let cat = cat_map_system(CAT)?;
    let flow = suspension_flow(&cat, &Grid2Field::constant(16, 1.0)?)?;
    let sys = SystemRef::Flow(&flow);
    let pair = make_radial_pair(sys, 0.6, 1.0, None)?;
    let depth = max_critical_depth(sys)?;
    let t_list: Vec<f64> = (2..=8).map(f64::from).collect();
    for rho in [0.0, 0.25, 0.5, 1.0] {
        let u = critical_field(sys, rho, depth)?;
        let r = block_decay_probe(sys, &u, &pair.a_op, rho, &t_list, 1.0 / 8.0, None, 64)?;
        let slope = r.fit.map(|f| f.slope).unwrap_or(f64::NAN);
        println!("rho = {rho:4}: fitted rate {slope:+.4}, predicted {:+.4}", -rho * cat.log_lambda());
    }
    Ok(())
}
