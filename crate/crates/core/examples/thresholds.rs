//! Forward thresholds of weighted transfer operators: periodic-orbit
//! maximum, the doubling estimator and the integral threshold.

use std::f64::consts::PI;

use anosov_lab::cohomology::CocycleWeight;
use anosov_lab::lp_calculus::Grid2Field;
use anosov_lab::systems::{cat_map_system, SystemRef, CAT};
use anosov_lab::thresholds::*;

fn main() -> anosov_lab::Result<()> {
    let cat = cat_map_system(CAT)?;
    let sys = SystemRef::Map(&cat);
    let v = Grid2Field::from_real_fn(16, |x| 0.3 * (2.0 * PI * x[0]).cos())?;
    for (name, w) in [("constant log(lambda)/2", Grid2Field::constant(16, cat.log_lambda() / 2.0)?), ("0.3 cos(2 pi x1)", v.clone())] {
        let r = forward_threshold(sys, &CocycleWeight::Potential(w.clone()), 10, RhoGrid::default(), MetricChoice::Flat)?;
        let s = sobolev_threshold_integral(sys, &w, RhoGrid::default(), 10, 256)?;
        println!("{name}: omega_+ = {:.6}, omega_- = {:.6}, integral threshold {:.6}", r.omega_plus, r.omega_minus, s.omega);
    }
    let spec = SubadditiveSpec { family: SubadditiveFamily::Birkhoff(v), lattice_n: 64, seed: 1 };
    let d = subadditive_limit(&spec, sys, 8, 10)?;
    for p in &d.doubling {
        println!("  T = {:5}: sup S_T v / T = {:.6}", p.time, p.value);
    }
    println!("periodic-orbit maximum {:.6}", d.orbit_max.unwrap_or(f64::NAN));
    Ok(())
}
