//! Exact periodic orbits of the cat map, their counts and X-rays.

use std::f64::consts::PI;

use anosov_lab::lp_calculus::Grid2Field;
use anosov_lab::orbits::{enumerate_periodic_orbits, xray, Observable, DEFAULT_ORBIT_BUDGET};
use anosov_lab::systems::{cat_map_system, CAT};

fn main() -> anosov_lab::Result<()> {
    let set = enumerate_periodic_orbits(&cat_map_system(CAT)?, 8, DEFAULT_ORBIT_BUDGET)?;
    for p in 1..=8 {
        println!("period {p}: {:5} points, {:4} primitive orbits", set.point_counts[p - 1], set.primitive_counts[p - 1]);
    }
    let v = Grid2Field::from_real_fn(32, |x| (2.0 * PI * x[0]).cos())?;
    let w = Grid2Field::from_real_fn(32, |x| (2.0 * PI * (x[0] + 2.0 * x[1])).sin())?;
    let cob = w.compose_linear(CAT).sub(&w);
    let best = set.orbits.iter().map(|o| (xray(Observable::Map(&v), o).unwrap(), o.period)).fold((f64::MIN, 0), |a, b| if b.0 > a.0 { b } else { a });
    let worst_cob = set.orbits.iter().map(|o| xray(Observable::Map(&cob), o).unwrap().abs()).fold(0.0, f64::max);
    println!("largest orbit average of cos(2 pi x1): {:.6} (period {})", best.0, best.1);
    println!("largest |X-ray| of a coboundary: {worst_cob:.2e}");
    Ok(())
}
