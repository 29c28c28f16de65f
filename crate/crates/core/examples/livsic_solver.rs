//! Solving the cohomological equation `u o A - u = F` and detecting
//! obstructions on periodic orbits.

use anosov_lab::cohomology::{livsic_solve, obstruction_check};
use anosov_lab::lp_calculus::Grid2Field;
use anosov_lab::orbits::{enumerate_periodic_orbits, DEFAULT_ORBIT_BUDGET};
use anosov_lab::source_lab::smooth_field;
use anosov_lab::systems::{cat_map_system, CAT};

fn main() -> anosov_lab::Result<()> {
    let n = 64;
    let u = smooth_field(n, 5, 2.0, 9, 0)?;
    let f = u.compose_linear(CAT).sub(&u);
    let sol = livsic_solve(CAT, &f, n as f64)?;
    let diff = sol.u.sub(&u);
    let err = diff.sub(&Grid2Field::constant(n, diff.mean().re)?).max_abs();
    println!("coboundary: residual {:.2e}, recovery error modulo constants {err:.2e}", sol.residual);

    let orbits = enumerate_periodic_orbits(&cat_map_system(CAT)?, 6, DEFAULT_ORBIT_BUDGET)?;
    let g = Grid2Field::from_real_fn(n, |x| (2.0 * std::f64::consts::PI * x[0]).cos())?;
    println!("orbit obstruction of the coboundary: {:.2e}", obstruction_check(&f, &orbits));
    println!("orbit obstruction of cos(2 pi x1):   {:.4}", obstruction_check(&g, &orbits));
    match livsic_solve(CAT, &g, n as f64) {
        Ok(s) => println!("solver on a non-coboundary leaves residual {:.3}", s.residual),
        Err(e) => println!("solver rejects the non-coboundary: {e}"),
    }
    Ok(())
}
