//! The cat map and a smooth perturbation: Lyapunov exponents, the invariant
//! splitting and the Lie-derivative residual of the unstable projector.

use anosov_lab::systems::*;

fn main() -> anosov_lab::Result<()> {
    let cat = cat_map_system(CAT)?;
    println!("lambda = {:.12}, log lambda = {:.12}", cat.lambda(), cat.log_lambda());
    let pts: Vec<[f64; 2]> = (0..8).map(|i| [0.05 + 0.12 * i as f64, (0.31 * i as f64 + 0.2) % 1.0]).collect();
    let pert = perturbed_cat_map(&cat, 0.01, TrigPerturbation::sin_x2(), 64)?;
    for (name, map) in [("linear", &cat), ("perturbed", &pert)] {
        let l = lyapunov_data(SystemRef::Map(map), &pts, 400)?;
        let frame = splitting_at(SystemRef::Map(map), pts[0], 30)?;
        println!("{name}: lambda_u in [{:.6}, {:.6}], E_u at x0 = {:.6?}", l.lambda_u_min, l.lambda_u_max, frame.e_u);
        for h in [1e-1, 1e-2, 1e-3] {
            let r = projector_lie_residual(map, &pts, h, 40)?;
            println!("  step {h:.0e}: Lie residual {:.3e}", r.residual);
        }
    }
    let flow = suspension_flow(&cat, &anosov_lab::lp_calculus::Grid2Field::constant(16, 2.0)?)?;
    let l = lyapunov_data(SystemRef::Flow(&flow), &pts, 200)?;
    println!("suspension with roof 2: per-unit-time lambda_u = {:.6}", l.lambda_u_max);
    Ok(())
}
