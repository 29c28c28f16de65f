//! Littlewood-Paley bands of a smooth field: exact reconstruction, band
//! decay and the comparison of two Hölder-Zygmund norms.

use anosov_lab::lp_calculus::checks::{default_phi, default_psi, dyadic_h_sample};
use anosov_lab::lp_calculus::{build_lp_filters, hz_norm, norm_equivalence_check, CutoffSpec, GridSpec};
use anosov_lab::source_lab::smooth_field;

fn main() -> anosov_lab::Result<()> {
    let n = 128;
    let bank = build_lp_filters(&GridSpec::new(n, 8)?, CutoffSpec::default())?;
    let f = smooth_field(n, 24, 2.0, 1, 0)?;
    let err = bank.reconstruct(&f).sub(&f).l2_norm() / f.l2_norm();
    println!("bands 0..={}, relative reconstruction error {err:.2e}", bank.j_max());
    for (j, s) in bank.band_sup_norms(&f).iter().enumerate() {
        println!("  j = {j:2}  sup |Delta_j f| = {s:.3e}");
    }
    for s in [0.5, 1.0, 1.5] {
        let (phi, psi) = (default_phi(), default_psi());
        let eq = norm_equivalence_check(&f, s, 0.125, &phi, &psi, &dyadic_h_sample(0.125, &phi, n))?;
        println!("C^{s}: |f| = {:.4}, semiclassical norm {:.4}, ratio {:.4}", hz_norm(&f, s), eq.norm_a, eq.ratio);
    }
    Ok(())
}
