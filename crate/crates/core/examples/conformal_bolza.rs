//! First-order variation of closed-geodesic lengths on the Bolza surface
//! under a conformal change of metric.

use anosov_lab::mls_stretch::conformal_linearization_experiment;
use anosov_lab::orbits::{ConformalFactor, ShorteningDisc};
use anosov_lab::systems::{bolza_systole, fuchsian_bolza};

fn main() -> anosov_lab::Result<()> {
    let g = fuchsian_bolza()?;
    let disc = ShorteningDisc { n_points: 512, ..Default::default() };
    let eps = [1e-2, 5e-3, 2.5e-3];
    let res = conformal_linearization_experiment(&g, &ConformalFactor::bump(1.0, 1.0), &eps, &[vec![0], vec![0, 1]], &disc)?;
    println!("systole {:.12}", bolza_systole());
    for w in &res {
        println!("word {:?}: L0 = {:.9}, integral of sigma = {:.6}", w.word, w.l0, w.axis_integral);
        for r in &w.rows {
            println!("  eps {:.1e}: L = {:.12}, remainder {:+.3e}", r.eps, r.length, r.remainder);
        }
        if let Some(f) = w.fit {
            println!("  remainder slope {:.4}", f.slope);
        }
    }
    Ok(())
}
