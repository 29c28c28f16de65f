use anosov_lab::cohomology::quotient_seminorm_lower;
use anosov_lab::lp_calculus::{Grid2Field, GridSpec, MappingTorusField};
use anosov_lab::mls_stretch::*;
use anosov_lab::orbits::{enumerate_periodic_orbits, ConformalFactor, OrbitSet, PeriodicOrbit, ShorteningDisc, DEFAULT_ORBIT_BUDGET};
use anosov_lab::rng::rng_from_seed;
use anosov_lab::systems::{bolza_systole, cat_map_system, fuchsian_bolza, suspension_flow, AnosovFlow, AnosovMap, CAT};
use anosov_lab::LabError;
use proptest::prelude::*;
use rand::Rng;
use rustfft::num_complex::Complex64;
use std::f64::consts::TAU;

const N: usize = 16;

fn cat() -> AnosovMap {
    cat_map_system(CAT).unwrap()
}

fn orbits(p: usize) -> OrbitSet {
    enumerate_periodic_orbits(&cat(), p, DEFAULT_ORBIT_BUDGET).unwrap()
}

/// Real trigonometric polynomial `c0 + sum amp cos(2 pi k.x + phase)`.
#[derive(Clone, Debug)]
struct Trig {
    c0: f64,
    terms: Vec<([i64; 2], f64, f64)>,
}

impl Trig {
    fn random(seed: u64, c0: f64, amp: f64) -> Trig {
        let mut rng = rng_from_seed(seed);
        let mut terms = Vec::new();
        for k0 in -2i64..=2 {
            for k1 in 0i64..=2 {
                if k1 == 0 && k0 <= 0 {
                    continue;
                }
                terms.push(([k0, k1], amp * rng.gen_range(-1.0..1.0) / (1 + k0 * k0 + k1 * k1) as f64, rng.gen_range(0.0..TAU)));
            }
        }
        Trig { c0, terms }
    }

    /// Direct evaluation, independent of the spectral grid.
    fn at(&self, x: [f64; 2]) -> f64 {
        self.c0 + self.terms.iter().map(|&(k, a, ph)| a * (TAU * (k[0] as f64 * x[0] + k[1] as f64 * x[1]) + ph).cos()).sum::<f64>()
    }

    fn field(&self) -> Grid2Field {
        let mut modes = vec![([0, 0], Complex64::new(self.c0, 0.0))];
        for &(k, a, ph) in &self.terms {
            let c = Complex64::from_polar(0.5 * a, ph);
            modes.push((k, c));
            modes.push(([-k[0], -k[1]], c.conj()));
        }
        Grid2Field::from_modes(N, &modes).unwrap()
    }

    /// `w o A - w` as another polynomial.
    fn coboundary(&self) -> Trig {
        let mut terms = Vec::new();
        for &(k, a, ph) in &self.terms {
            // cos(2 pi k.(Ax)) = cos(2 pi (A^T k).x)
            let kt = [CAT[0][0] * k[0] + CAT[1][0] * k[1], CAT[0][1] * k[0] + CAT[1][1] * k[1]];
            terms.push((kt, a, ph));
            terms.push((k, -a, ph));
        }
        Trig { c0: 0.0, terms }
    }

    fn plus(&self, other: &Trig) -> Trig {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Trig { c0: self.c0 + other.c0, terms }
    }
}

/// Orbit points regenerated from the exact numerators by integer iteration.
fn exact_points(o: &PeriodicOrbit) -> Vec<[f64; 2]> {
    let d = o.denom;
    let mut p = o.numerators[0];
    (0..o.period)
        .map(|_| {
            let x = [p[0] as f64 / d as f64, p[1] as f64 / d as f64];
            p = [(CAT[0][0] * p[0] + CAT[0][1] * p[1]).rem_euclid(d), (CAT[1][0] * p[0] + CAT[1][1] * p[1]).rem_euclid(d)];
            x
        })
        .collect()
}

fn flow(r: &Trig) -> AnosovFlow {
    suspension_flow(&cat(), &r.field()).unwrap()
}

#[test]
fn stretch_examples() {
    let r = Trig::random(1, 1.0, 0.3);
    let s = stretch_from_roofs(&r.field(), &r.field()).unwrap();
    assert!(s.a.values().iter().all(|z| (z.re - 1.0).abs() <= 1e-15));
    assert_eq!(s.reference, s.target);

    let one = Trig { c0: 1.0, terms: vec![] };
    let rp = Trig { c0: 1.0, terms: vec![([1, 0], 0.1, 0.0)] };
    let s = stretch_from_roofs(&one.field(), &rp.field()).unwrap();
    let fixed = orbits(1);
    assert_eq!(fixed.orbits.len(), 1);
    let integral = s.orbit_integral(&fixed.orbits[0]);
    assert!((integral - 1.1).abs() <= 1e-14, "{integral}");
    assert!((flow(&rp).period_of(&fixed.orbits[0].points) - 1.1).abs() <= 1e-14);

    let bad = Trig { c0: 0.05, terms: vec![([1, 0], 0.1, 0.0)] };
    assert!(matches!(stretch_from_roofs(&one.field(), &bad.field()), Err(LabError::InvalidInput(_))));
    assert!(matches!(stretch_from_roofs(&bad.field(), &one.field()), Err(LabError::InvalidInput(_))));
}

#[test]
fn orbit_integrals_reproduce_target_periods() {
    let r = Trig::random(2, 1.0, 0.3);
    let rp = Trig::random(3, 1.5, 0.4);
    let s = stretch_from_roofs(&r.field(), &rp.field()).unwrap();
    let set = orbits(10);
    let mut worst = 0.0f64;
    for o in &set.orbits {
        let pts = exact_points(o);
        // Double sum over orbit points and Fourier terms.
        let target: f64 = pts.iter().map(|&x| rp.at(x)).sum();
        worst = worst.max((s.orbit_integral(o) - target).abs());
    }
    assert!(worst <= 1e-12, "worst {worst:e}");
}

#[test]
fn mls_compare_examples() {
    let r = Trig::random(4, 1.0, 0.3);
    let same = mls_compare(&flow(&r), &flow(&r), 8).unwrap();
    assert!(same.rows.iter().all(|row| row.ratio_minus_one == 0.0 && row.stretch_average == 0.0 && row.residual == 0.0));

    let w = Trig::random(5, 0.0, 0.1);
    let shifted = r.plus(&w.coboundary());
    let cmp = mls_compare(&flow(&r), &flow(&shifted), 10).unwrap();
    for row in &cmp.rows {
        assert!(row.ratio_minus_one.abs() <= 1e-13, "{}: {:e}", row.id, row.ratio_minus_one);
        assert!(row.stretch_average.abs() <= 1e-13);
    }

    let dr = Trig::random(6, 0.02, 0.05);
    let cmp = mls_compare(&flow(&r), &flow(&r.plus(&dr)), 10).unwrap();
    assert!(cmp.max_abs_residual <= 1e-12, "{:e}", cmp.max_abs_residual);
    // Direct sums for the first-order column.
    for (row, o) in cmp.rows.iter().zip(&orbits(10).orbits) {
        let pts = exact_points(o);
        let l: f64 = pts.iter().map(|&x| r.at(x)).sum();
        let d: f64 = pts.iter().map(|&x| dr.at(x)).sum();
        assert!((row.stretch_average - d / l).abs() <= 1e-12);
    }
    assert!(cmp.to_csv().lines().count() == cmp.rows.len() + 1);
}

#[test]
fn composition_multiplies_stretches() {
    let (r, r1, r2) = (Trig::random(7, 1.0, 0.3), Trig::random(8, 1.2, 0.3), Trig::random(9, 0.9, 0.2));
    let a = stretch_from_roofs(&r.field(), &r1.field()).unwrap();
    let b = stretch_from_roofs(&r1.field(), &r2.field()).unwrap();
    let ab = a.compose(&b).unwrap();
    let direct = stretch_from_roofs(&r.field(), &r2.field()).unwrap();
    assert_eq!(ab.target, direct.target);
    assert!(ab.a.sub(&direct.a).max_abs() <= 1e-14);
    for o in &orbits(8).orbits {
        let target: f64 = exact_points(o).iter().map(|&x| r2.at(x)).sum();
        assert!((ab.orbit_integral(o) - target).abs() <= 1e-12);
    }
    assert!(matches!(b.compose(&a), Err(LabError::InvalidInput(_))));
}

/// Twist-compatible test function `g + beta (g o A - g) + amp beta (1 - beta) h`
/// with `beta(s)` smooth and flat at both ends, so the trace along an orbit
/// is smooth across segment boundaries.
fn test_function(seed: u64, n_s: usize, amp: f64) -> MappingTorusField {
    let g = Trig::random(seed, 0.0, amp);
    let h = Trig::random(seed + 1, 0.0, 1.0);
    let ga = g.coboundary().plus(&g);
    let beta = |s: f64| {
        let f = |t: f64| if t > 0.0 { (-1.0 / t).exp() } else { 0.0 };
        f(s) / (f(s) + f(1.0 - s))
    };
    MappingTorusField::from_fn(GridSpec::new(N, n_s).unwrap(), CAT, |x, s| {
        g.at(x) + beta(s) * (ga.at(x) - g.at(x)) + amp * beta(s) * (1.0 - beta(s)) * h.at(x)
    })
    .unwrap()
}

#[test]
fn reparameterization_examples() {
    let r = Trig::random(10, 1.0, 0.3);
    let rp = Trig::random(11, 1.3, 0.3);
    let fl = flow(&r);
    let a = stretch_from_roofs(&r.field(), &rp.field()).unwrap();
    let spec = GridSpec::new(N, 128).unwrap();

    let zero = MappingTorusField::constant(spec, CAT, 0.0).unwrap();
    let rep = reparam_invariance_check(&fl, &a, &zero, 6).unwrap();
    assert_eq!(rep.max_discrepancy, 0.0);

    let c = MappingTorusField::constant(spec, CAT, 0.37).unwrap();
    let rep = reparam_invariance_check(&fl, &a, &c, 6).unwrap();
    assert!(rep.max_discrepancy <= 1e-10, "{:e}", rep.max_discrepancy);

    let u = test_function(12, 128, 0.05);
    let rep = reparam_invariance_check(&fl, &a, &u, 6).unwrap();
    assert!(rep.min_jacobian > 0.0 && rep.min_jacobian < 1.0);
    assert!(rep.max_discrepancy <= 1e-8, "{:e}", rep.max_discrepancy);

    let steep = test_function(12, 128, 5.0);
    assert!(matches!(reparam_invariance_check(&fl, &a, &steep, 4), Err(LabError::InvalidInput(_))));
}

#[test]
fn coboundary_split_oracles() {
    // cos(2 pi x1) sits alone at the bottom of its frequency orbit.
    let g = Trig { c0: 0.0, terms: vec![([1, 0], 1.0, 0.0)] };
    let split = coboundary_split(CAT, &g.field()).unwrap();
    assert!(split.residual.sub(&g.field()).max_abs() <= 1e-14);
    let w = Trig::random(13, 0.0, 0.2);
    let split = coboundary_split(CAT, &g.plus(&w.coboundary()).field()).unwrap();
    assert!(split.residual.sub(&g.field()).max_abs() <= 1e-12);
    assert!(split.reconstruction_error <= 1e-12);
    let pure = coboundary_split(CAT, &w.coboundary().field()).unwrap();
    assert!(pure.residual.max_abs() <= 1e-13);
    // The transfer function is w up to a constant.
    let diff = pure.transfer.sub(&w.field());
    let m = diff.mean();
    assert!(diff.map(|z| z - m).max_abs() <= 1e-10);
}

#[test]
fn stability_examples() {
    let base = cat();
    let r0 = Grid2Field::constant(N, 1.0).unwrap();
    let w = Trig::random(14, 0.0, 0.01);
    let g = Trig { c0: 0.0, terms: vec![([1, 0], 1.0, 0.0), ([1, 1], 0.5, 0.3)] };
    let set = orbits(8);
    let unit = g.field().scale(1.0 / stretch_seminorm_lower(&r0, &g.field(), &set));
    let family = vec![w.coboundary().field(), unit.scale(1e-3), unit.scale(1e-2)];
    let rep = stability_experiment(&base, &r0, &family, 8, 0.5).unwrap();
    assert!(rep.rows[0].ratio.is_none() && rep.rows[0].flag.as_deref() == Some("coboundary"));
    assert_eq!(rep.skipped, 1);
    let (r1, r2) = (rep.rows[1].ratio.unwrap(), rep.rows[2].ratio.unwrap());
    assert!((r1 / r2 - 1.0).abs() <= 1e-2, "{r1} vs {r2}");
    assert!((rep.rows[2].s_lower - 1e-2).abs() <= 1e-14);

    // Constant reference roof: the flow bound is the base quotient seminorm.
    let s = stretch_from_roofs(&r0, &r0.add(&unit.scale(1e-2))).unwrap();
    assert!((quotient_seminorm_lower(&s.deviation(), &set) - rep.rows[2].s_lower).abs() <= 1e-14);

    let mixed = mixed_perturbation_family(CAT, N, 20, 1e-2, 7).unwrap();
    let rep = stability_experiment(&base, &r0, &mixed, 8, 0.5).unwrap();
    assert_eq!(rep.rows.len(), 20);
    assert_eq!(rep.flagged, 0);
    let c = rep.constant.unwrap();
    assert!(c.is_finite() && c >= 1.0, "{c}");
    assert_eq!(rep.skipped, 6);

    let bumpy = vec![Grid2Field::constant(N, -2.0).unwrap()];
    let rep = stability_experiment(&base, &r0, &bumpy, 4, 0.5).unwrap();
    assert_eq!(rep.flagged, 1);
}

#[test]
fn lemma_equivalence() {
    let r = Trig::random(15, 1.0, 0.2);
    let set = orbits(9);
    for (dr, equal) in [(Trig::random(16, 0.0, 0.05).coboundary(), true), (Trig::random(17, 0.0, 0.05), false)] {
        let rp = r.plus(&dr);
        let cmp = mls_compare_on(&flow(&r), &flow(&rp), &set).unwrap();
        let same_spectrum = cmp.rows.iter().all(|row| (row.length_target - row.length_ref).abs() <= 1e-12);
        let s = stretch_seminorm_lower(&r.field(), &dr.field(), &set);
        assert_eq!(same_spectrum, equal);
        assert_eq!(s <= 1e-12, equal, "seminorm {s:e}");
    }
}

#[test]
fn conformal_examples() {
    let g = fuchsian_bolza().unwrap();
    let disc = ShorteningDisc { n_points: 512, ..Default::default() };
    let eps = [1e-2, 5e-3, 2.5e-3];
    let zero = conformal_linearization_experiment(&g, &ConformalFactor::zero(), &eps, &[vec![0]], &disc).unwrap();
    assert!(zero[0].rows.iter().all(|r| r.remainder.abs() <= 1e-14));
    assert!((zero[0].l0_minimizer - bolza_systole()).abs() <= 1e-6);
    assert!((2.0 * (1.0 + 2f64.sqrt()).acosh() - zero[0].l0).abs() <= 1e-12);

    let c = 0.8;
    let constant = conformal_linearization_experiment(&g, &ConformalFactor::Constant { value: c }, &eps, &[vec![0], vec![0, 1]], &disc).unwrap();
    for ws in &constant {
        for row in &ws.rows {
            let exact = (row.eps * c).exp_m1() - row.eps * c;
            assert!((row.remainder - exact).abs() <= 1e-13, "{} vs {exact}", row.remainder);
        }
        let slope = ws.fit.unwrap().slope;
        assert!((slope - 2.0).abs() <= 0.01, "{slope}");
    }

    let bump = ConformalFactor::bump(1.0, 1.0);
    let res = conformal_linearization_experiment(&g, &bump, &eps, &[vec![0]], &disc).unwrap();
    let slope = res[0].fit.unwrap().slope;
    assert!((1.8..=2.2).contains(&slope), "{slope}");

    assert!(conformal_linearization_experiment(&g, &bump, &eps[..2], &[vec![0]], &disc).is_err());
    assert!(conformal_linearization_experiment(&g, &bump, &[1e-2, 5e-3, 1e-3], &[vec![0]], &disc).is_err());
    let planar = ConformalFactor::Planar { modes: vec![([1, 0], 0.1)] };
    assert!(conformal_linearization_experiment(&g, &planar, &eps, &[vec![0]], &disc).is_err());

    let p = ConformalPerturbation::new(&g, bump, 0.01).unwrap();
    let z = Complex64::new(0.0, 0.0);
    assert!((p.metric_change(&g, z) - (0.02f64).exp_m1()).abs() <= 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn coboundaries_are_invisible(seed in 0u64..10_000) {
        let r = Trig::random(seed, 1.0, 0.2);
        let dr = Trig::random(seed + 1, 0.01, 0.05);
        let w = Trig::random(seed + 2, 0.0, 0.05).coboundary();
        let set = orbits(7);
        let r0 = r.field();
        let a = stretch_seminorm_lower(&r0, &dr.field(), &set);
        let b = stretch_seminorm_lower(&r0, &dr.plus(&w).field(), &set);
        prop_assert!((a - b).abs() <= 1e-10);
        let ra = coboundary_split(CAT, &dr.field()).unwrap().residual;
        let rb = coboundary_split(CAT, &dr.plus(&w).field()).unwrap().residual;
        prop_assert!(ra.sub(&rb).max_abs() <= 1e-10);
        let ca = mls_compare_on(&flow(&r), &flow(&r.plus(&dr)), &set).unwrap();
        let cb = mls_compare_on(&flow(&r), &flow(&r.plus(&dr).plus(&w)), &set).unwrap();
        for (x, y) in ca.rows.iter().zip(&cb.rows) {
            prop_assert!((x.ratio_minus_one - y.ratio_minus_one).abs() <= 1e-10);
            prop_assert!((x.stretch_average - y.stretch_average).abs() <= 1e-10);
        }
    }

    #[test]
    fn chained_stretches_reproduce_periods(seed in 0u64..10_000) {
        let roofs: Vec<Trig> = (0..3).map(|i| Trig::random(seed + i, 1.0 + 0.2 * i as f64, 0.3)).collect();
        let a = stretch_from_roofs(&roofs[0].field(), &roofs[1].field()).unwrap();
        let b = stretch_from_roofs(&roofs[1].field(), &roofs[2].field()).unwrap();
        let ab = a.compose(&b).unwrap();
        for o in &orbits(6).orbits {
            let target: f64 = exact_points(o).iter().map(|&x| roofs[2].at(x)).sum();
            prop_assert!((ab.orbit_integral(o) - target).abs() <= 1e-12);
        }
    }

    #[test]
    fn constant_shift_is_invisible(seed in 0u64..10_000, c in -0.8f64..0.8) {
        let r = Trig::random(seed, 1.0, 0.3);
        let a = stretch_from_roofs(&r.field(), &Trig::random(seed + 1, 1.1, 0.3).field()).unwrap();
        let u = MappingTorusField::constant(GridSpec::new(N, 16).unwrap(), CAT, c).unwrap();
        let rep = reparam_invariance_check(&flow(&r), &a, &u, 4).unwrap();
        prop_assert!(rep.max_discrepancy <= 1e-10);
    }
}
