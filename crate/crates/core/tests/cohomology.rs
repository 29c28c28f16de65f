use anosov_lab::cohomology::*;
use anosov_lab::fft::freq;
use anosov_lab::lp_calculus::{Grid2Field, GridSpec, MappingTorusField};
use anosov_lab::orbits::{enumerate_periodic_orbits, OrbitSet, DEFAULT_ORBIT_BUDGET};
use anosov_lab::rng::rng_from_seed;
use anosov_lab::systems::{cat_map_system, CAT};
use anosov_lab::LabError;
use proptest::prelude::*;
use rand::Rng;
use rustfft::num_complex::Complex64;
use std::f64::consts::PI;

fn orbits(p: usize) -> OrbitSet {
    enumerate_periodic_orbits(&cat_map_system(CAT).unwrap(), p, DEFAULT_ORBIT_BUDGET).unwrap()
}

fn random_poly(seed: u64, n: usize, kmax: i64) -> Grid2Field {
    let mut rng = rng_from_seed(seed);
    let mut modes = Vec::new();
    for k1 in -kmax..=kmax {
        for k2 in -kmax..=kmax {
            if (k1, k2) > (0, 0) {
                let c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                modes.push(([k1, k2], c));
                modes.push(([-k1, -k2], c.conj()));
            }
        }
    }
    Grid2Field::from_modes(n, &modes).unwrap()
}

fn cob(u: &Grid2Field) -> Grid2Field {
    u.compose_linear(CAT).sub(u)
}

fn centred(u: &Grid2Field) -> Grid2Field {
    let m = u.mean();
    u.map(|z| z - m)
}

#[test]
fn obstruction_examples() {
    let set = orbits(8);
    let u = random_poly(1, 32, 3);
    assert!(obstruction_check(&cob(&u), &set) <= 1e-11);
    let one = Grid2Field::constant(16, 1.0).unwrap();
    assert!(obstruction_check(&one, &set) >= 1.0);
    let c = Grid2Field::from_real_fn(16, |x| (2.0 * PI * x[0]).cos()).unwrap();
    let brute = set
        .orbits
        .iter()
        .map(|o| o.points.iter().map(|x| (2.0 * PI * x[0]).cos()).sum::<f64>().abs())
        .fold(0.0f64, f64::max);
    assert!((obstruction_check(&c, &set) - brute).abs() < 1e-11);
}

#[test]
fn livsic_examples() {
    let zero = Grid2Field::zeros(32).unwrap();
    assert_eq!(livsic_solve(CAT, &zero, 32.0).unwrap().u.max_abs(), 0.0);
    let u0 = Grid2Field::from_real_fn(32, |x| (2.0 * PI * x[0]).cos()).unwrap();
    let sol = livsic_solve_checked(CAT, &cob(&u0), 32.0).unwrap();
    assert!(sol.u.sub(&u0).max_abs() <= 1e-12);
    assert!(sol.residual <= 1e-12);
    assert!(sol.backward_discrepancy.unwrap() <= 1e-12);
    let c = Grid2Field::from_real_fn(32, |x| (2.0 * PI * x[0]).cos()).unwrap();
    assert!(matches!(livsic_solve(CAT, &c, 32.0), Err(LabError::Obstruction(_))));
    assert!(obstruction_check(&c, &orbits(1)) >= 1.0);
    let one = Grid2Field::constant(32, 1.0).unwrap();
    assert!(matches!(livsic_solve(CAT, &one, 32.0), Err(LabError::Obstruction(_))));
}

#[test]
fn solution_support_is_orbit_segments() {
    let n = 64;
    let f = cob(&random_poly(3, n, 2));
    let sol = livsic_solve(CAT, &f, n as f64).unwrap();
    let predicted = predicted_support(CAT, &f, n as f64, 1e-12);
    let actual: Vec<bool> = sol.u.coeffs().iter().map(|c| c.norm() > 1e-12).collect();
    assert_eq!(predicted, actual);
    // Bands above the largest frequency in the predicted support are empty.
    let r = (0..n * n)
        .filter(|&i| predicted[i])
        .map(|i| 2.0 * PI * ((freq(i / n, n).pow(2) + freq(i % n, n).pow(2)) as f64).sqrt())
        .fold(0.0f64, f64::max);
    let prof = regularity_profile(ProfileInput::Planar(&sol.u)).unwrap();
    for (j, b) in prof.band_norms.iter().enumerate() {
        if 2f64.powi(j as i32 - 1) > r {
            assert!(*b <= 1e-8, "band {j}: {b:e}");
        }
    }
}

#[test]
fn suspension_examples() {
    let spec = GridSpec::new(16, 64).unwrap();
    let zero = MappingTorusField::constant(spec, CAT, 0.0).unwrap();
    assert_eq!(suspension_livsic_solve(&zero).unwrap().u.max_abs(), 0.0);

    // w(x, s) = (1 - chi(s)) b(x) + chi(s) b(Ax) + sin^2(pi s) a(x),
    // which satisfies w(x, 1) = w(Ax, 0).
    let a = |x: [f64; 2]| (2.0 * PI * (x[0] + x[1])).sin();
    let b = |x: [f64; 2]| (2.0 * PI * x[1]).cos() + 0.5 * (2.0 * PI * x[0]).sin();
    let ax = |x: [f64; 2]| [2.0 * x[0] + x[1], x[0] + x[1]];
    let chi = |s: f64| (PI * s / 2.0).sin().powi(2);
    let dchi = |s: f64| PI / 2.0 * (PI * s).sin();
    let w = MappingTorusField::from_fn(spec, CAT, |x, s| (1.0 - chi(s)) * b(x) + chi(s) * b(ax(x)) + (PI * s).sin().powi(2) * a(x)).unwrap();
    let f = MappingTorusField::from_fn(spec, CAT, |x, s| dchi(s) * (b(ax(x)) - b(x)) + PI * (2.0 * PI * s).sin() * a(x)).unwrap();
    let sol = suspension_livsic_solve(&f).unwrap();
    let diff = sol.u.sub(&w);
    let shift = diff.slices()[0].mean();
    let err = diff.slices().iter().map(|g| g.map(|z| z - shift).max_abs()).fold(0.0f64, f64::max);
    assert!(err <= 1e-9, "{err:e}");
    assert!(sol.twist_defect <= 1e-9);

    // f = ∂_s (beta(s) a(x)) with the bump beta(s) = (1 - t^2)^8,
    // t = (s - 0.5) / 0.3, supported in (0.2, 0.8).
    let beta = |s: f64| {
        let t = (s - 0.5) / 0.3;
        if t.abs() < 1.0 { (1.0 - t * t).powi(8) } else { 0.0 }
    };
    let dbeta = |s: f64| {
        let t = (s - 0.5) / 0.3;
        if t.abs() < 1.0 { -16.0 * t * (1.0 - t * t).powi(7) / 0.3 } else { 0.0 }
    };
    let spec = GridSpec::new(16, 256).unwrap();
    let f = MappingTorusField::from_fn(spec, CAT, |x, s| dbeta(s) * a(x)).unwrap();
    let exact = MappingTorusField::from_fn(spec, CAT, |x, s| beta(s) * a(x)).unwrap();
    let sol = suspension_livsic_solve(&f).unwrap();
    assert!(sol.u.sub(&exact).max_abs() <= 1e-10, "{:e}", sol.u.sub(&exact).max_abs());
}

#[test]
fn twisted_examples() {
    let one = Grid2Field::constant(32, 1.0).unwrap();
    let sol = twisted_transport_solve(CAT, &one, 32.0).unwrap();
    assert!(sol.u.sub(&one).max_abs() < 1e-15);
    let w = random_poly(5, 32, 2).scale(0.3);
    let theta = cob(&w);
    let c = theta.map(|z| Complex64::from_polar(1.0, z.re));
    let sol = twisted_transport_solve(CAT, &c, 32.0).unwrap();
    let expect = w.map(|z| Complex64::from_polar(1.0, z.re));
    // Compare up to a global phase.
    let phase = sol.u.value(0, 0) / expect.value(0, 0);
    assert!(sol.u.sub(&expect.map(|z| z * phase)).max_abs() <= 1e-10);
    assert!(sol.residual <= 1e-10);
    let bad = Grid2Field::from_fn(32, |x| Complex64::from_polar(1.0, 0.4 + 0.1 * (2.0 * PI * x[0]).cos())).unwrap();
    assert!(matches!(twisted_transport_solve(CAT, &bad, 32.0), Err(LabError::Obstruction(_))));
    let winding = Grid2Field::from_fn(32, |x| Complex64::from_polar(1.0, 2.0 * PI * x[1])).unwrap();
    match twisted_transport_solve(CAT, &winding, 32.0) {
        Err(LabError::Obstruction(m)) => assert!(m.contains("topologically")),
        other => panic!("{other:?}"),
    }
}

#[test]
fn profile_examples() {
    // 2 pi k = 2^j exactly at k = 2^j / 2 pi; the nearest lattice mode
    // sits close to the unique point where phi_j = 1.
    let wave = Grid2Field::from_modes(128, &[([10, 0], Complex64::new(1.0, 0.0))]).unwrap();
    let p = regularity_profile(ProfileInput::Planar(&wave)).unwrap();
    assert!(p.single_band && p.alpha.is_none());
    assert_eq!(p.dominant_band, 6);

    let alpha = 0.5;
    let modes: Vec<([i64; 2], Complex64)> = (4..=11)
        .flat_map(|j| {
            let k = (2f64.powi(j) / (2.0 * PI)).round() as i64;
            let a = Complex64::new(0.5 * 2f64.powf(-alpha * j as f64), 0.0);
            [([k, 0], a), ([-k, 0], a)]
        })
        .collect();
    let weier = Grid2Field::from_modes(1024, &modes).unwrap();
    let p = regularity_profile(ProfileInput::Planar(&weier)).unwrap();
    let a = p.alpha.unwrap();
    assert!((0.45..=0.55).contains(&a), "alpha = {a}, bands {:?}", p.band_norms);
}

#[test]
fn quotient_seminorm_examples() {
    let set = orbits(7);
    let u = random_poly(9, 32, 2);
    assert!(quotient_seminorm_lower(&cob(&u), &set) <= 1e-11);
    let one = Grid2Field::constant(16, 1.0).unwrap();
    assert!((quotient_seminorm_lower(&one, &set) - 1.0).abs() < 1e-14);
    let c = Grid2Field::from_real_fn(16, |x| (2.0 * PI * x[0]).cos()).unwrap();
    let brute = set
        .orbits
        .iter()
        .map(|o| (o.points.iter().map(|x| (2.0 * PI * x[0]).cos()).sum::<f64>() / o.period as f64).abs())
        .fold(0.0f64, f64::max);
    assert!((quotient_seminorm_lower(&c, &set) - brute).abs() < 1e-13);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn livsic_round_trip(seed in 0u64..10_000) {
        let u = centred(&random_poly(seed, 64, 4));
        let sol = livsic_solve(CAT, &cob(&u), 64.0).unwrap();
        prop_assert!(sol.u.sub(&u).max_abs() <= 1e-10);
        prop_assert!(obstruction_check(&cob(&u), &orbits(6)) <= 1e-10);
    }

    #[test]
    fn livsic_is_linear(s1 in 0u64..1000, s2 in 0u64..1000, a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let f = cob(&random_poly(s1, 32, 2));
        let g = cob(&random_poly(s2 + 1000, 32, 2));
        let lhs = livsic_solve(CAT, &f.scale(a).add(&g.scale(b)), 32.0).unwrap().u;
        let rhs = livsic_solve(CAT, &f, 32.0).unwrap().u.scale(a).add(&livsic_solve(CAT, &g, 32.0).unwrap().u.scale(b));
        prop_assert!(lhs.sub(&rhs).max_abs() <= 1e-12);
    }

    #[test]
    fn quotient_bound_below_every_representative(seed in 0u64..1000) {
        let set = orbits(5);
        let f = random_poly(seed, 16, 1);
        let u = random_poly(seed + 5000, 16, 1);
        let g = f.add(&cob(&u));
        let mut sup = g.max_abs();
        for o in &set.orbits {
            for x in &o.points {
                sup = sup.max(g.eval_re(*x).abs());
            }
        }
        prop_assert!(quotient_seminorm_lower(&f, &set) <= sup + 1e-12);
    }
}
