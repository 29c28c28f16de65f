use anosov_lab::lp_calculus::{Grid2Field, GridSpec, MappingTorusField};
use anosov_lab::orbits::*;
use anosov_lab::rng::rng_from_seed;
use anosov_lab::systems::*;
use anosov_lab::LabError;
use rustfft::num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;
use std::f64::consts::PI;

fn cat() -> AnosovMap {
    cat_map_system(CAT).unwrap()
}

/// Traces of `A^n` by `t_{n+1} = 3 t_n - t_{n-1}`.
fn traces(p: usize) -> Vec<i64> {
    let mut t = vec![2, 3];
    while t.len() <= p {
        let k = t.len();
        t.push(3 * t[k - 1] - t[k - 2]);
    }
    t
}

#[test]
fn period_point_counts() {
    let set = enumerate_periodic_orbits(&cat(), 10, DEFAULT_ORBIT_BUDGET).unwrap();
    let t = traces(10);
    assert_eq!(&t[1..6], &[3, 7, 18, 47, 123]);
    for n in 1..=10 {
        // det(A^n - I) = 2 - tr A^n.
        assert_eq!(set.point_counts[n - 1] as i64, t[n] - 2);
        let from_orbits: usize = (1..=n).filter(|d| n % d == 0).map(|d| d * set.primitive_counts[d - 1]).sum();
        assert_eq!(from_orbits as i64, t[n] - 2, "n = {n}");
    }
    assert_eq!(&set.point_counts[..5], &[1, 5, 16, 45, 121]);
    let fixed: Vec<_> = set.of_period(1).collect();
    assert_eq!(fixed.len(), 1);
    assert_eq!(fixed[0].points[0], [0.0, 0.0]);
}

#[test]
fn brute_force_lattice_solve() {
    // Every period-n point has denominator d = |det(A^n - I)|, so scanning
    // all of (1/d) Z^2 must find exactly d solutions.
    let set = enumerate_periodic_orbits(&cat(), 5, DEFAULT_ORBIT_BUDGET).unwrap();
    for n in 1..=5usize {
        let d = set.point_counts[n - 1] as i64;
        let an = anosov_lab::mat::pow_i(&CAT, n as i64);
        let mut found = 0;
        for p in 0..d {
            for q in 0..d {
                let x = (an[0][0] * p + an[0][1] * q - p).rem_euclid(d);
                let y = (an[1][0] * p + an[1][1] * q - q).rem_euclid(d);
                if x == 0 && y == 0 {
                    found += 1;
                }
            }
        }
        assert_eq!(found, d);
    }
}

#[test]
fn orbits_are_closed_exactly() {
    let set = enumerate_periodic_orbits(&cat(), 8, DEFAULT_ORBIT_BUDGET).unwrap();
    for o in &set.orbits {
        let d = o.denom;
        for (i, p) in o.numerators.iter().enumerate() {
            let next = o.numerators[(i + 1) % o.period];
            let img = [(2 * p[0] + p[1]).rem_euclid(d), (p[0] + p[1]).rem_euclid(d)];
            assert_eq!(img, next);
        }
        assert_eq!(o.numerators.iter().min(), Some(&o.numerators[0]));
    }
}

#[test]
fn orbit_budget_error() {
    match enumerate_periodic_orbits(&cat(), 12, 1000) {
        Err(LabError::OrbitBudget { budget: 1000, period }) => assert!(period <= 7),
        other => panic!("{other:?}"),
    }
    assert!(enumerate_periodic_orbits(&cat(), 0, 10).is_err());
    let pert = perturbed_cat_map(&cat(), 0.01, TrigPerturbation::sin_x2(), 32).unwrap();
    assert!(enumerate_periodic_orbits(&pert, 3, 100).is_err());
}

fn random_smooth(seed: u64, n: usize) -> Grid2Field {
    let mut rng = rng_from_seed(seed);
    let mut modes = Vec::new();
    for k1 in -2i64..=2 {
        for k2 in -2i64..=2 {
            if (k1, k2) > (0, 0) {
                let c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                modes.push(([k1, k2], c));
                modes.push(([-k1, -k2], c.conj()));
            }
        }
    }
    Grid2Field::from_modes(n, &modes).unwrap()
}

#[test]
fn xray_examples() {
    let set = enumerate_periodic_orbits(&cat(), 6, DEFAULT_ORBIT_BUDGET).unwrap();
    let one = Grid2Field::constant(16, 1.0).unwrap();
    let c = Grid2Field::from_real_fn(16, |x| (2.0 * PI * x[0]).cos()).unwrap();
    let fixed = set.of_period(1).next().unwrap();
    assert!((xray(Observable::Map(&c), fixed).unwrap() - 1.0).abs() < 1e-14);
    let mut worst: f64 = 0.0;
    for seed in 0..100 {
        let u = random_smooth(seed, 32);
        let cob = u.compose_linear(CAT).sub(&u);
        for o in &set.orbits {
            assert!((xray(Observable::Map(&one), o).unwrap() - 1.0).abs() < 1e-14);
            worst = worst.max(xray(Observable::Map(&cob), o).unwrap().abs());
        }
    }
    assert!(worst <= 1e-12, "{worst:e}");
    // Direct Birkhoff average oracle on a period-2 orbit.
    let o = set.of_period(2).next().unwrap();
    let direct = o.points.iter().map(|x| (2.0 * PI * x[0]).cos()).sum::<f64>() / 2.0;
    assert!((xray(Observable::Map(&c), o).unwrap() - direct).abs() < 1e-13);
    let other = cat_map_system([[1, 1], [1, 2]]).unwrap();
    assert!(xray_map(&other, &c, o).is_err());
}

#[test]
fn flow_xray_is_roof_weighted() {
    let roof = Grid2Field::from_real_fn(16, |x| 1.0 + 0.3 * (2.0 * PI * x[0]).cos()).unwrap();
    let flow = suspension_flow(&cat(), &roof).unwrap();
    let spec = GridSpec::new(16, 8).unwrap();
    let one = MappingTorusField::constant(spec, CAT, 1.0).unwrap();
    let g = Grid2Field::from_real_fn(16, |x| (2.0 * PI * x[1]).sin()).unwrap();
    let slice = MappingTorusField::slice_constant(spec, CAT, &g).unwrap();
    let set = enumerate_periodic_orbits(&cat(), 4, DEFAULT_ORBIT_BUDGET).unwrap();
    for o in &set.orbits {
        assert!((xray(Observable::Flow(&one, &flow), o).unwrap() - 1.0).abs() < 1e-14);
        // Slice-constant data: the twisted trapezoid endpoint mixes x and Ax.
        let num: f64 = o
            .points
            .iter()
            .enumerate()
            .map(|(i, x)| {
                let ax = o.points[(i + 1) % o.period];
                flow.roof_at(*x) * ((7.0 * g.eval_re(*x) + 0.5 * g.eval_re(*x) + 0.5 * g.eval_re(ax)) / 8.0)
            })
            .sum();
        let expect = num / flow.period_of(&o.points);
        assert!((xray(Observable::Flow(&slice, &flow), o).unwrap() - expect).abs() < 1e-13);
    }
    let other = cat_map_system([[1, 1], [1, 2]]).unwrap();
    let wrong = suspension_flow(&other, &roof).unwrap();
    assert!(xray(Observable::Flow(&one, &wrong), set.orbits.first().unwrap()).is_err());
}

#[test]
fn marked_spectrum_examples() {
    let flat = suspension_flow(&cat(), &Grid2Field::constant(16, 1.0).unwrap()).unwrap();
    let table = marked_spectrum(&flat, 10).unwrap();
    for e in &table.entries {
        assert_eq!(e.length, e.steps as f64);
    }
    let u = random_smooth(7, 32);
    let cob = u.compose_linear(CAT).sub(&u);
    let roof = Grid2Field::constant(32, 1.0).unwrap().add(&cob.scale(0.05));
    let bumped = marked_spectrum(&suspension_flow(&cat(), &roof).unwrap(), 10).unwrap();
    let flat32 = marked_spectrum(&suspension_flow(&cat(), &Grid2Field::constant(32, 1.0).unwrap()).unwrap(), 10).unwrap();
    let pair = bumped.side_by_side(&flat32).unwrap();
    assert!(pair.max_difference().unwrap() <= 1e-12, "{:e}", pair.max_difference().unwrap());
    assert!(pair.to_csv().lines().count() == pair.entries.len() + 1);

    let roof = Grid2Field::from_real_fn(16, |x| 1.0 + 0.1 * (2.0 * PI * x[0]).cos()).unwrap();
    let flow = suspension_flow(&cat(), &roof).unwrap();
    let t = marked_spectrum(&flow, 3).unwrap();
    let fixed = t.entries.iter().find(|e| e.steps == 1).unwrap();
    assert!((fixed.length - 1.1).abs() < 1e-14);
    // Class function: any starting point gives the same period, bit for bit.
    let set = enumerate_periodic_orbits(&cat(), 7, DEFAULT_ORBIT_BUDGET).unwrap();
    for o in set.orbits.iter().filter(|o| o.period > 1) {
        let p0 = flow.period_of(&o.points);
        for k in 1..o.period {
            assert_eq!(flow.period_of(&o.rotated(k).points), p0);
        }
    }
}

#[test]
fn word_lengths() {
    let g = fuchsian_bolza().unwrap();
    let sys = bolza_systole();
    assert!((sys - 3.0571).abs() < 1e-4);
    for k in 0..8 {
        assert!((geodesic_length_word(&g, &[k]).unwrap() - sys).abs() < 1e-12);
    }
    let w = vec![0, 1, 6];
    let l = geodesic_length_word(&g, &w).unwrap();
    let conj = [vec![3], w.clone(), vec![7]].concat();
    assert!((geodesic_length_word(&g, &conj).unwrap() - l).abs() < 1e-10);
    assert!((geodesic_length_word(&g, &inverse_word(&w)).unwrap() - l).abs() < 1e-10);
    assert_eq!(canonical_word(&conj), canonical_word(&w));
    // The relation word maps to -I or I: not hyperbolic.
    assert!(geodesic_length_word(&g, &BOLZA_RELATION).is_err());
    assert!(geodesic_length_word(&g, &[0, 4]).is_err());
    assert!(geodesic_length_word(&g, &[]).is_err());
    let classes = enumerate_word_classes(&g, 2).unwrap();
    assert!((classes[0].length - sys).abs() < 1e-12);
    assert!(classes.windows(2).all(|p| p[0].length <= p[1].length));
}

#[test]
fn shortening_unperturbed_and_constant() {
    let g = fuchsian_bolza().unwrap();
    let disc = ShorteningDisc { n_points: 256, ..Default::default() };
    for w in [vec![0], vec![0, 1], vec![0, 2, 5]] {
        let l0 = geodesic_length_word(&g, &w).unwrap();
        let r = perturbed_geodesic_length(&g, &w, &ConformalFactor::zero(), &disc).unwrap();
        assert!((r.length - l0).abs() <= 1e-6, "{w:?}: {} vs {l0}", r.length);
        let c = 0.3;
        let r = perturbed_geodesic_length(&g, &w, &ConformalFactor::Constant { value: c }, &disc).unwrap();
        assert!((r.length - c.exp() * l0).abs() <= 1e-6 * c.exp());
    }
}

#[test]
fn shortening_first_order_slope() {
    let g = fuchsian_bolza().unwrap();
    let disc = ShorteningDisc { n_points: 512, ..Default::default() };
    let bump = ConformalFactor::bump(1.0, 1.0);
    for w in [vec![0], vec![0, 1]] {
        let mut rem = Vec::new();
        let eps = [1e-2, 5e-3, 2.5e-3];
        for &e in &eps {
            let r = perturbed_geodesic_length(&g, &w, &bump.scaled(e), &disc).unwrap();
            rem.push((r.length / r.unperturbed - 1.0 - r.axis_integral / r.unperturbed).abs());
        }
        // Richardson-style ratios: halving eps quarters an O(eps^2) remainder.
        for k in 0..2 {
            let slope = (rem[k] / rem[k + 1]).ln() / 2f64.ln();
            assert!((slope - 2.0).abs() < 0.1, "{w:?}: slope {slope}, remainders {rem:?}");
        }
    }
}

#[test]
fn shortening_monotone_and_equivariance() {
    let g = fuchsian_bolza().unwrap();
    let disc = ShorteningDisc { n_points: 128, ..Default::default() };
    let bump = ConformalFactor::bump(0.2, 1.2);
    assert!(bump.equivariance_residual(&g) <= 1e-9);
    assert!(bump.is_nonnegative());
    for w in [vec![0], vec![1, 2], vec![0, 3, 6]] {
        let l0 = geodesic_length_word(&g, &w).unwrap();
        let r = perturbed_geodesic_length(&g, &w, &bump, &disc).unwrap();
        assert!(r.length >= l0 - 1e-12);
    }
    let planar = ConformalFactor::Planar { modes: vec![([1, 0], 0.1)] };
    assert!(matches!(perturbed_geodesic_length(&g, &[0], &planar, &disc), Err(LabError::InvalidInput(_))));
    let too_big = ConformalFactor::bump(0.1, 2.0);
    assert!(perturbed_geodesic_length(&g, &[0], &too_big, &disc).is_err());
    let coarse = ShorteningDisc { n_points: 32, ..Default::default() };
    assert!(perturbed_geodesic_length(&g, &[0], &bump, &coarse).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn canonical_word_is_a_class_key(w in proptest::collection::vec(0usize..8, 1..7), k in 0usize..7) {
        let r = cyclic_reduce(&w);
        prop_assume!(!r.is_empty());
        let mut rot = r.clone();
        rot.rotate_left(k % r.len());
        prop_assert_eq!(canonical_word(&rot), canonical_word(&r));
        prop_assert_eq!(canonical_word(&inverse_word(&r)), canonical_word(&r));
    }

    #[test]
    fn rotated_orbits_keep_their_xray(seed in 0u64..1000) {
        let set = enumerate_periodic_orbits(&cat(), 5, DEFAULT_ORBIT_BUDGET).unwrap();
        let u = random_smooth(seed, 16);
        for o in set.orbits.iter().filter(|o| o.period > 1) {
            let a = xray(Observable::Map(&u), o).unwrap();
            let b = xray(Observable::Map(&u), &o.rotated(1)).unwrap();
            prop_assert!((a - b).abs() < 1e-13);
        }
    }
}
