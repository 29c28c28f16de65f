use anosov_lab::cohomology::CocycleWeight;
use anosov_lab::lp_calculus::{ConeSymbol, Grid2Field, RadialProfile};
use anosov_lab::systems::*;
use anosov_lab::thresholds::*;
use anosov_lab::LabError;
use proptest::prelude::*;
use std::f64::consts::PI;

fn cat() -> AnosovMap {
    cat_map_system(CAT).unwrap()
}

fn unit_suspension() -> AnosovFlow {
    suspension_flow(&cat(), &Grid2Field::constant(16, 1.0).unwrap()).unwrap()
}

fn potential(v: Grid2Field) -> CocycleWeight {
    CocycleWeight::Potential(v)
}

fn flat() -> MetricChoice {
    MetricChoice::Flat
}

#[test]
fn trivial_weight_is_exactly_zero() {
    let zero = potential(Grid2Field::zeros(8).unwrap());
    let flow = unit_suspension();
    for sys in [SystemRef::Map(&cat()), SystemRef::Flow(&flow)] {
        let r = forward_threshold(sys, &zero, 6, RhoGrid::default(), flat()).unwrap();
        assert_eq!((r.omega_plus, r.omega_minus), (0.0, 0.0));
    }
    let phase = CocycleWeight::Phase(Grid2Field::from_real_fn(8, |x| (2.0 * PI * x[0]).sin()).unwrap());
    let r = forward_threshold(SystemRef::Map(&cat()), &phase, 6, RhoGrid::default(), flat()).unwrap();
    assert_eq!((r.omega_plus, r.omega_minus), (0.0, 0.0));
}

#[test]
fn constant_weight_closed_form() {
    let l = cat().log_lambda();
    let w = potential(Grid2Field::constant(8, l / 2.0).unwrap());
    let flow = unit_suspension();
    let r = forward_threshold(SystemRef::Flow(&flow), &w, 8, RhoGrid::default(), flat()).unwrap();
    assert!((r.omega_plus - 0.5).abs() <= 1.0 / 64.0);
    assert!((r.omega_plus_grid - 0.5).abs() <= 1.0 / 64.0);
    assert_eq!(r.omega_minus, 0.0);
    // Roof 2 halves the expansion rate but not the per-time weight.
    let slow = suspension_flow(&cat(), &Grid2Field::constant(16, 2.0).unwrap()).unwrap();
    let r2 = forward_threshold(SystemRef::Flow(&slow), &w, 8, RhoGrid::default(), flat()).unwrap();
    assert!((r2.omega_plus - 1.0).abs() <= 1.0 / 64.0);
    let big = potential(Grid2Field::constant(8, 10.0).unwrap());
    assert!(matches!(forward_threshold(SystemRef::Map(&cat()), &big, 6, RhoGrid::default(), flat()), Err(LabError::InvalidInput(m)) if m.contains("grid too narrow")));
    assert!(forward_threshold(SystemRef::Map(&cat()), &big, 3, RhoGrid::default(), flat()).is_err());
}

#[test]
fn cosine_weight_two_ways() {
    let v = Grid2Field::from_real_fn(16, |x| 0.3 * (2.0 * PI * x[0]).cos()).unwrap();
    let r = forward_threshold(SystemRef::Map(&cat()), &potential(v.clone()), 8, RhoGrid::default(), flat()).unwrap();
    let top = max_weight_rate(&r);
    assert!((r.omega_plus - top.max(0.0) / cat().log_lambda()).abs() < 1e-10);
    let spec = SubadditiveSpec { family: SubadditiveFamily::Birkhoff(v), lattice_n: 64, seed: 3 };
    let d = subadditive_limit(&spec, SystemRef::Map(&cat()), 10, 8).unwrap();
    let doubled = d.doubling.last().unwrap().value;
    assert!(((doubled - top) / top).abs() < 0.01);
}

#[test]
fn threshold_is_metric_independent() {
    let v = Grid2Field::from_real_fn(16, |x| 0.4 + 0.2 * (2.0 * PI * x[1]).sin()).unwrap();
    let a = forward_threshold(SystemRef::Map(&cat()), &potential(v.clone()), 7, RhoGrid::default(), flat()).unwrap();
    let b = forward_threshold(SystemRef::Map(&cat()), &potential(v), 7, RhoGrid::default(), MetricChoice::Sheared { shear: 0.7 }).unwrap();
    assert!((a.omega_plus - b.omega_plus).abs() <= 1.0 / 64.0);
    assert!((a.omega_minus - b.omega_minus).abs() <= 1.0 / 64.0);
}

#[test]
fn subadditive_examples() {
    let c = cat();
    for (value, expect) in [(0.0, 0.0), (1.0, 1.0)] {
        let spec = SubadditiveSpec { family: SubadditiveFamily::Birkhoff(Grid2Field::constant(8, value).unwrap()), lattice_n: 32, seed: 1 };
        let r = subadditive_limit(&spec, SystemRef::Map(&c), 6, 5).unwrap();
        assert!(r.doubling.iter().all(|d| d.value == expect));
        assert_eq!(r.orbit_max, Some(expect));
    }
    let v = Grid2Field::from_real_fn(16, |x| (2.0 * PI * x[0]).cos()).unwrap();
    let spec = SubadditiveSpec { family: SubadditiveFamily::Birkhoff(v), lattice_n: 64, seed: 2 };
    let r = subadditive_limit(&spec, SystemRef::Map(&c), 10, 12).unwrap();
    assert!(r.doubling.windows(2).all(|w| w[1].value <= w[0].value + 1e-12));
    assert!(r.gap.unwrap().abs() <= 0.01 * r.orbit_max.unwrap());
    assert!(r.spot_check_violation <= 1e-9);
    // Log cocycle norm: exact for the linear map, nonincreasing otherwise.
    let spec = SubadditiveSpec { family: SubadditiveFamily::LogCocycleNorm, lattice_n: 8, seed: 4 };
    let r = subadditive_limit(&spec, SystemRef::Map(&c), 8, 4).unwrap();
    // A is symmetric, so |A^n| = lambda^n and every doubling value is exact.
    assert!(r.gap.unwrap().abs() < 1e-12);
    assert!(r.doubling.iter().all(|d| (d.value - c.log_lambda()).abs() < 1e-12));
    let pert = perturbed_cat_map(&c, 0.01, TrigPerturbation::sin_x2(), 64).unwrap();
    let r = subadditive_limit(&spec, SystemRef::Map(&pert), 7, 4).unwrap();
    assert!(r.doubling.windows(2).all(|w| w[1].value <= w[0].value + 1e-9));
    assert!(r.orbit_max.is_none());
}

#[test]
fn foliation_bounds() {
    let flow = unit_suspension();
    let pts: Vec<[f64; 2]> = (0..6).map(|i| [0.1 + 0.13 * i as f64, 0.37 * i as f64 % 1.0]).collect();
    let lyap = lyapunov_data(SystemRef::Flow(&flow), &pts, 64).unwrap();
    let b = foliation_threshold(&lyap, false).unwrap();
    assert!((b - 2.0).abs() < 1e-12, "{b}");
    assert_eq!(foliation_threshold(&lyap, true).unwrap(), 2.0f64.min(b));
    let mut fake = lyap.clone();
    fake.lambda_u_min = 0.95;
    fake.lambda_u_max = 0.97;
    fake.lambda_s_min = 0.95;
    fake.lambda_s_max = 0.97;
    assert!((foliation_threshold(&fake, false).unwrap() - (0.97 + 0.97) / 0.95).abs() < 1e-15);
    assert!((foliation_threshold(&fake, true).unwrap() - 2.0).abs() < 1e-15);
    fake.lambda_s_min = 0.0;
    assert!(foliation_threshold(&fake, false).is_err());
}

#[test]
fn cone_ratio_examples() {
    let flow = unit_suspension();
    let sys = SystemRef::Flow(&flow);
    let frame = splitting_at(sys, [0.2, 0.3], 40).unwrap();
    let axis = frame.cov_s.clone();
    let pts = [[0.1, 0.2], [0.5, 0.7], [0.33, 0.91]];
    let mut widths = Vec::new();
    for theta in [0.4, 0.2, 0.1, 0.05] {
        let cone = ConeSymbol::cone(&axis, theta, 0.5, RadialProfile::everything()).unwrap();
        let r = cone_expansion_equivalence_check(sys, &cone, &pts, 10).unwrap();
        // Constant splitting: identical ratios at every point.
        for &(_, lo, hi) in &r.per_time {
            assert!(hi - lo < 1e-12);
        }
        assert!(r.min >= 1.0 - 1e-12 && r.max < 1.0 / theta.cos() + 1e-9);
        widths.push(r.max - r.min);
    }
    assert!(widths.windows(2).all(|w| w[1] <= w[0] + 1e-15), "{widths:?}");
    for t in [1, 5, 10] {
        let r = covector_ratio(sys, [0.4, 0.1], &axis, t).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
    }
    let wrong = ConeSymbol::cone(&frame.cov_u, 0.3, 0.5, RadialProfile::everything()).unwrap();
    assert!(matches!(cone_expansion_equivalence_check(sys, &wrong, &pts, 3), Err(LabError::ConeViolation { .. })));
}

#[test]
fn integral_threshold() {
    let c = cat();
    let zero = Grid2Field::zeros(8).unwrap();
    let r = sobolev_threshold_integral(SystemRef::Map(&c), &zero, RhoGrid::default(), 8, 64).unwrap();
    assert_eq!(r.omega, 0.0);
    let k = Grid2Field::constant(8, 0.3).unwrap();
    let s = sobolev_threshold_integral(SystemRef::Map(&c), &k, RhoGrid::default(), 8, 64).unwrap();
    let f = forward_threshold(SystemRef::Map(&c), &potential(k), 6, RhoGrid::default(), flat()).unwrap();
    assert!((s.omega - f.omega_plus).abs() <= 1.0 / 64.0);
    let v = Grid2Field::from_real_fn(16, |x| 0.3 * (2.0 * PI * x[0]).cos()).unwrap();
    let s = sobolev_threshold_integral(SystemRef::Map(&c), &v, RhoGrid::default(), 12, 512).unwrap();
    let f = forward_threshold(SystemRef::Map(&c), &potential(v), 8, RhoGrid::default(), flat()).unwrap();
    assert!(s.omega <= f.omega_plus);
    assert!(f.omega_plus - s.omega > 0.1, "{} vs {}", s.omega, f.omega_plus);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn threshold_monotone_in_weight(a in -0.5f64..0.5, b in -0.5f64..0.5, bump in 0.0f64..0.5) {
        let v = Grid2Field::from_real_fn(8, |x| a * (2.0 * PI * x[0]).cos() + b * (2.0 * PI * x[1]).sin()).unwrap();
        let w = Grid2Field::from_real_fn(8, |x| a * (2.0 * PI * x[0]).cos() + b * (2.0 * PI * x[1]).sin() + bump * (1.0 + (2.0 * PI * x[0]).cos())).unwrap();
        let lo = forward_threshold(SystemRef::Map(&cat()), &potential(v), 5, RhoGrid::default(), flat()).unwrap();
        let hi = forward_threshold(SystemRef::Map(&cat()), &potential(w), 5, RhoGrid::default(), flat()).unwrap();
        prop_assert!(hi.omega_plus >= lo.omega_plus - 1e-12);
        prop_assert!(lo.omega_plus >= 0.0 && lo.omega_minus >= 0.0);
    }
}
