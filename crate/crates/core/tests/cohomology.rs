use gietlab::cohomology::*;
use gietlab::giet::{Aiet, Giet};
use gietlab::renorm::dynamical_partition;
use gietlab::shadowing::{shoot, ShadowingProblem, ShootConfig};
use gietlab::systems::System;
use gietlab::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn shoot_output(sys: &System, seed: u64, depth: usize) -> Giet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = ShadowingProblem::random_slice(sys, &mut rng, 1e-3, depth, 1e-2).unwrap();
    let r = shoot(sys, &p, &ShootConfig::default()).unwrap();
    r.map(sys, &p).unwrap()
}

fn generic_aiet(sys: &System) -> Giet {
    let a = Aiet::from_log_slopes(sys.t0.permutation().clone(), sys.lambda0.clone(), &[0.1, -0.05, 0.2, -0.1]).unwrap();
    Giet::from_aiet(a, &sys.grid)
}

#[test]
fn zero_function_has_zero_solution() {
    let sys = System::genus_two(65).unwrap();
    let cfg = CohomConfig { orbit_length: 20_000, grid_size: 4097, ..Default::default() };
    let sol = solve_cohomological(&sys.t0, &|_| 0.0, &cfg).unwrap();
    assert_eq!(sol.u.sup(), 0.0);
    assert_eq!(sol.residual, 0.0);
    assert_eq!(sol.boundedness.growth, 1.0);
}

#[test]
fn manufactured_coboundary_is_recovered() {
    let sys = System::genus_two(257).unwrap();
    let t = shoot_output(&sys, 11, 8);
    let g = |x: f64| 0.1 * (2.0 * std::f64::consts::PI * x).sin() + 0.3 * x * x;
    let f = |x: f64| g(t.eval(x).0) - g(x);
    let sol = solve_cohomological(&t, &f, &CohomConfig::default()).unwrap();
    let err = (0..=1000).map(|k| k as f64 / 1000.0).map(|x| (sol.eval(x) - (g(x) - g(0.0))).abs()).fold(0.0, f64::max);
    assert!(err <= 1e-6, "error {err}");
    assert!(sol.within_tolerance);
}

#[test]
fn reference_map_has_flat_density() {
    let sys = System::golden(65).unwrap();
    let cfg = CohomConfig { orbit_length: 20_000, grid_size: 4097, ..Default::default() };
    let (sol, h) = conjugacy_to_reference(&sys.t0, &sys.t0, &cfg).unwrap();
    assert!(sol.u.sup() < 1e-9);
    assert!(h.density.values.iter().all(|m| (m - 1.0).abs() < 1e-9));
    assert!(h.c1_distance < 1e-9);
    assert!(h.conjugates_t0_to_t);
}

#[test]
fn shoot_outputs_are_conjugate_to_the_reference() {
    for (sys, depth) in [(System::golden(257).unwrap(), 14), (System::genus_two(257).unwrap(), 10)] {
        let t = shoot_output(&sys, 5, depth);
        let (sol, h) = conjugacy_to_reference(&t, &sys.t0, &CohomConfig::default()).unwrap();
        assert!(sol.boundedness.growth <= 1.05, "growth {}", sol.boundedness.growth);
        assert!(sol.residual <= 1e-5, "residual {}", sol.residual);
        assert!(h.conjugacy_residual <= 1e-5 && h.break_error <= 1e-5);
        assert!(h.linear_constant.is_some());
        for n in 1..=6 {
            let p0 = dynamical_partition(&sys.t0, &sys.lp, n).unwrap();
            let p = dynamical_partition(&t, &sys.lp, n).unwrap();
            let a = atom_alignment(&h, &p0, &p);
            assert!(a.measure_error <= 1e-4 && a.endpoint_error <= 1e-4, "{a:?}");
        }
    }
}

#[test]
fn generic_aiet_has_unbounded_sums() {
    let sys = System::genus_two(65).unwrap();
    let t = generic_aiet(&sys);
    let ld = log_derivative(&t);
    let b = boundedness_check(&t, &ld, 25_000, &base_points(8), 1e-9);
    assert!(b.growth >= 2.0, "growth {}", b.growth);
    match solve_cohomological(&t, &ld, &CohomConfig::default()) {
        Err(Error::Boundedness { growth, .. }) => assert!(growth > 1.05),
        other => panic!("expected a boundedness error, got {other:?}"),
    }
}

#[test]
fn special_times_match_direct_iteration() {
    let sys = System::genus_two(257).unwrap();
    let t = shoot_output(&sys, 3, 8);
    let stack = LevelStack::new(&t, &sys.lp, 6).unwrap();
    let hmax = *stack.heights[6].iter().max().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..200 {
        let n = rng.gen_range(0..=hmax);
        let x = rng.gen_range(0.0..1.0);
        let d = decompose(&stack, n, x).unwrap();
        let (y, s) = direct_orbit(&t, n, x);
        assert!((d.value - y).abs() <= 1e-9, "n {n} x {x}: {} vs {y}", d.value);
        assert!((d.log_derivative_sum - s).abs() <= 1e-9);
        assert!(d.max_coefficient() <= stack.max_return);
    }
}

#[test]
fn fibonacci_time_is_one_top_level_return() {
    let sys = System::golden(65).unwrap();
    let stack = LevelStack::new(&sys.t0, &sys.lp, 8).unwrap();
    for k in 1..8 {
        let x = 0.5 * (stack.scales[k] + stack.scales[k + 1]);
        let j = stack.levels[k].branch_of(x / stack.scales[k]);
        let d = decompose(&stack, stack.heights[k][j], x).unwrap();
        let nonzero: Vec<(usize, u64)> = d.ascent.iter().copied().enumerate().filter(|(_, c)| *c > 0).collect();
        assert_eq!(nonzero, vec![(k, 1)]);
        assert!(d.descent.iter().all(|c| *c == 0));
    }
}

#[test]
fn ratio_test_controls() {
    let sys = System::golden(65).unwrap();
    let parts: Vec<_> = (0..=10).map(|k| dynamical_partition(&sys.t0, &sys.lp, k).unwrap()).collect();
    let id = fine_grid_ratio_test(&|x| x, &parts, 1);
    assert!(id.qualifies);
    assert!(id.levels.iter().all(|l| l.discrepancy < 1e-9));
    assert!((id.adjacency - 1.618034).abs() < 1e-3);
    let salem = salem_map(0.3);
    let s = fine_grid_ratio_test(&salem, &parts, 1);
    assert!(s.fit.unwrap().rate > 1.0);
    assert!(s.levels.last().unwrap().discrepancy > s.levels[1].discrepancy);
}

#[test]
fn golden_conjugacy_passes_the_ratio_test() {
    let sys = System::golden(257).unwrap();
    let t = shoot_output(&sys, 5, 14);
    let (_, h) = conjugacy_to_reference(&t, &sys.t0, &CohomConfig::default()).unwrap();
    let parts: Vec<_> = (0..=12).map(|k| dynamical_partition(&sys.t0, &sys.lp, k).unwrap()).collect();
    let hv = |y: f64| h.value(y);
    let r = fine_grid_ratio_test(&hv, &parts, 4);
    let fit = r.fit.unwrap();
    assert!(fit.rate < 1.0 && fit.r_squared >= 0.9, "{fit:?}");
    assert!(r.delta_estimate.unwrap() > 0.0);
}

#[test]
fn holder_seminorm_of_linear_function() {
    let xs: Vec<f64> = (0..=200).map(|k| k as f64 / 200.0).collect();
    for delta in [0.25, 0.5, 1.0] {
        let v = holder_seminorm(&xs, &xs, delta, usize::MAX, 0);
        assert!((v - 1.0).abs() < 0.05);
        assert_eq!(holder_seminorm(&xs, &vec![2.0; xs.len()], delta, usize::MAX, 0), 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn holder_product_bound(seed in 0u64..1000, delta in 0.1f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let xs: Vec<f64> = (0..=60).map(|k| k as f64 / 60.0).collect();
        let u: Vec<f64> = xs.iter().map(|_| rng.gen_range(-1.0..1.0)).collect();
        let v: Vec<f64> = xs.iter().map(|_| rng.gen_range(-1.0..1.0)).collect();
        let uv: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a * b).collect();
        let sup = |w: &[f64]| w.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let s = |w: &[f64]| holder_seminorm(&xs, w, delta, usize::MAX, 0);
        prop_assert!(s(&uv) <= sup(&u) * s(&v) + sup(&v) * s(&u) + 1e-12);
    }

    #[test]
    fn salem_maps_are_increasing(a in 0.05f64..0.95, x in 0.0f64..1.0, dx in 1e-6f64..0.1) {
        let s = salem_map(a);
        prop_assert!(s(x) <= s((x + dx).min(1.0)));
    }
}
