use gietlab::renorm::renormalize_n;
use gietlab::shadowing::*;
use gietlab::giet::{moebius_jet, Aiet, Giet, MonotoneMap};
use gietlab::giet::perturb::{Bump, BumpShape};
use gietlab::systems::System;
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn zero_input_is_the_fixed_point() {
    for sys in [System::golden(33).unwrap(), System::genus_two(33).unwrap()] {
        let p = ShadowingProblem::zero(&sys, 6, DEFAULT_ESCAPE_RADIUS);
        let r = shoot(&sys, &p, &ShootConfig::default()).unwrap();
        assert!(r.u_star.iter().all(|&u| u.abs() < 1e-14), "{:?}", r.u_star);
        assert_eq!(r.achieved_depth, 6);
        assert!(r.levels.iter().all(|l| l.c1 < 1e-9));
    }
}

#[test]
fn golden_bisection() {
    let sys = System::golden(65).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let p = ShadowingProblem::random_slice(&sys, &mut rng, 1e-3, 12, DEFAULT_ESCAPE_RADIUS).unwrap();
    assert!(p.slice);
    let r = shoot(&sys, &p, &ShootConfig::default()).unwrap();
    assert_eq!(r.strategy, Strategy::Bisection);
    assert_eq!(r.achieved_depth, 12);
    assert!(r.c1_fit.unwrap().rate < 1.0);
    // Escape depth is unimodal around u*.
    let mut trace = r.bisection_trace.clone();
    trace.sort_by(|a, b| a.0.total_cmp(&b.0));
    let peak = trace.iter().map(|t| t.1).max().unwrap();
    let first = trace.iter().position(|t| t.1 == peak).unwrap();
    let last = trace.iter().rposition(|t| t.1 == peak).unwrap();
    assert!(trace[..=first].windows(2).all(|w| w[0].1 <= w[1].1));
    assert!(trace[last..].windows(2).all(|w| w[0].1 >= w[1].1));
}

#[test]
fn genus_two_corrections_decay() {
    let sys = System::genus_two(65).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let p = ShadowingProblem::random_slice(&sys, &mut rng, 1e-4, 10, DEFAULT_ESCAPE_RADIUS).unwrap();
    let r = shoot(&sys, &p, &ShootConfig::default()).unwrap();
    assert_eq!(r.strategy, Strategy::Newton);
    assert_eq!(r.u_star.len(), 4);
    assert_eq!(r.achieved_depth, 10);
    assert!(r.correction_ratios.len() >= 3, "{:?}", r.corrections);
    let worst = r.max_correction_ratio_from(2).unwrap();
    assert!(worst < 1.0, "{worst} vs {}", r.lambda2_inverse);
    assert!(r.lambda2_inverse < 1.0);
}

#[test]
fn slice_is_invariant() {
    let sys = System::genus_two(65).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let p = ShadowingProblem::random_slice(&sys, &mut rng, 1e-3, 8, DEFAULT_ESCAPE_RADIUS).unwrap();
    let t = p.map(&sys, &DVector::zeros(4)).unwrap();
    let (levels, _) = renormalize_n(&t, &sys.lp, 3).unwrap();
    let base = t.total_nonlinearity();
    assert!(base.abs() < 1e-12);
    for l in &levels {
        assert!((l.total_nonlinearity() - base).abs() <= 1e-8);
    }
}

#[test]
fn cones() {
    let sys = System::genus_two(33).unwrap();
    let zero = ShadowingProblem::zero(&sys, 1, DEFAULT_ESCAPE_RADIUS);
    let u = DVector::from_vec(vec![1e-4, -5e-5, 2e-5, 1e-5]);
    let x = zero.map(&sys, &u).unwrap();
    let rep = cone_check(&sys, &x, &sys.t0, 1e-3).unwrap();
    assert!(rep.in_cone && rep.ratio < 1e-6);
    assert!(rep.lambda1 > 1.0 && rep.expansion >= 0.99 * rep.lambda1, "{rep:?}");

    let mut stable = zero.clone();
    stable.s = vec![1e-4, 0.0];
    let y = stable.map(&sys, &DVector::zeros(4)).unwrap();
    assert!(!cone_check(&sys, &y, &sys.t0, 0.1).unwrap().in_cone);

    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..100 {
        let u: DVector<f64> = DVector::from_fn(4, |_, _| rng.gen_range(-1e-3..1e-3));
        let small: f64 = 0.2 * u.norm();
        let mut p = zero.clone();
        p.s = vec![rng.gen_range(-small..small), rng.gen_range(-small..small)];
        p.profiles = (0..4)
            .map(|_| Bump::random_slice(&mut rng, 0.1 * small, 2).map(&sys.grid).unwrap())
            .collect();
        let x = p.map(&sys, &u).unwrap();
        let rep = cone_check(&sys, &x, &sys.t0, DEFAULT_CONE_DELTA).unwrap();
        assert!(rep.in_cone, "{rep:?}");
        assert!(rep.image_in_cone && rep.image_ratio < rep.ratio, "{rep:?}");
    }
}

#[test]
fn diagnostics_at_the_fixed_point() {
    let sys = System::golden(33).unwrap();
    let d = convergence_diagnostics(&sys, &sys.t0, 6, 4, 1_000_000, 2).unwrap();
    for l in &d.levels {
        assert!(l.moebius_c1 == 0.0 && l.aiet_c1 == 0.0 && l.t0_c1 < 1e-9);
    }
}

#[test]
fn stable_aiets_decay_at_the_stable_rate() {
    let sys = System::genus_two(33).unwrap();
    let p = ShadowingProblem { s: vec![1e-7, 0.0], ..ShadowingProblem::zero(&sys, 1, DEFAULT_ESCAPE_RADIUS) };
    let t = p.map(&sys, &DVector::zeros(4)).unwrap();
    let d = convergence_diagnostics(&sys, &t, 6, 0, 1000, 1).unwrap();
    assert!(d.levels.iter().all(|l| l.aiet_c1 == 0.0));
    let expected = sys.jacobian_moduli()[sys.dim_unstable()];
    let rate = d.t0_fit.unwrap().rate;
    assert!((rate - expected).abs() <= 0.1 * expected, "{rate} vs {expected}");
}

#[test]
fn shadowed_maps_converge_in_cascade() {
    let sys = System::golden(65).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let p = ShadowingProblem::random_slice(&sys, &mut rng, 1e-3, 14, DEFAULT_ESCAPE_RADIUS).unwrap();
    let r = shoot(&sys, &p, &ShootConfig::default()).unwrap();
    let t = r.map(&sys, &p).unwrap();
    let d = convergence_diagnostics(&sys, &t, 12, 8, 50_000_000, 2).unwrap();
    for f in [&d.delta_fit, &d.moebius_fit, &d.aiet_fit, &d.t0_fit] {
        assert!(f.as_ref().unwrap().rate < 1.0, "{d:#?}");
    }
    assert!(d.nonlinearity_drift <= 1e-8);
}

#[test]
fn moebius_fits() {
    let sys = System::golden(65).unwrap();
    let m = MonotoneMap::from_fn(&sys.grid, |x| moebius_jet(1.3, x)).unwrap();
    let f = moebius_fit(&m);
    assert!((f.k - 1.3).abs() < 1e-10 && f.c1_residual <= 1e-9);
    let id = moebius_fit(&MonotoneMap::identity(&sys.grid));
    assert_eq!(id.k, 1.0);
    let k = gietlab::shadowing::moebius::moebius_parameter(0.2);
    assert!((2.0 * k.ln() - 0.2).abs() < 1e-15);
    let bumped = Bump::new(vec![(BumpShape::Parabola, 0.05)]).map(&sys.grid).unwrap();
    let fit = moebius_fit(&bumped);
    assert!(fit.c1_residual > 0.0);
    assert!((fit.integral_eta - 2.0 * fit.k.ln()).abs() < 1e-12);
    let _ = (Aiet::iet, Giet::from_aiet);
}
