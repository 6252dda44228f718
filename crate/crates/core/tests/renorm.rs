use gietlab::combinatorics::{Permutation, StepKind};
use gietlab::giet::perturb::{Bump, BumpShape};
use gietlab::giet::{Aiet, Giet, Grid};
use gietlab::renorm::partition::DEFAULT_ATOM_BUDGET;
use gietlab::renorm::*;
use gietlab::systems::System;
use gietlab::Error;

fn perturbed(sys: &System, amplitude: f64) -> Giet {
    let g = Bump::new(vec![(BumpShape::Sine(1), amplitude)]).map(&sys.grid).unwrap();
    sys.t0.conjugate_by(&g, &sys.grid).unwrap()
}

#[test]
fn elementary_steps_return_golden_map() {
    let sys = System::golden(65).unwrap();
    let mut t = sys.t0.clone();
    for &k in sys.lp.steps() {
        t = rauzy_step_giet(&t, k).unwrap();
    }
    assert!(t.cr_distance(&sys.t0, 0).unwrap() <= 1e-10);
}

#[test]
fn fixed_points_of_both_systems() {
    for sys in [System::golden(65).unwrap(), System::genus_two(65).unwrap()] {
        let r = renormalize(&sys.t0, &sys.lp).unwrap();
        assert!(r.cr_distance(&sys.t0, 0).unwrap() <= 1e-10, "{}", sys.name);
        assert!(r.cr_distance(&sys.t0, 1).unwrap() <= 1e-8, "{}", sys.name);
        assert_eq!(r.permutation(), sys.lp.base());
    }
}

#[test]
fn aiets_stay_affine() {
    let sys = System::genus_two(33).unwrap();
    let a = Aiet::from_log_slopes(sys.lp.base().clone(), sys.lambda0.clone(), &[1e-3, -2e-3, 5e-4, 0.0]).unwrap();
    let t = Giet::from_aiet(a, &sys.grid);
    let r = renormalize(&t, &sys.lp).unwrap();
    assert!(r.profiles().iter().all(|p| p.is_identity()));
    assert!(r.is_aiet());
}

#[test]
fn connections_are_refused() {
    let p = Permutation::from_one_based(&[2, 1]).unwrap();
    let t = Giet::from_aiet(Aiet::iet(p, vec![0.5, 0.5]).unwrap(), &Grid::uniform(9).unwrap());
    assert!(matches!(rauzy_step_giet(&t, StepKind::Top), Err(Error::Connection { .. })));
}

#[test]
fn maps_far_from_the_fixed_point_leave_the_domain() {
    let sys = System::genus_two(33).unwrap();
    let t = Giet::from_aiet(Aiet::iet(sys.lp.base().clone(), vec![0.7, 0.1, 0.1, 0.1]).unwrap(), &sys.grid);
    match renormalize(&t, &sys.lp) {
        Err(Error::Connection { .. }) | Err(Error::NotInDomain { .. }) => {}
        other => panic!("expected a domain exit, got {:?}", other.map(|g| g.affine().lambda().to_vec())),
    }
    let wrong = Giet::from_aiet(Aiet::iet(Permutation::from_one_based(&[4, 2, 3, 1]).unwrap(), vec![0.25; 4]).unwrap(), &sys.grid);
    assert!(matches!(renormalize(&wrong, &sys.lp), Err(Error::InvalidInput(_))));
}

#[test]
fn level_zero_partition() {
    let sys = System::genus_two(33).unwrap();
    let p = dynamical_partition(&sys.t0, &sys.lp, 0).unwrap();
    assert_eq!(p.heights, vec![1; 4]);
    let max = sys.lambda0.iter().copied().fold(0.0, f64::max);
    assert!((p.delta - max).abs() < 1e-15);
}

#[test]
fn heights_follow_the_matrix_power() {
    let sys = System::golden(33).unwrap();
    let p = dynamical_partition(&sys.t0, &sys.lp, 3).unwrap();
    let a3 = sys.lp.matrix().pow(3);
    let expected: Vec<u64> = a3.row_sums().iter().map(|x| u64::try_from(x).unwrap()).collect();
    assert_eq!(p.heights, expected);
    // Consecutive Fibonacci numbers.
    let mut h = p.heights.clone();
    h.sort();
    assert_eq!(h, vec![13, 21]);
    for sys in [System::golden(33).unwrap(), System::genus_two(33).unwrap()] {
        for n in 0..=6 {
            let p = dynamical_partition(&sys.t0, &sys.lp, n).unwrap();
            assert_eq!(p.heights, heights(&sys.lp, n).unwrap());
            for j in 0..sys.d() {
                assert_eq!(p.tower(j).len() as u64, p.heights[j]);
            }
        }
    }
}

#[test]
fn partitions_cover_and_nest() {
    let sys = System::golden(33).unwrap();
    let t = perturbed(&sys, 1e-3);
    let mut prev = dynamical_partition(&t, &sys.lp, 0).unwrap();
    for n in 0..=10 {
        let p = dynamical_partition(&t, &sys.lp, n).unwrap();
        assert!((p.measure - 1.0).abs() < 1e-9, "level {n}: {}", p.measure);
        assert!(p.max_defect < 1e-9);
        assert!(prev.is_refined_by(&p, 1e-12), "level {n}");
        prev = p;
    }
    let sys = System::genus_two(33).unwrap();
    for n in 0..=5 {
        let p = dynamical_partition(&sys.t0, &sys.lp, n).unwrap();
        assert!((p.measure - 1.0).abs() < 1e-9);
    }
}

#[test]
fn delta_decays_near_the_fixed_point() {
    let sys = System::genus_two(65).unwrap();
    let t = perturbed(&sys, 1e-3);
    let d: Vec<f64> = (0..=6).map(|n| partition_delta(&t, &sys.lp, n, DEFAULT_ATOM_BUDGET).unwrap().0).collect();
    let alpha = d.windows(2).map(|w| w[1] / w[0]).fold(0.0, f64::max);
    assert!(alpha < 1.0, "{d:?}");
}

#[test]
fn orbit_evaluation() {
    let sys = System::golden(65).unwrap();
    let t = perturbed(&sys, 1e-2);
    for k in 0..50 {
        let x = (k as f64 + 0.5) / 50.0;
        let j = t.branch_of(x);
        assert_eq!(orbit_eval(&t, &sys.lp, 0, j, x, 1000).unwrap(), t.eval(x).0);
    }
    for sys in [System::golden(65).unwrap(), System::genus_two(65).unwrap()] {
        let oracle = OrbitOracle::new(&sys.t0, &sys.lp, 4, DEFAULT_ATOM_BUDGET).unwrap();
        for j in 0..sys.d() {
            let (a, b) = sys.t0.domain(j);
            for k in 0..20 {
                let x = a + (b - a) * (k as f64 + 0.5) / 20.0;
                assert!((oracle.eval(&sys.t0, j, x) - sys.t0.branch_value(j, x)).abs() <= 1e-9);
            }
        }
    }
    assert!(matches!(orbit_eval(&t, &sys.lp, 8, 0, 0.1, 10), Err(Error::Budget { .. })));
}

#[test]
fn backends_agree_within_the_interpolation_bound() {
    for name in ["golden", "d4"] {
        let runs: Vec<CrossValidation> = [17usize, 33, 65, 129]
            .iter()
            .map(|&m| {
                let sys = if name == "golden" { System::golden(m) } else { System::genus_two(m) }.unwrap();
                let t = perturbed(&sys, 1e-2);
                cross_validate(&t, &sys.lp, 5, 100, DEFAULT_ATOM_BUDGET).unwrap()
            })
            .collect();
        let bound = interpolation_bound(&runs, 2.0);
        assert!(bound.pass, "{name}: {:?} vs {:?}", bound.finest_errors, bound.bounds);
    }
}

#[test]
fn traces() {
    let sys = System::genus_two(33).unwrap();
    let t = perturbed(&sys, 1e-3);
    let trace = RenormTrace::run(&t, &sys.lp, 6, true).unwrap();
    assert!(matches!(trace.status, TraceStatus::Completed));
    assert!(trace.levels.windows(2).all(|w| w[1].x < w[0].x));
    assert!(trace.levels.iter().all(|l| l.giet.permutation() == sys.lp.base()));
    let mut buf = Vec::new();
    trace.write_jsonl(&mut buf).unwrap();
    let back = RenormTrace::read_jsonl(std::str::from_utf8(&buf).unwrap()).unwrap();
    assert_eq!(back.len(), trace.levels.len());
    assert_eq!(back[3].giet.affine(), trace.levels[3].giet.affine());
    let (header, rows) = trace.csv_rows();
    assert_eq!(rows.len(), 7);
    assert!(rows.iter().all(|r| r.len() == header.len()));
}
