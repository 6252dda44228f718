use gietlab::affine::*;
use gietlab::combinatorics::{enumerate_loops, irreducible_permutations, is_admissible_fixed_point, Hyperbolicity};
use gietlab::giet::{Aiet, Grid};
use gietlab::systems::System;
use nalgebra::DVector;

#[test]
fn geometric_counts_match_loop_matrices() {
    for sys in [System::golden(17).unwrap(), System::genus_two(17).unwrap()] {
        assert_eq!(&intersection_matrix_from_partition(&sys.t0, &sys.lp).unwrap(), sys.lp.matrix());
        assert_eq!(intersection_matrix_at_level(&sys.t0, &sys.lp, 2).unwrap(), sys.lp.matrix().pow(2));
    }
}

#[test]
fn geometric_counts_for_every_small_admissible_loop() {
    let grid = Grid::uniform(2).unwrap();
    let mut checked = 0;
    for d in 2..=5 {
        let max_len = if d == 5 { 6 } else { 8 };
        for pi in irreducible_permutations(d) {
            for lp in enumerate_loops(&pi, max_len).unwrap() {
                let rep = is_admissible_fixed_point(&lp);
                if rep.positivity_power.is_none() || rep.hyperbolicity != Hyperbolicity::Hyperbolic {
                    continue;
                }
                let Ok(t0) = fixed_aiet(&lp, &grid) else { continue };
                intersection_matrix_from_partition(&t0, &lp).unwrap();
                checked += 1;
            }
        }
    }
    assert!(checked > 20, "{checked}");
}

#[test]
fn golden_spectrum_and_lengths() {
    let sys = System::golden(17).unwrap();
    let s = &sys.spectrum;
    assert!((s.moduli[0] - 2.618033988749895).abs() < 1e-12);
    assert!((s.moduli[1] - 0.381966011250105).abs() < 1e-12);
    assert!((s.moduli[0] * s.moduli[1] - 1.0).abs() < 1e-12);
    assert!((sys.lambda0[0] - 0.6180339887498949).abs() < 1e-12);
    assert!((sys.lambda0[1] - 0.3819660112501051).abs() < 1e-12);
}

#[test]
fn genus_two_spectrum() {
    let sys = System::genus_two(17).unwrap();
    let s = &sys.spectrum;
    assert_eq!((s.expanding, s.contracting, s.indeterminate), (2, 2, 0));
    assert!(s.reciprocal_pairing_error < 1e-8);
    assert!(s.perron_vector.iter().all(|&x| x > 0.0));
    let err = s.perron_vector.iter().zip(&sys.lambda0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(err < 1e-10);
    let sq = spectrum(&sys.lp.matrix().pow(2));
    let err = sq.perron_vector.iter().zip(&s.perron_vector).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(err < 1e-10);
    assert!((sq.perron_value - s.perron_value * s.perron_value).abs() < 1e-8 * sq.perron_value);
}

#[test]
fn slope_cocycle_examples() {
    let sys = System::golden(17).unwrap();
    assert_eq!(slope_cocycle(sys.lp.matrix(), &[0.0, 0.0]), vec![0.0, 0.0]);
    let t = 1e-3;
    let mu = [t, -t * sys.lambda0[0] / sys.lambda0[1]];
    let a = Aiet::from_log_slopes(sys.lp.base().clone(), sys.lambda0.clone(), &mu).unwrap();
    assert!(slope_cocycle_error(&a, &sys.lp, &sys.grid).unwrap() <= 1e-9);

    let sys = System::genus_two(17).unwrap();
    let mu = [2e-3, -1e-3, 1e-3, -5e-4];
    let l2: Vec<f64> = sys.lambda0.iter().zip([1.0005, 0.9995, 1.0002, 0.9998]).map(|(l, f)| l * f).collect();
    for l in [sys.lambda0.clone(), l2] {
        let a = Aiet::from_log_slopes(sys.lp.base().clone(), l, &mu).unwrap();
        let expected = slope_cocycle(sys.lp.matrix(), &a.mu());
        let g = gietlab::giet::Giet::from_aiet(a, &sys.grid);
        let got = gietlab::renorm::renormalize(&g, &sys.lp).unwrap().affine().mu();
        let diff = got.iter().zip(&expected).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(diff <= 1e-9, "{diff}");
    }
}

#[test]
fn splitting_dimensions() {
    let g = System::golden(17).unwrap();
    assert_eq!(g.splitting.dim_unstable(), 1);
    assert_eq!(g.splitting.dim_stable(), 1);
    let d4 = System::genus_two(17).unwrap();
    assert_eq!(d4.splitting.dim_unstable(), 4);
    assert_eq!(d4.splitting.dim_stable(), 2);
    for sys in [&g, &d4] {
        assert!(sys.splitting.orthonormality_error() < 1e-10);
        assert!(constraint_invariance_error(sys.lp.matrix(), &sys.lambda0) <= 1e-9);
        let plain = splitting(sys.lp.matrix(), &sys.lambda0).unwrap();
        assert_eq!(plain.dim_unstable(), sys.splitting.dim_unstable());
    }
}

#[test]
fn derivative_blocks() {
    for sys in [System::golden(17).unwrap(), System::genus_two(17).unwrap()] {
        let rep = derivative_block_check(&sys.lp, &sys.lambda0, &sys.jacobian, 1e-6);
        assert!(rep.lambda_to_mu_norm <= 1e-6, "{}", rep.lambda_to_mu_norm);
        assert!(rep.pass, "{}: {rep:?}", sys.name);
        assert!(rep.prediction_error <= 1e-4, "{}", rep.prediction_error);
        assert_eq!(rep.expanding, rep.expected_unstable);
    }
}

#[test]
fn chart_roundtrip() {
    let sys = System::genus_two(17).unwrap();
    let a = Aiet::from_log_slopes(sys.lp.base().clone(), vec![0.3, 0.2, 0.25, 0.25], &[0.01, -0.02, 0.0, 0.01]).unwrap();
    let w = chart(&a, &sys.lambda0);
    let back = chart_inverse(&w, &sys.lp, &sys.lambda0).unwrap();
    assert!(back.distance(&a) < 1e-12);
    let far = DVector::from_element(8, -1.0);
    assert!(chart_inverse(&far, &sys.lp, &sys.lambda0).is_err());
}
