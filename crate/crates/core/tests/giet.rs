use gietlab::combinatorics::Permutation;
use gietlab::giet::perturb::Bump;
use gietlab::giet::{eta_distance, moebius_jet, Aiet, Giet, Grid, Jet, MonotoneMap};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn moebius(k: f64, n: usize) -> MonotoneMap {
    MonotoneMap::from_fn(&Grid::uniform(n).unwrap(), |x| moebius_jet(k, x)).unwrap()
}

/// `x + a x (1 − x)(1 + x)/2`, increasing for small `a`.
fn cubic_jet(a: f64, x: f64) -> Jet {
    let c = 0.5 * a;
    Jet::new(x + c * (x - x * x * x), 1.0 + c * (1.0 - 3.0 * x * x), -6.0 * c * x, -6.0 * c)
}

fn sine_jet(a: f64, x: f64) -> Jet {
    let w = 2.0 * std::f64::consts::PI;
    let s = a / w;
    Jet::new(x + s * (w * x).sin(), 1.0 + a * (w * x).cos(), -a * w * (w * x).sin(), -a * w * w * (w * x).cos())
}

#[test]
fn identity_map() {
    let f = MonotoneMap::identity(&Grid::uniform(17).unwrap());
    for k in 0..=40 {
        let x = k as f64 / 40.0;
        assert_eq!(f.eval(x).unwrap(), x);
        assert_eq!(f.deriv(x).unwrap(), 1.0);
        assert_eq!(f.deriv2(x).unwrap(), 0.0);
        assert_eq!(f.eta(x).unwrap(), 0.0);
    }
    assert!(f.eval(1.5).is_err());
    assert!(f.eval(-0.1).is_err());
}

#[test]
fn moebius_values_and_nonlinearity() {
    let f = moebius(2.0, 257);
    assert!((f.eval(0.5).unwrap() - 1.0 / 3.0).abs() < 1e-15);
    for k in 0..97 {
        let x = (k as f64 + 0.37) / 97.0;
        assert!((f.eta(x).unwrap() - 2.0 / (2.0 - x)).abs() < 1e-8, "x = {x}");
    }
}

#[test]
fn interpolation_error_is_fourth_order() {
    let mut hs = vec![];
    let mut errs = vec![];
    for n in [9usize, 17, 33, 65] {
        let f = MonotoneMap::from_fn(&Grid::uniform(n).unwrap(), |x| sine_jet(0.1, x)).unwrap();
        let e = (0..1000)
            .map(|k| (k as f64 + 0.5) / 1000.0)
            .map(|x| (f.eval(x).unwrap() - sine_jet(0.1, x).v).abs().max((f.deriv(x).unwrap() - sine_jet(0.1, x).d1).abs()))
            .fold(0.0, f64::max);
        hs.push(1.0 / (n - 1) as f64);
        errs.push(e);
    }
    let lx: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
    let ly: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    let fit = gietlab::fit::line_fit(&lx, &ly).unwrap();
    assert!(fit.slope >= 3.5, "order {} from {errs:?}", fit.slope);
}

#[test]
fn closed_form_roundtrip() {
    let f = MonotoneMap::from_fn(&Grid::uniform(129).unwrap(), |x| cubic_jet(0.3, x)).unwrap();
    for k in 0..50 {
        let x = (k as f64 + 0.21) / 50.0;
        let j = cubic_jet(0.3, x);
        // The cubic is reproduced exactly by quintic Hermite cells.
        assert!((f.eval(x).unwrap() - j.v).abs() < 1e-14);
        assert!((f.deriv(x).unwrap() - j.d1).abs() < 1e-12);
        assert!((f.deriv2(x).unwrap() - j.d2).abs() < 1e-10);
    }
}

#[test]
fn inversion() {
    let g = Grid::uniform(129).unwrap();
    assert!(MonotoneMap::identity(&g).invert().unwrap().is_identity());
    let f = moebius(2.0, 129);
    let inv = f.invert().unwrap();
    for k in 0..=64 {
        let y = k as f64 / 64.0;
        assert!((inv.eval(y).unwrap() - 2.0 * y / (1.0 + y)).abs() < 1e-10);
    }
    let back = inv.invert().unwrap();
    let tol = 1e-10;
    for k in 0..=64 {
        let x = (k as f64 + 0.3) / 65.0;
        assert!((back.eval(x).unwrap() - f.eval(x).unwrap()).abs() < 2.0 * tol);
    }
}

#[test]
fn composition() {
    let f = MonotoneMap::from_fn(&Grid::uniform(65).unwrap(), |x| sine_jet(0.2, x)).unwrap();
    let id = MonotoneMap::identity(&Grid::uniform(65).unwrap());
    let c = f.compose(&id).unwrap();
    for (a, b) in c.node_jets().iter().zip(f.node_jets()) {
        assert!((a.v - b.v).abs() < 1e-15 && (a.d1 - b.d1).abs() < 1e-14);
    }

    let g = moebius(1.5, 65);
    let fg = f.compose(&g).unwrap();
    for &x in fg.grid().nodes() {
        let jg = g.jet(x);
        let lhs = fg.jet(x).eta();
        let rhs = jg.d1 * f.jet(jg.v).eta() + jg.eta();
        assert!((lhs - rhs).abs() < 1e-12, "x = {x}: {lhs} vs {rhs}");
    }

    let (a, b) = (2.0, 0.7);
    let m = moebius(a, 129).compose(&moebius(b, 129)).unwrap();
    for k in 0..=40 {
        let x = (k as f64 + 0.5) / 41.0;
        assert!((m.eval(x).unwrap() - moebius_jet(a * b, x).v).abs() < 1e-10);
    }
}

#[test]
fn normalisation() {
    let g = Grid::uniform(65).unwrap();
    let aff = MonotoneMap::from_fn(&g, |x| Jet::affine(x, 0.0, 1.0)).unwrap();
    let n = aff.normalize(0.2, 0.6, &g).unwrap();
    assert!(n.cr_norm(3) < 1e-12);
    assert!(aff.normalize(0.5, 0.5, &g).is_err());

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let f = Bump::random_generic(&mut rng, 0.05, 4).map(&g).unwrap();
        let (a, b) = (0.13, 0.58);
        let nf = f.normalize(a, b, &g).unwrap();
        let inv_d1 = f.invert().unwrap().sup_derivative(1);
        let lhs = nf.sup_derivative(2);
        let rhs = inv_d1 * f.sup_derivative(2) * (b - a);
        assert!(lhs <= rhs * (1.0 + 1e-9), "{lhs} > {rhs}");
        // ∫ η over the unit interval equals ∫_I η_f = log f'(b) − log f'(a).
        let fine = Grid::uniform(257).unwrap();
        let direct = f.normalize(a, b, &fine).unwrap().integral_eta().value;
        let exact = (f.deriv(b).unwrap() / f.deriv(a).unwrap()).ln();
        assert!((direct - exact).abs() < 1e-9, "{direct} vs {exact}");
    }
}

#[test]
fn eta_distances() {
    let f = moebius(2.0, 257);
    assert_eq!(eta_distance(&f, &f).value, 0.0);
    let id = MonotoneMap::identity(&Grid::uniform(257).unwrap());
    let d = eta_distance(&id, &f).value;
    assert!((d - 2.0 * 2f64.ln()).abs() < 1e-9, "{d}");
}

#[test]
fn scaling_laws() {
    for k in 0..20 {
        let x = 0.05 + 0.045 * k as f64;
        let j = sine_jet(0.3, x);
        assert!((j.post_affine(0.1, 3.0).eta() - j.eta()).abs() < 1e-13);
        let a = 0.7;
        let pre = sine_jet(0.3, a * x).pre_scale(a);
        assert!((pre.eta() - a * sine_jet(0.3, a * x).eta()).abs() < 1e-13);
    }
}

fn golden() -> Giet {
    let p = Permutation::from_one_based(&[2, 1]).unwrap();
    let t = 0.5 * (5f64.sqrt() - 1.0);
    Giet::from_aiet(Aiet::iet(p, vec![t, 1.0 - t]).unwrap(), &Grid::uniform(33).unwrap())
}

#[test]
fn pure_aiet_has_identity_profiles() {
    let p = Permutation::from_one_based(&[4, 3, 2, 1]).unwrap();
    let a = Aiet::from_log_slopes(p, vec![0.1, 0.2, 0.3, 0.4], &[0.1, -0.1, 0.05, 0.0]).unwrap();
    let t = Giet::from_aiet(a, &Grid::uniform(33).unwrap());
    assert!(t.profiles().iter().all(|m| m.is_identity()));
    assert_eq!(t.total_nonlinearity(), 0.0);
}

#[test]
fn golden_rotation_equidistributes() {
    let t = golden();
    let (y, _) = t.eval(0.0);
    assert!((y - t.affine().lambda()[1]).abs() < 1e-15);
    let n = 20_000;
    let mut x = 0.0;
    let mut bins = [0usize; 10];
    for _ in 0..n {
        bins[((x * 10.0) as usize).min(9)] += 1;
        x = t.eval(x).0;
    }
    let worst = bins.iter().map(|&b| (b as f64 / n as f64 - 0.1).abs()).fold(0.0, f64::max);
    // Discrepancy of the golden rotation is O(log N / N).
    assert!(worst < 2e-3, "{bins:?}");
}

#[test]
fn decompose_assemble_roundtrip() {
    let g = Grid::uniform(33).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let p = Permutation::from_one_based(&[4, 3, 2, 1]).unwrap();
    let a = Aiet::from_log_slopes(p, vec![0.4, 0.1, 0.3, 0.2], &[0.02, -0.01, 0.03, 0.0]).unwrap();
    let profiles: Vec<_> = (0..4).map(|_| Bump::random_generic(&mut rng, 0.1, 3).map(&g).unwrap()).collect();
    let t = Giet::assemble(a.clone(), profiles.clone()).unwrap();
    let (a2, p2) = t.decompose();
    assert_eq!(a2, a);
    assert_eq!(p2, profiles);
    let json = serde_json::to_string(&t).unwrap();
    let back: Giet = serde_json::from_str(&json).unwrap();
    assert_eq!(back.affine(), t.affine());
    assert_eq!(back.profiles(), t.profiles());
}

#[test]
fn eval_is_injective_and_onto() {
    let g = Grid::uniform(65).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let p = Permutation::from_one_based(&[4, 3, 2, 1]).unwrap();
    let a = Aiet::from_log_slopes(p, vec![0.4, 0.1, 0.3, 0.2], &[0.02, -0.01, 0.03, 0.0]).unwrap();
    let profiles: Vec<_> = (0..4).map(|_| Bump::random_generic(&mut rng, 0.1, 3).map(&g).unwrap()).collect();
    let t = Giet::assemble(a, profiles).unwrap();
    let mut xs: Vec<f64> = (0..10_000).map(|k| (k as f64 + 0.5) / 10_000.0).collect();
    xs.sort_by(f64::total_cmp);
    let mut ys: Vec<f64> = xs.iter().map(|&x| t.eval(x).0).collect();
    ys.sort_by(f64::total_cmp);
    assert!(ys.windows(2).all(|w| w[1] > w[0]));
    let covered: f64 = (0..4).map(|i| t.image(i).1 - t.image(i).0).sum();
    assert!((covered - 1.0).abs() < 1e-9);
}

fn lengths(d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.05f64..1.0, d).prop_map(|v| {
        let s: f64 = v.iter().sum();
        v.into_iter().map(|x| x / s).collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn aiet_constraints_hold(lambda in lengths(4), mu in prop::collection::vec(-0.5f64..0.5, 4)) {
        let p = Permutation::from_one_based(&[4, 3, 2, 1]).unwrap();
        let a = Aiet::from_log_slopes(p, lambda, &mu).unwrap();
        let s1: f64 = a.lambda().iter().sum();
        let s2: f64 = a.lambda().iter().zip(a.rho()).map(|(l, r)| l * r).sum();
        prop_assert!((s1 - 1.0).abs() < 1e-12);
        prop_assert!((s2 - 1.0).abs() < 1e-12);
        prop_assert!(a.rho().iter().all(|r| *r > 0.0));
    }

    #[test]
    fn eta_distance_triangle(s in 0u64..1000) {
        let g = Grid::uniform(65).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        let f: Vec<_> = (0..3).map(|_| Bump::random_generic(&mut rng, 0.1, 3).map(&g).unwrap()).collect();
        let (ab, bc, ac) = (eta_distance(&f[0], &f[1]), eta_distance(&f[1], &f[2]), eta_distance(&f[0], &f[2]));
        prop_assert!(ac.value <= ab.value + bc.value + ab.error + bc.error + ac.error + 1e-12);
        prop_assert!((eta_distance(&f[1], &f[0]).value - ab.value).abs() < 1e-14);
    }

    #[test]
    fn chain_rule_at_nodes(s in 0u64..1000) {
        let g = Grid::uniform(33).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        let f = Bump::random_generic(&mut rng, 0.1, 3).map(&g).unwrap();
        let h = Bump::random_generic(&mut rng, 0.1, 3).map(&g).unwrap();
        let fh = f.compose(&h).unwrap();
        for &x in g.nodes() {
            let (jh, jf) = (h.jet(x), f.jet(h.jet(x).v));
            let c = fh.jet(x);
            prop_assert!((c.d1 - jf.d1 * jh.d1).abs() < 1e-12);
            prop_assert!((c.d2 - (jf.d2 * jh.d1 * jh.d1 + jf.d1 * jh.d2)).abs() < 1e-11);
            prop_assert!((c.eta() - (jh.d1 * jf.eta() + jh.eta())).abs() < 1e-11);
        }
    }
}
