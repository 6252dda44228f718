use gietlab::combinatorics::*;
use num_bigint::BigInt;
use proptest::prelude::*;

fn perm(images: &[usize]) -> Permutation {
    Permutation::from_one_based(images).unwrap()
}

#[test]
fn golden_steps() {
    let pi = perm(&[2, 1]);
    let (pt, et) = rauzy_step(&pi, StepKind::Top);
    let (pb, eb) = rauzy_step(&pi, StepKind::Bottom);
    assert_eq!(pt, pi);
    assert_eq!(pb, pi);
    let a = eb.mul(&et);
    assert_eq!(a.trace(), BigInt::from(3));
    assert_eq!(a.determinant(), BigInt::from(1));
}

#[test]
fn empty_sequence_is_identity() {
    let pi = perm(&[4, 3, 2, 1]);
    let (p, m) = apply_steps(&pi, &[]);
    assert_eq!(p, pi);
    assert_eq!(m, IntersectionMatrix::identity(4));
}

#[test]
fn loop_enumeration() {
    let pi = perm(&[2, 1]);
    let loops = enumerate_loops(&pi, 2).unwrap();
    let tb = loops.iter().find(|l| l.literal() == "tb").expect("tb loop");
    assert_eq!(tb.matrix().trace(), BigInt::from(3));
    assert_eq!(tb.matrix().determinant(), BigInt::from(1));
    // At (21) each single step returns to the permutation.
    let short = enumerate_loops(&pi, 1).unwrap();
    assert_eq!(short.iter().map(|l| l.literal()).collect::<Vec<_>>(), vec!["t", "b"]);
    let lits: Vec<String> = loops.iter().map(|l| l.literal()).collect();
    let mut sorted = lits.clone();
    sorted.sort_by(|a, b| parse_steps(a).unwrap().cmp(&parse_steps(b).unwrap()));
    assert_eq!(lits, sorted);

    let d4 = enumerate_loops(&perm(&[4, 3, 2, 1]), 8).unwrap();
    assert!(!d4.is_empty());
    let good: Vec<_> = d4.iter().filter(|l| is_admissible_fixed_point(l).accepted).collect();
    assert!(!good.is_empty());
    let rep = is_admissible_fixed_point(good[0]);
    assert_eq!(rep.hyperbolicity, Hyperbolicity::Hyperbolic);
    assert!(rep.positivity_power.is_some());
    assert!(enumerate_loops(&pi, 0).is_err());
}

#[test]
fn surfaces() {
    for (images, g, s) in [(vec![2, 1], 1, 1), (vec![3, 2, 1], 1, 2), (vec![4, 3, 2, 1], 2, 1)] {
        let sd = genus_and_marked_points(&perm(&images));
        assert_eq!((sd.genus, sd.marked_points), (g, s), "{images:?}");
    }
    assert!(Permutation::from_one_based(&[1, 2]).is_err());
    assert!(Permutation::from_one_based(&[2, 1, 3]).is_err());
    assert!(Permutation::from_one_based(&[1, 1]).is_err());
}

#[test]
fn admissibility_reports() {
    let pi = perm(&[2, 1]);
    let tb = RauzyLoop::parse(pi.clone(), "tb").unwrap();
    let rep = is_admissible_fixed_point(&tb);
    assert_eq!(rep.positivity_power, Some(1));
    assert_eq!(rep.hyperbolicity, Hyperbolicity::Hyperbolic);
    assert!(!rep.genus_assumption && !rep.accepted);
    assert!(rep.notes.iter().any(|n| n.contains("genus")));
    let eig = gietlab::linalg::eigenvalues(&tb.matrix().to_f64());
    let mut m: Vec<f64> = eig.iter().map(|z| z.norm()).collect();
    m.sort_by(f64::total_cmp);
    assert!((m[0] - (3.0 - 5f64.sqrt()) / 2.0).abs() < 1e-12);
    assert!((m[1] - (3.0 + 5f64.sqrt()) / 2.0).abs() < 1e-12);

    // A single step is unipotent: never positive, modulus-one spectrum.
    let t = RauzyLoop::parse(pi, "t").unwrap();
    let rep = is_admissible_fixed_point(&t);
    assert_eq!(rep.positivity_power, None);
    assert_eq!(rep.hyperbolicity, Hyperbolicity::Indeterminate);
    assert!(!rep.accepted);

    let d4 = RauzyLoop::parse(perm(&[4, 3, 2, 1]), "ttbtbbtb").unwrap();
    assert!(is_admissible_fixed_point(&d4).accepted);
}

#[test]
fn invalid_loops_are_rejected() {
    assert!(RauzyLoop::parse(perm(&[4, 3, 2, 1]), "t").is_err());
    assert!(RauzyLoop::parse(perm(&[4, 3, 2, 1]), "").is_err());
    assert!(RauzyLoop::parse(perm(&[2, 1]), "tx").is_err());
}

fn steps_strategy(max: usize) -> impl Strategy<Value = Vec<StepKind>> {
    prop::collection::vec(prop_oneof![Just(StepKind::Top), Just(StepKind::Bottom)], 0..max)
}

fn irreducible(max_d: usize) -> impl Strategy<Value = Permutation> {
    (2..=max_d).prop_flat_map(|d| {
        let all = irreducible_permutations(d);
        (0..all.len()).prop_map(move |k| all[k].clone())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn product_consistency(pi in irreducible(6), steps in steps_strategy(12)) {
        let (end, m) = apply_steps(&pi, &steps);
        let mut cur = pi.clone();
        let mut acc = IntersectionMatrix::identity(pi.d());
        for &k in &steps {
            let (next, e) = rauzy_step(&cur, k);
            acc = e.mul(&acc);
            cur = next;
        }
        prop_assert_eq!(end, cur);
        prop_assert_eq!(&m, &acc);
        let det = m.determinant();
        prop_assert!(det == BigInt::from(1) || det == BigInt::from(-1));
        for i in 0..pi.d() {
            for j in 0..pi.d() {
                prop_assert!(m.get(i, j) >= &BigInt::from(0));
            }
        }
    }

    #[test]
    fn concatenation(k in 1usize..4, j in 1usize..4) {
        let pi = perm(&[4, 3, 2, 1]);
        let loops = enumerate_loops(&pi, 6).unwrap();
        let (a, b, c) = (&loops[k % loops.len()], &loops[(k + j) % loops.len()], &loops[j % loops.len()]);
        let ab = a.concat(b).unwrap();
        prop_assert_eq!(ab.matrix(), &b.matrix().mul(a.matrix()));
        let (end, m) = apply_steps(&pi, ab.steps());
        prop_assert_eq!(&end, &pi);
        prop_assert_eq!(&m, ab.matrix());
        let (left, right) = (ab.concat(c).unwrap(), a.concat(&b.concat(c).unwrap()).unwrap());
        prop_assert_eq!(left.matrix(), right.matrix());
        prop_assert_eq!(left.steps(), right.steps());
    }
}

#[test]
fn euler_relation_for_all_small_permutations() {
    for d in 2..=6 {
        for pi in irreducible_permutations(d) {
            let s = genus_and_marked_points(&pi);
            assert_eq!(d, 2 * s.genus + s.marked_points - 1, "{pi}");
            assert!(s.marked_points >= 1);
        }
    }
}
