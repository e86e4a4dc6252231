use num_bigint::BigUint;

use super::*;
use crate::catalog;

fn pt(x: i32) -> GroupPoint {
    GroupPoint::axis(1, 0, x)
}

fn fib(n: usize) -> u128 {
    let (mut a, mut b) = (0u128, 1u128);
    for _ in 0..n {
        let t = a + b;
        a = b;
        b = t;
    }
    a
}

/// Independent oracle: filter all binary words for the substring 11.
fn golden_brute(n: usize) -> usize {
    (0u32..1 << n).filter(|w| w & (w >> 1) == 0).count()
}

#[test]
fn golden_mean_counts_match_fibonacci() {
    let gm = catalog::golden_mean();
    for n in 1..=20 {
        let f = FiniteRegion::interval(0, n as i32);
        let c = count_patterns(&gm, &f).unwrap();
        assert_eq!(c, BigUint::from(fib(n + 2)), "n = {n}");
        if n <= 14 {
            assert_eq!(c, BigUint::from(golden_brute(n)));
            assert_eq!(count_by_enumeration(&gm, &f, 2).unwrap(), c);
        }
    }
    let ten = enumerate_patterns(&gm, &FiniteRegion::interval(0, 10)).unwrap();
    assert_eq!(ten.len(), 144);
    assert!(ten.windows(2).all(|w| w[0].values() < w[1].values()));
}

#[test]
fn small_examples() {
    let full = catalog::full_shift(1, 2).unwrap();
    assert_eq!(enumerate_patterns(&full, &FiniteRegion::interval(0, 3)).unwrap().len(), 8);
    let gm = catalog::golden_mean();
    assert_eq!(enumerate_patterns(&gm, &FiniteRegion::interval(0, 3)).unwrap().len(), 5);
    assert_eq!(count_patterns(&gm, &FiniteRegion::interval(0, 1)).unwrap(), BigUint::from(2u8));
    assert_eq!(count_patterns(&gm, &FiniteRegion::interval(0, 4)).unwrap(), BigUint::from(8u8));
    let prod = ShiftSpec::product(gm.clone(), full).unwrap();
    let two = FiniteRegion::interval(0, 2);
    assert_eq!(count_patterns(&prod, &two).unwrap(), BigUint::from(12u8));
    assert_eq!(enumerate_patterns(&prod, &two).unwrap().len(), 12);
}

#[test]
fn transfer_matches_search_on_gappy_supports() {
    // forbid 1 at x and x+2 together, plus 000
    let ctx = GroupContext::standard(1).unwrap();
    let p1 = Pattern::from_map(1, [(pt(0), Symbol(1)), (pt(2), Symbol(1))]).unwrap();
    let p2 = Pattern::from_map(1, [(pt(0), Symbol(0)), (pt(1), Symbol(0)), (pt(2), Symbol(0))]).unwrap();
    let spec = ShiftSpec::sft(ctx, Alphabet::range(2).unwrap(), vec![p1, p2]).unwrap();
    for n in 2..12 {
        for margin in [0, 1, 3] {
            let f = FiniteRegion::interval(3, 3 + n);
            let a = count_patterns_with_margin(&spec, &f, margin).unwrap();
            let b = count_by_enumeration(&spec, &f, margin).unwrap();
            assert_eq!(a, b, "n={n} margin={margin}");
        }
    }
}

#[test]
fn singleton_and_two_constant() {
    let s = catalog::singleton();
    assert_eq!(count_patterns(&s, &FiniteRegion::interval(0, 7)).unwrap(), BigUint::from(1u8));
    let t = catalog::two_constant();
    assert_eq!(count_patterns(&t, &FiniteRegion::interval(0, 7)).unwrap(), BigUint::from(2u8));
}

#[test]
fn factor_by_block_code() {
    // x ↦ x(g) xor x(g+1) on the full 2-shift
    let ctx = GroupContext::standard(1).unwrap();
    let full = catalog::full_shift(1, 2).unwrap();
    let code = BlockCode::from_fn(&ctx, 1, 2, Alphabet::range(2).unwrap(), |w| Symbol(w[1].0 ^ w[2].0)).unwrap();
    let y = ShiftSpec::factor(full.clone(), code).unwrap();
    let f = FiniteRegion::interval(0, 5);
    let cy = count_patterns(&y, &f).unwrap();
    let cx = count_patterns(&full, &ctx.dilate(&f, 1)).unwrap();
    assert_eq!(cy, BigUint::from(32u8));
    assert!(cy <= cx);
}

#[test]
fn hard_squares_small_box() {
    let hs = catalog::hard_squares();
    let ctx = hs.ctx().clone();
    let b = ctx.box_region(&[2, 2], GroupPoint::zero(2)).unwrap();
    // independent sets of the 4-cycle: 1 + 4 + 2
    assert_eq!(count_patterns(&hs, &b).unwrap(), BigUint::from(7u8));
}

#[test]
fn admissibility() {
    let gm = catalog::golden_mean();
    let f = FiniteRegion::interval(0, 3);
    let ok = Pattern::new(f.clone(), vec![Symbol(1), Symbol(0), Symbol(1)]).unwrap();
    let bad = Pattern::new(f, vec![Symbol(1), Symbol(1), Symbol(0)]).unwrap();
    assert!(is_admissible(&gm, &ok, 2).unwrap());
    assert!(!is_admissible(&gm, &bad, 2).unwrap());
}

#[test]
fn gluing_examples() {
    let one = |x| FiniteRegion::interval(x, x + 1);
    let gm = catalog::golden_mean();
    assert!(check_gluing(&gm, 1, &one(0), &one(2), 3).unwrap().passed());
    let tc = catalog::two_constant();
    let v = check_gluing(&tc, 5, &one(0), &one(10), 5).unwrap();
    match v {
        GluingVerdict::Counterexample { x, y } => assert_ne!(x[0].1, y[0].1),
        GluingVerdict::Pass { .. } => panic!("two-constant shift glued"),
    }
    let full = catalog::full_shift(1, 2).unwrap();
    assert!(check_gluing(&full, 3, &one(0), &one(9), 1).unwrap().passed());
    assert!(matches!(check_gluing(&gm, 2, &one(0), &one(2), 3), Err(Error::GapTooSmall { .. })));
}
