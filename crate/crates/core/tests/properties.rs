use std::collections::HashSet;

use num_bigint::BigUint;
use proptest::prelude::*;
use shifts::approx::{canonical_completion, complete, delete};
use shifts::catalog;
use shifts::entropy::{sparse_count_bound, sparse_pattern_count, tiling_entropy_bound, union_bound_check};
use shifts::pattern::{count_by_enumeration, count_patterns, enumerate_patterns, is_admissible, Alphabet};
use shifts::spectrum::{density_sft, marker_shift, overlay, split_markers};
use shifts::tiling::{combine, greedy_maximal, TileSet};
use shifts::{FiniteRegion, GroupContext, GroupPoint, Pattern, ShiftSpec, Symbol};

fn z1() -> GroupContext {
    GroupContext::standard(1).unwrap()
}

fn pt(x: i32) -> GroupPoint {
    GroupPoint::new(&[x]).unwrap()
}

/// Tile through 0 with cells drawn from [0,6).
fn tile_strategy() -> impl Strategy<Value = FiniteRegion> {
    prop::collection::btree_set(1..6i32, 0..4).prop_map(|s| {
        FiniteRegion::from_points(1, std::iter::once(0).chain(s).map(pt)).unwrap()
    })
}

fn tileset_strategy() -> impl Strategy<Value = TileSet> {
    prop::collection::vec(tile_strategy(), 1..3).prop_map(|t| TileSet::new(z1(), t).unwrap())
}

/// Binary SFT on ℤ forbidding a few words of length ≤ 3.
fn sft_strategy() -> impl Strategy<Value = ShiftSpec> {
    prop::collection::vec(prop::collection::vec(0u8..2, 1..4), 0..3).prop_map(|words| {
        let forbidden = words
            .into_iter()
            .map(|w| {
                let support = FiniteRegion::interval(0, w.len() as i32);
                Pattern::new(support, w.into_iter().map(Symbol).collect()).unwrap()
            })
            .collect();
        ShiftSpec::sft(z1(), Alphabet::range(2).unwrap(), forbidden).unwrap()
    })
}

fn covered(t: &shifts::tiling::QuasiTiling) -> (bool, HashSet<GroupPoint>) {
    let mut seen = HashSet::new();
    let mut disjoint = true;
    for tr in t.translates() {
        for g in tr.iter() {
            disjoint &= t.window().contains(g) && seen.insert(*g);
        }
    }
    (disjoint, seen)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn transfer_count_matches_enumeration(spec in sft_strategy(), n in 1..11i32) {
        let f = FiniteRegion::interval(0, n);
        let margin = spec.default_margin();
        prop_assert_eq!(count_patterns(&spec, &f).unwrap(), count_by_enumeration(&spec, &f, margin).unwrap());
    }

    #[test]
    fn greedy_is_disjoint_and_maximal(ts in tileset_strategy(), n in 1..40i32) {
        let w = FiniteRegion::interval(0, n);
        let t = greedy_maximal(&ts, &w).unwrap();
        let (disjoint, seen) = covered(&t);
        prop_assert!(disjoint);
        for c in w.iter() {
            for tile in ts.tiles() {
                let fits = tile.iter().all(|&g| w.contains(&(*c + g)) && !seen.contains(&(*c + g)));
                prop_assert!(!fits, "translate at {} still fits", c);
            }
        }
        prop_assert!(t.is_maximal());
    }

    #[test]
    fn combine_keeps_first_and_stays_disjoint(a in tileset_strategy(), b in tileset_strategy(), n in 4..40i32, off in -3..4i32) {
        let w = FiniteRegion::interval(0, n);
        let t = greedy_maximal(&a, &w).unwrap();
        let s = greedy_maximal(&b, &w).unwrap().shifted_within(pt(off), &w);
        let out = combine(&t, &s).unwrap();
        prop_assert!(covered(&out).0);
        prop_assert!(t.is_sub_tiling_of(&out));
        for (c, i) in t.placements() {
            prop_assert_eq!(out.placements().get(c), Some(i));
        }
    }

    #[test]
    fn union_bound_on_interval_covers(spec in sft_strategy(), cuts in prop::collection::vec(1..5i32, 1..5), overlap in 0..3i32) {
        let mut pieces = Vec::new();
        let mut start = 0;
        for c in cuts {
            pieces.push(FiniteRegion::interval((start - overlap).max(0), start + c));
            start += c;
        }
        let k = FiniteRegion::interval(0, start);
        let u = union_bound_check(&spec, &k, &pieces).unwrap();
        prop_assert!(u.holds);
        prop_assert!(u.count <= u.product);
    }

    #[test]
    fn tiling_bound_dominates_estimate(spec in sft_strategy(), side in 2..8usize, n in 8..40i32) {
        let ts = TileSet::cube(z1(), side).unwrap();
        let w = FiniteRegion::interval(0, n);
        let c = count_patterns(&spec, &ts.tiles()[0]).unwrap();
        prop_assume!(c > BigUint::from(0u8));
        let p = (shifts::scalar::ln_big(&c) / side as f64).exp();
        let t = greedy_maximal(&ts, &w).unwrap();
        let rep = tiling_entropy_bound(&spec, &ts, &t, &w, p).unwrap();
        prop_assert_ne!(rep.dominates, Some(false));
        prop_assert_ne!(rep.window_chain, Some(false));
    }

    #[test]
    fn sparse_counts_below_bound(a in 2..4usize, n in 1..10usize, k in 1..10u32) {
        let eps = k as f64 / 10.0;
        let count = sparse_pattern_count(a, eps, n).unwrap();
        let cert = sparse_count_bound(a, eps, n).unwrap();
        prop_assert!(count as f64 <= cert.bound);
        prop_assert_eq!(cert.recompute(), cert.bound);
    }

    #[test]
    fn delete_then_complete(side in 3..6usize, n in 6..16i32, off in 0..3i32, seed in any::<u64>()) {
        let gm = catalog::golden_mean();
        let ts = TileSet::cube(z1(), side).unwrap();
        let w = FiniteRegion::interval(0, n);
        let t = greedy_maximal(&ts, &w).unwrap().shifted_within(pt(off), &w);
        let tables = vec![canonical_completion(&gm, &ts.tiles()[0], 1, None).unwrap()];
        let pats = enumerate_patterns(&gm, &w).unwrap();
        let y = &pats[(seed % pats.len() as u64) as usize];
        let d = delete(y, &t, 1, Symbol(0)).unwrap();
        let a = complete(&d.pattern, &t, &tables).unwrap();
        prop_assert_eq!(&a, &complete(y, &t, &tables).unwrap());
        // completed translates are admissible on their own
        for tr in t.translates() {
            prop_assert!(is_admissible(&gm, &a.restrict(&tr).unwrap(), gm.default_margin()).unwrap());
        }
    }

    #[test]
    fn density_levels_nest(big in 3..7usize, j in 1..7usize, n in 1..10i32) {
        prop_assume!(j <= big);
        let a = Alphabet::range(2).unwrap();
        let r = TileSet::cube(z1(), big).unwrap();
        let f = FiniteRegion::interval(0, n);
        let lo = enumerate_patterns(density_sft(&a, &r, j - 1).unwrap().spec(), &f).unwrap();
        let hi: HashSet<Pattern> = enumerate_patterns(density_sft(&a, &r, j).unwrap().spec(), &f).unwrap().into_iter().collect();
        prop_assert!(lo.iter().all(|p| hi.contains(p)));
    }

    #[test]
    fn overlay_closure(j in 1..6usize, sx in any::<u64>(), sy in any::<u64>()) {
        // closure needs the markers to add at most one nonzero per R-translate;
        // two adjacent T-translates can put two into one R-window
        let a = Alphabet::range(2).unwrap();
        let r = TileSet::cube(z1(), 5).unwrap();
        let f = FiniteRegion::interval(0, 10);
        let lower = enumerate_patterns(density_sft(&a, &r, j - 1).unwrap().spec(), &f).unwrap();
        let upper = density_sft(&a, &r, j).unwrap();
        let (y_shift, _) = marker_shift::<f64>(&a, &TileSet::cube(z1(), 5).unwrap(), &f).unwrap();
        let ys: Vec<Pattern> = y_shift.patterns().unwrap().into_iter().filter(|p| sparse_windows(p, 5, 1)).collect();
        let x = &lower[(sx % lower.len() as u64) as usize];
        let y = &ys[(sy % ys.len() as u64) as usize];
        prop_assert!(y_shift.contains(y).unwrap());
        let z = overlay(x, y, Symbol(0)).unwrap();
        prop_assert!(is_admissible(upper.spec(), &z, upper.spec().default_margin()).unwrap());
    }

    #[test]
    fn split_then_overlay_round_trips(bits in prop::collection::vec(0u8..2, 12), side in 1..6usize) {
        let f = FiniteRegion::interval(0, 12);
        let x = Pattern::new(f.clone(), bits.into_iter().map(Symbol).collect()).unwrap();
        let t = greedy_maximal(&TileSet::cube(z1(), side).unwrap(), &f).unwrap();
        let (rest, marks) = split_markers(&x, &t, Symbol(0)).unwrap();
        prop_assert_eq!(overlay(&rest, &marks, Symbol(0)).unwrap(), x);
        for tr in t.translates() {
            prop_assert!(tr.iter().filter(|g| marks.get(g) != Some(Symbol(0))).count() <= 1);
        }
    }
}

/// Whether every length-`len` window of `z` has at most `cap` nonzeros.
fn sparse_windows(z: &Pattern, len: usize, cap: usize) -> bool {
    z.values().windows(len).all(|w| w.iter().filter(|&&s| s != Symbol(0)).count() <= cap)
}
