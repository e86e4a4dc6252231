//! One line per acceptance criterion. Exits nonzero if any criterion fails.

use std::collections::{BTreeSet, HashSet};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use shifts::approx::{build_completion, complete, delete, entropy_chain_with, low_entropy_approx, Pipeline};
use shifts::catalog;
use shifts::entropy::{
    entropy_estimate, semicontinuity_check, sparse_count_bound, sparse_pattern_count, spacing_bound, tiling_entropy_bound,
    union_bound_check,
};
use shifts::pattern::{check_gluing, count_patterns, enumerate_patterns};
use shifts::spectrum::spectrum;
use shifts::tiling::{combine, error_count, greedy_maximal, QuasiTiling, TileSet};
use shifts::{Alphabet, FiniteRegion, GroupContext, GroupPoint, ShiftSpec, Symbol};

const TOL: f64 = 1e-9;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn z1() -> GroupContext {
    GroupContext::standard(1).unwrap()
}

fn z2() -> GroupContext {
    GroupContext::standard(2).unwrap()
}

fn boxed(ctx: &GroupContext, sides: &[usize]) -> FiniteRegion {
    ctx.box_region(sides, GroupPoint::zero(sides.len())).unwrap()
}

fn fib(n: usize) -> BigUint {
    let (mut a, mut b) = (BigUint::from(0u8), BigUint::from(1u8));
    for _ in 0..n {
        let c = &a + &b;
        a = b;
        b = c;
    }
    a
}

fn binom(n: u64, k: u64) -> u64 {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

fn c1_golden_counts() -> Outcome {
    let gm = catalog::golden_mean();
    let start = Instant::now();
    let mut bad = Vec::new();
    for n in 1..=20usize {
        let got = count_patterns(&gm, &FiniteRegion::interval(0, n as i32)).unwrap();
        let oracle = if n <= 14 {
            BigUint::from((0u32..1 << n).filter(|w| w & (w >> 1) == 0).count())
        } else {
            fib(n + 2)
        };
        if got != oracle || got != fib(n + 2) {
            bad.push(n);
        }
    }
    let elapsed = start.elapsed();
    let n10 = count_patterns(&gm, &FiniteRegion::interval(0, 10)).unwrap();
    outcome(
        bad.is_empty() && n10 == BigUint::from(144u32) && elapsed < Duration::from_secs(1),
        format!("golden mean |X_[0,n)| = F(n+2) for n=1..20, n=10 -> {n10}, mismatches {bad:?}, {:.3}s", elapsed.as_secs_f64()),
    )
}

fn c2_endpoints() -> Outcome {
    let full1 = catalog::full_shift(1, 2).unwrap();
    let full2 = catalog::full_shift(2, 2).unwrap();
    let mut boxes = Vec::new();
    for n in 1..=24 {
        boxes.push((&full1, FiniteRegion::interval(0, n)));
    }
    for a in 1..=5 {
        for b in 1..=5 {
            boxes.push((&full2, boxed(&z2(), &[a, b])));
        }
    }
    let full_ok = boxes.iter().all(|(s, f)| {
        let e = entropy_estimate::<f64>(s, f).unwrap();
        e.count == BigUint::from(2u8).pow(f.len() as u32) && e.value == std::f64::consts::LN_2
    });
    let single = catalog::singleton();
    let single_ok = (1..=24).all(|n| entropy_estimate::<f64>(&single, &FiniteRegion::interval(0, n)).unwrap().value == 0.0);
    outcome(full_ok && single_ok, format!("full shift = ln 2 on {} boxes: {full_ok}; singleton = 0 on 24 windows: {single_ok}", boxes.len()))
}

fn c3_sparse_grid() -> Outcome {
    let start = Instant::now();
    let mut cases = 0;
    let mut violations = 0;
    let mut oracle_mismatch = 0;
    for a in [2usize, 3] {
        for eps in [0.1, 0.2, 0.5] {
            for n in 1..=14usize {
                let count = sparse_pattern_count(a, eps, n).unwrap();
                let cap = ((eps * n as f64) + TOL).floor() as u64;
                let oracle: u64 = (0..=cap.min(n as u64)).map(|k| binom(n as u64, k) * (a as u64 - 1).pow(k as u32)).sum();
                if count != oracle {
                    oracle_mismatch += 1;
                }
                if count as f64 > sparse_count_bound(a, eps, n).unwrap().bound {
                    violations += 1;
                }
                cases += 1;
            }
        }
    }
    let example = (sparse_pattern_count(2, 0.2, 10).unwrap(), sparse_count_bound(2, 0.2f64, 10).unwrap().bound);
    let elapsed = start.elapsed();
    outcome(
        violations == 0 && oracle_mismatch == 0 && example == (56, 900.0) && elapsed < Duration::from_secs(30),
        format!(
            "{cases} grid points, {violations} violations, {oracle_mismatch} oracle mismatches, example {} <= {}, {:.2}s",
            example.0,
            example.1,
            elapsed.as_secs_f64()
        ),
    )
}

fn random_cover(rng: &mut ChaCha8Rng, ctx: &GroupContext) -> (FiniteRegion, Vec<FiniteRegion>) {
    let d = ctx.dimension();
    let sides: Vec<usize> = (0..d).map(|_| rng.gen_range(2..=if d == 1 { 16 } else { 4 })).collect();
    let k = boxed(ctx, &sides);
    // random boxes until every cell is hit, clipped to k
    let mut pieces = Vec::new();
    let mut hit = HashSet::new();
    while hit.len() < k.len() {
        let lo: Vec<i32> = sides.iter().map(|&s| rng.gen_range(0..s as i32)).collect();
        let ext: Vec<usize> = sides.iter().zip(&lo).map(|(&s, &l)| rng.gen_range(1..=(s - l as usize).min(4))).collect();
        let piece = ctx.box_region(&ext, GroupPoint::new(&lo).unwrap()).unwrap().intersection(&k);
        hit.extend(piece.iter().copied());
        pieces.push(piece);
    }
    (k, pieces)
}

fn c4_appendix_b() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let gm = catalog::golden_mean();
    let hs = catalog::hard_squares();
    let mut cover_fail = 0;
    for i in 0..100 {
        let (ctx, spec) = if i % 2 == 0 { (z1(), &gm) } else { (z2(), &hs) };
        let (k, pieces) = random_cover(&mut rng, &ctx);
        let u = union_bound_check(spec, &k, &pieces).unwrap();
        let product = pieces.iter().map(|p| count_patterns(spec, p).unwrap()).product::<BigUint>();
        if !u.holds || u.product != product || u.count > product {
            cover_fail += 1;
        }
    }

    let ts = TileSet::cube(z1(), 10).unwrap();
    let w = FiniteRegion::interval(0, 100);
    let p = 144f64.powf(0.1);
    let rep = tiling_entropy_bound(&gm, &ts, &greedy_maximal(&ts, &w).unwrap(), &w, p).unwrap();
    let bound = rep.certificate.bound;
    let direct = rep.direct.as_ref().unwrap().value;
    // ln F(102) / 100 by exact big-integer Fibonacci
    let oracle = shifts::scalar::ln_big(&fib(102)) / 100.0;
    let mut dominated = direct <= bound + TOL && rep.dominates == Some(true) && (direct - oracle).abs() < 1e-12;
    for spec in [catalog::no_run_of_ones(3), catalog::full_shift(1, 2).unwrap(), catalog::singleton()] {
        for side in [5usize, 7, 10] {
            let ts = TileSet::cube(z1(), side).unwrap();
            let tile = &ts.tiles()[0];
            let p = (shifts::scalar::ln_big(&count_patterns(&spec, tile).unwrap()) / side as f64).exp();
            let w = FiniteRegion::interval(0, 64);
            let r = tiling_entropy_bound(&spec, &ts, &greedy_maximal(&ts, &w).unwrap(), &w, p).unwrap();
            dominated &= r.dominates == Some(true);
        }
    }

    let seq: Vec<ShiftSpec> = (2..=14).map(catalog::no_run_of_ones).collect();
    let limit = catalog::full_shift(1, 2).unwrap();
    let semi = semicontinuity_check(&seq, &limit, &TileSet::cube(z1(), 10).unwrap(), 0.1f64, &FiniteRegion::interval(0, 40)).unwrap();
    outcome(
        cover_fail == 0 && dominated && (bound - 0.4970).abs() < 5e-5 && semi.certified,
        format!(
            "100 covers, {cover_fail} failures; golden tile [0,10) bound {bound:.4} >= direct {direct:.4}; semicontinuity certified {} from index {:?}",
            semi.certified, semi.agreement_index
        ),
    )
}

fn random_tileset(rng: &mut ChaCha8Rng, ctx: &GroupContext) -> TileSet {
    let d = ctx.dimension();
    let n = rng.gen_range(1..=3);
    let tiles = (0..n)
        .map(|_| {
            if d == 1 && rng.gen_bool(0.3) {
                // gappy tile through the identity
                let pts = std::iter::once(0).chain((1..6).filter(|_| rng.gen_bool(0.5)));
                FiniteRegion::from_points(1, pts.map(|x| GroupPoint::new(&[x]).unwrap())).unwrap()
            } else {
                let sides: Vec<usize> = (0..d).map(|_| rng.gen_range(1..=if d == 1 { 9 } else { 4 })).collect();
                boxed(ctx, &sides)
            }
        })
        .collect();
    TileSet::new(ctx.clone(), tiles).unwrap()
}

fn disjoint_and_maximal(t: &QuasiTiling) -> (bool, bool) {
    let mut seen = HashSet::new();
    let mut disjoint = true;
    for tr in t.translates() {
        for g in tr.iter() {
            disjoint &= t.window().contains(g) && seen.insert(*g);
        }
    }
    let maximal = t.window().iter().all(|c| {
        t.tileset().tiles().iter().all(|tile| {
            let cells: Vec<GroupPoint> = tile.iter().map(|&g| *c + g).collect();
            !cells.iter().all(|g| t.window().contains(g) && !seen.contains(g))
        })
    });
    (disjoint, maximal)
}

fn c5_quasi_tilings() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut greedy_bad = 0;
    for i in 0..50 {
        let ctx = if i % 2 == 0 { z1() } else { z2() };
        let ts = random_tileset(&mut rng, &ctx);
        let sides: Vec<usize> = (0..ctx.dimension()).map(|_| rng.gen_range(3..=if i % 2 == 0 { 60 } else { 12 })).collect();
        let w = boxed(&ctx, &sides);
        let (d, m) = disjoint_and_maximal(&greedy_maximal(&ts, &w).unwrap());
        if !(d && m) {
            greedy_bad += 1;
        }
    }
    let small = TileSet::new(z1(), vec![FiniteRegion::interval(0, 3)]).unwrap();
    let w20 = FiniteRegion::interval(0, 20);
    let e = error_count(&greedy_maximal(&small, &w20).unwrap(), &w20).unwrap();

    let mut psi_bad = 0;
    for i in 0..100 {
        let ctx = if i % 2 == 0 { z1() } else { z2() };
        let sides: Vec<usize> = (0..ctx.dimension()).map(|_| rng.gen_range(4..=if i % 2 == 0 { 40 } else { 10 })).collect();
        let w = boxed(&ctx, &sides);
        let a = random_tileset(&mut rng, &ctx);
        let b = random_tileset(&mut rng, &ctx);
        let t = greedy_maximal(&a, &w).unwrap();
        let off: Vec<i32> = (0..ctx.dimension()).map(|_| rng.gen_range(-3..=3)).collect();
        let s = greedy_maximal(&b, &w).unwrap().shifted_within(GroupPoint::new(&off).unwrap(), &w);
        let out = combine(&t, &s).unwrap();
        let (d, _) = disjoint_and_maximal(&out);
        let contains = t.placements().iter().all(|(c, i)| out.placements().get(c) == Some(i));
        if !(d && contains && t.is_sub_tiling_of(&out)) {
            psi_bad += 1;
        }
    }
    outcome(
        greedy_bad == 0 && e == 2 && psi_bad == 0,
        format!("greedy: {greedy_bad}/50 bad; [0,3) on [0,20) e={e}; combine: {psi_bad}/100 bad"),
    )
}

fn c6_completion() -> Outcome {
    let start = Instant::now();
    let gm = catalog::golden_mean();
    let mut prop_bad = Vec::new();
    let mut markings = 0;
    for n in 1..=12 {
        let table = build_completion(&gm, &FiniteRegion::interval(0, n), 1, None).unwrap();
        let rep = table.check_properties(&gm).unwrap();
        markings += rep.markings;
        if !rep.pass() || rep.markings != 1 << n {
            prop_bad.push(n);
        }
    }
    let mut identity_checked = 0usize;
    let mut identity_bad = 0usize;
    for side in [3usize, 4, 5] {
        let ts = TileSet::cube(z1(), side).unwrap();
        let tables = vec![build_completion(&gm, &ts.tiles()[0], 1, None).unwrap()];
        for n in side as i32..=20 {
            let w = FiniteRegion::interval(0, n);
            let base = greedy_maximal(&ts, &w).unwrap();
            let shifted = base.shifted_within(GroupPoint::new(&[1]).unwrap(), &w);
            for t in [base, shifted] {
                for y in enumerate_patterns(&gm, &w).unwrap() {
                    let d = delete(&y, &t, 1, Symbol(0)).unwrap();
                    identity_checked += 1;
                    if complete(&d.pattern, &t, &tables).unwrap() != complete(&y, &t, &tables).unwrap() {
                        identity_bad += 1;
                    }
                }
            }
        }
    }
    let elapsed = start.elapsed();
    outcome(
        prop_bad.is_empty() && identity_bad == 0 && elapsed < Duration::from_secs(60),
        format!(
            "table properties on tiles 1..12 ({markings} markings), failing sizes {prop_bad:?}; complete(delete(y)) = complete(y) on {identity_checked} cases, {identity_bad} violations; {:.1}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn c7_low_entropy() -> Outcome {
    let gm = catalog::golden_mean();
    let (_, rep) = low_entropy_approx(&gm, 2, 0.3f64, &FiniteRegion::interval(0, 60)).unwrap();
    let b = &rep.ball;
    let pass = b.x_count == 13 && b.y_count == 13 && b.missing == 0 && b.extra == 0 && rep.estimate.hi < 0.3;
    outcome(
        pass && rep.pass,
        format!(
            "B_2 patterns X {} / Y {} (missing {}, extra {}); Y estimate in [{:.4}, {:.4}] < 0.3",
            b.x_count, b.y_count, b.missing, b.extra, rep.estimate.lo, rep.estimate.hi
        ),
    )
}

fn c8_chain() -> Outcome {
    let full = catalog::full_shift(1, 2).unwrap();
    let w = FiniteRegion::interval(0, 60);
    let (p, _) = Pipeline::auto(&full, 1, 0.15f64, &w).unwrap();
    let mut lines = Vec::new();
    let mut pass = true;
    for c in [0.1, 0.3, 0.5] {
        let rep = entropy_chain_with(&p, 0.15f64, c).unwrap();
        let est = &rep.selected_estimate;
        let found = est.lo >= c - TOL && est.hi < c + 0.15;
        let increments = rep.segments.iter().all(|s| s.bound <= 0.15 + TOL);
        pass &= rep.base.hi < 0.15 && increments && rep.containment.pass && found && rep.pass;
        if lines.is_empty() {
            lines.push(format!(
                "base est <= {:.4}, {} increment segments ok {increments}, contains X {}",
                rep.base.hi,
                rep.segments.len(),
                rep.containment.pass
            ));
        }
        lines.push(format!("c={c}: j*={} est [{:.4}, {:.4}]", rep.selected, est.lo, est.hi));
    }
    outcome(pass, lines.join("; "))
}

/// Count of binary words on [0,n) with at most `cap` ones in every length-L window, by a sliding DP.
fn capped_count(n: usize, len: usize, cap: usize) -> BigUint {
    use std::collections::HashMap;
    let keep = len - 1;
    let mut states: HashMap<Vec<u8>, BigUint> = HashMap::from([(Vec::new(), BigUint::from(1u8))]);
    for _ in 0..n {
        let mut next: HashMap<Vec<u8>, BigUint> = HashMap::new();
        for (s, c) in &states {
            for b in 0..2u8 {
                let mut t = s.clone();
                t.push(b);
                if t.len() == len && t.iter().filter(|&&x| x == 1).count() > cap {
                    continue;
                }
                if t.len() > keep {
                    t.remove(0);
                }
                *next.entry(t).or_default() += c;
            }
        }
        states = next;
    }
    states.values().sum()
}

fn c9_spectrum() -> Outcome {
    let a = Alphabet::range(2).unwrap();
    let r = TileSet::cube(z1(), 10).unwrap();
    let t = TileSet::cube(z1(), 10).unwrap();
    let w = FiniteRegion::interval(0, 40);
    let rep = spectrum(&a, &r, &t, 0.1f64, &w, &FiniteRegion::interval(0, 15)).unwrap();
    let delta = spacing_bound(2, 0.1f64).unwrap().bound;
    let first = rep.levels[0].estimate.value;
    let last = rep.levels[10].estimate.value;
    let nested = rep.levels.iter().skip(1).all(|l| l.nested == Some(true));
    let gaps = rep.levels.iter().all(|l| l.gap_ok);
    let overlay = rep.levels.iter().filter(|l| l.level > 3).all(|l| l.overlay == Some(true));
    let oracle_ok = rep.levels.iter().all(|l| l.estimate.count == capped_count(40, 10, l.level));
    outcome(
        rep.pass && first == 0.0 && (last - std::f64::consts::LN_2).abs() < 1e-15 && nested && gaps && overlay && oracle_ok
            && (delta - 0.9680).abs() < 5e-5,
        format!(
            "est(0) = {first}, est(10) = {last:.6}, nested {nested}, max gap {:.4} <= delta {delta:.4}, split ok for j>=4 {overlay}, counts match DP {oracle_ok}",
            rep.max_gap
        ),
    )
}

fn c10_gluing() -> Outcome {
    let gm = catalog::golden_mean();
    let mut gm_pairs = 0;
    let mut gm_ok = true;
    for margin in 1..=6 {
        for a in 1..=3 {
            for b in 1..=3 {
                for gap in 2..=3 {
                    let k = FiniteRegion::interval(0, a);
                    let h = FiniteRegion::interval(a - 1 + gap, a - 1 + gap + b);
                    gm_ok &= check_gluing(&gm, 1, &k, &h, margin).unwrap().passed();
                    gm_pairs += 1;
                }
            }
        }
    }
    let two = catalog::two_constant();
    let mut two_counter = Vec::new();
    for r in 1..=5 {
        let k = FiniteRegion::interval(0, 2);
        let h = FiniteRegion::interval(2 + r, 4 + r);
        two_counter.push(!check_gluing(&two, r as usize, &k, &h, 2 * r as usize).unwrap().passed());
    }
    let full = catalog::full_shift(1, 2).unwrap();
    let full_ok = check_gluing(&full, 1, &FiniteRegion::interval(0, 3), &FiniteRegion::interval(5, 8), 2).unwrap().passed();
    let two_all = two_counter.iter().all(|&c| c);
    outcome(
        gm_ok && two_all && full_ok,
        format!("golden mean r=1: {gm_pairs} window pairs, margins 1..6, all pass {gm_ok}; two-constant counterexample at r=1..5 {two_all}; full shift {full_ok}"),
    )
}

fn c11_determinism() -> Outcome {
    let run = |threads: usize| -> Vec<String> {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let gm = catalog::golden_mean();
            let (_, approx) = low_entropy_approx(&gm, 2, 0.3f64, &FiniteRegion::interval(0, 40)).unwrap();
            let a = Alphabet::range(2).unwrap();
            let r = TileSet::cube(z1(), 8).unwrap();
            let spec = spectrum(&a, &r, &r, 0.125f64, &FiniteRegion::interval(0, 30), &FiniteRegion::interval(0, 12)).unwrap();
            let table = build_completion(&gm, &FiniteRegion::interval(0, 6), 1, None).unwrap();
            let mut entries: BTreeSet<String> = BTreeSet::new();
            for m in table.markings() {
                for (k, v) in table.entries(m) {
                    entries.insert(format!("{m:?}{k:?}{v:?}"));
                }
            }
            vec![
                serde_json::to_string(&approx).unwrap(),
                serde_json::to_string(&spec).unwrap(),
                entries.into_iter().collect::<Vec<_>>().join("\n"),
            ]
        })
    };
    let a = run(1);
    let b = run(4);
    let c = run(4);
    let same = a == b && b == c;
    let bytes: usize = a.iter().map(|s| s.len()).sum();
    outcome(same, format!("three runs (1, 4, 4 threads) byte-identical over {bytes} bytes: {same}"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("pattern-count oracle", c1_golden_counts),
        ("entropy endpoints", c2_endpoints),
        ("sparse-count grid", c3_sparse_grid),
        ("union and tiling bounds", c4_appendix_b),
        ("quasi-tiling certificates", c5_quasi_tilings),
        ("completion properties", c6_completion),
        ("low-entropy approximation", c7_low_entropy),
        ("entropy chain", c8_chain),
        ("density spectrum", c9_spectrum),
        ("gluing tester", c10_gluing),
        ("determinism", c11_determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = f();
        if !o.pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {} {name}: {} ({:.2}s)",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
