//! Fixed grid of counting-bound checks run by `verify`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use shifts::catalog;
use shifts::entropy::{
    entropy_estimate, semicontinuity_check, sparse_count_bound, sparse_pattern_count, tiling_entropy_bound, union_bound_check,
};
use shifts::pattern::count_patterns;
use shifts::scalar::ln_big;
use shifts::tiling::{greedy_maximal, TileSet};
use shifts::{FiniteRegion, GroupContext, GroupPoint, Result};

#[derive(Serialize)]
pub struct SparseRow {
    pub alphabet_size: usize,
    pub n: usize,
    pub eps: f64,
    pub count: u64,
    pub bound: f64,
    /// The stored certificate evaluates to the same bound when recomputed.
    pub recomputed: bool,
    pub holds: bool,
}

#[derive(Serialize)]
pub struct CoverRow {
    pub dimension: usize,
    pub region_size: usize,
    pub pieces: usize,
    pub count: String,
    pub product: String,
    pub holds: bool,
}

#[derive(Serialize)]
pub struct TilingRow {
    pub shift: &'static str,
    pub tile_len: usize,
    pub window_size: usize,
    pub bound: f64,
    pub direct: f64,
    pub holds: bool,
}

#[derive(Serialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub sparse: Vec<SparseRow>,
    pub covers: Vec<CoverRow>,
    pub tiling: Vec<TilingRow>,
    pub semicontinuity: shifts::entropy::SemicontinuityReport<f64>,
    pub checks: usize,
    pub failures: Vec<String>,
    pub pass: bool,
}

fn sparse_grid() -> Result<Vec<SparseRow>> {
    let mut cases = Vec::new();
    for a in [2usize, 3] {
        for eps in [0.1, 0.2, 0.5] {
            for n in 1..=14 {
                cases.push((a, eps, n));
            }
        }
    }
    cases
        .into_par_iter()
        .map(|(a, eps, n)| {
            let count = sparse_pattern_count(a, eps, n)?;
            let cert = sparse_count_bound(a, eps, n)?;
            Ok(SparseRow {
                alphabet_size: a,
                n,
                eps,
                count,
                bound: cert.bound,
                recomputed: cert.recompute() == cert.bound,
                holds: count as f64 <= cert.bound,
            })
        })
        .collect()
}

/// Overlapping intervals covering [0,n).
fn interval_cover(rng: &mut ChaCha8Rng, n: i32) -> Vec<FiniteRegion> {
    let mut pieces = Vec::new();
    let mut start = 0;
    while start < n {
        let end = (start + rng.gen_range(1..=4)).min(n);
        let back = rng.gen_range(0..=start.min(2));
        pieces.push(FiniteRegion::interval(start - back, end));
        start = end;
    }
    pieces
}

/// Overlapping sub-boxes covering an a×b box: a grid of blocks, each grown by up to one cell.
fn box_cover(rng: &mut ChaCha8Rng, ctx: &GroupContext, a: usize, b: usize) -> Result<Vec<FiniteRegion>> {
    let cuts = |rng: &mut ChaCha8Rng, len: usize| {
        let mut v = vec![0usize];
        while *v.last().unwrap() < len {
            let next = (v.last().unwrap() + rng.gen_range(1..=2)).min(len);
            v.push(next);
        }
        v
    };
    let xs = cuts(rng, a);
    let ys = cuts(rng, b);
    let mut pieces = Vec::new();
    for xw in xs.windows(2) {
        for yw in ys.windows(2) {
            let x1 = (xw[1] + rng.gen_range(0..=1)).min(a);
            let y1 = (yw[1] + rng.gen_range(0..=1)).min(b);
            let offset = GroupPoint::new(&[xw[0] as i32, yw[0] as i32])?;
            pieces.push(ctx.box_region(&[x1 - xw[0], y1 - yw[0]], offset)?);
        }
    }
    Ok(pieces)
}

fn covers(seed: u64) -> Result<Vec<CoverRow>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gm = catalog::golden_mean();
    let hs = catalog::hard_squares();
    let z2 = GroupContext::standard(2)?;
    let mut rows = Vec::with_capacity(100);
    for i in 0..100 {
        let (dimension, k, cover) = if i % 2 == 0 {
            let n = rng.gen_range(4..=16);
            (1, FiniteRegion::interval(0, n), interval_cover(&mut rng, n))
        } else {
            let (a, b) = (rng.gen_range(2..=4), rng.gen_range(2..=4));
            (2, z2.box_region(&[a, b], GroupPoint::zero(2))?, box_cover(&mut rng, &z2, a, b)?)
        };
        let spec = if dimension == 1 { &gm } else { &hs };
        let u = union_bound_check(spec, &k, &cover)?;
        rows.push(CoverRow {
            dimension,
            region_size: k.len(),
            pieces: cover.len(),
            count: u.count.to_string(),
            product: u.product.to_string(),
            holds: u.holds,
        });
    }
    Ok(rows)
}

fn tiling_rows() -> Result<Vec<TilingRow>> {
    let z1 = GroupContext::standard(1)?;
    let mut rows = Vec::new();
    for (name, spec) in [("golden_mean", catalog::golden_mean()), ("no_run_of_ones_3", catalog::no_run_of_ones(3))] {
        for (tile_len, n) in [(10usize, 100i32), (7, 64)] {
            let ts = TileSet::cube(z1.clone(), tile_len)?;
            let w = FiniteRegion::interval(0, n);
            let tile = &ts.tiles()[0];
            let p = (ln_big(&count_patterns(&spec, tile)?) / tile.len() as f64).exp();
            let t = greedy_maximal(&ts, &w)?;
            let rep = tiling_entropy_bound(&spec, &ts, &t, &w, p)?;
            let direct = entropy_estimate::<f64>(&spec, &w)?.value;
            rows.push(TilingRow {
                shift: name,
                tile_len,
                window_size: w.len(),
                bound: rep.certificate.bound,
                direct,
                holds: direct <= rep.certificate.bound + 1e-9 && rep.dominates != Some(false),
            });
        }
    }
    Ok(rows)
}

pub fn run(seed: u64) -> Result<SuiteReport> {
    let sparse = sparse_grid()?;
    let covers = covers(seed)?;
    let tiling = tiling_rows()?;
    let z1 = GroupContext::standard(1)?;
    let sequence: Vec<_> = (2..=14).map(catalog::no_run_of_ones).collect();
    let limit = catalog::full_shift(1, 2)?;
    let semicontinuity =
        semicontinuity_check(&sequence, &limit, &TileSet::cube(z1, 10)?, 0.1f64, &FiniteRegion::interval(0, 40))?;

    let mut failures = Vec::new();
    for s in &sparse {
        if !(s.holds && s.recomputed) {
            failures.push(format!("sparse count |A|={} n={} eps={}: {} > {}", s.alphabet_size, s.n, s.eps, s.count, s.bound));
        }
    }
    for (i, c) in covers.iter().enumerate() {
        if !c.holds {
            failures.push(format!("cover {i}: {} > {}", c.count, c.product));
        }
    }
    for t in &tiling {
        if !t.holds {
            failures.push(format!("tiling bound {} tile {}: {} < {}", t.shift, t.tile_len, t.bound, t.direct));
        }
    }
    if !semicontinuity.certified {
        failures.push("semicontinuity check not certified".into());
    }
    let checks = sparse.len() + covers.len() + tiling.len() + 1;
    Ok(SuiteReport { seed, sparse, covers, tiling, semicontinuity, checks, pass: failures.is_empty(), failures })
}
