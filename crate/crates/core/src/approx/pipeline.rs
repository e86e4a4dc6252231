//! Windowed images of X × Q under rank-j completion maps.
//!
//! Outputs live on the user window W. Tilings and source patterns live on
//! W dilated by the locality r(𝒯) + r, so every translate meeting W is whole.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::Serialize;

use super::{complete, CompletionTable, FiberTable};
use crate::entropy::{qp_entropy_bound, sparse_entropy_bound, BoundCertificate};
use crate::error::{Error, Result};
use crate::geometry::{FiniteRegion, GroupPoint};
use crate::pattern::{count_patterns, enumerate_words, Pattern, ShiftSpec, Symbol};
use crate::scalar::{ln_big, log_sum_exp, Scalar};
use crate::tiling::{exterior, greedy_maximal, offset_sample, ExteriorLabeling, Mark, QuasiTiling, TileSet};

/// Largest `X_tile` a fiber table is built for.
pub const TILE_WORD_BUDGET: usize = 1 << 20;
/// Upper estimate on source patterns enumerated per tiling.
const ENUM_BUDGET_LN: f64 = 16.0 * std::f64::consts::LN_2;
/// Below this many candidate outputs the union over the sample is formed explicitly.
const EXACT_UNION_LN: f64 = 14.0 * std::f64::consts::LN_2;
const LOCAL_PATTERN_BUDGET: usize = 1 << 22;
/// Cells of the sub-window on which X ⊆ Xˡ is checked by enumeration.
const CONTAINMENT_CELLS: usize = 12;
const TOL: f64 = 1e-9;

struct SampleTiling {
    label: String,
    tiling: QuasiTiling,
    ext: ExteriorLabeling,
}

/// One class of visible ext data: how many there are, the fiber lengths of the
/// translates inside W, and first-appearance thresholds of the boundary translates.
struct Signature {
    ln_mult: f64,
    interior: Vec<u32>,
    hi: Vec<Arc<Vec<u32>>>,
    lo: Vec<Arc<Vec<u32>>>,
}

struct Profile {
    sigs: Vec<Signature>,
}

impl Profile {
    fn eval(&self, jj: usize) -> (f64, f64) {
        let avail = |th: &Arc<Vec<u32>>| (th.partition_point(|&t| t as usize <= jj) as f64).ln();
        let mut hi = Vec::with_capacity(self.sigs.len());
        let mut lo = Vec::with_capacity(self.sigs.len());
        for s in &self.sigs {
            let base = s.ln_mult + s.interior.iter().map(|&l| (jj.min(l as usize) as f64).ln()).sum::<f64>();
            hi.push(base + s.hi.iter().map(avail).sum::<f64>());
            lo.push(base + s.lo.iter().map(avail).sum::<f64>());
        }
        (log_sum_exp(hi), log_sum_exp(lo))
    }
}

type RestrictKey = (usize, Vec<Symbol>, Vec<usize>);
type Restrictions = Arc<Vec<(Vec<Symbol>, u32)>>;
// (tile, boundary restrictions, lo thresholds) and (interior lengths, hi ids, lo ids)
type InternKey = (usize, Vec<Vec<Symbol>>, Vec<usize>);
type SigKey = (Vec<u32>, Vec<usize>, Vec<usize>);
// (tile, corner, interior cells in region, key positions in E, destinations)
type LocalTranslate = (usize, GroupPoint, Vec<usize>, Vec<usize>, Vec<usize>);

/// Tile set, fiber tables and tiling sample for one shift, window and r.
pub struct Pipeline {
    spec: ShiftSpec,
    tileset: TileSet,
    fibers: Vec<FiberTable>,
    r: usize,
    window: FiniteRegion,
    working: FiniteRegion,
    margin: usize,
    sample: Vec<SampleTiling>,
    profiles: Vec<Profile>,
    brackets: Mutex<BTreeMap<usize, (f64, f64, bool)>>,
    balls: Mutex<BTreeMap<usize, BrAgreement>>,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Bracket<S: Scalar> {
    pub level: usize,
    pub lo: S,
    pub hi: S,
    pub exact: bool,
}

/// Bracket with the level it was read at kept alongside for ladders.
pub type LevelBracket<S> = Bracket<S>;

#[derive(Clone, Debug, Serialize)]
pub struct BrAgreement {
    pub level: usize,
    pub positions: usize,
    pub x_count: usize,
    pub y_count: usize,
    pub missing: usize,
    pub extra: usize,
    pub pass: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TileOutcome {
    Selected,
    EstimateTooHigh,
    EnumerationBudget,
    NoWitness,
    TooManyTilePatterns,
}

#[derive(Clone, Debug, Serialize)]
pub struct TileAttempt<S: Scalar> {
    pub side: usize,
    pub outcome: TileOutcome,
    pub estimate_hi: Option<S>,
}

impl Pipeline {
    pub fn new(spec: &ShiftSpec, tileset: &TileSet, r: usize, window: &FiniteRegion) -> Result<Self> {
        if r == 0 {
            return Err(Error::InvalidParameter { name: "r", reason: "must be positive".into() });
        }
        if window.is_empty() {
            return Err(Error::EmptyRegion);
        }
        let ctx = spec.ctx();
        ctx.check_dim(window)?;
        if tileset.ctx() != ctx {
            return Err(Error::InvalidTileSet("tile set and shift live on different groups".into()));
        }
        let fibers = tileset
            .tiles()
            .iter()
            .map(|t| FiberTable::build(spec, t, r, TILE_WORD_BUDGET))
            .collect::<Result<Vec<_>>>()?;
        let (working, sample) = build_sample(tileset, window, r)?;
        let margin = spec.default_margin();
        let mut p = Pipeline {
            spec: spec.clone(),
            tileset: tileset.clone(),
            fibers,
            r,
            window: window.clone(),
            working,
            margin,
            sample,
            profiles: Vec::new(),
            brackets: Mutex::new(BTreeMap::new()),
            balls: Mutex::new(BTreeMap::new()),
        };
        for s in &p.sample {
            p.check_budget(s)?;
        }
        p.profiles = p.sample.par_iter().map(|s| p.profile(s)).collect::<Result<Vec<_>>>()?;
        Ok(p)
    }

    /// Cube tiles of increasing side until the base level estimate drops below `eps`.
    pub fn auto<S: Scalar>(spec: &ShiftSpec, r: usize, eps: S, window: &FiniteRegion) -> Result<(Self, Vec<TileAttempt<S>>)> {
        let e = eps.as_f64();
        if !(e > 0.0) {
            return Err(Error::InvalidParameter { name: "eps", reason: format!("{e} is not positive") });
        }
        let ctx = spec.ctx().clone();
        let (lo, hi) = window.bounds().ok_or(Error::EmptyRegion)?;
        let max_side = lo.iter().zip(&hi).map(|(a, b)| (b - a + 1) as usize).min().unwrap_or(0);
        let mut attempts = Vec::new();
        let mut best = f64::INFINITY;
        for side in 2 * r + 2..=max_side {
            let ts = TileSet::cube(ctx.clone(), side)?;
            if count_patterns(spec, &ts.tiles()[0])? > TILE_WORD_BUDGET.into() {
                attempts.push(TileAttempt { side, outcome: TileOutcome::TooManyTilePatterns, estimate_hi: None });
                break;
            }
            let p = match Pipeline::new(spec, &ts, r, window) {
                Ok(p) => p,
                Err(Error::Budget(_)) => {
                    attempts.push(TileAttempt { side, outcome: TileOutcome::EnumerationBudget, estimate_hi: None });
                    continue;
                }
                Err(Error::WindowTooSmall(_)) => {
                    attempts.push(TileAttempt { side, outcome: TileOutcome::NoWitness, estimate_hi: None });
                    continue;
                }
                Err(err) => return Err(err),
            };
            let b = p.bracket::<f64>(1)?;
            best = best.min(b.hi);
            let ok = b.hi < e;
            attempts.push(TileAttempt {
                side,
                outcome: if ok { TileOutcome::Selected } else { TileOutcome::EstimateTooHigh },
                estimate_hi: Some(S::lit(b.hi)),
            });
            if ok {
                return Ok((p, attempts));
            }
        }
        Err(Error::NoCertifiedTileSet { best_estimate: best, eps: e })
    }

    pub fn spec(&self) -> &ShiftSpec {
        &self.spec
    }

    pub fn tileset(&self) -> &TileSet {
        &self.tileset
    }

    pub fn fibers(&self) -> &[FiberTable] {
        &self.fibers
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn window(&self) -> &FiniteRegion {
        &self.window
    }

    pub fn working(&self) -> &FiniteRegion {
        &self.working
    }

    pub fn locality(&self) -> usize {
        self.tileset.radius() + self.r
    }

    pub fn tilings(&self) -> impl Iterator<Item = &QuasiTiling> {
        self.sample.iter().map(|s| &s.tiling)
    }

    pub fn tiling_labels(&self) -> impl Iterator<Item = &str> {
        self.sample.iter().map(|s| s.label.as_str())
    }

    pub fn sample_len(&self) -> usize {
        self.sample.len()
    }

    /// ℓ: past this rank every level coincides.
    pub fn top_level(&self) -> usize {
        self.fibers.iter().map(|f| f.max_len()).max().unwrap_or(1)
    }

    /// Largest fraction of W marked ext by a sampled tiling.
    pub fn exterior_density(&self) -> f64 {
        self.sample.iter().map(|s| s.ext.density(&self.window)).fold(0.0, f64::max)
    }

    pub fn completion_tables(&self, level: usize) -> Vec<CompletionTable> {
        self.fibers.iter().map(|f| f.completion_table(level)).collect()
    }

    fn relevant(&self, t: &QuasiTiling, region: &HashSet<GroupPoint>) -> Vec<(usize, GroupPoint, Vec<usize>, bool)> {
        let mut out = Vec::new();
        for (&c, &i) in t.placements() {
            let tile = &self.tileset.tiles()[i];
            let marks = self.fibers[i].marks();
            let inside: Vec<bool> = tile.iter().map(|&g| region.contains(&(c + g))).collect();
            if !inside.iter().any(|&b| b) {
                continue;
            }
            let int_in: Vec<usize> = (0..tile.len()).filter(|&p| inside[p] && marks[p] == Mark::Int).collect();
            let whole = inside.iter().all(|&b| b);
            out.push((i, c, int_in, whole));
        }
        out
    }

    /// Ext cells of W plus the outside ext cells of translates whose interior reaches into W.
    fn source_cells(&self, s: &SampleTiling) -> Result<FiniteRegion> {
        let win = self.window.to_hash_set();
        let mut cells: BTreeSet<GroupPoint> = self.window.iter().copied().filter(|g| s.ext.mark(g) == Some(Mark::Ext)).collect();
        for (i, c, int_in, whole) in self.relevant(&s.tiling, &win) {
            if !whole && !int_in.is_empty() {
                let tile = &self.tileset.tiles()[i];
                cells.extend(self.fibers[i].ext_positions().iter().map(|&p| c + tile.points()[p]));
            }
        }
        FiniteRegion::from_points(self.window.dim(), cells)
    }

    fn check_budget(&self, s: &SampleTiling) -> Result<()> {
        let e = self.source_cells(s)?;
        if enumeration_proxy_ln(&self.spec, &e)? > ENUM_BUDGET_LN {
            return Err(Error::Budget(format!("{} source cells for tiling {}", e.len(), s.label)));
        }
        Ok(())
    }

    fn profile(&self, s: &SampleTiling) -> Result<Profile> {
        let win = self.window.to_hash_set();
        let rel = self.relevant(&s.tiling, &win);
        let e = self.source_cells(s)?;
        let words = enumerate_words(&self.spec, &e, self.margin)?;
        let vis: Vec<usize> = e.iter().enumerate().filter(|(_, g)| win.contains(g)).map(|(k, _)| k).collect();
        let key_idx = |i: usize, c: GroupPoint| -> Vec<usize> {
            let tile = &self.tileset.tiles()[i];
            self.fibers[i].ext_positions().iter().map(|&p| e.index_of(&(c + tile.points()[p])).expect("ext cell enumerated")).collect()
        };
        let interior: Vec<(usize, GroupPoint, Vec<usize>)> =
            rel.iter().filter(|t| t.3).map(|(i, c, _, _)| (*i, *c, key_idx(*i, *c))).collect();
        let boundary: Vec<(usize, GroupPoint, Vec<usize>, Vec<usize>)> = rel
            .iter()
            .filter(|t| !t.3 && !t.2.is_empty())
            .map(|(i, c, int_in, _)| (*i, *c, int_in.clone(), key_idx(*i, *c)))
            .collect();

        let mut groups: HashMap<Vec<Symbol>, Vec<u32>> = HashMap::new();
        for (k, z) in words.iter().enumerate() {
            groups.entry(vis.iter().map(|&p| z[p]).collect()).or_default().push(k as u32);
        }

        let mut cache: HashMap<RestrictKey, Restrictions> = HashMap::new();
        let mut interned: HashMap<InternKey, usize> = HashMap::new();
        let mut thresholds: Vec<Arc<Vec<u32>>> = Vec::new();
        let mut sig_counts: HashMap<SigKey, u64> = HashMap::new();
        for zs in groups.values() {
            let z0 = &words[zs[0] as usize];
            let mut lens = Vec::with_capacity(interior.len());
            for (i, c, idx) in &interior {
                let key: Vec<Symbol> = idx.iter().map(|&p| z0[p]).collect();
                let f = self.fibers[*i].fiber(&key).ok_or(Error::MissingCompletion(*c))?;
                lens.push(f.len() as u32);
            }
            lens.sort_unstable();
            let mut hi_ids = Vec::with_capacity(boundary.len());
            let mut lo_ids = Vec::with_capacity(boundary.len());
            for (i, c, int_in, idx) in &boundary {
                let keys: BTreeSet<Vec<Symbol>> = zs
                    .iter()
                    .map(|&k| idx.iter().map(|&p| words[k as usize][p]).collect::<Vec<Symbol>>())
                    .filter(|key| self.fibers[*i].fiber(key).is_some())
                    .collect();
                let first = keys.iter().next().cloned().ok_or(Error::MissingCompletion(*c))?;
                let lo_key = {
                    let k0: Vec<Symbol> = idx.iter().map(|&p| z0[p]).collect();
                    if keys.contains(&k0) {
                        k0
                    } else {
                        first
                    }
                };
                let mut intern = |keys: Vec<Vec<Symbol>>| -> usize {
                    let id_key = (*i, keys, int_in.clone());
                    if let Some(&id) = interned.get(&id_key) {
                        return id;
                    }
                    let mut best: HashMap<Vec<Symbol>, u32> = HashMap::new();
                    for key in &id_key.1 {
                        for (w, rank) in self.restrictions(&mut cache, *i, key, int_in).iter() {
                            let e = best.entry(w.clone()).or_insert(*rank);
                            *e = (*e).min(*rank);
                        }
                    }
                    let mut th: Vec<u32> = best.into_values().map(|r| r + 1).collect();
                    th.sort_unstable();
                    thresholds.push(Arc::new(th));
                    interned.insert(id_key, thresholds.len() - 1);
                    thresholds.len() - 1
                };
                hi_ids.push(intern(keys.into_iter().collect()));
                lo_ids.push(intern(vec![lo_key]));
            }
            hi_ids.sort_unstable();
            lo_ids.sort_unstable();
            *sig_counts.entry((lens, hi_ids, lo_ids)).or_default() += 1;
        }
        let by_content = |ids: &[usize]| {
            let mut v: Vec<Arc<Vec<u32>>> = ids.iter().map(|&k| thresholds[k].clone()).collect();
            v.sort();
            v
        };
        let mut sigs: Vec<Signature> = sig_counts
            .into_iter()
            .map(|((lens, hi, lo), n)| Signature { ln_mult: (n as f64).ln(), interior: lens, hi: by_content(&hi), lo: by_content(&lo) })
            .collect();
        sigs.sort_by(|a, b| {
            (&a.interior, &a.hi, &a.lo, a.ln_mult.to_bits()).cmp(&(&b.interior, &b.hi, &b.lo, b.ln_mult.to_bits()))
        });
        Ok(Profile { sigs })
    }

    /// Distinct restrictions of a fiber to tile positions `pos`, with the rank at which each first appears.
    fn restrictions(&self, cache: &mut HashMap<RestrictKey, Restrictions>, tile: usize, key: &[Symbol], pos: &[usize]) -> Restrictions {
        let ck = (tile, key.to_vec(), pos.to_vec());
        if let Some(v) = cache.get(&ck) {
            return v.clone();
        }
        let ft = &self.fibers[tile];
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for (rank, &w) in ft.fiber(key).unwrap_or(&[]).iter().enumerate() {
            let word = &ft.words()[w as usize];
            let proj: Vec<Symbol> = pos.iter().map(|&p| word[p]).collect();
            if seen.insert(proj.clone()) {
                out.push((proj, rank as u32));
            }
        }
        let v = Arc::new(out);
        cache.insert(ck, v.clone());
        v
    }

    /// Entropy bracket of the rank-`level` image on W; levels 0 and 1 coincide.
    pub fn bracket<S: Scalar>(&self, level: usize) -> Result<Bracket<S>> {
        let jj = level.clamp(1, self.top_level().max(1));
        if let Some(&(lo, hi, exact)) = self.brackets.lock().expect("bracket cache").get(&jj) {
            return Ok(Bracket { level, lo: S::lit(lo), hi: S::lit(hi), exact });
        }
        let n = self.window.len() as f64;
        let (ln_lo, ln_hi) = self.counted_bounds(jj);
        let (lo, hi, exact) = if ln_hi <= EXACT_UNION_LN {
            let exact = (self.local_words(&self.window, jj)?.len() as f64).ln();
            (exact / n, exact / n, true)
        } else {
            (ln_lo / n, ln_hi / n, false)
        };
        self.brackets.lock().expect("bracket cache").insert(jj, (lo, hi, exact));
        Ok(Bracket { level, lo: S::lit(lo), hi: S::lit(hi), exact })
    }

    /// ln of the lower and upper count bounds, before any explicit union.
    pub(crate) fn counted_bounds(&self, jj: usize) -> (f64, f64) {
        let evals: Vec<(f64, f64)> = self.profiles.iter().map(|p| p.eval(jj.max(1))).collect();
        let cap = self.window.len() as f64 * (self.spec.alphabet().size() as f64).ln();
        let ln_hi = log_sum_exp(evals.iter().map(|e| e.0)).min(cap);
        let ln_lo = evals.iter().map(|e| e.1).fold(f64::NEG_INFINITY, f64::max);
        (ln_lo, ln_hi)
    }

    /// All rank-≤`level` image patterns on `region` ⊆ W, values in region order.
    pub fn local_words(&self, region: &FiniteRegion, level: usize) -> Result<HashSet<Vec<Symbol>>> {
        if !region.is_subset(&self.window) {
            return Err(Error::OutsideWindow);
        }
        let jj = level.max(1);
        let rset = region.to_hash_set();
        let mut out: HashSet<Vec<Symbol>> = HashSet::new();
        let mut cache = HashMap::new();
        for s in &self.sample {
            let rel: Vec<_> = self.relevant(&s.tiling, &rset).into_iter().filter(|t| !t.2.is_empty()).collect();
            let mut cells: BTreeSet<GroupPoint> = region.iter().copied().filter(|g| s.ext.mark(g) == Some(Mark::Ext)).collect();
            for (i, c, _, _) in &rel {
                let tile = &self.tileset.tiles()[*i];
                cells.extend(self.fibers[*i].ext_positions().iter().map(|&p| *c + tile.points()[p]));
            }
            let e = FiniteRegion::from_points(region.dim(), cells)?;
            if enumeration_proxy_ln(&self.spec, &e)? > ENUM_BUDGET_LN {
                return Err(Error::Budget(format!("{} source cells for a local enumeration", e.len())));
            }
            let words = enumerate_words(&self.spec, &e, self.margin)?;
            let ext_map: Vec<(usize, usize)> = region
                .iter()
                .enumerate()
                .filter_map(|(k, g)| if s.ext.mark(g) == Some(Mark::Ext) { Some((k, e.index_of(g)?)) } else { None })
                .collect();
            let trans: Vec<LocalTranslate> = rel
                .iter()
                .map(|(i, c, int_in, _)| {
                    let tile = &self.tileset.tiles()[*i];
                    let key_idx = self.fibers[*i].ext_positions().iter().map(|&p| e.index_of(&(*c + tile.points()[p])).expect("ext cell")).collect();
                    let dest = int_in.iter().map(|&p| region.index_of(&(*c + tile.points()[p])).expect("inside region")).collect();
                    (*i, *c, int_in.clone(), key_idx, dest)
                })
                .collect();
            let mut base = vec![Symbol(0); region.len()];
            for z in &words {
                for &(k, p) in &ext_map {
                    base[k] = z[p];
                }
                let mut opts: Vec<(Restrictions, &Vec<usize>)> = Vec::with_capacity(trans.len());
                for (i, c, int_in, key_idx, dest) in &trans {
                    let key: Vec<Symbol> = key_idx.iter().map(|&p| z[p]).collect();
                    if self.fibers[*i].fiber(&key).is_none() {
                        return Err(Error::MissingCompletion(*c));
                    }
                    opts.push((self.restrictions(&mut cache, *i, &key, int_in), dest));
                }
                let counts: Vec<usize> = opts.iter().map(|(r, _)| r.partition_point(|x| (x.1 as usize) < jj)).collect();
                let mut idx = vec![0usize; opts.len()];
                'product: loop {
                    for ((r, dest), &k) in opts.iter().zip(&idx) {
                        for (&d, &v) in dest.iter().zip(&r[k].0) {
                            base[d] = v;
                        }
                    }
                    out.insert(base.clone());
                    if out.len() > LOCAL_PATTERN_BUDGET {
                        return Err(Error::Budget(format!("more than {LOCAL_PATTERN_BUDGET} local image patterns")));
                    }
                    for p in (0..idx.len()).rev() {
                        idx[p] += 1;
                        if idx[p] < counts[p] {
                            continue 'product;
                        }
                        idx[p] = 0;
                    }
                    break;
                }
            }
        }
        Ok(out)
    }

    /// Patterns on B_r seen anywhere in W at the given level, against X_{B_r}.
    pub fn ball_agreement(&self, level: usize) -> Result<BrAgreement> {
        let level = level.clamp(1, self.top_level().max(1));
        if let Some(b) = self.balls.lock().expect("ball cache").get(&level) {
            return Ok(b.clone());
        }
        let ctx = self.spec.ctx();
        let ball = ctx.ball(self.r);
        let win = self.window.to_hash_set();
        let positions: Vec<GroupPoint> =
            self.window.iter().copied().filter(|&g| ball.iter().all(|&b| win.contains(&(g + b)))).collect();
        if positions.is_empty() {
            return Err(Error::WindowTooSmall("no copy of B_r fits inside the window".into()));
        }
        let parts = positions
            .par_iter()
            .map(|&g| self.local_words(&ball.translate(g), level))
            .collect::<Result<Vec<_>>>()?;
        let y: HashSet<Vec<Symbol>> = parts.into_iter().flatten().collect();
        let x: HashSet<Vec<Symbol>> = enumerate_words(&self.spec, &ball, self.margin)?.into_iter().collect();
        let missing = x.difference(&y).count();
        let extra = y.difference(&x).count();
        let agreement = BrAgreement {
            level,
            positions: positions.len(),
            x_count: x.len(),
            y_count: y.len(),
            missing,
            extra,
            pass: missing == 0 && extra == 0,
        };
        self.balls.lock().expect("ball cache").insert(level, agreement.clone());
        Ok(agreement)
    }

    /// Box of about `cells` sites around the centre of W.
    fn check_window(&self, cells: usize) -> Result<FiniteRegion> {
        let d = self.window.dim();
        let (lo, hi) = self.window.bounds().ok_or(Error::EmptyRegion)?;
        let side = ((cells as f64).powf(1.0 / d as f64).floor() as usize).max(1);
        let mut corner = Vec::with_capacity(d);
        let mut sides = Vec::with_capacity(d);
        for k in 0..d {
            let len = (hi[k] - lo[k] + 1) as usize;
            let s = side.min(len);
            sides.push(s);
            corner.push(lo[k] + ((len - s) / 2) as i32);
        }
        let b = self.spec.ctx().box_region(&sides, GroupPoint::new(&corner)?)?;
        Ok(b.intersection(&self.window))
    }
}

/// ln of a product of per-cluster pattern counts, an upper bound on |X_E|.
fn enumeration_proxy_ln(spec: &ShiftSpec, e: &FiniteRegion) -> Result<f64> {
    let ctx = spec.ctx();
    let reach = (2 * spec.window_radius()).max(1);
    let pts = e.points();
    let mut parent: Vec<usize> = (0..pts.len()).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for a in 0..pts.len() {
        for b in a + 1..pts.len() {
            if ctx.distance(&pts[a], &pts[b]) <= reach {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                parent[ra] = rb;
            }
        }
    }
    let mut clusters: BTreeMap<usize, Vec<GroupPoint>> = BTreeMap::new();
    for (k, &g) in pts.iter().enumerate() {
        let root = find(&mut parent, k);
        clusters.entry(root).or_default().push(g);
    }
    let a = spec.alphabet().size() as f64;
    let mut total = 0.0;
    for c in clusters.values() {
        // cheap cap first; exact cluster counts only when they could matter
        let cap = c.len() as f64 * a.ln();
        total += if cap <= 24.0 * std::f64::consts::LN_2 {
            ln_big(&count_patterns(spec, &FiniteRegion::from_points(e.dim(), c.iter().copied())?)?)
        } else {
            cap
        };
    }
    Ok(total)
}

fn build_sample(ts: &TileSet, window: &FiniteRegion, r: usize) -> Result<(FiniteRegion, Vec<SampleTiling>)> {
    let ctx = ts.ctx();
    let rt = ts.radius();
    let working = ctx.dilate(window, rt + r);
    let base_region = ctx.dilate(window, rt + r + 2 * rt + 2);
    let base = greedy_maximal(ts, &base_region)?;
    let offsets = ctx.ball(rt).points().to_vec();
    let mut sample: Vec<SampleTiling> = offset_sample(&base, &offsets, &working, window)
        .into_iter()
        .map(|(o, t)| {
            let ext = exterior(&t, r);
            SampleTiling { label: format!("offset {o}"), tiling: t, ext }
        })
        .collect();
    let witness = witness_tiling(&base, window, &working, r)?
        .ok_or_else(|| Error::WindowTooSmall("no sampled tiling leaves a copy of B_r in its exterior".into()))?;
    let meets = |t: &QuasiTiling| -> BTreeMap<GroupPoint, usize> {
        let w = window.to_hash_set();
        t.placements()
            .iter()
            .filter(|(&c, &i)| t.tileset().tiles()[i].iter().any(|&g| w.contains(&(c + g))))
            .map(|(&c, &i)| (c, i))
            .collect()
    };
    let wkey = meets(&witness);
    if !sample.iter().any(|s| meets(&s.tiling) == wkey) {
        let ext = exterior(&witness, r);
        sample.push(SampleTiling { label: "witness".into(), tiling: witness, ext });
    }
    Ok((working, sample))
}

/// The base tiling with every translate from the one nearest W's centre onward
/// pushed one step along the first axis, opening a gap whose B_r is all ext.
fn witness_tiling(base: &QuasiTiling, window: &FiniteRegion, working: &FiniteRegion, r: usize) -> Result<Option<QuasiTiling>> {
    let ts = base.tileset();
    let ctx = ts.ctx();
    let d = window.dim();
    let (lo, hi) = window.bounds().ok_or(Error::EmptyRegion)?;
    let centre: Vec<i32> = lo.iter().zip(&hi).map(|(a, b)| (a + b).div_euclid(2)).collect();
    let centre = GroupPoint::new(&centre)?;
    let win = window.to_hash_set();
    let mut cuts: Vec<GroupPoint> = base.placements().keys().copied().filter(|c| working.contains(c)).collect();
    cuts.sort_by_key(|&c| ((c - centre).l1(), c));
    let step = GroupPoint::axis(d, 0, 1);
    let region = base.window().to_hash_set();
    let ball = ctx.ball(r);
    for cut in cuts {
        let placements: BTreeMap<GroupPoint, usize> = base
            .placements()
            .iter()
            .map(|(&c, &i)| if c.coords()[0] >= cut.coords()[0] { (c + step, i) } else { (c, i) })
            .filter(|&(c, i)| ts.tiles()[i].iter().all(|&g| region.contains(&(c + g))))
            .collect();
        let Ok(shifted) = QuasiTiling::new(ts.clone(), base.window().clone(), placements) else {
            continue;
        };
        let t = shifted.shifted_within(GroupPoint::zero(d), working);
        let ext = exterior(&t, r);
        let found = window.iter().any(|&g| {
            ball.iter().all(|&b| win.contains(&(g + b)) && ext.mark(&(g + b)) == Some(Mark::Ext))
        });
        if found {
            return Ok(Some(t));
        }
    }
    Ok(None)
}

/// A level of the construction as a shift handle: images live on W.
#[derive(Clone)]
pub struct ApproxShift {
    pipeline: Arc<Pipeline>,
    level: usize,
}

impl ApproxShift {
    pub fn new(pipeline: Arc<Pipeline>, level: usize) -> Self {
        Self { pipeline, level }
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn pipeline(&self) -> &Pipeline {
        &self.pipeline
    }

    pub fn estimate<S: Scalar>(&self) -> Result<Bracket<S>> {
        self.pipeline.bracket(self.level)
    }

    /// Completes `x` (a pattern covering the working window) along a sampled
    /// tiling with the rank-`level` tables and restricts the result to W.
    pub fn image(&self, x: &Pattern, tiling: usize) -> Result<Pattern> {
        let p = &self.pipeline;
        let s = p.sample.get(tiling).ok_or(Error::InvalidParameter { name: "tiling", reason: format!("{tiling} out of range") })?;
        let y = x.restrict(&p.working)?;
        let out = complete(&y, &s.tiling, &p.completion_tables(self.level))?;
        out.restrict(&p.window)
    }

    /// Image patterns on `region` ⊆ W, sorted.
    pub fn patterns_on(&self, region: &FiniteRegion) -> Result<Vec<Pattern>> {
        let mut words: Vec<Vec<Symbol>> = self.pipeline.local_words(region, self.level)?.into_iter().collect();
        words.sort_unstable();
        words.into_iter().map(|w| Pattern::new(region.clone(), w)).collect()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ApproxReport<S: Scalar> {
    pub window_size: usize,
    pub working_size: usize,
    pub locality: usize,
    pub r: usize,
    pub eps: S,
    pub tile_sizes: Vec<usize>,
    pub sample_size: usize,
    pub exterior_density: S,
    pub estimate: Bracket<S>,
    pub ball: BrAgreement,
    pub sparse_bound: Option<BoundCertificate<S>>,
    pub sample_entropy: S,
    /// Sparse bound plus the sample term.
    pub bound_sum: Option<S>,
    /// 3ε′·ln(|A|/ε′) ≤ ε/2 at the measured ε′.
    pub sufficient_condition: bool,
    pub factor_inequality: Option<bool>,
    pub attempts: Vec<TileAttempt<S>>,
    pub pass: bool,
}

pub fn low_entropy_approx<S: Scalar>(spec: &ShiftSpec, r: usize, eps: S, window: &FiniteRegion) -> Result<(ApproxShift, ApproxReport<S>)> {
    let (p, attempts) = Pipeline::auto(spec, r, eps, window)?;
    let (shift, mut report) = low_entropy_approx_with(Arc::new(p), eps)?;
    report.attempts = attempts;
    Ok((shift, report))
}

pub fn low_entropy_approx_with<S: Scalar>(p: Arc<Pipeline>, eps: S) -> Result<(ApproxShift, ApproxReport<S>)> {
    let e = eps.as_f64();
    let est = p.bracket::<S>(1)?;
    let ball = p.ball_agreement(1)?;
    let n = p.window.len() as f64;
    let a = p.spec.alphabet().size();
    let eps_prime = p.exterior_density();
    let sample_entropy = (p.sample_len() as f64).ln() / n;
    let sparse_bound = if eps_prime > 0.0 && eps_prime <= 1.0 { Some(sparse_entropy_bound(a, S::lit(eps_prime))?) } else { None };
    let bound_sum = sparse_bound.as_ref().map(|b| b.bound + S::lit(sample_entropy));
    let sufficient_condition = eps_prime > 0.0 && 3.0 * eps_prime * (a as f64 / eps_prime).ln() <= e / 2.0;
    let factor_inequality = if p.working.dim() == 1 && p.working.is_box() {
        let ln_source = ln_big(&count_patterns(&p.spec, &p.working)?) + (p.sample_len() as f64).ln();
        Some(est.hi.as_f64() * n <= ln_source + TOL)
    } else {
        None
    };
    let pass = ball.pass && est.hi.as_f64() < e;
    let report = ApproxReport {
        window_size: p.window.len(),
        working_size: p.working.len(),
        locality: p.locality(),
        r: p.r,
        eps,
        tile_sizes: p.tileset.tiles().iter().map(|t| t.len()).collect(),
        sample_size: p.sample_len(),
        exterior_density: S::lit(eps_prime),
        estimate: est,
        ball,
        sparse_bound,
        sample_entropy: S::lit(sample_entropy),
        bound_sum,
        sufficient_condition,
        factor_inequality,
        attempts: Vec::new(),
        pass,
    };
    Ok((ApproxShift::new(p, 1), report))
}

#[derive(Clone, Debug, Serialize)]
pub struct ChainSegment<S: Scalar> {
    pub from: usize,
    pub to: usize,
    /// hi(to) − lo(from): bounds every single-step increment in between.
    pub bound: S,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Containment {
    /// Fibers cover X_tile exactly, so every source translate keeps its own values at the top level.
    pub structural: bool,
    pub check_window_size: usize,
    pub enumerative: Option<bool>,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ChainReport<S: Scalar> {
    pub window_size: usize,
    pub locality: usize,
    pub r: usize,
    pub eps: S,
    pub c: S,
    pub tile_sizes: Vec<usize>,
    pub sample_size: usize,
    pub top_level: usize,
    pub source_estimate: S,
    pub base: Bracket<S>,
    pub base_pass: bool,
    pub segments: Vec<ChainSegment<S>>,
    pub increments_pass: bool,
    pub ladder: Vec<Bracket<S>>,
    pub ball_base: BrAgreement,
    pub ball_top: BrAgreement,
    pub containment: Containment,
    pub selected: usize,
    pub selected_estimate: Bracket<S>,
    /// Informational: bound on the pruned-tiling term at the sampled h(Q).
    pub qp_bound: Option<BoundCertificate<S>>,
    pub attempts: Vec<TileAttempt<S>>,
    pub pass: bool,
}

pub fn entropy_chain<S: Scalar>(spec: &ShiftSpec, r: usize, eps: S, c: S, window: &FiniteRegion) -> Result<ChainReport<S>> {
    let (p, attempts) = Pipeline::auto(spec, r, eps, window)?;
    let mut report = entropy_chain_with(&p, eps, c)?;
    report.attempts = attempts;
    Ok(report)
}

pub fn entropy_chain_with<S: Scalar>(p: &Pipeline, eps: S, c: S) -> Result<ChainReport<S>> {
    let e = eps.as_f64();
    let cv = c.as_f64();
    let n = p.window.len() as f64;
    let source = ln_big(&count_patterns(&p.spec, &p.window)?) / n;
    if !(cv >= 0.0) || cv > source + TOL {
        return Err(Error::InvalidParameter { name: "c", reason: format!("{cv} outside [0, {source:.6}]") });
    }
    let top = p.top_level();
    let br = |j: usize| p.bracket::<f64>(j);

    let base = br(0)?;
    let mut segments = Vec::new();
    let mut stack = vec![(1usize, top)];
    while let Some((a, b)) = stack.pop() {
        if b <= a {
            continue;
        }
        let bound = br(b)?.hi - br(a)?.lo;
        if bound <= e + TOL || b == a + 1 {
            segments.push(ChainSegment { from: a, to: b, bound: S::lit(bound), pass: bound <= e + TOL });
        } else {
            let mid = a + (b - a) / 2;
            stack.push((mid, b));
            stack.push((a, mid));
        }
    }
    segments.sort_by_key(|s| s.from);
    let increments_pass = segments.iter().all(|s| s.pass);

    // smallest level whose lower estimate reaches c
    let (mut lo_j, mut hi_j) = (0usize, top);
    if br(top)?.lo < cv - TOL {
        return Err(no_level(p, cv));
    }
    while lo_j < hi_j {
        let mid = lo_j + (hi_j - lo_j) / 2;
        if br(mid)?.lo >= cv - TOL {
            hi_j = mid;
        } else {
            lo_j = mid + 1;
        }
    }
    let selected = lo_j;
    let sel = br(selected)?;
    if sel.hi >= cv + e {
        return Err(no_level(p, cv));
    }

    let ball_base = p.ball_agreement(1)?;
    let ball_top = p.ball_agreement(top)?;
    let structural = p.fibers.iter().all(|f| f.is_exhaustive());
    let cw = p.check_window(CONTAINMENT_CELLS)?;
    let enumerative = match p.local_words(&cw, top) {
        Ok(y) => {
            let x = enumerate_words(&p.spec, &cw, p.margin)?;
            Some(x.iter().all(|w| y.contains(w)))
        }
        Err(Error::Budget(_)) => None,
        Err(err) => return Err(err),
    };
    let containment = Containment {
        structural,
        check_window_size: cw.len(),
        enumerative,
        pass: structural && enumerative != Some(false),
    };
    let h_q = (p.sample_len() as f64).ln() / n;
    let qp_bound = qp_entropy_bound(S::lit(h_q), p.r).ok();
    let base_pass = base.hi < e;
    let pass = base_pass && increments_pass && ball_base.pass && ball_top.pass && containment.pass;
    let cast = |b: Bracket<f64>| Bracket { level: b.level, lo: S::lit(b.lo), hi: S::lit(b.hi), exact: b.exact };
    Ok(ChainReport {
        window_size: p.window.len(),
        locality: p.locality(),
        r: p.r,
        eps,
        c,
        tile_sizes: p.tileset.tiles().iter().map(|t| t.len()).collect(),
        sample_size: p.sample_len(),
        top_level: top,
        source_estimate: S::lit(source),
        base: cast(base),
        base_pass,
        segments,
        increments_pass,
        ladder: ladder(p).into_iter().map(cast).collect(),
        ball_base,
        ball_top,
        containment,
        selected,
        selected_estimate: cast(Bracket { level: selected, ..sel }),
        qp_bound,
        attempts: Vec::new(),
        pass,
    })
}

fn ladder(p: &Pipeline) -> Vec<Bracket<f64>> {
    p.brackets
        .lock()
        .expect("bracket cache")
        .iter()
        .map(|(&level, &(lo, hi, exact))| Bracket { level, lo, hi, exact })
        .collect()
}

fn no_level(p: &Pipeline, c: f64) -> Error {
    Error::NoChainLevel { c, ladder: ladder(p).into_iter().map(|b| (b.level, b.lo, b.hi)).collect() }
}
