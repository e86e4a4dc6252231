//! Tile sets and disjoint quasi-tilings of finite windows.

mod svg;

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use num_rational::Ratio;
use num_traits::ToPrimitive;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{FiniteRegion, GroupContext, GroupPoint};
use crate::pattern::{check_gluing, Alphabet, GluingVerdict, Pattern, ShiftSpec, Symbol, SymbolLabel};
use crate::scalar::Scalar;

pub use svg::render_svg;

/// Ordered list of finite tiles, each containing the identity.
#[derive(Clone, Debug, PartialEq)]
pub struct TileSet {
    ctx: GroupContext,
    tiles: Vec<FiniteRegion>,
}

impl TileSet {
    pub fn new(ctx: GroupContext, tiles: Vec<FiniteRegion>) -> Result<Self> {
        if tiles.is_empty() {
            return Err(Error::InvalidTileSet("no tiles".into()));
        }
        let id = ctx.identity();
        for (i, t) in tiles.iter().enumerate() {
            ctx.check_dim(t)?;
            if !t.contains(&id) {
                return Err(Error::InvalidTileSet(format!("tile {i} does not contain the identity")));
            }
        }
        Ok(Self { ctx, tiles })
    }

    /// A single box tile `[0, L)^d`.
    pub fn cube(ctx: GroupContext, side: usize) -> Result<Self> {
        let d = ctx.dimension();
        let tile = ctx.box_region(&vec![side; d], GroupPoint::zero(d))?;
        Self::new(ctx, vec![tile])
    }

    /// Nested cubes of sides L, 2L, 4L, …
    pub fn nested_cubes(ctx: GroupContext, side: usize, levels: usize) -> Result<Vec<Self>> {
        (0..levels).map(|k| Self::cube(ctx.clone(), side << k)).collect()
    }

    pub fn ctx(&self) -> &GroupContext {
        &self.ctx
    }

    pub fn tiles(&self) -> &[FiniteRegion] {
        &self.tiles
    }

    pub fn len(&self) -> usize {
        self.tiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tiles.is_empty()
    }

    /// r(𝒯): the largest word length of a tile element.
    pub fn radius(&self) -> usize {
        self.tiles.iter().flat_map(|t| t.iter()).map(|g| self.ctx.norm(g)).max().unwrap_or(0)
    }

    pub fn min_tile_size(&self) -> usize {
        self.tiles.iter().map(|t| t.len()).min().unwrap_or(0)
    }

    pub fn max_tile_size(&self) -> usize {
        self.tiles.iter().map(|t| t.len()).max().unwrap_or(0)
    }

    /// Concatenation 𝒯 ∪ 𝒮 keeping the order of both lists.
    pub fn concat(&self, other: &TileSet) -> Result<TileSet> {
        if self.ctx != other.ctx {
            return Err(Error::InvalidTileSet("tile sets live on different groups".into()));
        }
        let mut tiles = self.tiles.clone();
        tiles.extend(other.tiles.iter().cloned());
        Ok(TileSet { ctx: self.ctx.clone(), tiles })
    }

    /// Tile indices by decreasing size, ties by index.
    fn size_order(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.tiles.len()).collect();
        idx.sort_by_key(|&i| (std::cmp::Reverse(self.tiles[i].len()), i));
        idx
    }
}

/// Pairwise disjoint tile-translates inside a window.
#[derive(Clone, Debug, PartialEq)]
pub struct QuasiTiling {
    tileset: TileSet,
    window: FiniteRegion,
    placements: BTreeMap<GroupPoint, usize>,
}

impl QuasiTiling {
    /// Validates containment and disjointness.
    pub fn new(tileset: TileSet, window: FiniteRegion, placements: BTreeMap<GroupPoint, usize>) -> Result<Self> {
        tileset.ctx().check_dim(&window)?;
        let win = window.to_hash_set();
        let mut covered = HashSet::new();
        for (&c, &i) in &placements {
            let tile = tileset
                .tiles()
                .get(i)
                .ok_or_else(|| Error::InvalidTiling(format!("tile index {i} out of range")))?;
            for &g in tile.iter() {
                let p = c + g;
                if !win.contains(&p) {
                    return Err(Error::InvalidTiling(format!("translate at {c} leaves the window")));
                }
                if !covered.insert(p) {
                    return Err(Error::InvalidTiling(format!("translate at {c} overlaps another at {p}")));
                }
            }
        }
        Ok(Self { tileset, window, placements })
    }

    pub fn empty(tileset: TileSet, window: FiniteRegion) -> Self {
        Self { tileset, window, placements: BTreeMap::new() }
    }

    pub fn tileset(&self) -> &TileSet {
        &self.tileset
    }

    pub fn window(&self) -> &FiniteRegion {
        &self.window
    }

    pub fn placements(&self) -> &BTreeMap<GroupPoint, usize> {
        &self.placements
    }

    pub fn translate_of(&self, corner: GroupPoint, tile: usize) -> FiniteRegion {
        self.tileset.tiles()[tile].translate(corner)
    }

    pub fn translates(&self) -> impl Iterator<Item = FiniteRegion> + '_ {
        self.placements.iter().map(|(&c, &i)| self.translate_of(c, i))
    }

    /// Covered cell → corner of its translate.
    pub fn cover_map(&self) -> HashMap<GroupPoint, GroupPoint> {
        let mut m = HashMap::new();
        for (&c, &i) in &self.placements {
            for &g in self.tileset.tiles()[i].iter() {
                m.insert(c + g, c);
            }
        }
        m
    }

    /// Inclusion order T′ ≤ T: every placement of `self` is one of `other`.
    pub fn is_sub_tiling_of(&self, other: &QuasiTiling) -> bool {
        self.placements.iter().all(|(c, i)| other.placements.get(c) == Some(i))
    }

    /// No (corner, tile) pair can be added.
    pub fn is_maximal(&self) -> bool {
        let win = self.window.to_hash_set();
        let cover = self.cover_map();
        for &c in self.window.iter() {
            for tile in self.tileset.tiles() {
                if tile.iter().all(|&g| win.contains(&(c + g)) && !cover.contains_key(&(c + g))) {
                    return false;
                }
            }
        }
        true
    }

    /// The same placements moved by `g`, keeping those that stay inside `window`.
    pub fn shifted_within(&self, g: GroupPoint, window: &FiniteRegion) -> QuasiTiling {
        let win = window.to_hash_set();
        let placements = self
            .placements
            .iter()
            .map(|(&c, &i)| (c + g, i))
            .filter(|&(c, i)| self.tileset.tiles()[i].iter().all(|&t| win.contains(&(c + t))))
            .collect();
        QuasiTiling { tileset: self.tileset.clone(), window: window.clone(), placements }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TileInvariance<S: Scalar> {
    pub tile: usize,
    pub ratio: (usize, usize),
    pub value: S,
    pub pass: bool,
}

pub fn tileset_invariance<S: Scalar>(ts: &TileSet, r: usize, eps: S) -> Result<Vec<TileInvariance<S>>> {
    ts.tiles()
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let q = ts.ctx().boundary_ratio(t, r)?;
            let value = S::lit(q.to_f64().unwrap_or(f64::INFINITY));
            Ok(TileInvariance { tile: i, ratio: (*q.numer(), *q.denom()), value, pass: ratio_le(q, eps) })
        })
        .collect()
}

fn ratio_le<S: Scalar>(q: Ratio<usize>, eps: S) -> bool {
    q.to_f64().unwrap_or(f64::INFINITY) <= eps.as_f64() + 1e-12
}

/// Lexicographic scan of corners, largest tile first.
pub fn greedy_maximal(ts: &TileSet, window: &FiniteRegion) -> Result<QuasiTiling> {
    if window.is_empty() {
        return Err(Error::EmptyRegion);
    }
    ts.ctx().check_dim(window)?;
    let win = window.to_hash_set();
    let order = ts.size_order();
    let mut covered: HashSet<GroupPoint> = HashSet::new();
    let mut placements = BTreeMap::new();
    for &c in window.iter() {
        if covered.contains(&c) {
            continue;
        }
        for &i in &order {
            let tile = &ts.tiles()[i];
            if tile.iter().all(|&g| win.contains(&(c + g)) && !covered.contains(&(c + g))) {
                covered.extend(tile.iter().map(|&g| c + g));
                placements.insert(c, i);
                break;
            }
        }
    }
    Ok(QuasiTiling { tileset: ts.clone(), window: window.clone(), placements })
}

/// ψ(T, S): all of T, plus each translate of S that misses every translate of T.
pub fn combine(t: &QuasiTiling, s: &QuasiTiling) -> Result<QuasiTiling> {
    if t.window != s.window {
        return Err(Error::InvalidTiling("window mismatch".into()));
    }
    let tileset = t.tileset.concat(&s.tileset)?;
    let offset = t.tileset.len();
    let cover = t.cover_map();
    let mut placements = t.placements.clone();
    for (&c, &i) in &s.placements {
        if s.tileset.tiles()[i].iter().all(|&g| !cover.contains_key(&(c + g))) {
            placements.insert(c, i + offset);
        }
    }
    Ok(QuasiTiling { tileset, window: t.window.clone(), placements })
}

/// Left fold of `combine`.
pub fn combine_all(tilings: &[QuasiTiling]) -> Result<QuasiTiling> {
    let (first, rest) = tilings.split_first().ok_or_else(|| Error::InvalidTiling("no tilings".into()))?;
    rest.iter().try_fold(first.clone(), |acc, s| combine(&acc, s))
}

/// Greedy maximal tilings of each tile set, combined in order.
pub fn hierarchy(tilesets: &[TileSet], window: &FiniteRegion) -> Result<QuasiTiling> {
    let tilings = tilesets.iter().map(|ts| greedy_maximal(ts, window)).collect::<Result<Vec<_>>>()?;
    combine_all(&tilings)
}

/// e(T, F): uncovered sites of F.
pub fn error_count(t: &QuasiTiling, f: &FiniteRegion) -> Result<usize> {
    if !f.is_subset(&t.window) {
        return Err(Error::OutsideWindow);
    }
    let cover = t.cover_map();
    Ok(f.iter().filter(|g| !cover.contains_key(g)).count())
}

#[derive(Clone, Debug, Serialize)]
pub struct ErrorDensity<S: Scalar> {
    pub errors: usize,
    pub size: usize,
    pub density: S,
    /// ρ₁(F), the invariance of the measuring window.
    pub boundary_ratio: S,
}

pub fn error_density<S: Scalar>(t: &QuasiTiling, f: &FiniteRegion) -> Result<ErrorDensity<S>> {
    let errors = error_count(t, f)?;
    let rho = t.tileset.ctx().boundary_ratio(f, 1)?;
    Ok(ErrorDensity {
        errors,
        size: f.len(),
        density: S::lit(errors as f64 / f.len() as f64),
        boundary_ratio: S::lit(rho.to_f64().unwrap_or(f64::INFINITY)),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mark {
    Int,
    Ext,
}

/// int/ext marks over a tiling's window.
#[derive(Clone, Debug, PartialEq)]
pub struct ExteriorLabeling {
    region: FiniteRegion,
    marks: Vec<Mark>,
}

impl ExteriorLabeling {
    pub fn new(region: FiniteRegion, marks: Vec<Mark>) -> Result<Self> {
        if marks.len() != region.len() {
            return Err(Error::SupportMismatch);
        }
        Ok(Self { region, marks })
    }

    pub fn region(&self) -> &FiniteRegion {
        &self.region
    }

    pub fn marks(&self) -> &[Mark] {
        &self.marks
    }

    pub fn mark(&self, g: &GroupPoint) -> Option<Mark> {
        self.region.index_of(g).map(|i| self.marks[i])
    }

    pub fn ext_count(&self, f: &FiniteRegion) -> usize {
        f.iter().filter(|g| self.mark(g) != Some(Mark::Int)).count()
    }

    /// Fraction of `f` marked ext; cells outside the region count as ext.
    pub fn density(&self, f: &FiniteRegion) -> f64 {
        if f.is_empty() {
            return 0.0;
        }
        self.ext_count(f) as f64 / f.len() as f64
    }

    pub fn restrict(&self, f: &FiniteRegion) -> ExteriorLabeling {
        let marks = f.iter().map(|g| self.mark(g).unwrap_or(Mark::Ext)).collect();
        ExteriorLabeling { region: f.clone(), marks }
    }
}

/// Marks of one tile: ext exactly on ∂_r(T) ∩ T.
pub fn tile_marks(ctx: &GroupContext, tile: &FiniteRegion, r: usize) -> Vec<Mark> {
    let ball = ctx.ball(r);
    let set = tile.to_hash_set();
    tile.iter()
        .map(|&g| if ball.iter().all(|&b| set.contains(&(g + b))) { Mark::Int } else { Mark::Ext })
        .collect()
}

/// ext at uncovered sites and on ∂_r of each site's own translate.
pub fn exterior(t: &QuasiTiling, r: usize) -> ExteriorLabeling {
    let mut by_cell: HashMap<GroupPoint, Mark> = HashMap::new();
    let tile_marks: Vec<Vec<Mark>> = t.tileset.tiles().iter().map(|tile| tile_marks(t.tileset.ctx(), tile, r)).collect();
    for (&c, &i) in &t.placements {
        for (&g, &m) in t.tileset.tiles()[i].iter().zip(&tile_marks[i]) {
            by_cell.insert(c + g, m);
        }
    }
    let marks = t.window.iter().map(|g| by_cell.get(g).copied().unwrap_or(Mark::Ext)).collect();
    ExteriorLabeling { region: t.window.clone(), marks }
}

/// Keeps only the placements whose corners are listed.
pub fn prune(t: &QuasiTiling, keep: &BTreeSet<GroupPoint>) -> Result<QuasiTiling> {
    if let Some(&bad) = keep.iter().find(|c| !t.placements.contains_key(c)) {
        return Err(Error::NotACorner { corner: bad });
    }
    let placements = t.placements.iter().filter(|(c, _)| keep.contains(c)).map(|(&c, &i)| (c, i)).collect();
    Ok(QuasiTiling { tileset: t.tileset.clone(), window: t.window.clone(), placements })
}

#[derive(Clone, Debug, Serialize)]
pub struct CompatibilityVerdict<S: Scalar> {
    pub pass: bool,
    pub tested: usize,
    pub worst_ratio: S,
    pub worst_at: Option<(GroupPoint, usize)>,
}

/// e(T, hRᵢ) ≤ ε|Rᵢ| for every R-translate inside the window eroded by r(R).
pub fn compatibility_check<S: Scalar>(t: &QuasiTiling, r_set: &TileSet, eps: S) -> Result<CompatibilityVerdict<S>> {
    let ctx = t.tileset.ctx();
    let inner = ctx.erode(&t.window, r_set.radius()).to_hash_set();
    let cover = t.cover_map();
    let mut tested = 0;
    let mut worst = -1.0f64;
    let mut worst_at = None;
    for &h in t.window.iter() {
        for (i, tile) in r_set.tiles().iter().enumerate() {
            if !tile.iter().all(|&g| inner.contains(&(h + g))) {
                continue;
            }
            tested += 1;
            let e = tile.iter().filter(|&&g| !cover.contains_key(&(h + g))).count();
            let ratio = e as f64 / tile.len() as f64;
            if ratio > worst {
                worst = ratio;
                worst_at = Some((h, i));
            }
        }
    }
    if tested == 0 {
        return Err(Error::WindowTooSmall("no R-translate fits inside the eroded window".into()));
    }
    Ok(CompatibilityVerdict { pass: worst <= eps.as_f64() + 1e-12, tested, worst_ratio: S::lit(worst), worst_at })
}

/// Distinct tilings obtained by moving `base` by each offset and clipping to `target`,
/// deduplicated by their translates meeting `relevant`. Labels keep the first offset.
pub(crate) fn offset_sample(
    base: &QuasiTiling,
    offsets: &[GroupPoint],
    target: &FiniteRegion,
    relevant: &FiniteRegion,
) -> Vec<(GroupPoint, QuasiTiling)> {
    let rel = relevant.to_hash_set();
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for &o in offsets {
        let t = base.shifted_within(o, target);
        let key: Vec<(GroupPoint, usize)> = t
            .placements
            .iter()
            .filter(|(&c, &i)| t.tileset.tiles()[i].iter().any(|&g| rel.contains(&(c + g))))
            .map(|(&c, &i)| (c, i))
            .collect();
        if seen.insert(key) {
            out.push((o, t));
        }
    }
    out
}

/// SFT on {∅, 1..n} whose configurations are the maximal disjoint 𝒯-tilings
/// (symbol i+1 at a corner of a Tᵢ-translate).
pub fn maximal_tiling_sft(ts: &TileSet) -> Result<ShiftSpec> {
    const MAX_LABELINGS: usize = 1 << 16;
    let ctx = ts.ctx().clone();
    let n = ts.len();
    let labels: Vec<SymbolLabel> = (0..=n as i64).map(SymbolLabel::Int).collect();
    let alphabet = Alphabet::new(labels, &SymbolLabel::Int(0))?;
    let zero = GroupPoint::zero(ctx.dimension());
    let tiles = ts.tiles();
    let meets = |i: usize, c: GroupPoint, j: usize| {
        let a = tiles[i].to_hash_set();
        tiles[j].iter().any(|&g| a.contains(&(c + g)))
    };
    let mut forbidden = Vec::new();
    for i in 0..n {
        for j in 0..n {
            for &a in tiles[i].iter() {
                for &b in tiles[j].iter() {
                    let c = a - b;
                    if c != zero && meets(i, c, j) {
                        let p = Pattern::from_map(ctx.dimension(), [(zero, Symbol(i as u8 + 1)), (c, Symbol(j as u8 + 1))])?;
                        forbidden.push(p);
                    }
                }
            }
        }
    }
    // no room left for a Tᵢ at the origin
    for i in 0..n {
        let mut cells: BTreeMap<GroupPoint, Vec<Symbol>> = BTreeMap::new();
        for j in 0..n {
            for &a in tiles[i].iter() {
                for &b in tiles[j].iter() {
                    cells.entry(a - b).or_default();
                }
            }
        }
        for (c, allowed) in cells.iter_mut() {
            allowed.push(Symbol(0));
            for j in 0..n {
                if !meets(i, *c, j) {
                    allowed.push(Symbol(j as u8 + 1));
                }
            }
        }
        let total: usize = cells.values().map(|v| v.len()).try_fold(1usize, |acc, k| acc.checked_mul(k)).unwrap_or(usize::MAX);
        if total > MAX_LABELINGS {
            return Err(Error::Budget(format!("maximality constraint for tile {i} has {total} labelings")));
        }
        let keys: Vec<GroupPoint> = cells.keys().copied().collect();
        let choices: Vec<&Vec<Symbol>> = cells.values().collect();
        let mut idx = vec![0usize; keys.len()];
        'labelings: loop {
            let values = idx.iter().zip(&choices).map(|(&k, c)| c[k]);
            forbidden.push(Pattern::from_map(ctx.dimension(), keys.iter().copied().zip(values))?);
            for p in (0..keys.len()).rev() {
                idx[p] += 1;
                if idx[p] < choices[p].len() {
                    continue 'labelings;
                }
                idx[p] = 0;
            }
            break;
        }
    }
    ShiftSpec::sft(ctx, alphabet, forbidden)
}

#[derive(Clone, Debug, Serialize)]
pub struct WindowCertificate<S: Scalar> {
    pub window_size: usize,
    pub boundary_ratio: S,
    pub errors: usize,
    pub error_density: S,
    pub density_ok: bool,
    pub distinct_tilings: usize,
    pub tiling_estimate: S,
    pub tiling_estimate_ok: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct TilesetCertificate<S: Scalar> {
    pub eps: S,
    pub windows: Vec<WindowCertificate<S>>,
    pub gluing_radius: usize,
    pub gluing: GluingVerdict,
    /// Largest ρ₁ among the tested windows.
    pub largest_delta: S,
    pub failures: Vec<String>,
    pub pass: bool,
}

/// Desk-scale ε-goodness: error density, tiling-count entropy, and gluing of the
/// maximal-tiling shift at radius 4·r(𝒯).
pub fn certify_tileset<S: Scalar>(ts: &TileSet, eps: S, windows: &[FiniteRegion]) -> Result<TilesetCertificate<S>> {
    let ctx = ts.ctx();
    let e = eps.as_f64();
    let mut out = Vec::new();
    let mut failures = Vec::new();
    let mut largest_delta = 0.0f64;
    let offsets: Vec<GroupPoint> = ctx.ball(ts.radius()).points().to_vec();
    for (wi, w) in windows.iter().enumerate() {
        let t = greedy_maximal(ts, w)?;
        let errors = error_count(&t, w)?;
        let density = errors as f64 / w.len() as f64;
        let rho = ctx.boundary_ratio(w, 1)?.to_f64().unwrap_or(f64::INFINITY);
        largest_delta = largest_delta.max(rho);
        let sample = offset_sample(&t, &offsets, w, w);
        let est = (sample.len() as f64).ln() / w.len() as f64;
        let density_ok = density <= e + 1e-12;
        let tiling_estimate_ok = est <= e + 1e-12;
        if !density_ok {
            failures.push(format!("window {wi}: error density {density:.4} > {e}"));
        }
        if !tiling_estimate_ok {
            failures.push(format!("window {wi}: tiling estimate {est:.4} > {e}"));
        }
        out.push(WindowCertificate {
            window_size: w.len(),
            boundary_ratio: S::lit(rho),
            errors,
            error_density: S::lit(density),
            density_ok,
            distinct_tilings: sample.len(),
            tiling_estimate: S::lit(est),
            tiling_estimate_ok,
        });
    }
    let radius = 4 * ts.radius();
    let sft = maximal_tiling_sft(ts)?;
    let d = ctx.dimension();
    let k = FiniteRegion::from_points(d, [GroupPoint::zero(d)])?;
    let h = FiniteRegion::from_points(d, [GroupPoint::axis(d, 0, radius as i32 + 1)])?;
    let gluing = check_gluing(&sft, radius, &k, &h, sft.default_margin())?;
    if !gluing.passed() {
        failures.push(format!("gluing of the maximal-tiling shift fails at radius {radius}"));
    }
    Ok(TilesetCertificate {
        eps,
        windows: out,
        gluing_radius: radius,
        gluing,
        largest_delta: S::lit(largest_delta),
        pass: failures.is_empty(),
        failures,
    })
}
