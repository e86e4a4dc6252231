//! Shifts with a cap on nonzero symbols per tile translate, a sparse marker
//! shift, the overlay map, and the spacing of entropies across cap levels.

use num_bigint::BigUint;
use serde::Serialize;

use crate::entropy::{
    entropy_estimate, level_low_entropy_bound, marker_bound, ser_big, spacing_bound, BoundCertificate, EntropyEstimate,
};
use crate::error::{Error, Result};
use crate::geometry::{FiniteRegion, GroupPoint};
use crate::pattern::{check_gluing, count_patterns, enumerate_words, all_words, Alphabet, GluingVerdict, Pattern, ShiftSpec, Symbol};
use crate::scalar::{ln_big, Scalar};
use crate::tiling::{greedy_maximal, tileset_invariance, QuasiTiling, TileInvariance, TileSet};

const TOL: f64 = 1e-9;
const MARKER_ENUM_BUDGET: usize = 1 << 20;

/// Xʲ: at most ⌊j·|Rᵢ|/|R₁|⌋ nonzero cells on every translate of every Rᵢ.
#[derive(Clone, Debug)]
pub struct DensitySft {
    tiles: TileSet,
    level: usize,
    caps: Vec<usize>,
    spec: ShiftSpec,
}

impl DensitySft {
    pub fn level(&self) -> usize {
        self.level
    }

    /// Per-tile caps on the nonzero count.
    pub fn caps(&self) -> &[usize] {
        &self.caps
    }

    pub fn tiles(&self) -> &TileSet {
        &self.tiles
    }

    pub fn spec(&self) -> &ShiftSpec {
        &self.spec
    }

    pub fn largest_tile(&self) -> usize {
        self.tiles.max_tile_size()
    }
}

pub fn density_sft(alphabet: &Alphabet, r_set: &TileSet, level: usize) -> Result<DensitySft> {
    let big = r_set.max_tile_size();
    if level > big {
        return Err(Error::InvalidParameter { name: "level", reason: format!("{level} outside 0..={big}") });
    }
    let zero = alphabet.zero();
    let mut forbidden = Vec::new();
    let mut caps = Vec::new();
    for tile in r_set.tiles() {
        let cap = level * tile.len() / big;
        caps.push(cap);
        if cap >= tile.len() {
            continue;
        }
        for w in all_words(alphabet.size(), tile.len()) {
            if w.iter().filter(|&&s| s != zero).count() > cap {
                forbidden.push(Pattern::new(tile.clone(), w)?);
            }
        }
    }
    let spec = ShiftSpec::sft(r_set.ctx().clone(), alphabet.clone(), forbidden)?;
    Ok(DensitySft { tiles: r_set.clone(), level, caps, spec })
}

/// Y: free off the translates of a fixed tiling, at most one nonzero on each translate.
#[derive(Clone, Debug)]
pub struct MarkerShift {
    alphabet: Alphabet,
    tiling: QuasiTiling,
}

#[derive(Clone, Debug, Serialize)]
pub struct MarkerReport<S: Scalar> {
    pub window_size: usize,
    pub translates: usize,
    pub uncovered: usize,
    /// 1 + |Tᵢ|(|A|−1) per tile.
    pub per_tile_counts: Vec<usize>,
    #[serde(serialize_with = "ser_big")]
    pub count: BigUint,
    pub estimate: S,
    pub bound: BoundCertificate<S>,
    pub pass: bool,
}

impl MarkerShift {
    pub fn tiling(&self) -> &QuasiTiling {
        &self.tiling
    }

    pub fn contains(&self, p: &Pattern) -> Result<bool> {
        if p.support() != self.tiling.window() {
            return Err(Error::SupportMismatch);
        }
        let zero = self.alphabet.zero();
        Ok(self.tiling.translates().all(|t| t.iter().filter(|g| p.get(g) != Some(zero)).count() <= 1))
    }

    /// Window patterns in lexicographic order.
    pub fn patterns(&self) -> Result<Vec<Pattern>> {
        let w = self.tiling.window();
        let a = self.alphabet.size();
        let zero = self.alphabet.zero();
        let cover = self.tiling.cover_map();
        let free: Vec<usize> = w.iter().enumerate().filter(|(_, g)| !cover.contains_key(g)).map(|(k, _)| k).collect();
        // choices per translate: all-zero, or one cell with one nonzero symbol
        let mut groups: Vec<Vec<Vec<(usize, Symbol)>>> = Vec::new();
        for t in self.tiling.translates() {
            let mut opts = vec![Vec::new()];
            for g in t.iter() {
                let k = w.index_of(g).expect("translate inside window");
                for s in (0..a as u8).map(Symbol).filter(|&s| s != zero) {
                    opts.push(vec![(k, s)]);
                }
            }
            groups.push(opts);
        }
        for &k in &free {
            groups.push((0..a as u8).map(|s| vec![(k, Symbol(s))]).collect());
        }
        let total = groups.iter().try_fold(1usize, |acc, g| acc.checked_mul(g.len()));
        if total.map_or(true, |t| t > MARKER_ENUM_BUDGET) {
            return Err(Error::Budget("marker shift has too many window patterns".into()));
        }
        let mut out = Vec::with_capacity(total.unwrap_or(0));
        let mut idx = vec![0usize; groups.len()];
        'all: loop {
            let mut values = vec![zero; w.len()];
            for (g, &k) in groups.iter().zip(&idx) {
                for &(cell, s) in &g[k] {
                    values[cell] = s;
                }
            }
            out.push(values);
            for p in (0..idx.len()).rev() {
                idx[p] += 1;
                if idx[p] < groups[p].len() {
                    continue 'all;
                }
                idx[p] = 0;
            }
            break;
        }
        out.sort_unstable();
        out.into_iter().map(|v| Pattern::new(w.clone(), v)).collect()
    }
}

pub fn marker_shift<S: Scalar>(alphabet: &Alphabet, t: &TileSet, window: &FiniteRegion) -> Result<(MarkerShift, MarkerReport<S>)> {
    let tiling = greedy_maximal(t, window)?;
    if tiling.placements().is_empty() {
        return Err(Error::WindowTooSmall("no tile translate fits in the window".into()));
    }
    let a = alphabet.size();
    let per_tile_counts: Vec<usize> = t.tiles().iter().map(|tile| 1 + tile.len() * (a - 1)).collect();
    let mut count = BigUint::from(1u8);
    for &i in tiling.placements().values() {
        count *= per_tile_counts[i];
    }
    let covered: usize = tiling.translates().map(|r| r.len()).sum();
    let uncovered = window.len() - covered;
    count *= BigUint::from(a).pow(uncovered as u32);
    let estimate = ln_big(&count) / window.len() as f64;
    let eps = 1.0 / t.min_tile_size() as f64;
    let bound = marker_bound(a, S::lit(eps))?;
    let pass = estimate <= bound.bound.as_f64() + TOL;
    let report = MarkerReport {
        window_size: window.len(),
        translates: tiling.placements().len(),
        uncovered,
        per_tile_counts,
        count,
        estimate: S::lit(estimate),
        bound,
        pass,
    };
    Ok((MarkerShift { alphabet: alphabet.clone(), tiling }, report))
}

/// x where x is nonzero, y elsewhere.
pub fn overlay(x: &Pattern, y: &Pattern, zero: Symbol) -> Result<Pattern> {
    if x.support() != y.support() {
        return Err(Error::SupportMismatch);
    }
    let values = x.values().iter().zip(y.values()).map(|(&a, &b)| if a != zero { a } else { b }).collect();
    Pattern::new(x.support().clone(), values)
}

/// Splits `x` into (x′, y): the first nonzero cell of each translate moves to
/// y, and so does everything off the translates.
pub fn split_markers(x: &Pattern, tiling: &QuasiTiling, zero: Symbol) -> Result<(Pattern, Pattern)> {
    let f = x.support();
    let cover = tiling.cover_map();
    let mut rest = x.values().to_vec();
    let mut marks = vec![zero; f.len()];
    for (k, g) in f.iter().enumerate() {
        if !cover.contains_key(g) {
            marks[k] = rest[k];
            rest[k] = zero;
        }
    }
    for t in tiling.translates() {
        if let Some(k) = t.iter().filter_map(|g| f.index_of(g)).find(|&k| rest[k] != zero) {
            marks[k] = rest[k];
            rest[k] = zero;
        }
    }
    Ok((Pattern::new(f.clone(), rest)?, Pattern::new(f.clone(), marks)?))
}

#[derive(Clone, Debug, Serialize)]
pub struct LevelRecord<S: Scalar> {
    pub level: usize,
    pub caps: Vec<usize>,
    pub estimate: EntropyEstimate<S>,
    /// est(j) − est(j−1).
    pub gap: Option<S>,
    pub gap_ok: bool,
    /// Xʲ⁻¹ ⊆ Xʲ on the check window.
    pub nested: Option<bool>,
    /// Every check-window pattern of Xʲ splits into an Xʲ⁻¹ pattern and a marker pattern.
    pub overlay: Option<bool>,
    pub low_entropy_bound: Option<BoundCertificate<S>>,
    pub low_entropy_ok: Option<bool>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectrumPreconditions<S: Scalar> {
    pub r_invariance: Vec<TileInvariance<S>>,
    pub t_invariance: Vec<TileInvariance<S>>,
    /// Every R-tile has at least 1/ε cells.
    pub tile_size_ok: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectrumReport<S: Scalar> {
    pub alphabet_size: usize,
    pub largest_tile: usize,
    pub eps: S,
    pub delta: BoundCertificate<S>,
    pub estimate_window_size: usize,
    pub check_window_size: usize,
    pub levels: Vec<LevelRecord<S>>,
    pub endpoints_ok: bool,
    pub max_gap: S,
    pub preconditions: SpectrumPreconditions<S>,
    pub failures: Vec<String>,
    pub pass: bool,
}

impl<S: Scalar> SpectrumReport<S> {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("level,count,estimate,gap,bound\n");
        for l in &self.levels {
            let gap = l.gap.map(|g| format!("{:.10}", g.as_f64())).unwrap_or_default();
            s.push_str(&format!(
                "{},{},{:.10},{},{:.10}\n",
                l.level,
                l.estimate.count,
                l.estimate.value.as_f64(),
                gap,
                self.delta.bound.as_f64()
            ));
        }
        s
    }
}

/// Estimates on `window`; nesting and the marker split on `check`.
pub fn spectrum<S: Scalar>(
    alphabet: &Alphabet,
    r_set: &TileSet,
    t: &TileSet,
    eps: S,
    window: &FiniteRegion,
    check: &FiniteRegion,
) -> Result<SpectrumReport<S>> {
    let e = eps.as_f64();
    let delta = spacing_bound(alphabet.size(), eps)?;
    let big = r_set.max_tile_size();
    let zero = alphabet.zero();
    let preconditions = SpectrumPreconditions {
        r_invariance: tileset_invariance(r_set, t.radius(), eps)?,
        t_invariance: tileset_invariance(t, 1, eps)?,
        tile_size_ok: r_set.tiles().iter().all(|tile| tile.len() as f64 * e >= 1.0 - TOL),
    };
    let marker_tiling = greedy_maximal(t, check)?;
    let mut failures = Vec::new();
    let mut levels: Vec<LevelRecord<S>> = Vec::with_capacity(big + 1);
    let mut prev_patterns: Option<Vec<Vec<Symbol>>> = None;
    let mut prev_est: Option<f64> = None;
    let ln_a = (alphabet.size() as f64).ln();
    for j in 0..=big {
        let x = density_sft(alphabet, r_set, j)?;
        let estimate = entropy_estimate::<S>(x.spec(), window)?;
        let est = estimate.value.as_f64();
        let gap = prev_est.map(|p| est - p);
        let gap_ok = gap.map_or(true, |g| g <= delta.bound.as_f64() + TOL);
        if !gap_ok {
            failures.push(format!("level {j}: gap exceeds δ(ε)"));
        }
        let patterns = enumerate_words(x.spec(), check, x.spec().default_margin())?;
        let nested = prev_patterns.as_ref().map(|pp| pp.iter().all(|p| patterns.binary_search(p).is_ok()));
        if nested == Some(false) {
            failures.push(format!("level {j}: nesting fails"));
        }
        let frac = j as f64 / big as f64;
        let (overlay_ok, low_entropy_bound, low_entropy_ok) = if j > 0 && frac > 3.0 * e + TOL {
            let prev = prev_patterns.as_ref().expect("previous level");
            let mut ok = true;
            for w in &patterns {
                let p = &Pattern::new(check.clone(), w.clone())?;
                let (rest, marks) = split_markers(p, &marker_tiling, zero)?;
                let in_y = marker_tiling.translates().all(|tr| tr.iter().filter(|g| marks.get(g) != Some(zero)).count() <= 1);
                if !(in_y && prev.binary_search(&rest.values().to_vec()).is_ok() && overlay(&rest, &marks, zero)? == *p) {
                    ok = false;
                    break;
                }
            }
            if !ok {
                failures.push(format!("level {j}: marker split fails"));
            }
            (Some(ok), None, None)
        } else {
            let b = level_low_entropy_bound(alphabet.size(), j, big, eps)?;
            let ok = est <= b.bound.as_f64() + TOL;
            if !ok {
                failures.push(format!("level {j}: low-entropy bound fails"));
            }
            (None, Some(b), Some(ok))
        };
        levels.push(LevelRecord {
            level: j,
            caps: x.caps().to_vec(),
            estimate,
            gap: gap.map(S::lit),
            gap_ok,
            nested,
            overlay: overlay_ok,
            low_entropy_bound,
            low_entropy_ok,
        });
        prev_patterns = Some(patterns);
        prev_est = Some(est);
    }
    let first = levels.first().map_or(f64::NAN, |l| l.estimate.value.as_f64());
    let last = levels.last().map_or(f64::NAN, |l| l.estimate.value.as_f64());
    let endpoints_ok = first.abs() <= TOL && (last - ln_a).abs() <= TOL;
    if !endpoints_ok {
        failures.push(format!("endpoints {first} and {last}"));
    }
    let max_gap = levels.iter().filter_map(|l| l.gap.map(|g| g.as_f64())).fold(0.0, f64::max);
    Ok(SpectrumReport {
        alphabet_size: alphabet.size(),
        largest_tile: big,
        eps,
        delta,
        estimate_window_size: window.len(),
        check_window_size: check.len(),
        levels,
        endpoints_ok,
        max_gap: S::lit(max_gap),
        preconditions,
        pass: failures.is_empty(),
        failures,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct PremisesReport<S: Scalar> {
    pub finite_type: bool,
    pub r: usize,
    pub gluing: Vec<GluingVerdict>,
    pub gluing_pass: bool,
    pub estimates: Vec<S>,
    pub c: S,
    pub c_in_bracket: bool,
    /// Hypotheses hold at desk scale; isolation itself is not claimed.
    pub premises_certified: bool,
}

/// Finite type, gluing of each window with a far copy of itself, and c inside the estimate range.
pub fn isolation_premises<S: Scalar>(spec: &ShiftSpec, c: S, r: usize, windows: &[FiniteRegion]) -> Result<PremisesReport<S>> {
    if !spec.is_finite_type() {
        return Err(Error::NotFiniteType);
    }
    if windows.is_empty() {
        return Err(Error::InvalidParameter { name: "windows", reason: "need at least one window".into() });
    }
    let d = spec.ctx().dimension();
    let mut gluing = Vec::new();
    let mut estimates = Vec::new();
    for f in windows {
        let (lo, hi) = f.bounds().ok_or(Error::EmptyRegion)?;
        let h = f.translate(GroupPoint::axis(d, 0, hi[0] - lo[0] + 1 + r as i32));
        gluing.push(check_gluing(spec, r, f, &h, spec.default_margin().max(1))?);
        estimates.push(ln_big(&count_patterns(spec, f)?) / f.len() as f64);
    }
    let gluing_pass = gluing.iter().all(|g| g.passed());
    let lo = estimates.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = estimates.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let cv = c.as_f64();
    let c_in_bracket = cv >= lo - TOL && cv <= hi + TOL;
    Ok(PremisesReport {
        finite_type: true,
        r,
        gluing,
        gluing_pass,
        estimates: estimates.into_iter().map(S::lit).collect(),
        c,
        c_in_bracket,
        premises_certified: gluing_pass && c_in_bracket,
    })
}
