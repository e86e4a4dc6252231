//! Window entropy estimates and certified combinatorial upper bounds.

use num_bigint::BigUint;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::geometry::FiniteRegion;
use crate::pattern::{all_words, count_patterns, enumerate_patterns, ShiftSpec};
use crate::scalar::{ln_big, ln_rate, Scalar};
use crate::tiling::{error_count, greedy_maximal, QuasiTiling, TileSet};

/// Version tag stored in every certificate so stored reports can be rechecked.
pub const FORMULA_VERSION: &str = "bounds-v1";

pub(crate) fn ser_big<S: Serializer>(n: &BigUint, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&n.to_str_radix(10))
}

/// `ln |X_F| / |F|` on one window, in nats per site.
#[derive(Clone, Debug, Serialize)]
pub struct EntropyEstimate<S: Scalar> {
    pub window_size: usize,
    #[serde(serialize_with = "ser_big")]
    pub count: BigUint,
    pub value: S,
    /// Set when the window projection is empty; `value` is then −∞.
    pub empty: bool,
}

impl<S: Scalar> EntropyEstimate<S> {
    pub fn from_count(count: BigUint, window_size: usize) -> Self {
        let empty = count == BigUint::from(0u8);
        let value = S::lit(ln_rate(&count, window_size));
        Self { window_size, count, value, empty }
    }
}

pub fn entropy_estimate<S: Scalar>(spec: &ShiftSpec, f: &FiniteRegion) -> Result<EntropyEstimate<S>> {
    if f.is_empty() {
        return Err(Error::EmptyRegion);
    }
    Ok(EntropyEstimate::from_count(count_patterns(spec, f)?, f.len()))
}

#[derive(Clone, Debug, Serialize)]
pub struct EntropyCurve<S: Scalar> {
    pub estimates: Vec<EntropyEstimate<S>>,
    pub last: S,
    /// max − min over the second half of the sequence.
    pub tail_spread: S,
}

pub fn entropy_curve<S: Scalar>(spec: &ShiftSpec, windows: &[FiniteRegion]) -> Result<EntropyCurve<S>> {
    let estimates = windows.iter().map(|w| entropy_estimate::<S>(spec, w)).collect::<Result<Vec<_>>>()?;
    let last = estimates.last().map(|e| e.value).ok_or(Error::EmptyRegion)?;
    let tail = &estimates[estimates.len() / 2..];
    let hi = tail.iter().map(|e| e.value).fold(S::neg_infinity(), S::max);
    let lo = tail.iter().map(|e| e.value).fold(S::infinity(), S::min);
    Ok(EntropyCurve { estimates, last, tail_spread: hi - lo })
}

/// Parameters of a bound, sufficient to recompute it.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundInputs<S: Scalar> {
    SparseCount { alphabet_size: usize, eps: S, n: usize },
    SparseEntropy { alphabet_size: usize, eps: S },
    Tiling { p: S, alphabet_size: usize, uncovered_fraction: S },
    Qp { h_q: S, r: usize },
    Spacing { alphabet_size: usize, eps: S },
    Marker { alphabet_size: usize, eps: S },
    LevelLowEntropy { alphabet_size: usize, level: usize, largest_tile: usize, eps: S },
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundCertificate<S: Scalar> {
    pub inputs: BoundInputs<S>,
    pub bound: S,
    pub formula_version: &'static str,
}

impl<S: Scalar> BoundCertificate<S> {
    fn new(inputs: BoundInputs<S>) -> Self {
        let bound = inputs.evaluate();
        Self { inputs, bound, formula_version: FORMULA_VERSION }
    }

    /// Recomputes the bound from the stored inputs.
    pub fn recompute(&self) -> S {
        self.inputs.evaluate()
    }
}

/// ⌈x⌉, treating values within 1e-9 of an integer as that integer.
pub fn snapped_ceil(x: f64) -> usize {
    let r = x.round();
    if (x - r).abs() < 1e-9 {
        r.max(0.0) as usize
    } else {
        x.ceil().max(0.0) as usize
    }
}

impl<S: Scalar> BoundInputs<S> {
    pub fn evaluate(&self) -> S {
        let ln = |x: f64| S::lit(x.ln());
        match *self {
            BoundInputs::SparseCount { alphabet_size, eps, n } => {
                let e = eps.as_f64();
                let k = snapped_ceil(e * n as f64);
                S::lit((3.0 * alphabet_size as f64 / e).powi(k as i32))
            }
            BoundInputs::SparseEntropy { alphabet_size, eps } => {
                eps * ln(3.0 * alphabet_size as f64 / eps.as_f64())
            }
            BoundInputs::Tiling { p, alphabet_size, uncovered_fraction } => {
                p.ln() + ln(alphabet_size as f64) * uncovered_fraction
            }
            BoundInputs::Qp { h_q, r } => h_q + S::lit(2.0 / r as f64) * ln(3.0 * r as f64),
            BoundInputs::Spacing { alphabet_size, eps } => {
                S::lit(3.0) * eps * ln(alphabet_size as f64 / eps.as_f64()) + ln(alphabet_size as f64) * eps
            }
            BoundInputs::Marker { alphabet_size, eps } => S::lit(2.0) * eps * ln(alphabet_size as f64 / eps.as_f64()),
            BoundInputs::LevelLowEntropy { alphabet_size, level, largest_tile, eps } => {
                let frac = level as f64 / largest_tile as f64;
                let head = if level == 0 {
                    0.0
                } else {
                    frac * (3.0 * alphabet_size as f64 * largest_tile as f64 / level as f64).ln()
                };
                S::lit(head) + ln(alphabet_size as f64) * eps
            }
        }
    }
}

fn check_eps<S: Scalar>(eps: S, upper: Option<f64>) -> Result<()> {
    let e = eps.as_f64();
    if !(e > 0.0) || upper.is_some_and(|u| e > u) {
        return Err(Error::InvalidParameter { name: "eps", reason: format!("{e} outside the allowed range") });
    }
    Ok(())
}

/// (3|A|/ε)^⌈εn⌉: patterns on n cells that vanish outside at most εn cells.
pub fn sparse_count_bound<S: Scalar>(alphabet_size: usize, eps: S, n: usize) -> Result<BoundCertificate<S>> {
    check_eps(eps, Some(1.0))?;
    Ok(BoundCertificate::new(BoundInputs::SparseCount { alphabet_size, eps, n }))
}

/// ε·ln(3|A|/ε).
pub fn sparse_entropy_bound<S: Scalar>(alphabet_size: usize, eps: S) -> Result<BoundCertificate<S>> {
    check_eps(eps, Some(1.0))?;
    Ok(BoundCertificate::new(BoundInputs::SparseEntropy { alphabet_size, eps }))
}

/// h + (2/r)·ln(3r) for the shift of pruned tilings.
pub fn qp_entropy_bound<S: Scalar>(h_q: S, r: usize) -> Result<BoundCertificate<S>> {
    if r == 0 {
        return Err(Error::InvalidParameter { name: "r", reason: "must be positive".into() });
    }
    if h_q < S::zero() {
        return Err(Error::InvalidParameter { name: "hQ", reason: "must be nonnegative".into() });
    }
    Ok(BoundCertificate::new(BoundInputs::Qp { h_q, r }))
}

/// δ(ε) = 3ε·ln(|A|/ε) + ε·ln|A|.
pub fn spacing_bound<S: Scalar>(alphabet_size: usize, eps: S) -> Result<BoundCertificate<S>> {
    check_eps(eps, Some(1.0))?;
    Ok(BoundCertificate::new(BoundInputs::Spacing { alphabet_size, eps }))
}

/// 2ε·ln(|A|/ε), the marker-shift entropy bound.
pub fn marker_bound<S: Scalar>(alphabet_size: usize, eps: S) -> Result<BoundCertificate<S>> {
    check_eps(eps, Some(1.0))?;
    Ok(BoundCertificate::new(BoundInputs::Marker { alphabet_size, eps }))
}

/// (j/|R₁|)·ln(3|A||R₁|/j) + ε·ln|A| for low density levels.
pub fn level_low_entropy_bound<S: Scalar>(
    alphabet_size: usize,
    level: usize,
    largest_tile: usize,
    eps: S,
) -> Result<BoundCertificate<S>> {
    check_eps(eps, Some(1.0))?;
    if largest_tile == 0 || level > largest_tile {
        return Err(Error::InvalidParameter { name: "level", reason: format!("{level} outside 0..={largest_tile}") });
    }
    Ok(BoundCertificate::new(BoundInputs::LevelLowEntropy { alphabet_size, level, largest_tile, eps }))
}

#[derive(Clone, Debug, Serialize)]
pub struct TilingBoundReport<S: Scalar> {
    pub certificate: BoundCertificate<S>,
    pub tile_counts: Vec<String>,
    /// |X_E| ≤ p^|E| for the covered set E, when countable.
    pub covered_chain: Option<bool>,
    /// |X_F| ≤ |X_E|·|A|^{uncovered}, when countable.
    pub window_chain: Option<bool>,
    pub direct: Option<EntropyEstimate<S>>,
    /// direct estimate ≤ bound, when the direct estimate exists.
    pub dominates: Option<bool>,
}

const TOL: f64 = 1e-9;

/// ln p + ln|A|·ε̂ from a quasi-tiling whose tiles each carry at most p^|T| patterns.
pub fn tiling_entropy_bound<S: Scalar>(
    spec: &ShiftSpec,
    tileset: &TileSet,
    tiling: &QuasiTiling,
    f: &FiniteRegion,
    p: S,
) -> Result<TilingBoundReport<S>> {
    if f.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let lnp = p.as_f64().ln();
    let mut tile_counts = Vec::new();
    for (i, t) in tileset.tiles().iter().enumerate() {
        let c = count_patterns(spec, t)?;
        if ln_big(&c) > lnp * t.len() as f64 + TOL {
            return Err(Error::TileHypothesis { tile: i, count: c.to_string(), size: t.len() });
        }
        tile_counts.push(c.to_string());
    }
    let mut covered = Vec::new();
    for tr in tiling.translates() {
        if !tr.is_subset(f) {
            return Err(Error::OutsideWindow);
        }
        covered.extend(tr.iter().copied());
    }
    let e = FiniteRegion::from_points(f.dim(), covered)?;
    let uncovered = f.len() - e.len();
    let frac = S::lit(uncovered as f64 / f.len() as f64);
    let certificate = BoundCertificate::new(BoundInputs::Tiling {
        p,
        alphabet_size: spec.alphabet().size(),
        uncovered_fraction: frac,
    });

    let countable = |r: &FiniteRegion| r.is_empty() || (r.dim() == 1 && r.is_box()) || r.len() <= 20;
    let xe = if countable(&e) && !e.is_empty() { Some(count_patterns(spec, &e)?) } else { None };
    let direct = if countable(f) { Some(entropy_estimate::<S>(spec, f)?) } else { None };
    let covered_chain = xe.as_ref().map(|c| ln_big(c) <= lnp * e.len() as f64 + TOL);
    let ln_a = (spec.alphabet().size() as f64).ln();
    let window_chain = match (&xe, &direct) {
        (Some(ce), Some(d)) => Some(ln_big(&d.count) <= ln_big(ce) + ln_a * uncovered as f64 + TOL),
        _ => None,
    };
    let dominates = direct.as_ref().map(|d| d.value.as_f64() <= certificate.bound.as_f64() + TOL);
    Ok(TilingBoundReport { certificate, tile_counts, covered_chain, window_chain, direct, dominates })
}

#[derive(Clone, Debug, Serialize)]
pub struct SemicontinuityStep<S: Scalar> {
    pub index: usize,
    pub estimate: S,
    pub bound: S,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SemicontinuityReport<S: Scalar> {
    /// First index from which every member agrees with the limit on all tiles.
    pub agreement_index: Option<usize>,
    /// max over tiles of ln|X_T|/|T| for the limit, and whether it is ≤ est(limit, F) + ε.
    pub tile_rate: S,
    pub premise_holds: bool,
    pub limit_estimate: S,
    pub uncovered_fraction: S,
    pub steps: Vec<SemicontinuityStep<S>>,
    pub converged: bool,
    pub certified: bool,
}

/// Checks est(Xⁿ, F) ≤ est(X, F) + ε + ln|A|·ε̂ for every member past the agreement index.
pub fn semicontinuity_check<S: Scalar>(
    sequence: &[ShiftSpec],
    limit: &ShiftSpec,
    tileset: &TileSet,
    eps: S,
    f: &FiniteRegion,
) -> Result<SemicontinuityReport<S>> {
    check_eps(eps, None)?;
    let limit_tiles: Vec<_> = tileset.tiles().iter().map(|t| enumerate_patterns(limit, t)).collect::<Result<_>>()?;
    let agrees: Vec<bool> = sequence
        .iter()
        .map(|x| {
            tileset
                .tiles()
                .iter()
                .zip(&limit_tiles)
                .map(|(t, lt)| Ok(enumerate_patterns(x, t)? == *lt))
                .collect::<Result<Vec<bool>>>()
                .map(|v| v.into_iter().all(|b| b))
        })
        .collect::<Result<_>>()?;
    let agreement_index = (0..=agrees.len()).find(|&n| agrees[n..].iter().all(|&a| a)).filter(|&n| n < agrees.len());
    let tile_rate = tileset
        .tiles()
        .iter()
        .zip(&limit_tiles)
        .map(|(t, lt)| (lt.len() as f64).ln() / t.len() as f64)
        .fold(f64::NEG_INFINITY, f64::max);
    let limit_estimate = entropy_estimate::<S>(limit, f)?.value;
    let premise_holds = tile_rate <= limit_estimate.as_f64() + eps.as_f64() + TOL;
    let tiling = greedy_maximal(tileset, f)?;
    let uncovered = error_count(&tiling, f)?;
    let uncovered_fraction = S::lit(uncovered as f64 / f.len() as f64);
    let ln_a = S::lit((limit.alphabet().size() as f64).ln());
    let bound = limit_estimate + eps + ln_a * uncovered_fraction;
    let mut steps = Vec::new();
    if let Some(n0) = agreement_index {
        for (index, x) in sequence.iter().enumerate().skip(n0) {
            let estimate = entropy_estimate::<S>(x, f)?.value;
            let holds = estimate.as_f64() <= bound.as_f64() + TOL;
            steps.push(SemicontinuityStep { index, estimate, bound, holds });
        }
    }
    let converged = agreement_index.is_some();
    let certified = converged && premise_holds && steps.iter().all(|s| s.holds);
    Ok(SemicontinuityReport {
        agreement_index,
        tile_rate: S::lit(tile_rate),
        premise_holds,
        limit_estimate,
        uncovered_fraction,
        steps,
        converged,
        certified,
    })
}

/// Words of length n over {0..|A|} with at most ⌊εn⌋ nonzero letters, by enumeration.
pub fn sparse_pattern_count(alphabet_size: usize, eps: f64, n: usize) -> Result<u64> {
    check_eps(eps, Some(1.0))?;
    if alphabet_size == 0 || (alphabet_size as f64).powi(n as i32) > (1u64 << 26) as f64 {
        return Err(Error::Budget(format!("{alphabet_size}^{n} words")));
    }
    let cap = snapped_floor(eps * n as f64);
    Ok(all_words(alphabet_size, n).filter(|w| w.iter().filter(|s| s.0 != 0).count() <= cap).count() as u64)
}

fn snapped_floor(x: f64) -> usize {
    let r = x.round();
    if (x - r).abs() < 1e-9 {
        r.max(0.0) as usize
    } else {
        x.floor().max(0.0) as usize
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct UnionBound {
    #[serde(serialize_with = "ser_big")]
    pub count: BigUint,
    #[serde(serialize_with = "ser_big")]
    pub product: BigUint,
    pub holds: bool,
}

/// |X_K| ≤ ∏|X_{Kᵢ}| for a cover of K by the Kᵢ.
pub fn union_bound_check(spec: &ShiftSpec, k: &FiniteRegion, cover: &[FiniteRegion]) -> Result<UnionBound> {
    let union = cover.iter().fold(FiniteRegion::empty(k.dim()), |acc, c| acc.union(c));
    if &union != k {
        return Err(Error::InvalidParameter { name: "cover", reason: "pieces do not cover the region exactly".into() });
    }
    let count = count_patterns(spec, k)?;
    let mut product = BigUint::from(1u8);
    for c in cover {
        product *= count_patterns(spec, c)?;
    }
    let holds = count <= product;
    Ok(UnionBound { count, product, holds })
}
