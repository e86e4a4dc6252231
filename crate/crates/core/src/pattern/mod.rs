//! Shift spaces given by finite data and exact enumeration of their window projections.

mod csp;
mod gluing;
mod transfer;

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{FiniteRegion, GroupContext, GroupPoint};

pub use gluing::{check_gluing, GluingVerdict};
pub(crate) use csp::{Csp, ForbiddenTable};

/// Index of a symbol in its alphabet.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Default, Serialize, Deserialize)]
#[repr(transparent)]
pub struct Symbol(pub u8);

impl Symbol {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// External name of a symbol as it appears in JSON files.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SymbolLabel {
    Int(i64),
    Text(String),
}

impl fmt::Display for SymbolLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SymbolLabel::Int(i) => write!(f, "{i}"),
            SymbolLabel::Text(s) => write!(f, "{s}"),
        }
    }
}

/// Ordered finite alphabet with a distinguished zero symbol.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Alphabet {
    labels: Vec<SymbolLabel>,
    zero: Symbol,
}

impl Alphabet {
    pub fn new(labels: Vec<SymbolLabel>, zero: &SymbolLabel) -> Result<Self> {
        if labels.is_empty() || labels.len() > 255 {
            return Err(Error::InvalidShift(format!("alphabet size {} outside 1..=255", labels.len())));
        }
        let distinct: HashSet<&SymbolLabel> = labels.iter().collect();
        if distinct.len() != labels.len() {
            return Err(Error::InvalidShift("duplicate alphabet symbols".into()));
        }
        let zero = labels
            .iter()
            .position(|l| l == zero)
            .ok_or_else(|| Error::UnknownSymbol(zero.to_string()))?;
        Ok(Self { labels, zero: Symbol(zero as u8) })
    }

    /// Symbols `0..n` with zero `0`.
    pub fn range(n: usize) -> Result<Self> {
        Self::new((0..n as i64).map(SymbolLabel::Int).collect(), &SymbolLabel::Int(0))
    }

    pub fn size(&self) -> usize {
        self.labels.len()
    }

    pub fn zero(&self) -> Symbol {
        self.zero
    }

    pub fn labels(&self) -> &[SymbolLabel] {
        &self.labels
    }

    pub fn label(&self, s: Symbol) -> &SymbolLabel {
        &self.labels[s.index()]
    }

    pub fn symbol(&self, label: &SymbolLabel) -> Result<Symbol> {
        self.labels
            .iter()
            .position(|l| l == label)
            .map(|i| Symbol(i as u8))
            .ok_or_else(|| Error::UnknownSymbol(label.to_string()))
    }

    pub fn symbols(&self) -> impl Iterator<Item = Symbol> {
        (0..self.labels.len() as u8).map(Symbol)
    }
}

/// Finite configuration: values listed in the canonical order of the support.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Pattern {
    support: FiniteRegion,
    values: Vec<Symbol>,
}

impl Pattern {
    pub fn new(support: FiniteRegion, values: Vec<Symbol>) -> Result<Self> {
        if support.len() != values.len() {
            return Err(Error::SupportMismatch);
        }
        Ok(Self { support, values })
    }

    pub fn from_map(dim: usize, cells: impl IntoIterator<Item = (GroupPoint, Symbol)>) -> Result<Self> {
        let mut cells: Vec<(GroupPoint, Symbol)> = cells.into_iter().collect();
        cells.sort_by_key(|c| c.0);
        if cells.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidShift("pattern lists a cell twice".into()));
        }
        let support = FiniteRegion::from_points(dim, cells.iter().map(|c| c.0))?;
        Ok(Self { support, values: cells.into_iter().map(|c| c.1).collect() })
    }

    pub fn constant(support: FiniteRegion, s: Symbol) -> Self {
        let values = vec![s; support.len()];
        Self { support, values }
    }

    pub fn support(&self) -> &FiniteRegion {
        &self.support
    }

    pub fn values(&self) -> &[Symbol] {
        &self.values
    }

    pub fn get(&self, g: &GroupPoint) -> Option<Symbol> {
        self.support.index_of(g).map(|i| self.values[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (GroupPoint, Symbol)> + '_ {
        self.support.iter().copied().zip(self.values.iter().copied())
    }

    /// Restriction to `sub`, which must lie inside the support.
    pub fn restrict(&self, sub: &FiniteRegion) -> Result<Pattern> {
        let values = sub
            .iter()
            .map(|g| self.get(g).ok_or(Error::SupportMismatch))
            .collect::<Result<Vec<_>>>()?;
        Ok(Pattern { support: sub.clone(), values })
    }

    pub fn translate(&self, g: GroupPoint) -> Pattern {
        Pattern { support: self.support.translate(g), values: self.values.clone() }
    }

    /// Cells whose value differs from `zero`.
    pub fn nonzero_count(&self, zero: Symbol) -> usize {
        self.values.iter().filter(|&&v| v != zero).count()
    }
}

/// Sliding block code: the image symbol at g depends on the source on g·B_w.
#[derive(Clone, Debug)]
pub struct BlockCode {
    window_radius: usize,
    neighbourhood: FiniteRegion,
    source_size: usize,
    target: Alphabet,
    rule: HashMap<Vec<Symbol>, Symbol>,
}

impl BlockCode {
    /// Tabulates `f` on every source pattern over B_w.
    pub fn from_fn(
        ctx: &GroupContext,
        window_radius: usize,
        source_size: usize,
        target: Alphabet,
        f: impl Fn(&[Symbol]) -> Symbol,
    ) -> Result<Self> {
        let neighbourhood = ctx.ball(window_radius);
        let n = neighbourhood.len();
        let total = (source_size as f64).powi(n as i32);
        if total > 1e6 {
            return Err(Error::Budget(format!("block code table with {total} entries")));
        }
        let mut rule = HashMap::new();
        for word in all_words(source_size, n) {
            let out = f(&word);
            if out.index() >= target.size() {
                return Err(Error::UnknownSymbol(format!("#{}", out.0)));
            }
            rule.insert(word, out);
        }
        Ok(Self { window_radius, neighbourhood, source_size, target, rule })
    }

    /// Builds a code from explicit entries, which must cover every source pattern.
    pub fn from_table(
        ctx: &GroupContext,
        window_radius: usize,
        source_size: usize,
        target: Alphabet,
        entries: HashMap<Vec<Symbol>, Symbol>,
    ) -> Result<Self> {
        let neighbourhood = ctx.ball(window_radius);
        let n = neighbourhood.len();
        for word in all_words(source_size, n) {
            if !entries.contains_key(&word) {
                return Err(Error::InvalidShift(format!("block code rule is not total: missing {word:?}")));
            }
        }
        if entries.values().any(|s| s.index() >= target.size()) {
            return Err(Error::InvalidShift("block code maps outside its target alphabet".into()));
        }
        Ok(Self { window_radius, neighbourhood, source_size, target, rule: entries })
    }

    pub fn window_radius(&self) -> usize {
        self.window_radius
    }

    pub fn target(&self) -> &Alphabet {
        &self.target
    }

    pub fn source_size(&self) -> usize {
        self.source_size
    }

    pub fn neighbourhood(&self) -> &FiniteRegion {
        &self.neighbourhood
    }

    pub fn rule(&self) -> &HashMap<Vec<Symbol>, Symbol> {
        &self.rule
    }

    /// Image symbol at `g` of a source pattern covering g·B_w.
    pub fn apply_at(&self, source: &Pattern, g: GroupPoint) -> Option<Symbol> {
        let word: Option<Vec<Symbol>> = self.neighbourhood.iter().map(|&b| source.get(&(g + b))).collect();
        word.and_then(|w| self.rule.get(&w).copied())
    }
}

/// Shift of finite type described by forbidden patterns.
#[derive(Clone, Debug)]
pub struct Sft {
    ctx: GroupContext,
    alphabet: Alphabet,
    forbidden: Vec<Pattern>,
    tables: Vec<ForbiddenTable>,
    window_radius: usize,
}

impl Sft {
    pub fn new(ctx: GroupContext, alphabet: Alphabet, forbidden: Vec<Pattern>) -> Result<Self> {
        let mut by_support: Vec<(FiniteRegion, HashSet<Vec<Symbol>>)> = Vec::new();
        let mut window_radius = 0;
        for p in &forbidden {
            ctx.check_dim(p.support())?;
            if p.support().is_empty() {
                return Err(Error::InvalidShift("forbidden pattern with empty support".into()));
            }
            if p.values().iter().any(|v| v.index() >= alphabet.size()) {
                return Err(Error::InvalidShift("forbidden pattern uses a symbol outside the alphabet".into()));
            }
            window_radius = window_radius.max(p.support().iter().map(|g| ctx.norm(g)).max().unwrap_or(0));
            match by_support.iter_mut().find(|(s, _)| s == p.support()) {
                Some((_, set)) => {
                    set.insert(p.values().to_vec());
                }
                None => by_support.push((p.support().clone(), HashSet::from([p.values().to_vec()]))),
            }
        }
        let tables = by_support.into_iter().map(|(s, set)| ForbiddenTable::new(s.points().to_vec(), set)).collect();
        Ok(Self { ctx, alphabet, forbidden, tables, window_radius })
    }

    pub fn ctx(&self) -> &GroupContext {
        &self.ctx
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn forbidden(&self) -> &[Pattern] {
        &self.forbidden
    }

    /// Smallest w with every forbidden support inside B_w.
    pub fn window_radius(&self) -> usize {
        self.window_radius
    }

    pub(crate) fn tables(&self) -> &[ForbiddenTable] {
        &self.tables
    }
}

/// Description of a shift space.
#[derive(Clone, Debug)]
pub enum ShiftSpec {
    Full { ctx: GroupContext, alphabet: Alphabet },
    Sft(Sft),
    Product { left: Box<ShiftSpec>, right: Box<ShiftSpec>, alphabet: Alphabet },
    Factor { source: Box<ShiftSpec>, code: BlockCode },
}

impl ShiftSpec {
    pub fn full(ctx: GroupContext, alphabet: Alphabet) -> Self {
        ShiftSpec::Full { ctx, alphabet }
    }

    pub fn sft(ctx: GroupContext, alphabet: Alphabet, forbidden: Vec<Pattern>) -> Result<Self> {
        Ok(ShiftSpec::Sft(Sft::new(ctx, alphabet, forbidden)?))
    }

    pub fn product(left: ShiftSpec, right: ShiftSpec) -> Result<Self> {
        if left.ctx() != right.ctx() {
            return Err(Error::InvalidShift("product factors live on different groups".into()));
        }
        let (a, b) = (left.alphabet(), right.alphabet());
        if a.size() * b.size() > 255 {
            return Err(Error::InvalidShift("product alphabet exceeds 255 symbols".into()));
        }
        let mut labels = Vec::with_capacity(a.size() * b.size());
        for la in a.labels() {
            for lb in b.labels() {
                labels.push(SymbolLabel::Text(format!("{la}|{lb}")));
            }
        }
        let zero = SymbolLabel::Text(format!("{}|{}", a.label(a.zero()), b.label(b.zero())));
        let alphabet = Alphabet::new(labels, &zero)?;
        Ok(ShiftSpec::Product { left: Box::new(left), right: Box::new(right), alphabet })
    }

    pub fn factor(source: ShiftSpec, code: BlockCode) -> Result<Self> {
        if code.source_size() != source.alphabet().size() {
            return Err(Error::InvalidShift("block code source alphabet does not match the shift".into()));
        }
        Ok(ShiftSpec::Factor { source: Box::new(source), code })
    }

    pub fn ctx(&self) -> &GroupContext {
        match self {
            ShiftSpec::Full { ctx, .. } => ctx,
            ShiftSpec::Sft(s) => s.ctx(),
            ShiftSpec::Product { left, .. } => left.ctx(),
            ShiftSpec::Factor { source, .. } => source.ctx(),
        }
    }

    pub fn alphabet(&self) -> &Alphabet {
        match self {
            ShiftSpec::Full { alphabet, .. } => alphabet,
            ShiftSpec::Sft(s) => s.alphabet(),
            ShiftSpec::Product { alphabet, .. } => alphabet,
            ShiftSpec::Factor { code, .. } => code.target(),
        }
    }

    pub fn window_radius(&self) -> usize {
        match self {
            ShiftSpec::Full { .. } => 0,
            ShiftSpec::Sft(s) => s.window_radius(),
            ShiftSpec::Product { left, right, .. } => left.window_radius().max(right.window_radius()),
            ShiftSpec::Factor { source, code } => source.window_radius() + code.window_radius(),
        }
    }

    /// Default dilation margin for locally admissible enumeration.
    pub fn default_margin(&self) -> usize {
        2 * self.window_radius()
    }

    pub fn is_finite_type(&self) -> bool {
        matches!(self, ShiftSpec::Full { .. } | ShiftSpec::Sft(_))
    }
}

/// X_F: locally admissible patterns on `f`, in lexicographic order.
pub fn enumerate_patterns(spec: &ShiftSpec, f: &FiniteRegion) -> Result<Vec<Pattern>> {
    enumerate_patterns_with_margin(spec, f, spec.default_margin())
}

pub fn enumerate_patterns_with_margin(spec: &ShiftSpec, f: &FiniteRegion, margin: usize) -> Result<Vec<Pattern>> {
    let words = enumerate_words(spec, f, margin)?;
    Ok(words.into_iter().map(|values| Pattern { support: f.clone(), values }).collect())
}

/// Value vectors of X_F in the canonical order of `f`.
pub(crate) fn enumerate_words(spec: &ShiftSpec, f: &FiniteRegion, margin: usize) -> Result<Vec<Vec<Symbol>>> {
    spec.ctx().check_dim(f)?;
    let mut out = Vec::new();
    match spec {
        ShiftSpec::Full { alphabet, .. } => {
            out = all_words(alphabet.size(), f.len()).collect();
        }
        ShiftSpec::Sft(sft) => {
            let outer = sft.ctx().dilate(f, margin);
            let csp = Csp::new(sft.alphabet().size(), sft.tables(), &outer, f.points(), &HashMap::new());
            csp.for_each(&mut |w| {
                out.push(w.to_vec());
                true
            });
        }
        ShiftSpec::Product { left, right, .. } => {
            let a = enumerate_words(left, f, margin)?;
            let b = enumerate_words(right, f, margin)?;
            let nb = right.alphabet().size() as u8;
            for x in &a {
                for y in &b {
                    out.push(x.iter().zip(y).map(|(p, q)| Symbol(p.0 * nb + q.0)).collect());
                }
            }
            out.sort_unstable();
        }
        ShiftSpec::Factor { source, code } => {
            let ctx = spec.ctx();
            let big = ctx.dilate(f, code.window_radius());
            let src = enumerate_words(source, &big, margin)?;
            let offsets: Vec<Vec<usize>> = f
                .iter()
                .map(|&g| code.neighbourhood().iter().map(|&b| big.index_of(&(g + b)).expect("inside dilation")).collect())
                .collect();
            let mut seen = BTreeSet::new();
            let mut buf = Vec::new();
            for w in &src {
                let img: Vec<Symbol> = offsets
                    .iter()
                    .map(|idx| {
                        buf.clear();
                        buf.extend(idx.iter().map(|&i| w[i]));
                        code.rule()[buf.as_slice()]
                    })
                    .collect();
                seen.insert(img);
            }
            out = seen.into_iter().collect();
        }
    }
    Ok(out)
}

/// |X_F|, by transfer matrix for ℤ¹ intervals and by enumeration otherwise.
pub fn count_patterns(spec: &ShiftSpec, f: &FiniteRegion) -> Result<BigUint> {
    count_patterns_with_margin(spec, f, spec.default_margin())
}

pub fn count_patterns_with_margin(spec: &ShiftSpec, f: &FiniteRegion, margin: usize) -> Result<BigUint> {
    spec.ctx().check_dim(f)?;
    match spec {
        ShiftSpec::Full { alphabet, .. } => Ok(BigUint::from(alphabet.size()).pow(f.len() as u32)),
        ShiftSpec::Sft(sft) => {
            if let Some(n) = transfer::count_interval(sft, f, margin) {
                return Ok(n);
            }
            Ok(count_by_search(sft, f, margin))
        }
        ShiftSpec::Product { left, right, .. } => {
            Ok(count_patterns_with_margin(left, f, margin)? * count_patterns_with_margin(right, f, margin)?)
        }
        ShiftSpec::Factor { .. } => Ok(BigUint::from(enumerate_words(spec, f, margin)?.len())),
    }
}

/// Enumerative count, bypassing the transfer matrix (used to cross-check it).
pub fn count_by_enumeration(spec: &ShiftSpec, f: &FiniteRegion, margin: usize) -> Result<BigUint> {
    match spec {
        ShiftSpec::Sft(sft) => {
            spec.ctx().check_dim(f)?;
            Ok(count_by_search(sft, f, margin))
        }
        _ => Ok(BigUint::from(enumerate_words(spec, f, margin)?.len())),
    }
}

fn count_by_search(sft: &Sft, f: &FiniteRegion, margin: usize) -> BigUint {
    let outer = sft.ctx().dilate(f, margin);
    let csp = Csp::new(sft.alphabet().size(), sft.tables(), &outer, f.points(), &HashMap::new());
    let mut n = BigUint::zero();
    let one = BigUint::one();
    csp.for_each(&mut |_| {
        n += &one;
        true
    });
    n
}

/// Whether `p` extends to a locally admissible pattern on its support dilated by `margin`.
pub fn is_admissible(spec: &ShiftSpec, p: &Pattern, margin: usize) -> Result<bool> {
    spec.ctx().check_dim(p.support())?;
    if p.values().iter().any(|v| v.index() >= spec.alphabet().size()) {
        return Ok(false);
    }
    match spec {
        ShiftSpec::Full { .. } => Ok(true),
        ShiftSpec::Sft(sft) => {
            let outer = sft.ctx().dilate(p.support(), margin);
            let fixed: HashMap<GroupPoint, Symbol> = p.iter().collect();
            let csp = Csp::new(sft.alphabet().size(), sft.tables(), &outer, p.support().points(), &fixed);
            let mut found = false;
            csp.for_each(&mut |_| {
                found = true;
                false
            });
            Ok(found)
        }
        ShiftSpec::Product { left, right, .. } => {
            let nb = right.alphabet().size() as u8;
            let l = Pattern { support: p.support.clone(), values: p.values.iter().map(|s| Symbol(s.0 / nb)).collect() };
            let r = Pattern { support: p.support.clone(), values: p.values.iter().map(|s| Symbol(s.0 % nb)).collect() };
            Ok(is_admissible(left, &l, margin)? && is_admissible(right, &r, margin)?)
        }
        ShiftSpec::Factor { .. } => {
            let words = enumerate_words(spec, p.support(), margin)?;
            Ok(words.binary_search(&p.values().to_vec()).is_ok())
        }
    }
}

/// All words of length `n` over `k` symbols in lexicographic order.
pub(crate) fn all_words(k: usize, n: usize) -> impl Iterator<Item = Vec<Symbol>> {
    let total = if k == 0 { 0 } else { (k as u128).checked_pow(n as u32).unwrap_or(u128::MAX) };
    let mut cur = vec![Symbol(0); n];
    let mut emitted: u128 = 0;
    std::iter::from_fn(move || {
        if emitted >= total {
            return None;
        }
        let out = cur.clone();
        emitted += 1;
        for i in (0..n).rev() {
            cur[i].0 += 1;
            if (cur[i].0 as usize) < k {
                break;
            }
            cur[i].0 = 0;
        }
        Some(out)
    })
}

#[cfg(test)]
mod tests;
