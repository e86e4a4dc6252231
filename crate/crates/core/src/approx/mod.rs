//! Masking, deletion and completion of patterns along a quasi-tiling, and the
//! windowed low-entropy and fixed-entropy constructions built from them.

mod fiber;
mod pipeline;

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::FiniteRegion;
use crate::pattern::{enumerate_words, Pattern, ShiftSpec, Symbol};
use crate::tiling::{exterior, tile_marks, ExteriorLabeling, Mark, QuasiTiling};

pub use fiber::FiberTable;
pub use pipeline::{
    entropy_chain, entropy_chain_with, low_entropy_approx, low_entropy_approx_with, ApproxReport, ApproxShift,
    BrAgreement, Bracket, ChainReport, ChainSegment, Containment, LevelBracket, Pipeline, TileAttempt, TileOutcome,
};

/// Largest tile for which every int/ext marking gets a table.
pub const MAX_ALL_MARKINGS_TILE: usize = 16;

/// y on ext cells, `zero` on int cells.
pub fn mask(y: &Pattern, e: &ExteriorLabeling, zero: Symbol) -> Result<Pattern> {
    if y.support() != e.region() {
        return Err(Error::SupportMismatch);
    }
    let values = y.values().iter().zip(e.marks()).map(|(&v, &m)| if m == Mark::Ext { v } else { zero }).collect();
    Pattern::new(y.support().clone(), values)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Deleted {
    pub pattern: Pattern,
    /// Distance within which the tiling determines each output cell.
    pub locality: usize,
}

/// Clears the interiors of the tiling's translates.
pub fn delete(y: &Pattern, t: &QuasiTiling, r: usize, zero: Symbol) -> Result<Deleted> {
    if !y.support().is_subset(t.window()) {
        return Err(Error::OutsideWindow);
    }
    let e = exterior(t, r).restrict(y.support());
    Ok(Deleted { pattern: mask(y, &e, zero)?, locality: t.tileset().radius() + r })
}

/// Lexicographically least completions inside `X_tile`, keyed by marking and ext values.
#[derive(Clone, Debug)]
pub struct CompletionTable {
    tile: FiniteRegion,
    r: usize,
    entries: HashMap<Vec<Mark>, HashMap<Vec<Symbol>, Vec<Symbol>>>,
}

impl CompletionTable {
    pub(crate) fn from_parts(tile: FiniteRegion, r: usize, entries: HashMap<Vec<Mark>, HashMap<Vec<Symbol>, Vec<Symbol>>>) -> Self {
        Self { tile, r, entries }
    }

    pub fn tile(&self) -> &FiniteRegion {
        &self.tile
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn markings(&self) -> impl Iterator<Item = &Vec<Mark>> {
        self.entries.keys()
    }

    pub fn len(&self) -> usize {
        self.entries.values().map(|m| m.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `ext_values` lists the values on ext cells in tile order.
    pub fn lookup(&self, marks: &[Mark], ext_values: &[Symbol]) -> Option<&[Symbol]> {
        self.entries.get(marks)?.get(ext_values).map(|v| v.as_slice())
    }

    pub fn entries(&self, marks: &[Mark]) -> impl Iterator<Item = (&Vec<Symbol>, &Vec<Symbol>)> {
        self.entries.get(marks).into_iter().flatten()
    }

    /// Checks that every output lies in `X_tile`, keeps its key, and that every
    /// pattern of `X_tile` finds an entry under every marking.
    pub fn check_properties(&self, spec: &ShiftSpec) -> Result<PropertyReport> {
        let words = enumerate_words(spec, &self.tile, spec.default_margin())?;
        let markings: Vec<&Vec<Mark>> = self.entries.keys().collect();
        let per: Vec<PropertyReport> = markings
            .par_iter()
            .map(|&marks| {
                let ext: Vec<usize> = ext_positions(marks);
                let mut rep = PropertyReport::default();
                for (key, out) in &self.entries[marks] {
                    rep.entries += 1;
                    if words.binary_search(out).is_err() {
                        rep.p1_violations += 1;
                    }
                    if ext.iter().map(|&i| out[i]).ne(key.iter().copied()) {
                        rep.p2_violations += 1;
                    }
                }
                for y in &words {
                    rep.inputs += 1;
                    let key: Vec<Symbol> = ext.iter().map(|&i| y[i]).collect();
                    let masked: Vec<Symbol> =
                        y.iter().zip(marks.iter()).map(|(&v, &m)| if m == Mark::Ext { v } else { Symbol(0) }).collect();
                    let masked_key: Vec<Symbol> = ext.iter().map(|&i| masked[i]).collect();
                    match (self.lookup(marks, &key), self.lookup(marks, &masked_key)) {
                        (Some(a), Some(b)) if a == b => {}
                        (None, _) => rep.missing += 1,
                        _ => rep.p3_violations += 1,
                    }
                }
                rep
            })
            .collect();
        Ok(per.into_iter().fold(PropertyReport { markings: markings.len(), ..Default::default() }, |acc, r| acc.merge(r)))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct PropertyReport {
    pub markings: usize,
    pub entries: usize,
    pub inputs: usize,
    pub p1_violations: usize,
    pub p2_violations: usize,
    pub p3_violations: usize,
    pub missing: usize,
}

impl PropertyReport {
    fn merge(mut self, o: PropertyReport) -> Self {
        self.entries += o.entries;
        self.inputs += o.inputs;
        self.p1_violations += o.p1_violations;
        self.p2_violations += o.p2_violations;
        self.p3_violations += o.p3_violations;
        self.missing += o.missing;
        self
    }

    pub fn pass(&self) -> bool {
        self.p1_violations + self.p2_violations + self.p3_violations + self.missing == 0
    }
}

pub(crate) fn ext_positions(marks: &[Mark]) -> Vec<usize> {
    marks.iter().enumerate().filter(|(_, &m)| m == Mark::Ext).map(|(i, _)| i).collect()
}

/// Table over every int/ext marking of `tile`. With an anchor, keys matching the
/// anchor's ext values complete to the anchor itself.
pub fn build_completion(spec: &ShiftSpec, tile: &FiniteRegion, r: usize, anchor: Option<&Pattern>) -> Result<CompletionTable> {
    if tile.len() > MAX_ALL_MARKINGS_TILE {
        return Err(Error::Budget(format!(
            "{} markings of a {}-cell tile",
            1u64.checked_shl(tile.len() as u32).map_or("too many".to_string(), |n| n.to_string()),
            tile.len()
        )));
    }
    let n = tile.len();
    let markings: Vec<Vec<Mark>> = (0u32..1 << n)
        .map(|bits| (0..n).map(|i| if bits >> (n - 1 - i) & 1 == 1 { Mark::Ext } else { Mark::Int }).collect())
        .collect();
    build_for_markings(spec, tile, r, markings, anchor)
}

/// Table for the single marking a translate receives from `exterior`.
pub fn canonical_completion(spec: &ShiftSpec, tile: &FiniteRegion, r: usize, anchor: Option<&Pattern>) -> Result<CompletionTable> {
    let marks = tile_marks(spec.ctx(), tile, r);
    build_for_markings(spec, tile, r, vec![marks], anchor)
}

fn build_for_markings(
    spec: &ShiftSpec,
    tile: &FiniteRegion,
    r: usize,
    markings: Vec<Vec<Mark>>,
    anchor: Option<&Pattern>,
) -> Result<CompletionTable> {
    if tile.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let words = enumerate_words(spec, tile, spec.default_margin())?;
    if words.is_empty() {
        return Err(Error::InvalidParameter { name: "tile", reason: "no admissible pattern on the tile".into() });
    }
    if let Some(a) = anchor {
        if a.support() != tile {
            return Err(Error::SupportMismatch);
        }
        if words.binary_search(&a.values().to_vec()).is_err() {
            return Err(Error::InvalidParameter { name: "anchor", reason: "anchor is not admissible on the tile".into() });
        }
    }
    let entries = markings
        .into_par_iter()
        .map(|marks| {
            let ext = ext_positions(&marks);
            let mut m: HashMap<Vec<Symbol>, Vec<Symbol>> = HashMap::new();
            for w in &words {
                m.entry(ext.iter().map(|&i| w[i]).collect()).or_insert_with(|| w.clone());
            }
            if let Some(a) = anchor {
                m.insert(ext.iter().map(|&i| a.values()[i]).collect(), a.values().to_vec());
            }
            (marks, m)
        })
        .collect();
    Ok(CompletionTable::from_parts(tile.clone(), r, entries))
}

fn check_tables(t: &QuasiTiling, tables: &[CompletionTable]) -> Result<usize> {
    let tiles = t.tileset().tiles();
    if tables.len() != tiles.len() || tables.iter().zip(tiles).any(|(tb, tile)| tb.tile() != tile) {
        return Err(Error::InvalidParameter { name: "tables", reason: "one table per tile, in tile order".into() });
    }
    let r = tables[0].r();
    if tables.iter().any(|tb| tb.r() != r) {
        return Err(Error::InvalidParameter { name: "tables", reason: "tables built for different r".into() });
    }
    Ok(r)
}

fn complete_where(
    y: &Pattern,
    t: &QuasiTiling,
    tables: &[CompletionTable],
    keep: impl Fn(&crate::geometry::GroupPoint, usize) -> bool,
) -> Result<Pattern> {
    let r = check_tables(t, tables)?;
    let ext = exterior(t, r);
    let mut values = y.values().to_vec();
    for (&c, &i) in t.placements() {
        if !keep(&c, i) {
            continue;
        }
        let tile = &t.tileset().tiles()[i];
        let idx: Vec<usize> = tile
            .iter()
            .map(|&g| y.support().index_of(&(c + g)).ok_or(Error::OutsideWindow))
            .collect::<Result<_>>()?;
        let marks: Vec<Mark> = tile.iter().map(|&g| ext.mark(&(c + g)).unwrap_or(Mark::Ext)).collect();
        let key: Vec<Symbol> = idx.iter().zip(&marks).filter(|(_, &m)| m == Mark::Ext).map(|(&k, _)| values[k]).collect();
        let word = tables[i].lookup(&marks, &key).ok_or(Error::MissingCompletion(c))?;
        for (&k, &s) in idx.iter().zip(word) {
            values[k] = s;
        }
    }
    Pattern::new(y.support().clone(), values)
}

/// Applies each tile's table on every translate; cells off the translates are kept.
pub fn complete(y: &Pattern, t: &QuasiTiling, tables: &[CompletionTable]) -> Result<Pattern> {
    complete_where(y, t, tables, |_, _| true)
}

/// Completes only the translates at which `s` places the same tile as `t`.
pub fn selective_complete(y: &Pattern, t: &QuasiTiling, s: &QuasiTiling, tables: &[CompletionTable]) -> Result<Pattern> {
    complete_where(y, t, tables, |c, i| s.placements().get(c) == Some(&i))
}
