use std::collections::HashMap;

use super::{ext_positions, CompletionTable};
use crate::error::{Error, Result};
use crate::geometry::FiniteRegion;
use crate::pattern::{enumerate_words, ShiftSpec, Symbol};
use crate::tiling::{tile_marks, Mark};

/// `X_tile` split by ext values under the canonical marking. Each fiber lists
/// its completions in lexicographic order.
#[derive(Clone, Debug)]
pub struct FiberTable {
    tile: FiniteRegion,
    r: usize,
    marks: Vec<Mark>,
    ext: Vec<usize>,
    words: Vec<Vec<Symbol>>,
    fibers: HashMap<Vec<Symbol>, Vec<u32>>,
    max_len: usize,
}

impl FiberTable {
    pub fn build(spec: &ShiftSpec, tile: &FiniteRegion, r: usize, max_words: usize) -> Result<Self> {
        let count = crate::pattern::count_patterns(spec, tile)?;
        if count > max_words.into() {
            return Err(Error::Budget(format!("{count} patterns on a {}-cell tile", tile.len())));
        }
        let words = enumerate_words(spec, tile, spec.default_margin())?;
        if words.is_empty() {
            return Err(Error::InvalidParameter { name: "tile", reason: "no admissible pattern on the tile".into() });
        }
        let marks = tile_marks(spec.ctx(), tile, r);
        let ext = ext_positions(&marks);
        let mut fibers: HashMap<Vec<Symbol>, Vec<u32>> = HashMap::new();
        for (k, w) in words.iter().enumerate() {
            fibers.entry(ext.iter().map(|&i| w[i]).collect()).or_default().push(k as u32);
        }
        let max_len = fibers.values().map(|f| f.len()).max().unwrap_or(0);
        Ok(Self { tile: tile.clone(), r, marks, ext, words, fibers, max_len })
    }

    pub fn tile(&self) -> &FiniteRegion {
        &self.tile
    }

    pub fn marks(&self) -> &[Mark] {
        &self.marks
    }

    pub fn ext_positions(&self) -> &[usize] {
        &self.ext
    }

    pub fn words(&self) -> &[Vec<Symbol>] {
        &self.words
    }

    pub fn fiber(&self, key: &[Symbol]) -> Option<&[u32]> {
        self.fibers.get(key).map(|v| v.as_slice())
    }

    pub fn key_count(&self) -> usize {
        self.fibers.len()
    }

    /// ℓ: the longest fiber.
    pub fn max_len(&self) -> usize {
        self.max_len
    }

    /// Every word of `X_tile` sits in the fiber of its own key, once.
    pub fn is_exhaustive(&self) -> bool {
        let total: usize = self.fibers.values().map(|f| f.len()).sum();
        total == self.words.len()
            && self.fibers.iter().all(|(key, f)| {
                f.windows(2).all(|w| w[0] < w[1])
                    && f.iter().all(|&k| self.ext.iter().map(|&i| self.words[k as usize][i]).eq(key.iter().copied()))
            })
    }

    /// Maps each key to its completion of the given rank (1-based, capped at the fiber length).
    pub fn completion_table(&self, rank: usize) -> CompletionTable {
        let rank = rank.max(1);
        let entries = self
            .fibers
            .iter()
            .map(|(key, f)| (key.clone(), self.words[f[rank.min(f.len()) - 1] as usize].clone()))
            .collect();
        CompletionTable::from_parts(self.tile.clone(), self.r, HashMap::from([(self.marks.clone(), entries)]))
    }
}
