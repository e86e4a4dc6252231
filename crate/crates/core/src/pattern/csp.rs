//! Backtracking over a finite window with forbidden-pattern pruning.
//!
//! Cells are split into an inner prefix, which is enumerated, and an outer
//! remainder, which only has to admit some completion.

use std::collections::{HashMap, HashSet};

use super::Symbol;
use crate::geometry::{FiniteRegion, GroupPoint};

/// All forbidden patterns sharing one support.
#[derive(Clone, Debug)]
pub(crate) struct ForbiddenTable {
    pub(crate) offsets: Vec<GroupPoint>,
    pub(crate) words: HashSet<Vec<Symbol>>,
}

impl ForbiddenTable {
    pub(crate) fn new(offsets: Vec<GroupPoint>, words: HashSet<Vec<Symbol>>) -> Self {
        Self { offsets, words }
    }
}

struct Placed {
    cells: Vec<u32>,
    table: u32,
}

pub(crate) struct Csp<'a> {
    alphabet: u8,
    n_inner: usize,
    fixed: Vec<Option<Symbol>>,
    triggers: Vec<Vec<u32>>,
    placed: Vec<Placed>,
    tables: &'a [ForbiddenTable],
}

impl<'a> Csp<'a> {
    /// `inner` lists the enumerated cells in the order values are reported;
    /// remaining cells of `outer` are searched existentially in lexicographic order.
    pub(crate) fn new(
        alphabet: usize,
        tables: &'a [ForbiddenTable],
        outer: &FiniteRegion,
        inner: &[GroupPoint],
        fixed: &HashMap<GroupPoint, Symbol>,
    ) -> Self {
        let mut order: Vec<GroupPoint> = inner.to_vec();
        let inner_set: HashSet<GroupPoint> = inner.iter().copied().collect();
        order.extend(outer.iter().copied().filter(|p| !inner_set.contains(p)));
        let pos: HashMap<GroupPoint, u32> = order.iter().enumerate().map(|(i, &p)| (p, i as u32)).collect();

        let mut triggers = vec![Vec::new(); order.len()];
        let mut placed = Vec::new();
        for (t, table) in tables.iter().enumerate() {
            let base = table.offsets[0];
            for &anchor in &order {
                let shift = anchor - base;
                let cells: Option<Vec<u32>> = table.offsets.iter().map(|&o| pos.get(&(o + shift)).copied()).collect();
                if let Some(cells) = cells {
                    let last = *cells.iter().max().expect("nonempty support");
                    triggers[last as usize].push(placed.len() as u32);
                    placed.push(Placed { cells, table: t as u32 });
                }
            }
        }
        let fixed = order.iter().map(|p| fixed.get(p).copied()).collect();
        Self { alphabet: alphabet as u8, n_inner: inner.len(), fixed, triggers, placed, tables }
    }

    fn ok_at(&self, pos: usize, vals: &[Symbol], buf: &mut Vec<Symbol>) -> bool {
        for &c in &self.triggers[pos] {
            let pl = &self.placed[c as usize];
            buf.clear();
            buf.extend(pl.cells.iter().map(|&i| vals[i as usize]));
            if self.tables[pl.table as usize].words.contains(buf.as_slice()) {
                return false;
            }
        }
        true
    }

    fn candidates(&self, pos: usize) -> std::ops::Range<u8> {
        match self.fixed[pos] {
            Some(s) => s.0..s.0 + 1,
            None => 0..self.alphabet,
        }
    }

    /// Calls `visit` with each admissible inner assignment, lexicographically,
    /// until it returns `false`.
    pub(crate) fn for_each(&self, visit: &mut dyn FnMut(&[Symbol]) -> bool) {
        let n = self.fixed.len();
        let mut vals = vec![Symbol(0); n];
        let mut buf = Vec::new();
        if self.n_inner == 0 {
            if self.extend(0, &mut vals, &mut buf) {
                visit(&[]);
            }
            return;
        }
        let mut next: Vec<u8> = vec![0; self.n_inner];
        let mut pos = 0usize;
        next[0] = self.candidates(0).start;
        loop {
            let range = self.candidates(pos);
            if next[pos] >= range.end {
                if pos == 0 {
                    return;
                }
                pos -= 1;
                continue;
            }
            vals[pos] = Symbol(next[pos]);
            next[pos] += 1;
            if !self.ok_at(pos, &vals, &mut buf) {
                continue;
            }
            if pos + 1 == self.n_inner {
                if self.extend(self.n_inner, &mut vals, &mut buf) && !visit(&vals[..self.n_inner]) {
                    return;
                }
            } else {
                pos += 1;
                next[pos] = self.candidates(pos).start;
            }
        }
    }

    fn extend(&self, pos: usize, vals: &mut [Symbol], buf: &mut Vec<Symbol>) -> bool {
        if pos == vals.len() {
            return true;
        }
        for s in self.candidates(pos) {
            vals[pos] = Symbol(s);
            if self.ok_at(pos, vals, buf) && self.extend(pos + 1, vals, buf) {
                return true;
            }
        }
        false
    }
}
