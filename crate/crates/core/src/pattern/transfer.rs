//! Transfer-matrix counting of locally admissible words on ℤ¹ intervals.

use num_bigint::BigUint;
use num_traits::Zero;

use super::{Sft, Symbol};
use crate::geometry::FiniteRegion;

const MAX_STATES: usize = 1 << 20;

struct Rel {
    idx: Vec<usize>,
    table: usize,
}

/// Counts words on the interval `f` that extend admissibly over `f` dilated by `margin`.
///
/// Returns `None` when the shape or size falls outside the fast path.
pub(super) fn count_interval(sft: &Sft, f: &FiniteRegion, margin: usize) -> Option<BigUint> {
    if f.dim() != 1 || f.is_empty() || !f.is_box() {
        return None;
    }
    let outer = sft.ctx().dilate(f, margin);
    if !outer.is_box() {
        return None;
    }
    let (flo, fhi) = f.bounds()?;
    let (olo, ohi) = outer.bounds()?;
    let left = (flo[0] - olo[0]) as usize;
    let right = (ohi[0] - fhi[0]) as usize;
    let n = f.len();
    let a = sft.alphabet().size();

    let tables = sft.tables();
    let mut span = 1usize;
    let mut rels = Vec::new();
    for (t, table) in tables.iter().enumerate() {
        let xs: Vec<i32> = table.offsets.iter().map(|p| p.coords()[0]).collect();
        let lo = *xs.iter().min()?;
        let hi = *xs.iter().max()?;
        span = span.max((hi - lo + 1) as usize);
        rels.push((xs, hi, t));
    }
    let k = span - 1;
    if n < k {
        return None;
    }
    let states = a.checked_pow(k as u32)?;
    if states > MAX_STATES {
        return None;
    }
    // index of each support cell when the support's last cell sits at position k
    let rels: Vec<Rel> = rels
        .into_iter()
        .map(|(xs, hi, t)| Rel { idx: xs.iter().map(|&x| (x - hi + k as i32) as usize).collect(), table: t })
        .collect();

    let decode = |mut s: usize, out: &mut [Symbol]| {
        for slot in out.iter_mut().rev() {
            *slot = Symbol((s % a) as u8);
            s /= a;
        }
    };
    let mut buf = Vec::new();
    let mut word = vec![Symbol(0); k + 1];
    // placements whose last cell is `end`, inside `w`
    let mut ok_end = |w: &[Symbol], end: usize| {
        rels.iter().all(|r| {
            let shift = k as isize - end as isize;
            if r.idx.iter().any(|&i| (i as isize) < shift) {
                return true;
            }
            buf.clear();
            buf.extend(r.idx.iter().map(|&i| w[(i as isize - shift) as usize]));
            !tables[r.table].words.contains(buf.as_slice())
        })
    };

    // step[s * a + c] = next state when appending c to s, if admissible
    let mut step: Vec<Option<usize>> = vec![None; states * a];
    let mut internal = vec![false; states];
    for s in 0..states {
        decode(s, &mut word[..k]);
        internal[s] = (0..k).all(|e| ok_end(&word[..k], e));
        for c in 0..a {
            word[k] = Symbol(c as u8);
            if ok_end(&word, k) {
                step[s * a + c] = Some((s * a + c) % states);
            }
        }
    }

    let mut lext = internal.clone();
    for _ in 0..left {
        let mut next = vec![false; states];
        for s in (0..states).filter(|&s| lext[s]) {
            for c in 0..a {
                if let Some(t) = step[s * a + c] {
                    next[t] = true;
                }
            }
        }
        lext = next;
    }
    let mut rext = internal.clone();
    for _ in 0..right {
        rext = (0..states).map(|s| (0..a).any(|c| step[s * a + c].is_some_and(|t| rext[t]))).collect();
    }

    let mut v: Vec<BigUint> = lext.iter().map(|&b| if b { BigUint::from(1u8) } else { BigUint::zero() }).collect();
    for _ in 0..n - k {
        let mut next = vec![BigUint::zero(); states];
        for s in 0..states {
            if v[s].is_zero() {
                continue;
            }
            for c in 0..a {
                if let Some(t) = step[s * a + c] {
                    next[t] += &v[s];
                }
            }
        }
        v = next;
    }
    Some(v.iter().zip(&rext).filter(|(_, &r)| r).map(|(x, _)| x).sum())
}
