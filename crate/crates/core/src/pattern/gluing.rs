//! Finite-window test of the gluing property behind strong irreducibility.

use std::collections::HashMap;

use serde::Serialize;

use super::{enumerate_words, Csp, Pattern, ShiftSpec, Symbol};
use crate::error::{Error, Result};
use crate::geometry::{FiniteRegion, GroupPoint};

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum GluingVerdict {
    Pass { pairs_checked: usize },
    Counterexample { x: Vec<(GroupPoint, Symbol)>, y: Vec<(GroupPoint, Symbol)> },
}

impl GluingVerdict {
    pub fn passed(&self) -> bool {
        matches!(self, GluingVerdict::Pass { .. })
    }
}

/// For every x ∈ X_K and y ∈ X_H, searches for a locally admissible z on
/// (K ∪ H)·B_margin agreeing with both. The first failing pair, in
/// lexicographic order, is returned as a counterexample.
pub fn check_gluing(
    spec: &ShiftSpec,
    r: usize,
    k: &FiniteRegion,
    h: &FiniteRegion,
    margin: usize,
) -> Result<GluingVerdict> {
    let ctx = spec.ctx();
    ctx.check_dim(k)?;
    ctx.check_dim(h)?;
    if k.is_empty() || h.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let distance = k
        .iter()
        .flat_map(|a| h.iter().map(move |b| (a, b)))
        .map(|(a, b)| ctx.distance(a, b))
        .min()
        .unwrap_or(usize::MAX);
    if distance <= r {
        return Err(Error::GapTooSmall { distance, r });
    }
    let xs = enumerate_words(spec, k, margin)?;
    let ys = enumerate_words(spec, h, margin)?;
    let pairs = xs.len() * ys.len();
    let tables = match spec {
        ShiftSpec::Full { .. } => return Ok(GluingVerdict::Pass { pairs_checked: pairs }),
        ShiftSpec::Sft(s) => s.tables(),
        _ => return Err(Error::NotFiniteType),
    };
    let union = k.union(h);
    let outer = ctx.dilate(&union, margin);
    let alphabet = spec.alphabet().size();
    for x in &xs {
        for y in &ys {
            let fixed: HashMap<GroupPoint, Symbol> =
                k.iter().copied().zip(x.iter().copied()).chain(h.iter().copied().zip(y.iter().copied())).collect();
            let csp = Csp::new(alphabet, tables, &outer, union.points(), &fixed);
            let mut found = false;
            csp.for_each(&mut |_| {
                found = true;
                false
            });
            if !found {
                let px = Pattern::new(k.clone(), x.clone())?;
                let py = Pattern::new(h.clone(), y.clone())?;
                return Ok(GluingVerdict::Counterexample { x: px.iter().collect(), y: py.iter().collect() });
            }
        }
    }
    Ok(GluingVerdict::Pass { pairs_checked: pairs })
}
