//! JSON formats for shifts, tile sets and tilings.
//!
//! Parse failures carry serde_json's line and column.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{FiniteRegion, GroupContext, GroupPoint};
use crate::pattern::{Alphabet, Pattern, ShiftSpec, SymbolLabel};
use crate::tiling::{QuasiTiling, TileSet};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatternJson {
    pub support: Vec<GroupPoint>,
    pub values: Vec<SymbolLabel>,
}

/// `{"alphabet": [...], "zero": sym, "dimension": d, "forbidden": [...]}`
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SftJson {
    pub alphabet: Vec<SymbolLabel>,
    pub zero: SymbolLabel,
    pub dimension: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generators: Option<Vec<GroupPoint>>,
    #[serde(default)]
    pub forbidden: Vec<PatternJson>,
}

/// Either a bare list of tiles or `{"dimension": d, "tiles": [...]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TileSetJson {
    Tiles(Vec<FiniteRegion>),
    Full {
        dimension: usize,
        #[serde(default)]
        generators: Option<Vec<GroupPoint>>,
        tiles: Vec<FiniteRegion>,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlacementJson {
    pub corner: GroupPoint,
    pub tile: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TilingJson {
    pub window: FiniteRegion,
    pub tileset: Vec<FiniteRegion>,
    pub placements: Vec<PlacementJson>,
}

fn context(dimension: usize, generators: Option<Vec<GroupPoint>>) -> Result<GroupContext> {
    match generators {
        None => GroupContext::standard(dimension),
        Some(g) => GroupContext::with_generators(dimension, g),
    }
}

fn pattern_from_json(ctx: &GroupContext, alphabet: &Alphabet, p: PatternJson) -> Result<Pattern> {
    if p.support.len() != p.values.len() {
        return Err(Error::InvalidShift(format!("{} support cells but {} values", p.support.len(), p.values.len())));
    }
    let cells = p
        .support
        .into_iter()
        .zip(&p.values)
        .map(|(g, l)| Ok((g, alphabet.symbol(l)?)))
        .collect::<Result<Vec<_>>>()?;
    let pattern = Pattern::from_map(ctx.dimension(), cells)?;
    if pattern.support().len() != p.values.len() {
        return Err(Error::InvalidShift("repeated cell in a forbidden pattern".into()));
    }
    Ok(pattern)
}

pub fn sft_from_json(j: SftJson) -> Result<ShiftSpec> {
    let ctx = context(j.dimension, j.generators)?;
    let alphabet = Alphabet::new(j.alphabet, &j.zero)?;
    let forbidden = j.forbidden.into_iter().map(|p| pattern_from_json(&ctx, &alphabet, p)).collect::<Result<_>>()?;
    ShiftSpec::sft(ctx, alphabet, forbidden)
}

pub fn parse_sft(text: &str) -> Result<ShiftSpec> {
    sft_from_json(serde_json::from_str(text)?)
}

/// Only SFTs and full shifts have a file form.
pub fn sft_to_json(spec: &ShiftSpec) -> Result<SftJson> {
    let forbidden = match spec {
        ShiftSpec::Full { .. } => Vec::new(),
        ShiftSpec::Sft(s) => s.forbidden().to_vec(),
        _ => return Err(Error::NotFiniteType),
    };
    let a = spec.alphabet();
    let ctx = spec.ctx();
    Ok(SftJson {
        alphabet: a.labels().to_vec(),
        zero: a.label(a.zero()).clone(),
        dimension: ctx.dimension(),
        generators: (!ctx.is_standard()).then(|| ctx.generators().to_vec()),
        forbidden: forbidden
            .iter()
            .map(|p| PatternJson {
                support: p.support().points().to_vec(),
                values: p.values().iter().map(|&s| a.label(s).clone()).collect(),
            })
            .collect(),
    })
}

/// Tiles in a bare list take `ctx`; a full object must agree with it when given.
pub fn parse_tileset(text: &str, ctx: Option<&GroupContext>) -> Result<TileSet> {
    let j: TileSetJson = serde_json::from_str(text)?;
    let (own, tiles) = match j {
        TileSetJson::Tiles(t) => (None, t),
        TileSetJson::Full { dimension, generators, tiles } => (Some(context(dimension, generators)?), tiles),
    };
    let ctx = match (own, ctx) {
        (Some(a), Some(b)) if &a != b => {
            return Err(Error::InvalidTileSet("tile set group differs from the shift's".into()));
        }
        (Some(a), _) => a,
        (None, Some(b)) => b.clone(),
        (None, None) => {
            let d = tiles.first().map(|t| t.dim()).ok_or_else(|| Error::InvalidTileSet("no tiles".into()))?;
            GroupContext::standard(d)?
        }
    };
    TileSet::new(ctx, tiles)
}

pub fn tiling_to_json(t: &QuasiTiling) -> TilingJson {
    TilingJson {
        window: t.window().clone(),
        tileset: t.tileset().tiles().to_vec(),
        placements: t.placements().iter().map(|(&corner, &tile)| PlacementJson { corner, tile }).collect(),
    }
}

pub fn parse_tiling(text: &str, ctx: &GroupContext) -> Result<QuasiTiling> {
    let j: TilingJson = serde_json::from_str(text)?;
    let ts = TileSet::new(ctx.clone(), j.tileset)?;
    let mut placements = BTreeMap::new();
    for p in j.placements {
        if placements.insert(p.corner, p.tile).is_some() {
            return Err(Error::InvalidTiling(format!("two placements at {}", p.corner)));
        }
    }
    QuasiTiling::new(ts, j.window, placements)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::pattern::count_patterns;
    use crate::tiling::greedy_maximal;

    const GOLDEN: &str = r#"{
        "alphabet": [0, 1], "zero": 0, "dimension": 1,
        "forbidden": [{"support": [[0], [1]], "values": [1, 1]}]
    }"#;

    #[test]
    fn golden_mean_round_trip() {
        let spec = parse_sft(GOLDEN).unwrap();
        let f = FiniteRegion::interval(0, 10);
        assert_eq!(count_patterns(&spec, &f).unwrap(), 144u32.into());
        let back = serde_json::to_string(&sft_to_json(&spec).unwrap()).unwrap();
        let again = parse_sft(&back).unwrap();
        assert_eq!(count_patterns(&again, &f).unwrap(), 144u32.into());
        assert_eq!(
            count_patterns(&catalog::golden_mean(), &f).unwrap(),
            count_patterns(&again, &f).unwrap()
        );
    }

    #[test]
    fn text_labels() {
        let spec = parse_sft(r#"{"alphabet": ["a", "b"], "zero": "a", "dimension": 1,
            "forbidden": [{"support": [[0], [1]], "values": ["a", "b"]}]}"#)
        .unwrap();
        // no "ab": words are b…ba…a
        assert_eq!(count_patterns(&spec, &FiniteRegion::interval(0, 5)).unwrap(), 6u32.into());
    }

    #[test]
    fn malformed_json_reports_position() {
        let err = parse_sft("{\n  \"alphabet\": [0, 1],\n  \"zero\": 0,,\n}").unwrap_err();
        match err {
            Error::Json(e) => assert_eq!((e.line(), e.column()), (3, 13)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn semantic_errors() {
        assert!(parse_sft(r#"{"alphabet": [0, 1], "zero": 2, "dimension": 1}"#).is_err());
        assert!(parse_sft(r#"{"alphabet": [0, 1], "zero": 0, "dimension": 1,
            "forbidden": [{"support": [[0]], "values": [3]}]}"#)
        .is_err());
        assert!(parse_sft(r#"{"alphabet": [0, 1], "zero": 0, "dimension": 1,
            "forbidden": [{"support": [[0], [1]], "values": [1]}]}"#)
        .is_err());
        assert!(parse_sft(r#"{"alphabet": [0, 1], "zero": 0, "dimension": 1, "extra": 1}"#).is_err());
    }

    #[test]
    fn tileset_forms() {
        let ctx = GroupContext::standard(2).unwrap();
        let a = parse_tileset("[[[0,0],[1,0]]]", None).unwrap();
        assert_eq!(a.ctx(), &ctx);
        let b = parse_tileset(r#"{"dimension": 2, "tiles": [[[0,0],[0,1]]]}"#, Some(&ctx)).unwrap();
        assert_eq!(b.tiles()[0].len(), 2);
        assert!(parse_tileset(r#"{"dimension": 1, "tiles": [[[0]]]}"#, Some(&ctx)).is_err());
        assert!(parse_tileset("[[[1,0]]]", None).is_err());
    }

    #[test]
    fn tiling_round_trip() {
        let ctx = GroupContext::standard(1).unwrap();
        let ts = TileSet::new(ctx.clone(), catalog::intervals([3])).unwrap();
        let t = greedy_maximal(&ts, &FiniteRegion::interval(0, 20)).unwrap();
        let text = serde_json::to_string(&tiling_to_json(&t)).unwrap();
        let back = parse_tiling(&text, &ctx).unwrap();
        assert_eq!(back.placements(), t.placements());
        assert_eq!(back.placements().len(), 6);
    }
}
