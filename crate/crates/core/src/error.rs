use thiserror::Error;

use crate::geometry::GroupPoint;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty region")]
    EmptyRegion,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("dimension {0} is not supported (1..={max})", max = crate::geometry::MAX_DIM)]
    UnsupportedDimension(usize),

    #[error("invalid generator set: {0}")]
    InvalidGenerators(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("gap ≤ r: regions are at distance {distance}, need more than {r}")]
    GapTooSmall { distance: usize, r: usize },

    #[error("support mismatch")]
    SupportMismatch,

    #[error("unknown symbol {0}")]
    UnknownSymbol(String),

    #[error("invalid shift description: {0}")]
    InvalidShift(String),

    #[error("region is not contained in the window")]
    OutsideWindow,

    #[error("invalid tile set: {0}")]
    InvalidTileSet(String),

    #[error("invalid tiling: {0}")]
    InvalidTiling(String),

    #[error("tile {tile} violates the per-tile count hypothesis: {count} patterns > p^{size}")]
    TileHypothesis { tile: usize, count: String, size: usize },

    #[error("exterior not X-compatible on translate at {0}")]
    MissingCompletion(GroupPoint),

    #[error("{corner} is not a corner of the tiling")]
    NotACorner { corner: GroupPoint },

    #[error("window too small: {0}")]
    WindowTooSmall(String),

    #[error("no certified tile set: best window estimate {best_estimate:.4} is not below {eps}")]
    NoCertifiedTileSet { best_estimate: f64, eps: f64 },

    #[error("no chain level with estimate in [{c}, {c}+ε): ladder {ladder:?}")]
    NoChainLevel { c: f64, ladder: Vec<(usize, f64, f64)> },

    #[error("operation requires a shift of finite type")]
    NotFiniteType,

    #[error("search budget exceeded: {0}")]
    Budget(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
