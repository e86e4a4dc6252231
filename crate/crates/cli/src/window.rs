use std::fmt;

use shifts::{FiniteRegion, GroupContext, GroupPoint};

/// `--window` value: one box, or a run of intervals `[0,n)` for n in a..=b.
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(untagged)]
pub enum WindowArg {
    Box(Vec<usize>),
    Range { from: usize, to: usize },
}

impl WindowArg {
    pub fn parse(s: &str) -> Result<Self, String> {
        let s = s.trim();
        if let Some((a, b)) = s.split_once("..") {
            let from = parse_side(a)?;
            let to = parse_side(b)?;
            if from > to {
                return Err(format!("empty range {s}"));
            }
            return Ok(WindowArg::Range { from, to });
        }
        let sides = s.split('x').map(parse_side).collect::<Result<Vec<_>, _>>()?;
        if sides.len() > 2 {
            return Err(format!("at most two sides, got {}", sides.len()));
        }
        Ok(WindowArg::Box(sides))
    }

    pub fn dimension(&self) -> usize {
        match self {
            WindowArg::Box(s) => s.len(),
            WindowArg::Range { .. } => 1,
        }
    }

    pub fn regions(&self, ctx: &GroupContext) -> Result<Vec<FiniteRegion>, String> {
        match self {
            WindowArg::Box(_) => Ok(vec![self.single(ctx)?]),
            WindowArg::Range { from, to } => {
                if ctx.dimension() != 1 {
                    return Err("window ranges need a one-dimensional shift".into());
                }
                Ok((*from..=*to).map(|n| FiniteRegion::interval(0, n as i32)).collect())
            }
        }
    }

    pub fn single(&self, ctx: &GroupContext) -> Result<FiniteRegion, String> {
        match self {
            WindowArg::Box(sides) => {
                if sides.len() != ctx.dimension() {
                    return Err(format!("{}-dimensional window for a {}-dimensional shift", sides.len(), ctx.dimension()));
                }
                ctx.box_region(sides, GroupPoint::zero(sides.len())).map_err(|e| e.to_string())
            }
            WindowArg::Range { .. } => Err("expected a single window such as 60 or 10x10".into()),
        }
    }
}

fn parse_side(s: &str) -> Result<usize, String> {
    match s.trim().parse::<usize>() {
        Ok(0) => Err("window sides must be positive".into()),
        Ok(n) => Ok(n),
        Err(_) => Err(format!("bad window side `{s}`")),
    }
}

impl fmt::Display for WindowArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WindowArg::Box(s) => write!(f, "{}", s.iter().map(|n| n.to_string()).collect::<Vec<_>>().join("x")),
            WindowArg::Range { from, to } => write!(f, "{from}..{to}"),
        }
    }
}
