use std::fmt::Write;

use super::QuasiTiling;
use crate::error::{Error, Result};

const CELL: i32 = 14;
const PALETTE: [&str; 8] = ["#4e79a7", "#f28e2b", "#59a14f", "#b07aa1", "#edc948", "#76b7b2", "#ff9da7", "#9c755f"];

/// One rect per window cell: coloured by tile index, alternating shade per
/// translate, uncovered cells white with a red outline. ℤ¹ draws as a strip.
pub fn render_svg(t: &QuasiTiling) -> Result<String> {
    let d = t.window().dim();
    if d > 2 {
        return Err(Error::UnsupportedDimension(d));
    }
    let (lo, hi) = t.window().bounds().ok_or(Error::EmptyRegion)?;
    let xy = |c: &[i32]| -> (i32, i32) {
        let x = c[0] - lo[0];
        let y = if d == 2 { hi[1] - c[1] } else { 0 };
        (x * CELL, y * CELL)
    };
    let w = (hi[0] - lo[0] + 1) * CELL;
    let h = if d == 2 { (hi[1] - lo[1] + 1) * CELL } else { CELL };

    let mut order = std::collections::HashMap::new();
    for (n, (&c, &i)) in t.placements().iter().enumerate() {
        order.insert(c, (n, i));
    }
    let cover = t.cover_map();
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    for g in t.window().iter() {
        let (x, y) = xy(g.coords());
        match cover.get(g).and_then(|c| order.get(c)) {
            Some(&(n, i)) => {
                let opacity = if n % 2 == 0 { "1" } else { "0.6" };
                let _ = writeln!(
                    s,
                    r#"<rect x="{x}" y="{y}" width="{CELL}" height="{CELL}" fill="{}" fill-opacity="{opacity}" stroke="none"/>"#,
                    PALETTE[i % PALETTE.len()]
                );
            }
            None => {
                let _ = writeln!(
                    s,
                    r#"<rect x="{x}" y="{y}" width="{CELL}" height="{CELL}" fill="white" stroke="red" stroke-width="1"/>"#
                );
            }
        }
    }
    s.push_str("</svg>\n");
    Ok(s)
}
