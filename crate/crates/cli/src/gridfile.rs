//! Plain-text grid export.
//!
//! ```text
//! #grid v1 dims=2 res=100,100 region=-2.1:2.1,-2.1:2.1 bbox=-0.5:0.5,-0.5:0.5 layout=cell-centered row-major last-axis-fastest
//! a,b,c_min
//! ...
//! ```
//!
//! Row `k` holds `min_i a_i` and `min_i c_i` at point `k` of the region grid
//! and `min_j b_j` at point `k` of the same-resolution grid over the B box.
//! `c_min` is `nan` when no constraint produced a `c_i`.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use sospdiff_core::pdiff::min_field;
use sospdiff_core::{BoxRegion, Grid, Polynomial, SemiAlgebraicSet};

fn ranges(b: &BoxRegion) -> String {
    b.lower
        .iter()
        .zip(&b.upper)
        .map(|(l, u)| format!("{l}:{u}"))
        .collect::<Vec<_>>()
        .join(",")
}

pub fn header(region: &BoxRegion, b_box: &BoxRegion, res: usize) -> String {
    let n = region.dim();
    let r = vec![res.to_string(); n].join(",");
    format!(
        "#grid v1 dims={n} res={r} region={} bbox={} layout=cell-centered row-major last-axis-fastest",
        ranges(region),
        ranges(b_box)
    )
}

fn set_field(set: &SemiAlgebraicSet, grid: &Grid) -> Vec<f64> {
    let polys: Vec<&Polynomial> = set.constraints().iter().collect();
    min_field(&polys, grid)
}

/// Renders the grid file into memory.
pub fn render(
    a: &SemiAlgebraicSet,
    b: &SemiAlgebraicSet,
    c_polys: &[&Polynomial],
    region: &BoxRegion,
    b_box: &BoxRegion,
    res: usize,
) -> String {
    let rgrid = Grid::uniform(region.clone(), res);
    let bgrid = Grid::uniform(b_box.clone(), res);
    let fa = set_field(a, &rgrid);
    let fb = set_field(b, &bgrid);
    let fc = if c_polys.is_empty() {
        vec![f64::NAN; rgrid.len()]
    } else {
        min_field(c_polys, &rgrid)
    };
    let mut out = String::with_capacity(rgrid.len() * 72);
    out.push_str(&header(region, b_box, res));
    out.push_str("\na,b,c_min\n");
    for k in 0..rgrid.len() {
        writeln!(out, "{:e},{:e},{:e}", fa[k], fb[k], fc[k]).expect("writing to a String");
    }
    out
}

pub fn write(path: &Path, text: &str) -> std::io::Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    w.write_all(text.as_bytes())?;
    w.flush()
}
