//! Legacy VTK `STRUCTURED_POINTS` output for vector fields.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{Grid3, VectorGrid};

/// Renders an ASCII legacy file with one VECTORS attribute. Points are
/// listed x-fastest, which is the grid's own storage order.
pub fn encode_vtk(field: &VectorGrid, name: &str) -> String {
    let g = field.grid();
    let [nx, ny, nz] = g.dims();
    let lo = g.lo();
    let h = g.spacing();
    let mut out = String::with_capacity(64 * g.len());
    out.push_str("# vtk DataFile Version 3.0\n");
    let _ = writeln!(out, "{name}");
    out.push_str("ASCII\nDATASET STRUCTURED_POINTS\n");
    let _ = writeln!(out, "DIMENSIONS {nx} {ny} {nz}");
    let _ = writeln!(out, "ORIGIN {:e} {:e} {:e}", lo[0], lo[1], lo[2]);
    let _ = writeln!(out, "SPACING {:e} {:e} {:e}", h[0], h[1], h[2]);
    let _ = writeln!(out, "POINT_DATA {}", g.len());
    let _ = writeln!(out, "VECTORS {name} double");
    for idx in 0..g.len() {
        let [a, b, c] = field.at(idx);
        // `{:e}` prints the shortest representation that round-trips.
        let _ = writeln!(out, "{a:e} {b:e} {c:e}");
    }
    out
}

pub fn write_vtk(field: &VectorGrid, name: &str, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_vtk(field, name)).map_err(|e| Error::io(path, e))
}

fn header_err(msg: impl Into<String>) -> Error {
    Error::Header(msg.into())
}

fn parse_triple<T: std::str::FromStr>(line: Option<&str>, key: &str) -> Result<[T; 3]> {
    let line = line.ok_or_else(|| header_err(format!("missing {key}")))?;
    let mut parts = line.split_whitespace();
    if parts.next() != Some(key) {
        return Err(header_err(format!("expected {key}, found `{line}`")));
    }
    let vals: Vec<T> = parts
        .map(|p| p.parse::<T>().map_err(|_| header_err(format!("bad {key} value `{p}`"))))
        .collect::<Result<_>>()?;
    <[T; 3]>::try_from(vals).map_err(|_| header_err(format!("{key} needs three values")))
}

/// Reads back a file produced by [`encode_vtk`].
pub fn decode_vtk(text: &str) -> Result<VectorGrid> {
    let mut lines = text.lines();
    if !lines.next().is_some_and(|l| l.starts_with("# vtk DataFile")) {
        return Err(Error::BadMagic);
    }
    lines.next();
    if lines.next() != Some("ASCII") || lines.next() != Some("DATASET STRUCTURED_POINTS") {
        return Err(header_err("only ASCII STRUCTURED_POINTS is supported"));
    }
    let dims: [usize; 3] = parse_triple(lines.next(), "DIMENSIONS")?;
    let lo: [f64; 3] = parse_triple(lines.next(), "ORIGIN")?;
    let h: [f64; 3] = parse_triple(lines.next(), "SPACING")?;
    let hi = [0, 1, 2].map(|a| lo[a] + h[a] * (dims[a].max(1) - 1) as f64);
    let grid = Grid3::new(lo, hi, dims)?;
    let count = lines
        .next()
        .and_then(|l| l.strip_prefix("POINT_DATA "))
        .and_then(|n| n.trim().parse::<usize>().ok())
        .ok_or_else(|| header_err("missing POINT_DATA"))?;
    if count != grid.len() {
        return Err(Error::SizeMismatch { expected: grid.len(), found: count });
    }
    if !lines.next().is_some_and(|l| l.starts_with("VECTORS ")) {
        return Err(header_err("missing VECTORS"));
    }
    let mut comps = [vec![0.0; count], vec![0.0; count], vec![0.0; count]];
    let mut read = 0;
    for line in lines.filter(|l| !l.trim().is_empty()) {
        if read == count {
            return Err(Error::SizeMismatch { expected: count, found: read + 1 });
        }
        let v: [f64; 3] = {
            let vals: Vec<f64> = line
                .split_whitespace()
                .map(|p| p.parse::<f64>().map_err(|_| header_err(format!("bad value `{p}`"))))
                .collect::<Result<_>>()?;
            <[f64; 3]>::try_from(vals).map_err(|_| header_err("vector rows need three values"))?
        };
        for c in 0..3 {
            comps[c][read] = v[c];
        }
        read += 1;
    }
    if read != count {
        return Err(Error::Truncated(format!("{read} of {count} vectors")));
    }
    VectorGrid::from_components(grid, comps)
}

pub fn read_vtk(path: impl AsRef<Path>) -> Result<VectorGrid> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    decode_vtk(&text)
}
