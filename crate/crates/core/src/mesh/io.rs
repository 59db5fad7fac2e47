//! Line-oriented mesh text format.
//!
//! ```text
//! wgmesh 1
//! <nv> <nc>
//! x y                      (nv lines)
//! k i0 i1 ... i(k-1)       (nc lines, 0-based vertex indices, any orientation)
//! ```

use std::fmt::Write as _;
use std::path::Path;

use super::{MeshError, Point, WeakMesh};

fn parse_err(line: usize, message: impl Into<String>) -> MeshError {
    MeshError::Parse {
        line,
        message: message.into(),
    }
}

fn parse_num<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T, MeshError> {
    let tok = tok.ok_or_else(|| parse_err(line, format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| parse_err(line, format!("cannot parse {what} from '{tok}'")))
}

/// Parses mesh text; the result has passed [`validate`](super::validate).
pub fn parse_mesh(text: &str) -> Result<WeakMesh, MeshError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let (ln, header) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let mut tok = header.split_whitespace();
    if tok.next() != Some("wgmesh") || tok.next() != Some("1") || tok.next().is_some() {
        return Err(parse_err(ln, "expected header 'wgmesh 1'"));
    }
    let (ln, counts) = lines.next().ok_or_else(|| parse_err(2, "missing counts line"))?;
    let mut tok = counts.split_whitespace();
    let nv: usize = parse_num(tok.next(), ln, "vertex count")?;
    let nc: usize = parse_num(tok.next(), ln, "cell count")?;
    if tok.next().is_some() {
        return Err(parse_err(ln, "trailing tokens after counts"));
    }

    let mut vertices: Vec<Point> = Vec::with_capacity(nv);
    for i in 0..nv {
        let (ln, l) = lines
            .next()
            .ok_or_else(|| parse_err(3 + i, format!("missing vertex {i}")))?;
        let mut tok = l.split_whitespace();
        let x: f64 = parse_num(tok.next(), ln, "x coordinate")?;
        let y: f64 = parse_num(tok.next(), ln, "y coordinate")?;
        if tok.next().is_some() {
            return Err(parse_err(ln, "trailing tokens after vertex"));
        }
        if !x.is_finite() || !y.is_finite() {
            return Err(parse_err(ln, "non-finite coordinate"));
        }
        vertices.push([x, y]);
    }

    let mut cells = Vec::with_capacity(nc);
    for c in 0..nc {
        let (ln, l) = lines
            .next()
            .ok_or_else(|| parse_err(3 + nv + c, format!("missing cell {c}")))?;
        let mut tok = l.split_whitespace();
        let k: usize = parse_num(tok.next(), ln, "cell vertex count")?;
        let mut cell = Vec::with_capacity(k);
        for _ in 0..k {
            let v: usize = parse_num(tok.next(), ln, "vertex index")?;
            if v >= nv {
                return Err(parse_err(ln, format!("vertex index {v} out of range")));
            }
            cell.push(v);
        }
        if tok.next().is_some() {
            return Err(parse_err(ln, "trailing tokens after cell"));
        }
        cells.push(cell);
    }
    if let Some((ln, l)) = lines.find(|(_, l)| !l.is_empty()) {
        return Err(parse_err(ln, format!("unexpected content '{l}'")));
    }
    WeakMesh::new(vertices, cells)
}

pub fn load_mesh(path: impl AsRef<Path>) -> Result<WeakMesh, MeshError> {
    let text = std::fs::read_to_string(path)?;
    parse_mesh(&text)
}

/// Serializes a mesh; `parse_mesh(&write_mesh(m))` reproduces `m`.
pub fn write_mesh(mesh: &WeakMesh) -> String {
    let mut s = String::new();
    writeln!(s, "wgmesh 1").unwrap();
    writeln!(s, "{} {}", mesh.vertices().len(), mesh.num_cells()).unwrap();
    for v in mesh.vertices() {
        writeln!(s, "{:?} {:?}", v[0], v[1]).unwrap();
    }
    for cell in mesh.cells() {
        write!(s, "{}", cell.len()).unwrap();
        for v in cell {
            write!(s, " {v}").unwrap();
        }
        writeln!(s).unwrap();
    }
    s
}
