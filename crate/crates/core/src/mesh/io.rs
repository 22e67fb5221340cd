//! Mesh text formats.
//!
//! Native format (whitespace separated, `#` starts a comment):
//!
//! ```text
//! V K
//! id x y            (V lines, ids 0..V)
//! id v0 v1 v2       (K lines)
//! boundary a b      (optional, any number)
//! ```
//!
//! The loader also accepts Gmsh `$MeshFormat 2.2` ASCII files; only 3-node
//! triangles (element type 2) are read, everything else is skipped.

use super::{Mesh, Point};
use crate::error::{Error, Result};
use std::fmt::Write as _;
use std::path::Path;

fn perr(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

/// Reads a mesh file, detecting the format from its first line.
pub fn load_mesh(path: impl AsRef<Path>) -> Result<Mesh> {
    let path = path.as_ref();
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(Error::FileNotFound { path: path.to_path_buf() })
        }
        Err(e) => return Err(e.into()),
    };
    parse_mesh(&text)
}

/// Parses either supported format.
pub fn parse_mesh(text: &str) -> Result<Mesh> {
    let first = text
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty() && !l.starts_with('#'));
    if first.is_some_and(|l| l.starts_with("$MeshFormat")) {
        parse_gmsh(text)
    } else {
        parse_native(text)
    }
}

/// Content lines as (1-based line number, tokens), comments stripped.
fn token_lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("");
        let toks: Vec<&str> = l.split_whitespace().collect();
        (!toks.is_empty()).then_some((i + 1, toks))
    })
}

fn parse_usize(tok: &str, line: usize, what: &str) -> Result<usize> {
    tok.parse().map_err(|_| perr(line, format!("expected {what}, found `{tok}`")))
}

fn parse_f64(tok: &str, line: usize, what: &str) -> Result<f64> {
    let v: f64 = tok.parse().map_err(|_| perr(line, format!("expected {what}, found `{tok}`")))?;
    if !v.is_finite() {
        return Err(perr(line, format!("{what} is not finite")));
    }
    Ok(v)
}

fn expect_len(toks: &[&str], n: usize, line: usize, what: &str) -> Result<()> {
    if toks.len() != n {
        return Err(perr(line, format!("{what}: expected {n} fields, found {}", toks.len())));
    }
    Ok(())
}

pub fn parse_native(text: &str) -> Result<Mesh> {
    let mut lines = token_lines(text);
    let (hl, header) = lines.next().ok_or_else(|| perr(1, "empty mesh file"))?;
    expect_len(&header, 2, hl, "header `V K`")?;
    let nv = parse_usize(header[0], hl, "vertex count")?;
    let nk = parse_usize(header[1], hl, "element count")?;

    // Ids are checked to lie in 0..V and be distinct, so V lines cover them all.
    let mut vertices: Vec<(usize, Point)> = Vec::new();
    for _ in 0..nv {
        let (ln, t) = lines.next().ok_or_else(|| perr(0, "unexpected end of file in vertex block"))?;
        expect_len(&t, 3, ln, "vertex line `id x y`")?;
        let id = parse_usize(t[0], ln, "vertex id")?;
        if id >= nv {
            return Err(perr(ln, format!("vertex id {id} out of range 0..{nv}")));
        }
        vertices.push((id, Point::new(parse_f64(t[1], ln, "x")?, parse_f64(t[2], ln, "y")?)));
    }
    vertices.sort_by_key(|v| v.0);
    if let Some(w) = vertices.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(Error::DuplicateVertex(w[0].0));
    }
    let vertices: Vec<Point> = vertices.into_iter().map(|(_, p)| p).collect();

    let mut triangles: Vec<(usize, [usize; 3])> = Vec::new();
    for _ in 0..nk {
        let (ln, t) = lines.next().ok_or_else(|| perr(0, "unexpected end of file in element block"))?;
        expect_len(&t, 4, ln, "element line `id v0 v1 v2`")?;
        let id = parse_usize(t[0], ln, "element id")?;
        if id >= nk {
            return Err(perr(ln, format!("element id {id} out of range 0..{nk}")));
        }
        let mut tri = [0usize; 3];
        for (k, tok) in t[1..].iter().enumerate() {
            let v = parse_usize(tok, ln, "vertex index")?;
            if v >= nv {
                return Err(Error::MissingVertex { element: id, vertex: v });
            }
            tri[k] = v;
        }
        triangles.push((id, tri));
    }
    triangles.sort_by_key(|t| t.0);
    if let Some(w) = triangles.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(perr(0, format!("duplicate element id {}", w[0].0)));
    }
    let triangles: Vec<[usize; 3]> = triangles.into_iter().map(|(_, t)| t).collect();

    let mut forced = Vec::new();
    for (ln, t) in lines {
        if t[0] != "boundary" {
            return Err(perr(ln, format!("unexpected trailing line starting with `{}`", t[0])));
        }
        expect_len(&t, 3, ln, "boundary line")?;
        let a = parse_usize(t[1], ln, "vertex index")?;
        let b = parse_usize(t[2], ln, "vertex index")?;
        if a >= nv || b >= nv {
            return Err(perr(ln, format!("boundary edge ({a}, {b}) references a missing vertex")));
        }
        forced.push([a, b]);
    }
    Mesh::with_boundary(vertices, triangles, &forced)
}

pub fn parse_gmsh(text: &str) -> Result<Mesh> {
    let all: Vec<(usize, Vec<&str>)> = token_lines(text).collect();
    let find = |tag: &str| all.iter().position(|(_, t)| t[0] == tag);

    let fmt = find("$MeshFormat").ok_or_else(|| perr(1, "missing $MeshFormat"))?;
    let (fl, ft) = all.get(fmt + 1).ok_or_else(|| perr(0, "truncated $MeshFormat"))?;
    if ft.first() != Some(&"2.2") {
        return Err(perr(*fl, "only Gmsh format 2.2 is supported"));
    }
    if ft.get(1) != Some(&"0") {
        return Err(perr(*fl, "only ASCII Gmsh files are supported"));
    }

    let nodes_at = find("$Nodes").ok_or_else(|| perr(0, "missing $Nodes section"))?;
    let (cl, ct) = all.get(nodes_at + 1).ok_or_else(|| perr(0, "truncated $Nodes"))?;
    let nn = parse_usize(ct[0], *cl, "node count")?;
    let mut ids = std::collections::HashMap::new();
    let mut vertices = Vec::new();
    for k in 0..nn {
        let (ln, t) = all.get(nodes_at + 2 + k).ok_or_else(|| perr(0, "truncated $Nodes"))?;
        if t.len() < 3 || t[0].starts_with('$') {
            return Err(perr(*ln, "node line must read `id x y [z]`"));
        }
        let id = parse_usize(t[0], *ln, "node id")?;
        if ids.insert(id, vertices.len()).is_some() {
            return Err(Error::DuplicateVertex(id));
        }
        vertices.push(Point::new(parse_f64(t[1], *ln, "x")?, parse_f64(t[2], *ln, "y")?));
    }

    let el_at = find("$Elements").ok_or_else(|| perr(0, "missing $Elements section"))?;
    let (cl, ct) = all.get(el_at + 1).ok_or_else(|| perr(0, "truncated $Elements"))?;
    let ne = parse_usize(ct[0], *cl, "element count")?;
    let mut triangles = Vec::new();
    for k in 0..ne {
        let (ln, t) = all.get(el_at + 2 + k).ok_or_else(|| perr(0, "truncated $Elements"))?;
        if t.len() < 3 || t[0].starts_with('$') {
            return Err(perr(*ln, "element line must read `id type ntags tags... nodes...`"));
        }
        let id = parse_usize(t[0], *ln, "element id")?;
        let ty = parse_usize(t[1], *ln, "element type")?;
        let ntags = parse_usize(t[2], *ln, "tag count")?;
        if ty != 2 {
            continue;
        }
        let first = 3usize.saturating_add(ntags);
        if t.len() != first.saturating_add(3) {
            return Err(perr(*ln, "triangle line must list exactly three nodes"));
        }
        let mut tri = [0usize; 3];
        for (j, tok) in t[first..].iter().enumerate() {
            let node = parse_usize(tok, *ln, "node id")?;
            tri[j] = *ids.get(&node).ok_or(Error::MissingVertex { element: id, vertex: node })?;
        }
        triangles.push(tri);
    }
    if triangles.is_empty() {
        return Err(perr(*cl, "no 3-node triangles in $Elements"));
    }
    Mesh::new(vertices, triangles)
}

/// Serialises a mesh in the native format.
pub fn write_native(mesh: &Mesh) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{} {}", mesh.vertices().len(), mesh.num_elements());
    for (i, p) in mesh.vertices().iter().enumerate() {
        let _ = writeln!(s, "{i} {:?} {:?}", p.x, p.y);
    }
    for (i, e) in mesh.elements().iter().enumerate() {
        let [a, b, c] = e.vertices;
        let _ = writeln!(s, "{i} {a} {b} {c}");
    }
    s
}
