use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Point3;

use super::TriMesh;
use crate::{Error, Result};

/// Parses an ASCII OFF mesh. The `OFF` header line is optional; `#` starts a
/// comment. Only triangular faces are accepted.
pub fn parse_off(text: &str) -> Result<TriMesh> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (mut lineno, mut line) = lines.next().ok_or_else(|| Error::parse(1, "empty file"))?;
    if let Some(rest) = line.strip_prefix("OFF") {
        let rest = rest.trim();
        if rest.is_empty() {
            (lineno, line) = lines
                .next()
                .ok_or_else(|| Error::parse(lineno, "missing counts line"))?;
        } else {
            line = rest;
        }
    }

    let counts: Vec<usize> = line
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|e| Error::parse(lineno, format!("bad counts line: {e}")))?;
    if counts.len() < 2 {
        return Err(Error::parse(
            lineno,
            "counts line needs vertex and face counts",
        ));
    }
    let (nv, nf) = (counts[0], counts[1]);

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, l) = lines
            .next()
            .ok_or_else(|| Error::parse(lineno, format!("expected {nv} vertices")))?;
        lineno = ln;
        let xyz: Vec<f64> = l
            .split_whitespace()
            .take(3)
            .map(|t| t.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| Error::parse(ln, format!("bad vertex coordinate: {e}")))?;
        if xyz.len() != 3 {
            return Err(Error::parse(ln, "vertex line needs three coordinates"));
        }
        vertices.push(Point3::new(xyz[0], xyz[1], xyz[2]));
    }

    let mut faces = Vec::with_capacity(nf);
    for fi in 0..nf {
        let (ln, l) = lines
            .next()
            .ok_or_else(|| Error::parse(lineno, format!("expected {nf} faces")))?;
        lineno = ln;
        let mut tok = l.split_whitespace();
        let k: usize = tok
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::parse(ln, "bad face vertex count"))?;
        if k != 3 {
            return Err(Error::parse(
                ln,
                format!("face {fi} has {k} vertices; only triangles are supported"),
            ));
        }
        let mut f = [0usize; 3];
        for slot in &mut f {
            *slot = tok
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| Error::parse(ln, "bad face index"))?;
            if *slot >= nv {
                return Err(Error::parse(
                    ln,
                    format!("face {fi} index {} out of range for {nv} vertices", *slot),
                ));
            }
        }
        faces.push(f);
    }

    TriMesh::new(vertices, faces).map_err(|e| match e {
        Error::DegenerateMesh(msg) => Error::parse(lineno, msg),
        other => other,
    })
}

pub fn read_off(path: impl AsRef<Path>) -> Result<TriMesh> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_off(&text)
}

/// Serializes to ASCII OFF using shortest round-trip float formatting.
pub fn write_off(mesh: &TriMesh) -> String {
    let mut out = String::new();
    out.push_str("OFF\n");
    let _ = writeln!(out, "{} {} 0", mesh.vertex_count(), mesh.face_count());
    for p in mesh.vertices() {
        let _ = writeln!(out, "{} {} {}", p.x, p.y, p.z);
    }
    for f in mesh.faces() {
        let _ = writeln!(out, "3 {} {} {}", f[0], f[1], f[2]);
    }
    out
}
