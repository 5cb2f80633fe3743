use std::fmt::Write as _;
use std::path::Path;

use super::{AttributeMatrix, VertexFlags, NUM_ATTRIBUTES, SCHEMA_VERSION};
use crate::{Error, Result};

const MAGIC: &str = "# interest3d-attributes";

/// CSV with a leading comment line
/// `# interest3d-attributes version=1 delta=<model units> delta_fraction=<f> neighbors=<k> diameter=<d> model=<id>`,
/// a header `vertex,F1,...,F43,flags`, then one row per vertex. Values carry
/// 17 significant digits.
pub fn write_attribute_csv(m: &AttributeMatrix) -> String {
    let mut out = String::with_capacity(m.len() * NUM_ATTRIBUTES * 24);
    let _ = writeln!(
        out,
        "{MAGIC} version={SCHEMA_VERSION} delta={:.16e} delta_fraction={:.16e} neighbors={} diameter={:.16e} model={}",
        m.delta(),
        m.delta_fraction,
        m.neighbors,
        m.diameter,
        m.model_id
    );
    out.push_str("vertex");
    for j in 1..=NUM_ATTRIBUTES {
        let _ = write!(out, ",F{j}");
    }
    out.push_str(",flags\n");
    for (v, (row, flags)) in m.rows.iter().zip(&m.flags).enumerate() {
        let _ = write!(out, "{v}");
        for x in row {
            let _ = write!(out, ",{x:.16e}");
        }
        let _ = writeln!(out, ",{}", flags.bits());
    }
    out
}

pub fn parse_attribute_csv(text: &str) -> Result<AttributeMatrix> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, meta) = lines
        .next()
        .ok_or_else(|| Error::parse(1, "empty attribute file"))?;
    let rest = meta
        .strip_prefix(MAGIC)
        .ok_or_else(|| Error::parse(1, "missing attribute header comment"))?;

    let (kv, model_id) = match rest.split_once(" model=") {
        Some((kv, model)) => (kv, model.to_string()),
        None => return Err(Error::parse(1, "header lacks model id")),
    };
    let mut version = None;
    let mut delta_fraction = None;
    let mut diameter = None;
    let mut neighbors = None;
    for tok in kv.split_whitespace() {
        let (k, v) = tok
            .split_once('=')
            .ok_or_else(|| Error::parse(1, format!("bad header token {tok:?}")))?;
        let num = |v: &str| {
            v.parse::<f64>()
                .map_err(|e| Error::parse(1, format!("{k}: {e}")))
        };
        match k {
            "version" => {
                version = Some(
                    v.parse::<u32>()
                        .map_err(|e| Error::parse(1, e.to_string()))?,
                )
            }
            "delta_fraction" => delta_fraction = Some(num(v)?),
            "diameter" => diameter = Some(num(v)?),
            "neighbors" => {
                neighbors = Some(
                    v.parse::<usize>()
                        .map_err(|e| Error::parse(1, e.to_string()))?,
                )
            }
            _ => {}
        }
    }
    match version {
        Some(SCHEMA_VERSION) => {}
        Some(other) => {
            return Err(Error::Schema(format!(
                "attribute schema version {other}, expected {SCHEMA_VERSION}"
            )))
        }
        None => return Err(Error::parse(1, "header lacks version")),
    }

    let (ln, header) = lines
        .next()
        .ok_or_else(|| Error::parse(2, "missing column header"))?;
    if header.split(',').count() != NUM_ATTRIBUTES + 2 {
        return Err(Error::parse(
            ln,
            "column header must have vertex, F1..F43, flags",
        ));
    }

    let mut rows = Vec::new();
    let mut flags = Vec::new();
    for (ln, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != NUM_ATTRIBUTES + 2 {
            return Err(Error::parse(
                ln,
                format!("expected {} fields", NUM_ATTRIBUTES + 2),
            ));
        }
        let v: usize = fields[0]
            .parse()
            .map_err(|_| Error::parse(ln, "bad vertex id"))?;
        if v != rows.len() {
            return Err(Error::parse(ln, format!("vertex {v} out of order")));
        }
        let mut row = [0.0f64; NUM_ATTRIBUTES];
        for (slot, f) in row.iter_mut().zip(&fields[1..=NUM_ATTRIBUTES]) {
            *slot = f
                .parse()
                .map_err(|_| Error::parse(ln, format!("bad value {f:?}")))?;
            if !slot.is_finite() {
                return Err(Error::parse(ln, "non-finite attribute"));
            }
        }
        let bits: u8 = fields[NUM_ATTRIBUTES + 1]
            .parse()
            .map_err(|_| Error::parse(ln, "bad flags"))?;
        rows.push(row);
        flags.push(VertexFlags::from_bits_truncate(bits));
    }

    Ok(AttributeMatrix {
        model_id,
        diameter: diameter.ok_or_else(|| Error::parse(1, "header lacks diameter"))?,
        delta_fraction: delta_fraction
            .ok_or_else(|| Error::parse(1, "header lacks delta_fraction"))?,
        neighbors: neighbors.ok_or_else(|| Error::parse(1, "header lacks neighbors"))?,
        rows,
        flags,
    })
}

pub fn read_attribute_csv(path: impl AsRef<Path>) -> Result<AttributeMatrix> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_attribute_csv(&text)
}
