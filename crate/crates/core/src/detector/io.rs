use std::fmt::Write as _;
use std::path::Path;

use super::{Detection, DetectionResult};
use crate::{Error, Result};

pub const DETECTION_VERSION: u32 = 1;

/// Provenance recorded alongside detections.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionHeader {
    pub c: f64,
    pub psi: f64,
    pub seed: u64,
    pub forest_hash: String,
    pub config_hash: String,
}

/// `vertex,probability` records, highest probability first, below a
/// two-line header.
pub fn write_detections(r: &DetectionResult, h: &DetectionHeader) -> String {
    let mut s = format!(
        "# interest3d-detections version={DETECTION_VERSION}\n# model={} c={} psi={} radius={} seed={} forest={} config={} ties={}\nvertex,probability\n",
        r.model,
        h.c,
        h.psi,
        r.radius,
        h.seed,
        h.forest_hash,
        h.config_hash,
        r.tie_count()
    );
    for d in &r.detections {
        writeln!(s, "{},{}", d.vertex, d.probability).unwrap();
    }
    s
}

pub fn parse_detections(text: &str) -> Result<(DetectionResult, DetectionHeader)> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let mut next = |what: &str| {
        lines
            .next()
            .ok_or_else(|| Error::parse(0, format!("missing {what}")))
    };
    let (no, first) = next("version line")?;
    let version = first
        .strip_prefix("# interest3d-detections version=")
        .ok_or_else(|| Error::parse(no, "not a detection file"))?;
    if version.parse::<u32>().ok() != Some(DETECTION_VERSION) {
        return Err(Error::Schema(format!(
            "detection file version {version}, expected {DETECTION_VERSION}"
        )));
    }
    let (no, meta) = next("header line")?;
    let meta = meta
        .strip_prefix('#')
        .ok_or_else(|| Error::parse(no, "expected header"))?;
    let mut fields = std::collections::HashMap::new();
    for kv in meta.split_whitespace() {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::parse(no, format!("bad field `{kv}`")))?;
        fields.insert(k, v);
    }
    let get = |k: &str| {
        fields
            .get(k)
            .copied()
            .ok_or_else(|| Error::parse(no, format!("missing `{k}`")))
    };
    let num = |k: &str| -> Result<f64> {
        get(k)?
            .parse()
            .map_err(|_| Error::parse(no, format!("bad `{k}`")))
    };
    let header = DetectionHeader {
        c: num("c")?,
        psi: num("psi")?,
        seed: get("seed")?
            .parse()
            .map_err(|_| Error::parse(no, "bad `seed`"))?,
        forest_hash: get("forest")?.to_string(),
        config_hash: get("config")?.to_string(),
    };
    let model = get("model")?.to_string();
    let radius = num("radius")?;
    let ties: usize = get("ties")?
        .parse()
        .map_err(|_| Error::parse(no, "bad `ties`"))?;
    let (no, cols) = next("column line")?;
    if cols != "vertex,probability" {
        return Err(Error::parse(no, "expected `vertex,probability`"));
    }
    let mut detections = Vec::new();
    for (no, line) in lines {
        if line.is_empty() {
            continue;
        }
        let (v, p) = line
            .split_once(',')
            .ok_or_else(|| Error::parse(no, "expected `vertex,probability`"))?;
        detections.push(Detection {
            vertex: v.parse().map_err(|_| Error::parse(no, "bad vertex"))?,
            probability: p.parse().map_err(|_| Error::parse(no, "bad probability"))?,
            tied: false,
        });
    }
    if ties > 0 {
        log::debug!("{model}: file records {ties} tie-kept detections");
    }
    Ok((
        DetectionResult {
            model,
            radius,
            detections,
        },
        header,
    ))
}

pub fn read_detections(path: impl AsRef<Path>) -> Result<(DetectionResult, DetectionHeader)> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_detections(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let r = DetectionResult {
            model: "cup".into(),
            radius: 0.125,
            detections: vec![
                Detection {
                    vertex: 7,
                    probability: 0.91,
                    tied: false,
                },
                Detection {
                    vertex: 2,
                    probability: 1.0 / 3.0 + 0.5,
                    tied: false,
                },
            ],
        };
        let h = DetectionHeader {
            c: 2.0,
            psi: 0.0123,
            seed: 42,
            forest_hash: "ab".repeat(32),
            config_hash: "cd".repeat(32),
        };
        let text = write_detections(&r, &h);
        let (back, hb) = parse_detections(&text).unwrap();
        assert_eq!(back, r);
        assert_eq!(hb, h);
        assert!(parse_detections("# interest3d-detections version=9\n").is_err());
    }
}
