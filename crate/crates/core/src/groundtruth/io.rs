use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Point3;

use super::{
    same_sigma, Click, ClickSet, GroundTruth, GroundTruthPoint, GroundTruthTable, SubjectClicks,
};
use crate::{Error, Result};

pub const GROUND_TRUTH_VERSION: u32 = 1;

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
}

fn header<'a>(
    lines: &mut impl Iterator<Item = (usize, &'a str)>,
    key: &str,
) -> Result<(usize, &'a str)> {
    let (no, line) = lines
        .next()
        .ok_or_else(|| Error::parse(0, format!("missing `{key}` line")))?;
    match line.split_once(char::is_whitespace) {
        Some((k, rest)) if k == key => Ok((no, rest.trim())),
        _ => Err(Error::parse(no, format!("expected `{key} ...`"))),
    }
}

/// Click file:
///
/// ```text
/// model <id>
/// subjects <count>
/// <subject> v <vertex> <vertex> ...
/// <subject> p <x> <y> <z> <x> <y> <z> ...
/// ```
pub fn parse_clicks(text: &str) -> Result<ClickSet> {
    let mut lines = content_lines(text);
    let (_, model) = header(&mut lines, "model")?;
    let (no, count) = header(&mut lines, "subjects")?;
    let count: usize = count
        .parse()
        .map_err(|_| Error::parse(no, "bad subject count"))?;
    let mut subjects = Vec::with_capacity(count);
    for (no, line) in lines {
        let mut tok = line.split_whitespace();
        let subject = tok.next().unwrap_or_default().to_string();
        let kind = tok
            .next()
            .ok_or_else(|| Error::parse(no, "expected `v` or `p` after subject id"))?;
        let rest: Vec<&str> = tok.collect();
        let clicks = match kind {
            "v" => rest
                .iter()
                .map(|t| {
                    t.parse()
                        .map(Click::Vertex)
                        .map_err(|_| Error::parse(no, format!("bad vertex id `{t}`")))
                })
                .collect::<Result<Vec<_>>>()?,
            "p" => {
                if !rest.len().is_multiple_of(3) {
                    return Err(Error::parse(no, "coordinates must come in triples"));
                }
                let vals = rest
                    .iter()
                    .map(|t| {
                        t.parse::<f64>()
                            .map_err(|_| Error::parse(no, format!("bad coordinate `{t}`")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                vals.chunks(3)
                    .map(|c| Click::Point(Point3::new(c[0], c[1], c[2])))
                    .collect()
            }
            other => return Err(Error::parse(no, format!("unknown click kind `{other}`"))),
        };
        subjects.push(SubjectClicks { subject, clicks });
    }
    if subjects.len() != count {
        return Err(Error::parse(
            0,
            format!("header declares {count} subjects, found {}", subjects.len()),
        ));
    }
    ClickSet::new(model, subjects)
}

pub fn read_clicks(path: impl AsRef<Path>) -> Result<ClickSet> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_clicks(&text)
}

/// Each subject must use a single click kind, since a record holds either
/// vertex ids or coordinates.
pub fn write_clicks(c: &ClickSet) -> Result<String> {
    let mut s = format!("model {}\nsubjects {}\n", c.model, c.subjects.len());
    for subj in &c.subjects {
        let all_vertices = subj.clicks.iter().all(|k| matches!(k, Click::Vertex(_)));
        let all_points = subj.clicks.iter().all(|k| matches!(k, Click::Point(_)));
        if !all_vertices && !all_points {
            return Err(Error::InvalidArgument(format!(
                "subject {} mixes vertex and point clicks",
                subj.subject
            )));
        }
        s.push_str(&subj.subject);
        s.push_str(if all_vertices { " v" } else { " p" });
        for k in &subj.clicks {
            match k {
                Click::Vertex(v) => write!(s, " {v}").unwrap(),
                Click::Point(p) => write!(s, " {} {} {}", p.x, p.y, p.z).unwrap(),
            }
        }
        s.push('\n');
    }
    Ok(s)
}

/// Ground-truth file: a version line, the model, the list of computed cells
/// (so empty cells are distinguishable from missing ones), then one
/// `sigma n vertex support` record per point.
pub fn write_ground_truth(t: &GroundTruthTable) -> String {
    let mut s = format!(
        "interest3d-groundtruth {GROUND_TRUTH_VERSION}\nmodel {}\ncells",
        t.model
    );
    for c in &t.cells {
        write!(s, " {}:{}", c.sigma, c.n).unwrap();
    }
    s.push('\n');
    for c in &t.cells {
        for p in &c.points {
            writeln!(s, "{} {} {} {}", c.sigma, c.n, p.vertex, p.support).unwrap();
        }
    }
    s
}

pub fn parse_ground_truth(text: &str) -> Result<GroundTruthTable> {
    let mut lines = content_lines(text);
    let (no, version) = header(&mut lines, "interest3d-groundtruth")?;
    if version.parse::<u32>().ok() != Some(GROUND_TRUTH_VERSION) {
        return Err(Error::Schema(format!(
            "line {no}: ground truth version {version}, expected {GROUND_TRUTH_VERSION}"
        )));
    }
    let (_, model) = header(&mut lines, "model")?;
    let (no, cell_list) = lines
        .next()
        .filter(|(_, l)| l.split_whitespace().next() == Some("cells"))
        .map(|(n, l)| (n, l["cells".len()..].trim()))
        .ok_or_else(|| Error::parse(0, "missing `cells` line"))?;
    let mut cells = Vec::new();
    for tok in cell_list.split_whitespace() {
        let (sg, n) = tok
            .split_once(':')
            .ok_or_else(|| Error::parse(no, format!("bad cell `{tok}`")))?;
        let sigma: f64 = sg
            .parse()
            .map_err(|_| Error::parse(no, format!("bad sigma `{sg}`")))?;
        let n: usize = n
            .parse()
            .map_err(|_| Error::parse(no, format!("bad n `{n}`")))?;
        cells.push(GroundTruth {
            model: model.to_string(),
            sigma,
            n,
            points: Vec::new(),
        });
    }
    for (no, line) in lines {
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 4 {
            return Err(Error::parse(no, "expected `sigma n vertex support`"));
        }
        let sigma: f64 = f[0].parse().map_err(|_| Error::parse(no, "bad sigma"))?;
        let n: usize = f[1].parse().map_err(|_| Error::parse(no, "bad n"))?;
        let vertex: usize = f[2].parse().map_err(|_| Error::parse(no, "bad vertex"))?;
        let support: usize = f[3].parse().map_err(|_| Error::parse(no, "bad support"))?;
        let cell = cells
            .iter_mut()
            .find(|c| c.n == n && same_sigma(c.sigma, sigma))
            .ok_or_else(|| Error::parse(no, format!("record for undeclared cell {sigma}:{n}")))?;
        cell.points.push(GroundTruthPoint { vertex, support });
    }
    for c in &mut cells {
        c.points.sort_by_key(|p| p.vertex);
    }
    Ok(GroundTruthTable {
        model: model.to_string(),
        cells,
    })
}

pub fn read_ground_truth(path: impl AsRef<Path>) -> Result<GroundTruthTable> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_ground_truth(&text)
}
