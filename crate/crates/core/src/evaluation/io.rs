use std::fmt::Write as _;

use super::{Curve, EvalReport};
use crate::Result;

/// `r,IOU,FNE,FPE` rows.
pub fn curve_csv(r: &[f64], c: &Curve) -> String {
    let mut s = String::from("r,IOU,FNE,FPE\n");
    for (i, rv) in r.iter().enumerate() {
        writeln!(s, "{rv},{},{},{}", c.iou[i], c.fne[i], c.fpe[i]).unwrap();
    }
    s
}

/// Report as pretty JSON, with provenance fields merged in at the top level.
pub fn summary_json(report: &EvalReport, provenance: &serde_json::Value) -> Result<String> {
    let mut v = serde_json::to_value(report)?;
    if let (Some(obj), Some(extra)) = (v.as_object_mut(), provenance.as_object()) {
        for (k, x) in extra {
            obj.insert(k.clone(), x.clone());
        }
    }
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

/// IOU curves of every cell as a standalone SVG line chart.
pub fn curves_svg(report: &EvalReport, title: &str) -> String {
    let (w, h, pad) = (640.0, 420.0, 50.0);
    let r_max = report
        .r
        .last()
        .copied()
        .unwrap_or(1.0)
        .max(f64::MIN_POSITIVE);
    let x = |r: f64| pad + (w - 2.0 * pad) * r / r_max;
    let y = |v: f64| h - pad - (h - 2.0 * pad) * v;
    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#).unwrap();
    writeln!(
        s,
        r#"<text x="{}" y="20" text-anchor="middle">{}</text>"#,
        w / 2.0,
        escape(title)
    )
    .unwrap();
    writeln!(
        s,
        r#"<path d="M{} {} L{} {} L{} {}" fill="none" stroke="black"/>"#,
        x(0.0),
        y(1.0),
        x(0.0),
        y(0.0),
        x(r_max),
        y(0.0)
    )
    .unwrap();
    for t in 0..=4 {
        let v = t as f64 / 4.0;
        writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end">{v}</text>"#,
            x(0.0) - 6.0,
            y(v) + 4.0
        )
        .unwrap();
    }
    for r in &report.r {
        writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{r}</text>"#,
            x(*r),
            y(0.0) + 16.0
        )
        .unwrap();
    }
    writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">r</text>"#,
        w / 2.0,
        h - 8.0
    )
    .unwrap();
    writeln!(
        s,
        r#"<text x="14" y="{}" transform="rotate(-90 14 {})" text-anchor="middle">IOU</text>"#,
        h / 2.0,
        h / 2.0
    )
    .unwrap();
    for (i, c) in report.curves.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = report
            .r
            .iter()
            .zip(&c.iou)
            .map(|(r, v)| format!("{:.2},{:.2}", x(*r), y(*v)))
            .collect();
        writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            pts.join(" ")
        )
        .unwrap();
        writeln!(
            s,
            r#"<text x="{}" y="{}" fill="{color}">σ={} n={} AUC={:.5}</text>"#,
            x(0.0) + 10.0,
            y(1.0) + 14.0 * (i as f64 + 1.0),
            c.sigma,
            c.n,
            c.auc
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::{default_r_grid, Counts};

    fn rep() -> EvalReport {
        let r = default_r_grid();
        EvalReport {
            curves: vec![Curve {
                sigma: 0.05,
                n: 3,
                iou: vec![0.25; 13],
                fne: vec![0.5; 13],
                fpe: vec![0.125; 13],
                counts: vec![Counts::default(); 13],
                auc: 0.03,
                fold_auc_mean: 0.03,
            }],
            r,
            folds: 1,
        }
    }

    #[test]
    fn csv_has_one_row_per_r() {
        let r = rep();
        let text = curve_csv(&r.r, &r.curves[0]);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 14);
        assert_eq!(lines[0], "r,IOU,FNE,FPE");
        assert_eq!(lines[2], "0.01,0.25,0.5,0.125");
    }

    #[test]
    fn svg_is_well_formed_enough() {
        let s = curves_svg(&rep(), "a < b");
        assert!(s.starts_with("<svg") && s.trim_end().ends_with("</svg>"));
        assert_eq!(s.matches("<polyline").count(), 1);
        assert!(s.contains("a &lt; b"));
    }

    #[test]
    fn summary_round_trips() {
        let r = rep();
        let text = summary_json(&r, &serde_json::json!({"seed": 4})).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["seed"], 4);
        let back: EvalReport = serde_json::from_value(v).unwrap();
        assert_eq!(back, r);
    }
}
