//! Bar charts of segment AUCs with standard-error whiskers, as SVG and CSV.

use std::fmt::Write as _;

use recall_core::evaluation::SegmentReport;

/// One bar group: a model name and its segments.
#[derive(Debug, Clone, Copy)]
pub struct Series<'a> {
    pub name: &'a str,
    pub segments: &'a [SegmentReport],
}

const PALETTE: [&str; 4] = ["#4e79a7", "#f28e2b", "#59a14f", "#e15759"];

pub fn segment_csv(series: &[Series<'_>]) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["model", "segment", "n", "auc", "se"])?;
    for s in series {
        for seg in s.segments {
            let opt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
            w.write_record([s.name.to_string(), seg.label.clone(), seg.n.to_string(), opt(seg.auc), opt(seg.se)])?;
        }
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Grouped bars, one group per segment label and one colour per series. The
/// y axis spans AUC 0.4 to 1.0; segments without an AUC get no bar.
pub fn segment_svg(title: &str, series: &[Series<'_>]) -> String {
    let mut labels: Vec<&str> = Vec::new();
    for s in series {
        for seg in s.segments {
            if !labels.contains(&seg.label.as_str()) {
                labels.push(&seg.label);
            }
        }
    }
    let (width, height) = (120.0 + 110.0 * labels.len().max(1) as f64, 360.0);
    let (left, right, top, bottom) = (60.0, width - 20.0, 40.0, height - 60.0);
    let (y_lo, y_hi) = (0.4, 1.0);
    let y = |v: f64| bottom - (v.clamp(y_lo, y_hi) - y_lo) / (y_hi - y_lo) * (bottom - top);
    let group = (right - left) / labels.len().max(1) as f64;
    let bar = group * 0.8 / series.len().max(1) as f64;

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(svg, r#"<text x="{:.1}" y="20" text-anchor="middle" font-size="14">{}</text>"#, width / 2.0, escape(title));
    for i in 0..=6 {
        let v = y_lo + (y_hi - y_lo) * i as f64 / 6.0;
        let _ = writeln!(svg, r##"<line x1="{left}" x2="{right:.1}" y1="{0:.1}" y2="{0:.1}" stroke="#ddd"/>"##, y(v));
        let _ = writeln!(svg, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{v:.1}</text>"#, left - 6.0, y(v) + 4.0);
    }
    let _ = writeln!(svg, r#"<text x="16" y="{:.1}" transform="rotate(-90 16 {0:.1})" text-anchor="middle">AUC</text>"#, (top + bottom) / 2.0);
    for (g, label) in labels.iter().enumerate() {
        let x0 = left + group * g as f64 + group * 0.1;
        for (k, s) in series.iter().enumerate() {
            let Some(seg) = s.segments.iter().find(|seg| seg.label == *label) else { continue };
            let Some(auc) = seg.auc else { continue };
            let x = x0 + bar * k as f64;
            let colour = PALETTE[k % PALETTE.len()];
            let _ = writeln!(
                svg,
                r#"<rect x="{x:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="{colour}"><title>{} {}: {auc:.4} (n={})</title></rect>"#,
                y(auc),
                bar * 0.9,
                bottom - y(auc),
                escape(s.name),
                escape(label),
                seg.n
            );
            if let Some(se) = seg.se {
                let cx = x + bar * 0.45;
                let _ = writeln!(
                    svg,
                    r#"<line x1="{cx:.1}" x2="{cx:.1}" y1="{:.1}" y2="{:.1}" stroke="black"/>"#,
                    y(auc - se),
                    y(auc + se)
                );
            }
        }
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            left + group * (g as f64 + 0.5),
            bottom + 18.0,
            escape(label)
        );
    }
    let _ = writeln!(svg, r#"<line x1="{left}" x2="{right:.1}" y1="{bottom}" y2="{bottom}" stroke="black"/>"#);
    for (k, s) in series.iter().enumerate() {
        let x = left + 130.0 * k as f64;
        let _ = writeln!(svg, r#"<rect x="{x:.1}" y="{:.1}" width="12" height="12" fill="{}"/>"#, height - 28.0, PALETTE[k % PALETTE.len()]);
        let _ = writeln!(svg, r#"<text x="{:.1}" y="{:.1}">{}</text>"#, x + 18.0, height - 18.0, escape(s.name));
    }
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}
