//! Plain-string SVG renderers for ROC curves, confusion heatmaps and
//! importance bars.

use std::fmt::Write;

use crate::evaluation::{ConfusionMatrix, RocCurve};

const FONT: &str = "font-family=\"Helvetica, Arial, sans-serif\"";
const AXIS: &str = "#333333";
const PALETTE: [&str; 8] = [
    "#d62728", "#ff7f0e", "#2ca02c", "#1f77b4", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

fn esc(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn open(svg: &mut String, w: f64, h: f64, title: &str) {
    let _ = write!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = write!(svg, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = write!(
        svg,
        r#"<text x="{:.1}" y="24" text-anchor="middle" {FONT} font-size="16" font-weight="bold" fill="{AXIS}">{}</text>"#,
        w / 2.0,
        esc(title)
    );
}

/// One-vs-rest ROC curves, one polyline per class.
pub fn roc_svg(title: &str, curves: &[RocCurve], class_names: &[String]) -> String {
    let (w, h) = (560.0, 480.0);
    let (left, top, size) = (60.0, 40.0, 380.0);
    let mut svg = String::new();
    open(&mut svg, w, h, title);
    let px = |x: f64| left + x * size;
    let py = |y: f64| top + (1.0 - y) * size;

    for i in 0..=5 {
        let t = i as f64 / 5.0;
        let _ = write!(
            svg,
            r##"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="#eeeeee"/>"##,
            px(0.0), py(t), px(1.0), py(t)
        );
        let _ = write!(
            svg,
            r##"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="#eeeeee"/>"##,
            px(t), py(0.0), px(t), py(1.0)
        );
        let _ = write!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end" {FONT} font-size="11" fill="{AXIS}">{t:.1}</text>"#,
            px(0.0) - 6.0, py(t) + 4.0
        );
        let _ = write!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" {FONT} font-size="11" fill="{AXIS}">{t:.1}</text>"#,
            px(t), py(0.0) + 16.0
        );
    }
    let _ = write!(
        svg,
        r#"<rect x="{left}" y="{top}" width="{size}" height="{size}" fill="none" stroke="{AXIS}"/>"#
    );
    let _ = write!(
        svg,
        r##"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="#999999" stroke-dasharray="4 4"/>"##,
        px(0.0), py(0.0), px(1.0), py(1.0)
    );
    let _ = write!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" {FONT} font-size="12" fill="{AXIS}">False positive rate</text>"#,
        px(0.5), py(0.0) + 36.0
    );
    let _ = write!(
        svg,
        r#"<text x="16" y="{:.1}" text-anchor="middle" {FONT} font-size="12" fill="{AXIS}" transform="rotate(-90 16 {:.1})">True positive rate</text>"#,
        py(0.5), py(0.5)
    );

    for (i, curve) in curves.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        if !curve.points.is_empty() {
            let pts: Vec<String> = curve
                .points
                .iter()
                .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
                .collect();
            let _ = write!(
                svg,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
                pts.join(" ")
            );
        }
        let name = class_names
            .get(curve.class)
            .cloned()
            .unwrap_or_else(|| format!("class {}", curve.class));
        let auc = curve.auc.map_or("n/a".to_string(), |a| format!("{a:.4}"));
        let ly = top + 10.0 + 20.0 * i as f64;
        let lx = left + size + 12.0;
        let _ = write!(
            svg,
            r#"<rect x="{lx:.1}" y="{:.1}" width="12" height="12" fill="{color}"/>"#,
            ly - 10.0
        );
        let _ = write!(
            svg,
            r#"<text x="{:.1}" y="{ly:.1}" {FONT} font-size="11" fill="{AXIS}">{} ({auc})</text>"#,
            lx + 16.0,
            esc(&name)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Heatmap of counts, shaded by each cell's share of its true-class row.
pub fn confusion_svg(title: &str, cm: &ConfusionMatrix, class_names: &[String]) -> String {
    let k = cm.n_classes();
    let cell = 80.0;
    let (left, top) = (140.0, 70.0);
    let w = left + cell * k as f64 + 30.0;
    let h = top + cell * k as f64 + 60.0;
    let mut svg = String::new();
    open(&mut svg, w, h, title);
    for t in 0..k {
        let row = cm.row_sum(t).max(1) as f64;
        for p in 0..k {
            let v = cm.counts[t][p];
            let share = v as f64 / row;
            // White to dark blue.
            let r = (255.0 - share * 225.0).round() as u8;
            let g = (255.0 - share * 175.0).round() as u8;
            let b = (255.0 - share * 75.0).round() as u8;
            let (x, y) = (left + cell * p as f64, top + cell * t as f64);
            let _ = write!(
                svg,
                r##"<rect x="{x:.1}" y="{y:.1}" width="{cell}" height="{cell}" fill="#{r:02x}{g:02x}{b:02x}" stroke="white"/>"##
            );
            let fg = if share > 0.5 { "white" } else { AXIS };
            let _ = write!(
                svg,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" {FONT} font-size="14" fill="{fg}">{v}</text>"#,
                x + cell / 2.0,
                y + cell / 2.0 + 5.0
            );
        }
        let name = class_names.get(t).map_or(t.to_string(), |s| esc(s));
        let _ = write!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end" {FONT} font-size="12" fill="{AXIS}">{name}</text>"#,
            left - 8.0,
            top + cell * t as f64 + cell / 2.0 + 4.0
        );
        let _ = write!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" {FONT} font-size="12" fill="{AXIS}">{name}</text>"#,
            left + cell * t as f64 + cell / 2.0,
            top - 8.0
        );
    }
    let _ = write!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" {FONT} font-size="12" fill="{AXIS}">Predicted class (columns), true class (rows)</text>"#,
        left + cell * k as f64 / 2.0,
        top + cell * k as f64 + 30.0
    );
    svg.push_str("</svg>\n");
    svg
}

/// Horizontal bars, largest importance first.
pub fn importance_svg(title: &str, names: &[String], values: &[f64]) -> String {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    let bar = 18.0;
    let (left, top, span) = (170.0, 44.0, 360.0);
    let w = left + span + 80.0;
    let h = top + (bar + 4.0) * values.len() as f64 + 20.0;
    let max = values.iter().copied().fold(0.0, f64::max).max(1e-12);
    let mut svg = String::new();
    open(&mut svg, w, h, title);
    for (rank, &j) in order.iter().enumerate() {
        let y = top + (bar + 4.0) * rank as f64;
        let len = values[j] / max * span;
        let name = names.get(j).map_or(j.to_string(), |s| esc(s));
        let _ = write!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end" {FONT} font-size="11" fill="{AXIS}">{name}</text>"#,
            left - 6.0,
            y + 13.0
        );
        let _ = write!(
            svg,
            r##"<rect x="{left}" y="{y:.1}" width="{len:.2}" height="{bar}" fill="#1f77b4"/>"##
        );
        let _ = write!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" {FONT} font-size="10" fill="{AXIS}">{:.4}</text>"#,
            left + len + 4.0,
            y + 13.0,
            values[j]
        );
    }
    svg.push_str("</svg>\n");
    svg
}
