//! Standalone SVG heatmaps and line charts. Output is a pure function of
//! the inputs, with coordinates printed to two decimals.

use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 420.0;
const MARGIN: f64 = 60.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
        W / 2.0,
        escape(title)
    );
}

/// White → dark blue.
fn color(t: f64) -> String {
    let t = if t.is_finite() {
        t.clamp(0.0, 1.0)
    } else {
        0.0
    };
    let lerp = |a: f64, b: f64| (a + (b - a) * t).round() as u8;
    format!(
        "#{:02x}{:02x}{:02x}",
        lerp(255.0, 8.0),
        lerp(255.0, 48.0),
        lerp(255.0, 107.0)
    )
}

/// Heatmap of `values[row][col]`, row 0 at the top.
pub fn heatmap_svg(
    title: &str,
    values: &[Vec<f64>],
    row_labels: &[String],
    col_labels: &[String],
    x_label: &str,
    y_label: &str,
) -> String {
    let mut out = String::new();
    header(&mut out, title);
    let rows = values.len().max(1);
    let cols = values.first().map_or(1, |r| r.len().max(1));
    let (pw, ph) = (W - 2.0 * MARGIN - 60.0, H - 2.0 * MARGIN);
    let (cw, ch) = (pw / cols as f64, ph / rows as f64);
    let max = values
        .iter()
        .flatten()
        .copied()
        .filter(|v| v.is_finite())
        .fold(0.0, f64::max);
    for (r, row) in values.iter().enumerate() {
        for (c, &v) in row.iter().enumerate() {
            let t = if max > 0.0 { v / max } else { 0.0 };
            let _ = writeln!(
                out,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"><title>{:.6}</title></rect>"#,
                MARGIN + c as f64 * cw,
                MARGIN + r as f64 * ch,
                cw,
                ch,
                color(t),
                v
            );
        }
    }
    let every = |n: usize| n.div_ceil(12).max(1);
    for (r, l) in row_labels.iter().enumerate().step_by(every(rows)) {
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end" dominant-baseline="middle">{}</text>"#,
            MARGIN - 4.0,
            MARGIN + (r as f64 + 0.5) * ch,
            escape(l)
        );
    }
    for (c, l) in col_labels.iter().enumerate().step_by(every(cols)) {
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            MARGIN + (c as f64 + 0.5) * cw,
            MARGIN + ph + 14.0,
            escape(l)
        );
    }
    axis_labels(&mut out, x_label, y_label);
    // legend
    let lx = W - MARGIN - 30.0;
    for i in 0..10 {
        let _ = writeln!(
            out,
            r#"<rect x="{lx:.2}" y="{:.2}" width="14" height="{:.2}" fill="{}"/>"#,
            MARGIN + ph - (i + 1) as f64 * ph / 10.0,
            ph / 10.0,
            color((i as f64 + 0.5) / 10.0)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}">{max:.3}</text>"#,
        lx + 18.0,
        MARGIN + 4.0
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}">0</text>"#,
        lx + 18.0,
        MARGIN + ph
    );
    out.push_str("</svg>\n");
    out
}

fn axis_labels(out: &mut String, x_label: &str, y_label: &str) {
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        W / 2.0,
        H - 12.0,
        escape(x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="14" y="{:.2}" text-anchor="middle" transform="rotate(-90 14 {:.2})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        escape(y_label)
    );
}

/// One named series of `(x, y)` points; non-finite points are skipped.
pub struct Series<'a> {
    pub name: &'a str,
    pub points: Vec<(f64, f64)>,
}

pub fn line_chart_svg(title: &str, series: &[Series], x_label: &str, y_label: &str) -> String {
    let mut out = String::new();
    header(&mut out, title);
    let pts = series
        .iter()
        .flat_map(|s| s.points.iter())
        .filter(|(x, y)| x.is_finite() && y.is_finite());
    let (mut x0, mut x1, mut y0, mut y1) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 == x0 {
        x1 = x0 + 1.0;
    }
    if y1 == y0 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let (pw, ph) = (W - 2.0 * MARGIN - 100.0, H - 2.0 * MARGIN);
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| MARGIN + ph - (y - y0) / (y1 - y0) * ph;
    let _ = writeln!(
        out,
        r##"<rect x="{MARGIN}" y="{MARGIN}" width="{pw:.2}" height="{ph:.2}" fill="none" stroke="#888"/>"##
    );
    for i in 0..=4 {
        let fy = y0 + (y1 - y0) * i as f64 / 4.0;
        let fx = x0 + (x1 - x0) * i as f64 / 4.0;
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end" dominant-baseline="middle">{fy:.3}</text>"#,
            MARGIN - 4.0,
            sy(fy)
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{fx:.0}</text>"#,
            sx(fx),
            MARGIN + ph + 14.0
        );
    }
    for (k, s) in series.iter().enumerate() {
        let c = PALETTE[k % PALETTE.len()];
        let path: Vec<String> = s
            .points
            .iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{c}" stroke-width="1.5" points="{}"/>"#,
            path.join(" ")
        );
        let ly = MARGIN + 14.0 * k as f64;
        let _ = writeln!(
            out,
            r#"<line x1="{:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{c}" stroke-width="2"/>"#,
            MARGIN + pw + 8.0,
            MARGIN + pw + 24.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" dominant-baseline="middle">{}</text>"#,
            MARGIN + pw + 28.0,
            ly,
            escape(s.name)
        );
    }
    axis_labels(&mut out, x_label, y_label);
    out.push_str("</svg>\n");
    out
}
