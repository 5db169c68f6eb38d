//! Minimal SVG line chart of `Pr[connected]` against the kernel scale, one
//! series per graph size, with score-interval bands.

use std::fmt::Write;

use crate::experiment::CellSummary;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 50.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

pub fn sweep_chart(cells: &[CellSummary]) -> String {
    let mut sizes: Vec<usize> = cells.iter().map(|c| c.n).collect();
    sizes.sort_unstable();
    sizes.dedup();
    let c_max = cells.iter().map(|c| c.c).fold(0.0, f64::max);
    let c_min = cells.iter().map(|c| c.c).fold(f64::INFINITY, f64::min).min(c_max);
    let span = if c_max > c_min { c_max - c_min } else { 1.0 };
    let px = |c: f64| MARGIN + (c - c_min) / span * (WIDTH - 2.0 * MARGIN);
    let py = |p: f64| HEIGHT - MARGIN - p * (HEIGHT - 2.0 * MARGIN);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let (x0, x1, y0, y1) = (px(c_min), px(c_min + span), py(0.0), py(1.0));
    let _ = writeln!(s, r#"<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>"#);
    let _ = writeln!(s, r#"<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>"#);
    for t in 0..=4 {
        let p = t as f64 / 4.0;
        let c = c_min + p * span;
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{p:.2}</text>"#, x0 - 6.0, py(p) + 4.0);
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{c:.2}</text>"#, px(c), y0 + 18.0);
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">kernel scale c</text>"#, WIDTH / 2.0, HEIGHT - 10.0);
    let _ = writeln!(
        s,
        r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">Pr[connected]</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );
    for (idx, n) in sizes.iter().enumerate() {
        let colour = PALETTE[idx % PALETTE.len()];
        let mut series: Vec<&CellSummary> = cells.iter().filter(|c| c.n == *n).collect();
        series.sort_by(|a, b| a.c.total_cmp(&b.c));
        let upper = series.iter().map(|c| format!("{:.2},{:.2}", px(c.c), py(c.ci_high)));
        let lower = series.iter().rev().map(|c| format!("{:.2},{:.2}", px(c.c), py(c.ci_low)));
        let band: Vec<String> = upper.chain(lower).collect();
        let _ = writeln!(s, r#"<polygon points="{}" fill="{colour}" fill-opacity="0.15" stroke="none"/>"#, band.join(" "));
        let line: Vec<String> = series.iter().map(|c| format!("{:.2},{:.2}", px(c.c), py(c.p_connected))).collect();
        let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="2"/>"#, line.join(" "));
        for c in &series {
            let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{colour}"/>"#, px(c.c), py(c.p_connected));
        }
        let ly = MARGIN + 16.0 * idx as f64;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{ly}" fill="{colour}">n = {n}</text>"#,
            WIDTH - MARGIN - 70.0
        );
    }
    s.push_str("</svg>\n");
    s
}
