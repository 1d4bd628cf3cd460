//! Minimal SVG 1.1 polyline plots: one series, labeled axis ticks, no
//! external dependencies. Output is deterministic byte-for-byte.

use std::fmt::Write as _;
use std::path::Path;

use strainforge_core::trace::Trace;
use strainforge_core::Result;

const W: f64 = 720.0;
const H: f64 = 480.0;
const ML: f64 = 80.0;
const MR: f64 = 20.0;
const MT: f64 = 30.0;
const MB: f64 = 50.0;
const TICKS: usize = 5;

fn nice_range(lo: f64, hi: f64) -> (f64, f64) {
    if lo == hi {
        (lo - 0.5, hi + 0.5)
    } else {
        let pad = (hi - lo) * 0.05;
        (lo - pad, hi + pad)
    }
}

/// Render a trace to an SVG string with the given title and axis labels.
pub fn render_trace(trace: &Trace, title: &str, x_label: &str, y_label: &str) -> String {
    let (x0, x1) = nice_range(trace.axis[0], *trace.axis.last().unwrap());
    let (vlo, vhi) = trace
        .values
        .iter()
        .fold((f64::MAX, f64::MIN), |(a, b), &v| (a.min(v), b.max(v)));
    let (y0, y1) = nice_range(vlo, vhi);
    let px = |x: f64| ML + (x - x0) / (x1 - x0) * (W - ML - MR);
    let py = |y: f64| H - MB - (y - y0) / (y1 - y0) * (H - MT - MB);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(
        s,
        r#"<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="18" font-family="monospace" font-size="14" text-anchor="middle">{title}</text>"#,
        (ML + W - MR) / 2.0
    );
    // Axes.
    let _ = writeln!(
        s,
        r#"<line x1="{ML}" y1="{MT}" x2="{ML}" y2="{:.1}" stroke="black"/>"#,
        H - MB
    );
    let _ = writeln!(
        s,
        r#"<line x1="{ML}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="black"/>"#,
        H - MB,
        W - MR,
        H - MB
    );
    // Ticks and labels.
    for i in 0..TICKS {
        let f = i as f64 / (TICKS - 1) as f64;
        let xv = x0 + f * (x1 - x0);
        let yv = y0 + f * (y1 - y0);
        let xp = px(xv);
        let yp = py(yv);
        let _ = writeln!(
            s,
            r#"<line x1="{xp:.1}" y1="{:.1}" x2="{xp:.1}" y2="{:.1}" stroke="black"/>"#,
            H - MB,
            H - MB + 5.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{xp:.1}" y="{:.1}" font-family="monospace" font-size="11" text-anchor="middle">{xv:.3e}</text>"#,
            H - MB + 18.0
        );
        let _ = writeln!(
            s,
            r#"<line x1="{:.1}" y1="{yp:.1}" x2="{ML}" y2="{yp:.1}" stroke="black"/>"#,
            ML - 5.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" font-family="monospace" font-size="11" text-anchor="end">{yv:.3e}</text>"#,
            ML - 8.0,
            yp + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" font-family="monospace" font-size="12" text-anchor="middle">{x_label}</text>"#,
        (ML + W - MR) / 2.0,
        H - 8.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.1}" font-family="monospace" font-size="12" text-anchor="middle" transform="rotate(-90 16 {:.1})">{y_label}</text>"#,
        (MT + H - MB) / 2.0,
        (MT + H - MB) / 2.0
    );
    // Data polyline.
    let mut pts = String::new();
    for i in 0..trace.len() {
        let _ = write!(pts, "{:.2},{:.2} ", px(trace.axis[i]), py(trace.values[i]));
    }
    let _ = writeln!(
        s,
        r##"<polyline points="{}" fill="none" stroke="#1f5fa6" stroke-width="1.5"/>"##,
        pts.trim_end()
    );
    s.push_str("</svg>\n");
    s
}

pub fn save_trace_svg(
    trace: &Trace,
    path: &Path,
    title: &str,
    x_label: &str,
    y_label: &str,
) -> Result<()> {
    std::fs::write(path, render_trace(trace, title, x_label, y_label))?;
    Ok(())
}
