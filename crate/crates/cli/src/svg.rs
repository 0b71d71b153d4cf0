//! Trace plots projected onto the first two coordinates.

use std::fmt::Write;

use finslerlab::flatness::GeodesicTrace;

const SIZE: f64 = 800.0;

/// The disk of radius `radius` fills the 800×800 viewport; each trace is
/// drawn with its chord dashed on top.
pub fn render(traces: &[GeodesicTrace], radius: f64) -> String {
    let half = SIZE / 2.0;
    let scale = half / radius;
    let px = |p: &[f64]| (half + scale * p[0], half - scale * p[1]);
    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="800" height="800" viewBox="0 0 800 800">"#
    );
    let _ = writeln!(s, r#"<rect width="800" height="800" fill="white"/>"#);
    let _ = writeln!(s, r#"<circle cx="{half}" cy="{half}" r="{half}" fill="none" stroke="black" stroke-width="1"/>"#);
    for tr in traces {
        if tr.points.is_empty() {
            continue;
        }
        let mut pts = String::new();
        for p in &tr.points {
            let (x, y) = px(p);
            let _ = write!(pts, "{x:.3},{y:.3} ");
        }
        let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="steelblue" stroke-width="1.5"/>"#, pts.trim_end());
        let (x0, y0) = px(&tr.points[0]);
        let (x1, y1) = px(tr.points.last().expect("non-empty"));
        let _ = writeln!(
            s,
            r#"<line x1="{x0:.3}" y1="{y0:.3}" x2="{x1:.3}" y2="{y1:.3}" stroke="crimson" stroke-width="0.8" stroke-dasharray="4 3"/>"#
        );
        let _ = writeln!(s, r#"<circle cx="{x0:.3}" cy="{y0:.3}" r="2.5" fill="black"/>"#);
    }
    s.push_str("</svg>\n");
    s
}
