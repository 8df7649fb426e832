//! SVG figures for polygons and scars.

use std::collections::VecDeque;
use std::fmt::Write;

use paperfold::geometry::Point;
use paperfold::scalar::Scalar;
use paperfold::scar::ScarGraph;

const SIZE: f64 = 480.0;
const MARGIN: f64 = 40.0;
const PALETTE: [&str; 6] = ["#1b6ca8", "#c0392b", "#27ae60", "#8e44ad", "#d35400", "#16a085"];

fn header(out: &mut String, w: f64, h: f64) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
}

/// One polygon, optionally with a label per side and coloured boundary
/// segments `(start point, end point, colour index)`.
pub fn polygon<S: Scalar>(vertices: &[Point<S>], labels: Option<&[String]>, segments: &[(Point<f64>, Point<f64>, usize)]) -> String {
    let vs: Vec<Point<f64>> = vertices.iter().map(|v| v.to_f64()).collect();
    let (mut x0, mut y0, mut x1, mut y1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for v in &vs {
        x0 = x0.min(v.x);
        y0 = y0.min(v.y);
        x1 = x1.max(v.x);
        y1 = y1.max(v.y);
    }
    let span = (x1 - x0).max(y1 - y0).max(1e-300);
    let k = (SIZE - 2.0 * MARGIN) / span;
    let map = |p: Point<f64>| (MARGIN + (p.x - x0) * k, SIZE - MARGIN - (p.y - y0) * k);
    let mut out = String::new();
    header(&mut out, SIZE, SIZE);
    let pts: Vec<String> = vs
        .iter()
        .map(|&v| {
            let (x, y) = map(v);
            format!("{x:.3},{y:.3}")
        })
        .collect();
    let _ = writeln!(out, r##"<polygon points="{}" fill="#f4f1e8" stroke="#333" stroke-width="1"/>"##, pts.join(" "));
    for (a, b, c) in segments {
        let (ax, ay) = map(*a);
        let (bx, by) = map(*b);
        let col = PALETTE[c % PALETTE.len()];
        let _ = writeln!(out, r#"<line x1="{ax:.3}" y1="{ay:.3}" x2="{bx:.3}" y2="{by:.3}" stroke="{col}" stroke-width="3"/>"#);
    }
    if let Some(labels) = labels {
        let n = vs.len();
        for (i, label) in labels.iter().enumerate().take(n) {
            let (ax, ay) = map(vs[i]);
            let (bx, by) = map(vs[(i + 1) % n]);
            let (mx, my) = ((ax + bx) / 2.0, (ay + by) / 2.0);
            // push the label outward: the polygon is counterclockwise, so outward is to the right in screen space
            let (dx, dy) = (bx - ax, by - ay);
            let len = (dx * dx + dy * dy).sqrt().max(1e-9);
            let (ox, oy) = (-dy / len * 12.0, dx / len * 12.0);
            let _ = writeln!(
                out,
                r#"<text x="{:.3}" y="{:.3}" font-family="sans-serif" font-size="11" text-anchor="middle" dominant-baseline="middle">{label}</text>"#,
                mx - ox,
                my - oy
            );
        }
    }
    out.push_str("</svg>\n");
    out
}

/// Layered drawing of a scar: breadth-first layers from the lowest-numbered
/// vertex of each connected piece, vertices ordered by id within a layer.
pub fn scar<S: Scalar>(g: &ScarGraph<S>) -> String {
    let n = g.vertices.len();
    let mut adj = vec![Vec::new(); n];
    for e in &g.edges {
        adj[e.u].push(e.v);
        adj[e.v].push(e.u);
    }
    for a in &mut adj {
        a.sort_unstable();
        a.dedup();
    }
    let mut layer = vec![usize::MAX; n];
    let mut base = 0;
    for root in 0..n {
        if layer[root] != usize::MAX {
            continue;
        }
        layer[root] = base;
        let mut q = VecDeque::from([root]);
        let mut deepest = base;
        while let Some(v) = q.pop_front() {
            for &w in &adj[v] {
                if layer[w] == usize::MAX {
                    layer[w] = layer[v] + 1;
                    deepest = deepest.max(layer[w]);
                    q.push_back(w);
                }
            }
        }
        base = deepest + 1;
    }
    let depth = layer.iter().copied().max().map_or(1, |d| d + 1);
    let mut rows: Vec<Vec<usize>> = vec![Vec::new(); depth];
    for v in 0..n {
        rows[layer[v]].push(v);
    }
    let width = rows.iter().map(|r| r.len()).max().unwrap_or(1);
    let w = 2.0 * MARGIN + 70.0 * (depth.max(2) - 1) as f64;
    let h = 2.0 * MARGIN + 50.0 * (width.max(2) - 1) as f64;
    let mut pos = vec![(0.0, 0.0); n];
    for (d, row) in rows.iter().enumerate() {
        for (i, &v) in row.iter().enumerate() {
            let y = MARGIN + (h - 2.0 * MARGIN) * (i as f64 + 0.5) / row.len() as f64;
            pos[v] = (MARGIN + 70.0 * d as f64, y);
        }
    }
    let mut out = String::new();
    header(&mut out, w, h);
    for (i, e) in g.edges.iter().enumerate() {
        let (ax, ay) = pos[e.u];
        let (bx, by) = pos[e.v];
        let _ = writeln!(
            out,
            r##"<line x1="{ax:.3}" y1="{ay:.3}" x2="{bx:.3}" y2="{by:.3}" stroke="#333" stroke-width="1.5"><title>edge {i}: length {}</title></line>"##,
            e.length.emit()
        );
    }
    for (si, s) in g.stars.iter().enumerate() {
        let (cx, cy) = pos[s.center];
        let col = PALETTE[si % PALETTE.len()];
        for f in 0..8 {
            let len = s.kind.fold_length_f64(f);
            let total = s.kind.fold_length_f64(0).max(1e-300);
            let r = 30.0 * len / total;
            let ang = std::f64::consts::PI * (0.25 + 0.06 * f as f64 + si as f64);
            let (ex, ey) = (cx + r * ang.cos(), cy - r * ang.sin());
            let _ = writeln!(out, r#"<line x1="{cx:.3}" y1="{cy:.3}" x2="{ex:.3}" y2="{ey:.3}" stroke="{col}" stroke-width="1"/>"#);
        }
    }
    for (v, &(x, y)) in pos.iter().enumerate() {
        let _ = writeln!(out, r##"<circle cx="{x:.3}" cy="{y:.3}" r="3.5" fill="#1b6ca8"><title>vertex {v}</title></circle>"##);
        let _ = writeln!(
            out,
            r#"<text x="{:.3}" y="{:.3}" font-family="sans-serif" font-size="10">{v}</text>"#,
            x + 5.0,
            y - 5.0
        );
    }
    out.push_str("</svg>\n");
    out
}
