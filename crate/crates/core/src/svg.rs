//! Minimal static SVG charts. Output depends only on the inputs, so reruns
//! are byte-identical.

use std::fmt::Write;

use crate::clades::Dendrogram;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

pub fn color(i: usize) -> &'static str {
    PALETTE[i % PALETTE.len()]
}

pub fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn open(w: f64, h: f64, title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="20" text-anchor="middle" font-size="15">{}</text>"#,
        w / 2.0,
        escape(title)
    );
    s
}

/// Horizontal bars, one row per item, in the given order. `label` formats
/// the value printed at the end of each bar.
pub fn horizontal_bars(title: &str, bars: &[(String, f64)], label: impl Fn(f64) -> String) -> String {
    let (left, right, row, top) = (280.0, 90.0, 24.0, 36.0);
    let plot_w = 420.0;
    let w = left + plot_w + right;
    let h = top + row * bars.len() as f64 + 16.0;
    let lo = bars.iter().map(|b| b.1).fold(0.0, f64::min);
    let hi = bars.iter().map(|b| b.1).fold(0.0, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let x = |v: f64| left + (v - lo) / span * plot_w;
    let mut s = open(w, h, title);
    for (i, (name, v)) in bars.iter().enumerate() {
        let y = top + row * i as f64;
        let (a, b) = (x(0.0).min(x(*v)), x(0.0).max(x(*v)));
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            left - 6.0,
            y + row * 0.65,
            escape(name)
        );
        let _ = writeln!(
            s,
            r#"<rect x="{a:.2}" y="{:.1}" width="{:.2}" height="{:.1}" fill="{}"/>"#,
            y + 3.0,
            b - a,
            row - 6.0,
            color(0)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.1}">{}</text>"#,
            b + 4.0,
            y + row * 0.65,
            escape(&label(*v))
        );
    }
    let _ = writeln!(
        s,
        r##"<line x1="{0:.2}" y1="{1:.1}" x2="{0:.2}" y2="{2:.1}" stroke="#333"/>"##,
        x(0.0),
        top,
        h - 16.0
    );
    s.push_str("</svg>\n");
    s
}

/// Line chart over shared x labels, one polyline per series.
pub fn line_chart(title: &str, x_labels: &[String], series: &[(String, Vec<f64>)]) -> String {
    let (left, right, top, bottom) = (60.0, 180.0, 36.0, 60.0);
    let (plot_w, plot_h) = (640.0, 300.0);
    let w = left + plot_w + right;
    let h = top + plot_h + bottom;
    let hi = series
        .iter()
        .flat_map(|s| s.1.iter().copied())
        .fold(0.0, f64::max)
        .max(1.0);
    let n = x_labels.len().max(1);
    let x = |i: usize| left + if n > 1 { plot_w * i as f64 / (n - 1) as f64 } else { plot_w / 2.0 };
    let y = |v: f64| top + plot_h - v / hi * plot_h;
    let mut s = open(w, h, title);
    let _ = writeln!(
        s,
        r##"<path d="M{left:.1},{top:.1} V{:.1} H{:.1}" fill="none" stroke="#333"/>"##,
        top + plot_h,
        left + plot_w
    );
    let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{hi}</text>"#, left - 6.0, top + 4.0);
    let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">0</text>"#, left - 6.0, top + plot_h);
    let step = n.div_ceil(8);
    for (i, l) in x_labels.iter().enumerate().step_by(step) {
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end" transform="rotate(-40 {:.1} {:.1})">{}</text>"#,
            x(i),
            top + plot_h + 14.0,
            x(i),
            top + plot_h + 14.0,
            escape(l)
        );
    }
    for (k, (name, values)) in series.iter().enumerate() {
        let pts: Vec<String> = values
            .iter()
            .enumerate()
            .map(|(i, v)| format!("{:.2},{:.2}", x(i), y(*v)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.5"/>"#,
            pts.join(" "),
            color(k)
        );
        let ly = top + 16.0 * k as f64;
        let _ = writeln!(
            s,
            r#"<rect x="{:.1}" y="{:.1}" width="10" height="10" fill="{}"/><text x="{:.1}" y="{:.1}">{}</text>"#,
            left + plot_w + 12.0,
            ly,
            color(k),
            left + plot_w + 26.0,
            ly + 9.0,
            escape(name)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Dendrogram with leaves along the bottom. Links inside one clade take the
/// clade's color; links joining clades are gray.
pub fn dendrogram(title: &str, d: &Dendrogram, leaf_names: &[String], clade_of_leaf: &[usize], cut: Option<f64>) -> String {
    let n = d.n_leaves();
    let (left, top, bottom) = (60.0, 36.0, 160.0);
    let slot = 28.0f64;
    let plot_h = 320.0;
    let w = left + slot * n as f64 + 20.0;
    let h = top + plot_h + bottom;
    let hi = d.max_distance().max(f64::MIN_POSITIVE);
    let y = |dist: f64| top + plot_h - dist / hi * plot_h;

    // leaf order from a left-first walk of the tree
    let root = n + d.merges.len() - 1;
    let mut order = Vec::with_capacity(n);
    let mut stack = vec![root];
    while let Some(x) = stack.pop() {
        if x < n {
            order.push(x);
        } else {
            let m = &d.merges[x - n];
            stack.push(m.right);
            stack.push(m.left);
        }
    }
    let mut xpos = vec![0.0; n + d.merges.len()];
    let mut clade = vec![None; n + d.merges.len()];
    for (slot_i, &leaf) in order.iter().enumerate() {
        xpos[leaf] = left + slot * (slot_i as f64 + 0.5);
        clade[leaf] = clade_of_leaf.get(leaf).copied();
    }
    let mut height = vec![0.0; n + d.merges.len()];

    let mut s = open(w, h, title);
    for (k, m) in d.merges.iter().enumerate() {
        let node = n + k;
        xpos[node] = (xpos[m.left] + xpos[m.right]) / 2.0;
        height[node] = m.distance;
        clade[node] = match (clade[m.left], clade[m.right]) {
            (Some(a), Some(b)) if a == b => Some(a),
            _ => None,
        };
        let stroke = clade[node].map_or("#999999", color);
        let _ = writeln!(
            s,
            r#"<path d="M{:.2},{:.2} V{:.2} H{:.2} V{:.2}" fill="none" stroke="{stroke}" stroke-width="1.5"/>"#,
            xpos[m.left],
            y(height[m.left]),
            y(m.distance),
            xpos[m.right],
            y(height[m.right])
        );
    }
    for &leaf in &order {
        let name = leaf_names.get(leaf).map_or_else(|| leaf.to_string(), |s| s.clone());
        let (lx, ly) = (xpos[leaf], top + plot_h + 10.0);
        let _ = writeln!(
            s,
            r#"<text x="{lx:.2}" y="{ly:.1}" text-anchor="end" transform="rotate(-60 {lx:.2} {ly:.1})">{}</text>"#,
            escape(&name)
        );
    }
    if let Some(t) = cut.filter(|t| *t <= hi) {
        let _ = writeln!(
            s,
            r##"<line x1="{left:.1}" y1="{0:.2}" x2="{1:.1}" y2="{0:.2}" stroke="#d62728" stroke-dasharray="4 3"/>"##,
            y(t),
            w - 20.0
        );
    }
    s.push_str("</svg>\n");
    s
}
