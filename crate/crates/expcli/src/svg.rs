//! Minimal SVG output for the experiment plots.

use std::fmt::Write;

use crate::stats::AggregateRow;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 56.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f", "#bcbd22",
];
pub const HIGHLIGHT: &str = "#d62728";

/// Linear map of a data range onto the plot area.
struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn new(x: (f64, f64), y: (f64, f64)) -> Self {
        let widen = |(lo, hi): (f64, f64)| if hi > lo { (lo, hi) } else { (lo - 0.5, hi + 0.5) };
        Frame { x: widen(x), y: widen(y) }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - 2.0 * MARGIN)
    }
}

fn extent(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

fn open(title: &str) -> String {
    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, WIDTH / 2.0, escape(title)).unwrap();
    s
}

fn axes(s: &mut String, f: &Frame, x_label: &str, y_label: &str) {
    let (x0, x1) = (MARGIN, WIDTH - MARGIN);
    let (y0, y1) = (HEIGHT - MARGIN, MARGIN);
    writeln!(s, r#"<g stroke="black" fill="none"><line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}"/><line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}"/></g>"#).unwrap();
    for k in 0..=4 {
        let fx = f.x.0 + (f.x.1 - f.x.0) * k as f64 / 4.0;
        let fy = f.y.0 + (f.y.1 - f.y.0) * k as f64 / 4.0;
        writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, f.px(fx), y0 + 16.0, tick(fx)).unwrap();
        writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#, x0 - 6.0, f.py(fy) + 4.0, tick(fy)).unwrap();
    }
    writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, WIDTH / 2.0, HEIGHT - 12.0, escape(x_label)).unwrap();
    writeln!(
        s,
        r#"<text x="16" y="{0}" text-anchor="middle" transform="rotate(-90 16 {0})">{1}</text>"#,
        HEIGHT / 2.0,
        escape(y_label)
    )
    .unwrap();
}

fn tick(v: f64) -> String {
    if v.abs() >= 100.0 || v == v.round() {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn close(mut s: String) -> String {
    s.push_str("</svg>\n");
    s
}

/// Scatter of reward vectors; highlighted points carry `class="front"`.
pub fn scatter(points: &[(f64, f64, bool)], title: &str, x_label: &str, y_label: &str) -> String {
    let f = Frame::new(extent(points.iter().map(|p| p.0)), extent(points.iter().map(|p| p.1)));
    let mut s = open(title);
    axes(&mut s, &f, x_label, y_label);
    // Front markers last so they are drawn on top.
    for highlighted in [false, true] {
        for &(x, y, _) in points.iter().filter(|p| p.2 == highlighted) {
            let (class, fill, r) = if highlighted {
                ("front", HIGHLIGHT, 2.5)
            } else {
                ("other", "#9a9a9a", 1.5)
            };
            writeln!(s, r#"<circle class="{class}" cx="{:.2}" cy="{:.2}" r="{r}" fill="{fill}"/>"#, f.px(x), f.py(y)).unwrap();
        }
    }
    close(s)
}

/// One polyline per named series.
pub fn line_plot(series: &[(String, Vec<(f64, f64)>)], title: &str, x_label: &str, y_label: &str) -> String {
    let all = || series.iter().flat_map(|(_, pts)| pts.iter());
    let f = Frame::new(extent(all().map(|p| p.0)), extent(all().map(|p| p.1)));
    let mut s = open(title);
    axes(&mut s, &f, x_label, y_label);
    for (k, (name, pts)) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let coords: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", f.px(x), f.py(y))).collect();
        writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, coords.join(" ")).unwrap();
        let ly = MARGIN + 14.0 * k as f64;
        writeln!(
            s,
            r#"<text x="{:.1}" y="{ly:.1}" fill="{color}">{}</text>"#,
            WIDTH - MARGIN - 80.0,
            escape(name)
        )
        .unwrap();
    }
    close(s)
}

/// Box plot grouped by episode bucket, one box per task position.
pub fn box_plot(rows: &[AggregateRow], title: &str) -> String {
    let mut positions: Vec<&str> = Vec::new();
    for r in rows {
        if !positions.contains(&r.task_position.as_str()) {
            positions.push(&r.task_position);
        }
    }
    let buckets = rows.iter().map(|r| r.episode_bucket).max().map_or(0, |b| b + 1);
    let y = extent(rows.iter().flat_map(|r| [r.whisker_low, r.whisker_high]));
    let f = Frame::new((0.0, buckets as f64), y);
    let mut s = open(title);
    axes(&mut s, &f, "episode bucket", "scalarized reward");
    let slot = (f.px(1.0) - f.px(0.0)) / (positions.len() as f64 + 1.0);
    for r in rows {
        let k = positions.iter().position(|p| *p == r.task_position).unwrap_or(0);
        let color = if r.task_position == crate::stats::BASELINE_POSITION {
            HIGHLIGHT
        } else {
            PALETTE[k % PALETTE.len()]
        };
        let cx = f.px(r.episode_bucket as f64) + slot * (k as f64 + 1.0);
        let w = slot * 0.7;
        writeln!(
            s,
            r#"<g class="box" stroke="{color}"><line x1="{cx:.2}" y1="{:.2}" x2="{cx:.2}" y2="{:.2}"/><rect x="{:.2}" y="{:.2}" width="{w:.2}" height="{:.2}" fill="none"/><line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke-width="2"/></g>"#,
            f.py(r.whisker_low),
            f.py(r.whisker_high),
            cx - w / 2.0,
            f.py(r.q3),
            (f.py(r.q1) - f.py(r.q3)).max(0.5),
            cx - w / 2.0,
            f.py(r.median),
            cx + w / 2.0,
            f.py(r.median),
        )
        .unwrap();
    }
    for (k, p) in positions.iter().enumerate() {
        let color = if *p == crate::stats::BASELINE_POSITION { HIGHLIGHT } else { PALETTE[k % PALETTE.len()] };
        writeln!(s, r#"<text x="{:.1}" y="{:.1}" fill="{color}">{}</text>"#, WIDTH - MARGIN - 60.0, MARGIN + 14.0 * k as f64, escape(p)).unwrap();
    }
    close(s)
}
