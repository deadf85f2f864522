// SPDX-License-Identifier: MIT OR Apache-2.0

//! Minimal hand-written SVG charts. Output is deterministic text.

use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 420.0;
const M: f64 = 56.0;

fn esc(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn open(out: &mut String, w: f64, h: f64, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(out, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
        w / 2.0,
        esc(title)
    );
}

/// Diverging blue–white–red for values in `[-1, 1]`.
fn diverging(v: f64) -> String {
    let v = v.clamp(-1.0, 1.0);
    let (r, g, b) = if v >= 0.0 {
        (255.0, 255.0 * (1.0 - v), 255.0 * (1.0 - v))
    } else {
        (255.0 * (1.0 + v), 255.0 * (1.0 + v), 255.0)
    };
    format!(
        "rgb({},{},{})",
        r.round() as u8,
        g.round() as u8,
        b.round() as u8
    )
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

struct Axes {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Axes {
    fn fit(points: impl Iterator<Item = (f64, f64)>) -> Self {
        let mut a = Self {
            x0: f64::INFINITY,
            x1: f64::NEG_INFINITY,
            y0: f64::INFINITY,
            y1: f64::NEG_INFINITY,
        };
        for (x, y) in points.filter(|(x, y)| x.is_finite() && y.is_finite()) {
            a.x0 = a.x0.min(x);
            a.x1 = a.x1.max(x);
            a.y0 = a.y0.min(y);
            a.y1 = a.y1.max(y);
        }
        if !a.x0.is_finite() {
            (a.x0, a.x1, a.y0, a.y1) = (0.0, 1.0, 0.0, 1.0);
        }
        if a.x1 - a.x0 < 1e-12 {
            a.x0 -= 0.5;
            a.x1 += 0.5;
        }
        if a.y1 - a.y0 < 1e-12 {
            a.y0 -= 0.5;
            a.y1 += 0.5;
        }
        a
    }

    fn px(&self, x: f64) -> f64 {
        M + (x - self.x0) / (self.x1 - self.x0) * (W - 2.0 * M)
    }

    fn py(&self, y: f64) -> f64 {
        H - M - (y - self.y0) / (self.y1 - self.y0) * (H - 2.0 * M)
    }

    fn draw(&self, out: &mut String, x_label: &str, y_label: &str) {
        let _ = writeln!(
            out,
            r#"<rect x="{M}" y="{M}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            W - 2.0 * M,
            H - 2.0 * M
        );
        for i in 0..=4 {
            let f = f64::from(i) / 4.0;
            let x = self.x0 + f * (self.x1 - self.x0);
            let y = self.y0 + f * (self.y1 - self.y0);
            let _ = writeln!(
                out,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
                self.px(x),
                H - M + 16.0,
                tick(x)
            );
            let _ = writeln!(
                out,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
                M - 6.0,
                self.py(y) + 4.0,
                tick(y)
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            W / 2.0,
            H - 14.0,
            esc(x_label)
        );
        let _ = writeln!(
            out,
            r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
            H / 2.0,
            H / 2.0,
            esc(y_label)
        );
    }
}

fn tick(v: f64) -> String {
    if v.abs() >= 100.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

/// Cosine heatmap with row/column labels.
pub fn heatmap(title: &str, labels: &[String], values: &[Vec<f64>]) -> String {
    let n = labels.len().max(1);
    let cell = (560.0 / n as f64).clamp(4.0, 40.0);
    let left = 110.0;
    let top = 40.0;
    let side = cell * n as f64;
    let mut out = String::new();
    open(&mut out, left + side + 20.0, top + side + 20.0, title);
    for (i, row) in values.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            let _ = writeln!(
                out,
                r#"<rect x="{:.2}" y="{:.2}" width="{cell:.2}" height="{cell:.2}" fill="{}"><title>{} / {}: {v:.4}</title></rect>"#,
                left + j as f64 * cell,
                top + i as f64 * cell,
                diverging(v),
                esc(&labels[i]),
                esc(&labels[j])
            );
        }
        if cell >= 8.0 {
            let _ = writeln!(
                out,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="end" font-size="{:.0}">{}</text>"#,
                left - 4.0,
                top + (i as f64 + 0.7) * cell,
                (cell * 0.7).min(11.0),
                esc(&labels[i])
            );
        }
    }
    out.push_str("</svg>\n");
    out
}

/// One polyline per named series.
pub fn line_chart(
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[(String, Vec<(f64, f64)>)],
) -> String {
    let axes = Axes::fit(series.iter().flat_map(|(_, p)| p.iter().copied()));
    let mut out = String::new();
    open(&mut out, W, H, title);
    axes.draw(&mut out, x_label, y_label);
    for (k, (name, pts)) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let path: Vec<String> = pts
            .iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", axes.px(x), axes.py(y)))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            path.join(" ")
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" fill="{color}">{}</text>"#,
            W - M - 120.0,
            M + 14.0 + 14.0 * k as f64,
            esc(name)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Scatter plot; `groups[i]` selects the color of point `i`.
pub fn scatter(
    title: &str,
    x_label: &str,
    y_label: &str,
    points: &[(f64, f64)],
    groups: &[usize],
) -> String {
    let axes = Axes::fit(points.iter().copied());
    let mut out = String::new();
    open(&mut out, W, H, title);
    axes.draw(&mut out, x_label, y_label);
    for (i, &(x, y)) in points.iter().enumerate() {
        if !(x.is_finite() && y.is_finite()) {
            continue;
        }
        let g = groups.get(i).copied().unwrap_or(0);
        let _ = writeln!(
            out,
            r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{}" fill-opacity="0.7"/>"#,
            axes.px(x),
            axes.py(y),
            PALETTE[g % PALETTE.len()]
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Scatter with an explicit fill per point (e.g. hue colors).
pub fn scatter_colored(
    title: &str,
    x_label: &str,
    y_label: &str,
    points: &[(f64, f64)],
    fills: &[String],
) -> String {
    let axes = Axes::fit(points.iter().copied());
    let mut out = String::new();
    open(&mut out, W, H, title);
    axes.draw(&mut out, x_label, y_label);
    for ((x, y), fill) in points.iter().zip(fills) {
        let _ = writeln!(
            out,
            r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="{}"/>"#,
            axes.px(*x),
            axes.py(*y),
            esc(fill)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Jittered strip plot of several value groups.
pub fn strip(title: &str, y_label: &str, groups: &[(String, Vec<f64>)]) -> String {
    let n = groups.len().max(1) as f64;
    let axes = Axes::fit(
        groups
            .iter()
            .enumerate()
            .flat_map(|(k, (_, v))| v.iter().map(move |&y| (k as f64, y)))
            .chain([(-0.5, 0.0), (n - 0.5, 0.0)]),
    );
    let mut out = String::new();
    open(&mut out, W, H, title);
    axes.draw(&mut out, "", y_label);
    for (k, (name, vals)) in groups.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        for (i, &y) in vals.iter().enumerate() {
            // deterministic jitter
            let j = ((i as f64 * 0.618_033_988_7).fract() - 0.5) * 0.5;
            let _ = writeln!(
                out,
                r#"<circle cx="{:.2}" cy="{:.2}" r="2" fill="{color}" fill-opacity="0.5"/>"#,
                axes.px(k as f64 + j),
                axes.py(y)
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{}" text-anchor="middle" fill="{color}">{}</text>"#,
            axes.px(k as f64),
            M - 6.0,
            esc(name)
        );
    }
    out.push_str("</svg>\n");
    out
}
