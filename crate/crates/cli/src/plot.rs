//! Minimal SVG bar charts.

use std::fmt::Write;

pub struct Bar {
    pub label: String,
    pub value: f64,
    pub error: f64,
}

pub struct Reference {
    pub value: f64,
    pub label: String,
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 16.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 96.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Bar chart with error bars and an optional dashed reference line. The y
/// axis spans zero and every bar.
pub fn bar_chart(
    title: &str,
    y_label: &str,
    bars: &[Bar],
    reference: Option<&Reference>,
) -> String {
    let top = bars
        .iter()
        .map(|b| b.value + b.error)
        .chain(reference.map(|r| r.value))
        .fold(0.0_f64, f64::max);
    let bottom = bars
        .iter()
        .map(|b| b.value - b.error)
        .fold(0.0_f64, f64::min);
    let y_max = if top > 0.0 { top * 1.15 } else { 1.0 };
    let y_min = bottom * 1.15;
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let y = |v: f64| TOP + plot_h * (y_max - v) / (y_max - y_min);
    let slot = plot_w / bars.len().max(1) as f64;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(
        s,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{}" transform="rotate(-90 14 {})" text-anchor="middle">{}</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0,
        escape(y_label)
    );
    for i in 0..=4 {
        let v = y_min + (y_max - y_min) * i as f64 / 4.0;
        let yy = y(v);
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT}" y1="{yy:.2}" x2="{}" y2="{yy:.2}" stroke="#ddd"/><text x="{}" y="{:.2}" text-anchor="end">{v:.3}</text>"##,
            WIDTH - RIGHT,
            LEFT - 4.0,
            yy + 4.0
        );
    }
    for (i, b) in bars.iter().enumerate() {
        let x0 = LEFT + slot * i as f64;
        let bw = slot * 0.7;
        let bx = x0 + (slot - bw) / 2.0;
        let cx = x0 + slot / 2.0;
        let _ = writeln!(
            s,
            r##"<rect x="{bx:.2}" y="{:.2}" width="{bw:.2}" height="{:.2}" fill="#4a78b0"/>"##,
            y(b.value).min(y(0.0)),
            (y(0.0) - y(b.value)).abs()
        );
        if b.error > 0.0 {
            let (lo, hi) = (y(b.value - b.error), y(b.value + b.error));
            let _ = writeln!(
                s,
                r#"<line x1="{cx:.2}" y1="{lo:.2}" x2="{cx:.2}" y2="{hi:.2}" stroke="black"/>"#
            );
        }
        let ly = HEIGHT - BOTTOM + 10.0;
        let _ = writeln!(
            s,
            r#"<text x="{cx:.2}" y="{ly:.2}" transform="rotate(60 {cx:.2} {ly:.2})">{}</text>"#,
            escape(&b.label)
        );
    }
    if let Some(r) = reference {
        let ry = y(r.value);
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT}" y1="{ry:.2}" x2="{}" y2="{ry:.2}" stroke="#c03030" stroke-dasharray="6 4"/><text x="{}" y="{:.2}" text-anchor="end" fill="#c03030">{}</text>"##,
            WIDTH - RIGHT,
            WIDTH - RIGHT,
            ry - 4.0,
            escape(&r.label)
        );
    }
    let _ = writeln!(
        s,
        r#"<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{}" stroke="black"/><line x1="{LEFT}" y1="{:.2}" x2="{}" y2="{:.2}" stroke="black"/>"#,
        TOP + plot_h,
        y(0.0),
        WIDTH - RIGHT,
        y(0.0)
    );
    s.push_str("</svg>\n");
    s
}
