//! Two-panel line plot: filter transmittance and Vora-Value per iteration.

use std::fmt::Write;

const WIDTH: f64 = 880.0;
const HEIGHT: f64 = 340.0;
const PANEL_W: f64 = 380.0;
const PANEL_H: f64 = 250.0;
const TOP: f64 = 40.0;

struct Panel<'a> {
    left: f64,
    title: &'a str,
    x_label: &'a str,
    xs: &'a [f64],
    ys: &'a [f64],
}

fn range(v: &[f64]) -> (f64, f64) {
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-300 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

fn draw(out: &mut String, p: &Panel<'_>) {
    let (x0, x1) = range(p.xs);
    let (y0, y1) = range(p.ys);
    let px = |x: f64| p.left + (x - x0) / (x1 - x0) * PANEL_W;
    let py = |y: f64| TOP + PANEL_H - (y - y0) / (y1 - y0) * PANEL_H;

    let _ = writeln!(
        out,
        r##"<rect x="{:.1}" y="{TOP:.1}" width="{PANEL_W:.1}" height="{PANEL_H:.1}" fill="none" stroke="#888"/>"##,
        p.left
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" font-size="14" text-anchor="middle">{}</text>"#,
        p.left + PANEL_W / 2.0,
        TOP - 12.0,
        p.title
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle">{}</text>"#,
        p.left + PANEL_W / 2.0,
        TOP + PANEL_H + 32.0,
        p.x_label
    );
    for (value, anchor_y) in [(y1, TOP + 4.0), (y0, TOP + PANEL_H)] {
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" font-size="10" text-anchor="end">{}</text>"#,
            p.left - 4.0,
            anchor_y,
            format_tick(value)
        );
    }
    for (value, anchor_x) in [(x0, p.left), (x1, p.left + PANEL_W)] {
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" font-size="10" text-anchor="middle">{}</text>"#,
            anchor_x,
            TOP + PANEL_H + 14.0,
            format_tick(value)
        );
    }
    let points: Vec<String> =
        p.xs.iter()
            .zip(p.ys)
            .map(|(&x, &y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
    let _ = writeln!(
        out,
        r##"<polyline fill="none" stroke="#1f5fa8" stroke-width="1.5" points="{}"/>"##,
        points.join(" ")
    );
}

fn format_tick(v: f64) -> String {
    if v.abs() >= 1e-3 && v.abs() < 1e4 || v == 0.0 {
        format!("{v:.6}")
            .trim_end_matches('0')
            .trim_end_matches('.')
            .to_string()
    } else {
        format!("{v:.3e}")
    }
}

pub fn render(wavelengths: &[f64], filter: &[f64], vora_per_iter: &[f64]) -> String {
    let iters: Vec<f64> = (0..vora_per_iter.len()).map(|i| i as f64).collect();
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    draw(
        &mut out,
        &Panel {
            left: 60.0,
            title: "filter transmittance",
            x_label: "wavelength (nm)",
            xs: wavelengths,
            ys: filter,
        },
    );
    draw(
        &mut out,
        &Panel {
            left: 480.0,
            title: "Vora-Value",
            x_label: "iteration",
            xs: &iters,
            ys: vora_per_iter,
        },
    );
    out.push_str("</svg>\n");
    out
}
