//! Histogram figures as plain SVG text.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 50.0;
const CURVE_POINTS: usize = 200;

/// A density drawn over the histogram.
pub struct Overlay<'a> {
    pub label: String,
    pub color: &'static str,
    pub density: Box<dyn Fn(f64) -> f64 + 'a>,
}

/// Density-scaled histogram of `samples` with `bins` equal-width bins.
pub fn histogram_svg(samples: &[f64], bins: usize, title: &str, overlays: &[Overlay<'_>]) -> String {
    let bins = bins.max(1);
    let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if samples.is_empty() {
        (0.0, 1.0)
    } else if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, hi + 0.5)
    };
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &x in samples {
        let k = (((x - lo) / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    let n = samples.len().max(1) as f64;
    let heights: Vec<f64> = counts.iter().map(|&c| c as f64 / (n * width)).collect();
    let curves: Vec<Vec<(f64, f64)>> = overlays
        .iter()
        .map(|o| {
            (0..=CURVE_POINTS)
                .map(|k| {
                    let x = lo + (hi - lo) * k as f64 / CURVE_POINTS as f64;
                    let y = (o.density)(x);
                    (x, if y.is_finite() { y.max(0.0) } else { 0.0 })
                })
                .collect()
        })
        .collect();
    let top = heights
        .iter()
        .copied()
        .chain(curves.iter().flatten().map(|p| p.1))
        .fold(0.0f64, f64::max)
        .max(1e-12)
        * 1.05;

    let plot_w = WIDTH - 2.0 * MARGIN;
    let plot_h = HEIGHT - 2.0 * MARGIN;
    let sx = |x: f64| MARGIN + (x - lo) / (hi - lo) * plot_w;
    let sy = |y: f64| HEIGHT - MARGIN - y / top * plot_h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="25" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    for (k, &h) in heights.iter().enumerate() {
        let x0 = sx(lo + k as f64 * width);
        let x1 = sx(lo + (k + 1) as f64 * width);
        let _ = writeln!(
            s,
            r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="#9bb7d4" stroke="#34577a" stroke-width="0.5"/>"##,
            x0,
            sy(h),
            x1 - x0,
            sy(0.0) - sy(h)
        );
    }
    for (o, pts) in overlays.iter().zip(&curves) {
        let mut d = String::new();
        for (k, &(x, y)) in pts.iter().enumerate() {
            let _ = write!(d, "{}{:.2},{:.2} ", if k == 0 { "M" } else { "L" }, sx(x), sy(y));
        }
        let _ = writeln!(
            s,
            r#"<path d="{}" fill="none" stroke="{}" stroke-width="2"/>"#,
            d.trim_end(),
            o.color
        );
    }
    // Axes with end labels.
    let _ = writeln!(
        s,
        r#"<line x1="{MARGIN}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black"/>"#,
        sy(0.0),
        WIDTH - MARGIN,
        sy(0.0)
    );
    let _ = writeln!(
        s,
        r#"<line x1="{MARGIN}" y1="{MARGIN}" x2="{MARGIN}" y2="{:.2}" stroke="black"/>"#,
        sy(0.0)
    );
    for (x, anchor) in [(lo, "start"), (hi, "end")] {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="{anchor}">{:.4}</text>"#,
            sx(x),
            sy(0.0) + 16.0,
            x
        );
    }
    for (k, o) in overlays.iter().enumerate() {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11" fill="{}" text-anchor="end">{}</text>"#,
            WIDTH - MARGIN,
            MARGIN + 14.0 * k as f64,
            o.color,
            escape(&o.label)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
