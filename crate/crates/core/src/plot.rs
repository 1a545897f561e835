//! Minimal log-log SVG plot of norm histories.

use std::fmt::Write as _;

/// One named polyline.
pub struct Series<'a> {
    pub label: &'a str,
    pub times: &'a [f64],
    pub values: &'a [f64],
    pub color: &'a str,
}

/// Log-log plot; nonpositive samples are skipped.
pub fn loglog_svg(title: &str, series: &[Series<'_>]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 480.0;
    const M: f64 = 60.0;
    let pts: Vec<Vec<(f64, f64)>> = series
        .iter()
        .map(|s| {
            s.times
                .iter()
                .zip(s.values)
                .filter(|(&t, &v)| t > 0.0 && v > 0.0 && v.is_finite())
                .map(|(&t, &v)| (t.log10(), v.log10()))
                .collect()
        })
        .collect();
    let all = pts.iter().flatten();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 - x0 < 1e-9 {
        x1 = x0 + 1.0;
    }
    if y1 - y0 < 1e-9 {
        y1 = y0 + 1.0;
    }
    let sx = |x: f64| M + (x - x0) / (x1 - x0) * (W - 2.0 * M);
    let sy = |y: f64| H - M - (y - y0) / (y1 - y0) * (H - 2.0 * M);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-family="sans-serif" font-size="14">{title}</text>"#,
        W / 2.0
    );
    let _ = writeln!(s, r#"<path d="M{M} {M} V{} H{}" fill="none" stroke="black"/>"#, H - M, W - M);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12">log10 t  [{x0:.2}, {x1:.2}]</text>"#,
        W / 2.0,
        H - 20.0
    );
    for (k, (ser, p)) in series.iter().zip(&pts).enumerate() {
        if p.is_empty() {
            continue;
        }
        let mut d = String::new();
        for (i, &(x, y)) in p.iter().enumerate() {
            let _ = write!(d, "{}{:.2} {:.2} ", if i == 0 { "M" } else { "L" }, sx(x), sy(y));
        }
        let _ = writeln!(s, r#"<path d="{}" fill="none" stroke="{}" stroke-width="1.5"/>"#, d.trim_end(), ser.color);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" fill="{}">{}</text>"#,
            W - M - 150.0,
            M + 16.0 * (k as f64 + 1.0),
            ser.color,
            ser.label
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn skips_series_without_positive_samples() {
        let t = [1.0, 10.0, 100.0];
        let a = [1.0, 0.3, 0.1];
        let b = [0.0, 0.0, 0.0];
        let svg = loglog_svg(
            "decay",
            &[
                Series { label: "a", times: &t, values: &a, color: "black" },
                Series { label: "b", times: &t, values: &b, color: "red" },
            ],
        );
        assert_eq!(svg.matches("stroke-width=\"1.5\"").count(), 1);
        assert!(svg.ends_with("</svg>\n"));
    }
}
