//! Minimal self-contained SVG renderings of the diagnostics.

use std::fmt::Write;

use idi_core::balance::BalanceRow;

const WIDTH: f64 = 640.0;
const MARGIN: f64 = 60.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn header(out: &mut String, height: f64, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
}

/// Absolute SMDs before (open circles) and after (filled) adjustment, with
/// the balance threshold as a dashed line.
pub fn love_plot(rows: &[BalanceRow], threshold: f64) -> String {
    let row_h = 28.0;
    let height = 2.0 * MARGIN + row_h * rows.len().max(1) as f64;
    let finite = |v: f64| if v.is_finite() { v.abs() } else { 0.0 };
    let x_max = rows
        .iter()
        .flat_map(|r| [finite(r.smd_before), finite(r.smd_after)])
        .fold(threshold * 1.5, f64::max);
    let left = MARGIN + 80.0;
    let plot_w = WIDTH - left - MARGIN;
    let sx = |v: f64| left + plot_w * (if v.is_finite() { v.abs() } else { x_max } / x_max).min(1.0);

    let mut out = String::new();
    header(&mut out, height, "Covariate balance (|SMD|)");
    let bottom = height - MARGIN;
    let _ = writeln!(out, r#"<line x1="{left}" y1="{bottom}" x2="{}" y2="{bottom}" stroke="black"/>"#, left + plot_w);
    for k in 0..=4 {
        let v = x_max * k as f64 / 4.0;
        let x = sx(v);
        let _ = writeln!(out, r#"<text x="{x:.1}" y="{:.1}" text-anchor="middle">{v:.2}</text>"#, bottom + 18.0);
    }
    let tx = sx(threshold);
    let _ = writeln!(
        out,
        r#"<line x1="{tx:.1}" y1="{MARGIN}" x2="{tx:.1}" y2="{bottom}" stroke="grey" stroke-dasharray="4 3"/>"#
    );
    for (k, r) in rows.iter().enumerate() {
        let y = MARGIN + row_h * (k as f64 + 0.5);
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            left - 8.0,
            y + 4.0,
            escape(&r.covariate)
        );
        let _ = writeln!(out, r#"<circle cx="{:.1}" cy="{y:.1}" r="5" fill="none" stroke="firebrick"/>"#, sx(r.smd_before));
        let _ = writeln!(out, r#"<circle cx="{:.1}" cy="{y:.1}" r="5" fill="steelblue"/>"#, sx(r.smd_after));
    }
    out.push_str("</svg>\n");
    out
}

/// Model quantiles of the truncated index-time law against observed ones.
pub fn qq_plot(points: &[(f64, f64)]) -> String {
    let height = WIDTH;
    let hi = points
        .iter()
        .flat_map(|&(a, b)| [a, b])
        .filter(|v| v.is_finite())
        .fold(0.0, f64::max)
        .max(1e-9);
    let side = WIDTH - 2.0 * MARGIN;
    let sx = |v: f64| MARGIN + side * v / hi;
    let sy = |v: f64| height - MARGIN - side * v / hi;

    let mut out = String::new();
    header(&mut out, height, "Q-Q plot of index times");
    let _ = writeln!(
        out,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{side}" height="{side}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        out,
        r#"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="grey" stroke-dasharray="4 3"/>"#,
        sx(0.0),
        sy(0.0),
        sx(hi),
        sy(hi)
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">estimated truncated quantile</text>"#,
        WIDTH / 2.0,
        height - 20.0
    );
    let _ = writeln!(
        out,
        r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">observed index time</text>"#,
        height / 2.0,
        height / 2.0
    );
    for &(m, o) in points.iter().filter(|(a, b)| a.is_finite() && b.is_finite()) {
        let _ = writeln!(out, r#"<circle cx="{:.1}" cy="{:.1}" r="2.5" fill="steelblue"/>"#, sx(m), sy(o));
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_well_formed_documents() {
        let rows = vec![BalanceRow {
            covariate: "a<b".into(),
            smd_before: 0.4,
            smd_after: f64::INFINITY,
        }];
        let svg = love_plot(&rows, 0.1);
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert!(svg.contains("a&lt;b") && !svg.contains("NaN") && !svg.contains("inf"));
        let svg = qq_plot(&[(0.1, 0.2), (1.0, 0.9)]);
        assert_eq!(svg.matches("<circle").count(), 2);
    }
}
