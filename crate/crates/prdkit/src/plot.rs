//! Minimal SVG rendering of PR curves in the unit square.

use std::fmt::Write;

use prdkit_core::PrCurve;

const SIZE: f64 = 400.0;
const MARGIN: f64 = 50.0;
const COLORS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"];

fn x(beta: f64) -> f64 {
    MARGIN + beta.clamp(0.0, 1.0) * SIZE
}

fn y(alpha: f64) -> f64 {
    MARGIN + (1.0 - alpha.clamp(0.0, 1.0)) * SIZE
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Curves drawn as polylines over `(recall=β, precision=α)` with a legend.
pub fn render_svg(curves: &[(String, PrCurve)], title: &str) -> String {
    let w = SIZE + 2.0 * MARGIN + 140.0;
    let h = SIZE + 2.0 * MARGIN;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#
    );
    let _ =
        writeln!(s, r#"<rect x="{MARGIN}" y="{MARGIN}" width="{SIZE}" height="{SIZE}" fill="none" stroke="black"/>"#);
    for t in 0..=4 {
        let v = t as f64 / 4.0;
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{v}</text>"#, x(v), MARGIN + SIZE + 16.0);
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{v}</text>"#, MARGIN - 6.0, y(v) + 4.0);
    }
    let _ =
        writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">recall β</text>"#, MARGIN + SIZE / 2.0, h - 8.0);
    let _ = writeln!(
        s,
        r#"<text x="14" y="{:.1}" text-anchor="middle" transform="rotate(-90 14 {:.1})">precision α</text>"#,
        MARGIN + SIZE / 2.0,
        MARGIN + SIZE / 2.0
    );
    let _ = writeln!(s, r#"<text x="{:.1}" y="24" text-anchor="middle">{}</text>"#, MARGIN + SIZE / 2.0, escape(title));
    for (i, (name, c)) in curves.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<String> = c.points.iter().map(|p| format!("{:.2},{:.2}", x(p.beta), y(p.alpha))).collect();
        let _ =
            writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, pts.join(" "));
        let ly = MARGIN + 10.0 + 18.0 * i as f64;
        let lx = MARGIN + SIZE + 14.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#,
            lx + 20.0
        );
        let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, lx + 26.0, ly + 4.0, escape(name));
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use prdkit_core::make_lambda_grid;

    #[test]
    fn svg_has_one_polyline_per_curve() {
        let c = PrCurve::identical_distributions(&make_lambda_grid(11).unwrap());
        let svg = render_svg(&[("a<b".into(), c.clone()), ("gt".into(), c)], "t");
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("a&lt;b") && svg.ends_with("</svg>\n"));
    }
}
