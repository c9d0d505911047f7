//! Output formats: geometry CSV, exponent JSON and a small log-log SVG.
//! Ratio series CSV lives with the series types.

use crate::geometry::GeometryReport;
use crate::ratio::ExponentEstimate;
use serde_json::json;
use std::fmt::Write;

pub const GEOMETRY_CSV_HEADER: &str = "label,delta,volume,covering_count";

pub fn geometry_csv(reports: &[GeometryReport]) -> String {
    let mut out = String::from(GEOMETRY_CSV_HEADER);
    out.push('\n');
    for r in reports {
        let _ = writeln!(out, "{},{:e},{:e},{}", r.label, r.delta, r.volume, r.covering_count);
    }
    out
}

/// `{kappa, kappa_min, window, residual}`; window is the [first, last] R used.
pub fn exponent_json(e: &ExponentEstimate, ladder: &[f64]) -> serde_json::Value {
    let window = if ladder.len() >= e.window[1] && e.window[1] > e.window[0] {
        json!([ladder[e.window[0]], ladder[e.window[1] - 1]])
    } else {
        json!(e.window)
    };
    json!({
        "kappa": e.kappa,
        "kappa_min": e.kappa_min,
        "window": window,
        "residual": e.residual,
    })
}

/// One curve on a log-log plot.
#[derive(Debug, Clone)]
pub struct Curve {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub dashed: bool,
}

const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Log-log SVG of positive data; nonpositive or non-finite points are dropped.
pub fn loglog_svg(title: &str, xlabel: &str, ylabel: &str, curves: &[Curve]) -> String {
    let (w, h, ml, mr, mt, mb) = (640.0, 420.0, 70.0, 160.0, 40.0, 50.0);
    let pts: Vec<(f64, f64)> = curves
        .iter()
        .flat_map(|c| c.points.iter().cloned())
        .filter(|(x, y)| *x > 0.0 && *y > 0.0 && x.is_finite() && y.is_finite())
        .collect();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for (x, y) in &pts {
        x0 = x0.min(x.log10());
        x1 = x1.max(x.log10());
        y0 = y0.min(y.log10());
        y1 = y1.max(y.log10());
    }
    if pts.is_empty() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    // whole decades around the data
    let (x0, x1) = (x0.floor(), x1.ceil().max(x0.floor() + 1.0));
    let (y0, y1) = (y0.floor(), y1.ceil().max(y0.floor() + 1.0));
    let pw = w - ml - mr;
    let ph = h - mt - mb;
    let sx = |x: f64| ml + (x.log10() - x0) / (x1 - x0) * pw;
    let sy = |y: f64| mt + (y1 - y.log10()) / (y1 - y0) * ph;
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, ml + pw / 2.0, escape(title));
    let _ = writeln!(s, r##"<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>"##);
    for e in (x0 as i32)..=(x1 as i32) {
        let x = sx(10f64.powi(e));
        let _ = writeln!(s, r##"<line x1="{x:.2}" y1="{mt}" x2="{x:.2}" y2="{}" stroke="#ddd"/>"##, mt + ph);
        let _ = writeln!(s, r#"<text x="{x:.2}" y="{}" text-anchor="middle">1e{e}</text>"#, mt + ph + 16.0);
    }
    for e in (y0 as i32)..=(y1 as i32) {
        let y = sy(10f64.powi(e));
        let _ = writeln!(s, r##"<line x1="{ml}" y1="{y:.2}" x2="{}" y2="{y:.2}" stroke="#ddd"/>"##, ml + pw);
        let _ = writeln!(s, r#"<text x="{}" y="{:.2}" text-anchor="end">1e{e}</text>"#, ml - 6.0, y + 4.0);
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, ml + pw / 2.0, h - 10.0, escape(xlabel));
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        mt + ph / 2.0,
        mt + ph / 2.0,
        escape(ylabel)
    );
    for (i, c) in curves.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let path: Vec<String> = c
            .points
            .iter()
            .filter(|(x, y)| *x > 0.0 && *y > 0.0 && x.is_finite() && y.is_finite())
            .map(|(x, y)| format!("{:.2},{:.2}", sx(*x), sy(*y)))
            .collect();
        let dash = if c.dashed { r#" stroke-dasharray="5,4""# } else { "" };
        let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>"#, path.join(" "));
        if !c.dashed {
            for p in &path {
                let (x, y) = p.split_once(',').unwrap_or(("0", "0"));
                let _ = writeln!(s, r#"<circle cx="{x}" cy="{y}" r="2.5" fill="{color}"/>"#);
            }
        }
        let ly = mt + 14.0 + 18.0 * i as f64;
        let _ = writeln!(s, r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"{dash}/>"#, w - mr + 10.0, w - mr + 30.0);
        let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, w - mr + 36.0, ly + 4.0, escape(&c.label));
    }
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometry_csv_rows() {
        let r = GeometryReport { label: "segment".into(), delta: 0.01, volume: 0.0203, covering_count: 51 };
        let csv = geometry_csv(&[r]);
        assert_eq!(csv, "label,delta,volume,covering_count\nsegment,1e-2,2.03e-2,51\n");
    }

    #[test]
    fn exponent_json_keys() {
        let e = ExponentEstimate { kappa: 0.5, kappa_min: 0.4, window: [2, 6], residual: 0.01, ladder_size: 6 };
        let v = exponent_json(&e, &[1.0, 2.0, 4.0, 8.0, 16.0, 32.0]);
        let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
        assert_eq!(keys.len(), 4);
        assert_eq!(v["window"], json!([4.0, 32.0]));
    }

    #[test]
    fn svg_is_well_formed() {
        let c = Curve { label: "a<b".into(), points: vec![(16.0, 1.0), (32.0, 0.7), (64.0, -1.0)], dashed: false };
        let s = loglog_svg("FR", "R", "FR", &[c]);
        assert!(s.starts_with("<svg") && s.trim_end().ends_with("</svg>"));
        assert!(s.contains("a&lt;b"));
        assert_eq!(s.matches("<circle").count(), 2);
        assert!(loglog_svg("empty", "x", "y", &[]).contains("</svg>"));
    }
}
