//! Minimal log-log SVG plots: axes, decade ticks, one polyline per series and
//! an optional dashed guide line of prescribed slope.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 60.0;
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

pub struct Series<'a> {
    pub label: &'a str,
    pub points: &'a [(f64, f64)],
}

/// Line `y = y0 (x / x0)^slope` drawn across the plotted x range.
pub struct Guide {
    pub slope: f64,
    pub anchor: (f64, f64),
    pub label: String,
}

struct Frame {
    lx: (f64, f64),
    ly: (f64, f64),
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        MARGIN + (x.log10() - self.lx.0) / (self.lx.1 - self.lx.0) * (WIDTH - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN - (y.log10() - self.ly.0) / (self.ly.1 - self.ly.0) * (HEIGHT - 2.0 * MARGIN)
    }
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if hi - lo < 1e-9 {
        (lo - 0.5, hi + 0.5)
    } else {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    }
}

pub fn loglog(title: &str, xlabel: &str, ylabel: &str, series: &[Series], guide: Option<&Guide>) -> String {
    let usable = |&(x, y): &(f64, f64)| x > 0.0 && y > 0.0 && x.is_finite() && y.is_finite();
    let pts: Vec<(f64, f64)> = series.iter().flat_map(|s| s.points.iter().copied()).filter(usable).collect();
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#, WIDTH / 2.0, escape(title));
    if pts.is_empty() {
        let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">no positive data</text>"#, WIDTH / 2.0, HEIGHT / 2.0);
        svg.push_str("</svg>\n");
        return svg;
    }
    let bounds = |f: fn(&(f64, f64)) -> f64| {
        pts.iter().map(f).map(f64::log10).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)))
    };
    let (x0, x1) = bounds(|p| p.0);
    let (y0, y1) = bounds(|p| p.1);
    let frame = Frame {
        lx: padded(x0, x1),
        ly: padded(y0, y1),
    };

    let (left, right, top, bottom) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
    let _ = writeln!(
        svg,
        r#"<path d="M{left} {top} L{left} {bottom} L{right} {bottom}" fill="none" stroke="black"/>"#
    );
    for d in frame.lx.0.ceil() as i32..=frame.lx.1.floor() as i32 {
        let x = frame.px(10f64.powi(d));
        let _ = writeln!(
            svg,
            r#"<line x1="{x:.1}" y1="{bottom}" x2="{x:.1}" y2="{:.1}" stroke="black"/><text x="{x:.1}" y="{:.1}" text-anchor="middle">1e{d}</text>"#,
            bottom + 5.0,
            bottom + 18.0
        );
    }
    for d in frame.ly.0.ceil() as i32..=frame.ly.1.floor() as i32 {
        let y = frame.py(10f64.powi(d));
        let _ = writeln!(
            svg,
            r#"<line x1="{:.1}" y1="{y:.1}" x2="{left}" y2="{y:.1}" stroke="black"/><text x="{:.1}" y="{:.1}" text-anchor="end">1e{d}</text>"#,
            left - 5.0,
            left - 8.0,
            y + 4.0
        );
    }
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, WIDTH / 2.0, HEIGHT - 15.0, escape(xlabel));
    let _ = writeln!(
        svg,
        r#"<text x="15" y="{}" text-anchor="middle" transform="rotate(-90 15 {})">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(ylabel)
    );

    let mut legend_y = top + 10.0;
    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let path: Vec<String> = s
            .points
            .iter()
            .filter(|p| usable(p))
            .map(|&(x, y)| format!("{:.2},{:.2}", frame.px(x), frame.py(y)))
            .collect();
        let _ = writeln!(svg, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, path.join(" "));
        legend(&mut svg, right, legend_y, color, false, s.label);
        legend_y += 16.0;
    }
    if let Some(g) = guide {
        let xa = 10f64.powf(frame.lx.0);
        let xb = 10f64.powf(frame.lx.1);
        let at = |x: f64| g.anchor.1 * (x / g.anchor.0).powf(g.slope);
        // clip to the vertical range so the path stays inside the frame
        let (ya, yb) = (at(xa), at(xb));
        if ya > 0.0 && yb > 0.0 && ya.is_finite() && yb.is_finite() {
            let _ = writeln!(
                svg,
                r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="gray" stroke-dasharray="6,4"/>"#,
                frame.px(xa),
                frame.py(ya).clamp(0.0, HEIGHT),
                frame.px(xb),
                frame.py(yb).clamp(0.0, HEIGHT)
            );
        }
        legend(&mut svg, right, legend_y, "gray", true, &g.label);
    }
    svg.push_str("</svg>\n");
    svg
}

fn legend(svg: &mut String, right: f64, y: f64, color: &str, dashed: bool, label: &str) {
    let dash = if dashed { r#" stroke-dasharray="6,4""# } else { "" };
    let _ = writeln!(
        svg,
        r#"<line x1="{:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="{color}"{dash}/><text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
        right - 30.0,
        right,
        right - 35.0,
        y + 4.0,
        escape(label)
    );
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn emits_polyline_and_guide() {
        let pts: Vec<(f64, f64)> = (1..=10).map(|k| (k as f64, (k as f64).powf(-0.5))).collect();
        let g = Guide {
            slope: -0.5,
            anchor: pts[0],
            label: "slope -0.5".into(),
        };
        let svg = loglog("decay", "t", "norm", &[Series { label: "u", points: &pts }], Some(&g));
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert!(svg.contains("stroke-dasharray"));
    }

    #[test]
    fn tolerates_empty_and_nonpositive_data() {
        let svg = loglog("x", "t", "y", &[Series { label: "z", points: &[(1.0, 0.0)] }], None);
        assert!(svg.contains("no positive data"));
    }
}
