//! Minimal log-log line/marker charts written as plain SVG text.

use std::fmt::Write;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 600.0;
const LEFT: f64 = 90.0;
const RIGHT: f64 = 30.0;
const TOP: f64 = 50.0;
const BOTTOM: f64 = 70.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Style {
    Line,
    Markers,
}

#[derive(Clone, Debug)]
pub struct Series {
    pub name: String,
    pub color: &'static str,
    pub style: Style,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn new(name: &str, color: &'static str, style: Style, points: Vec<(f64, f64)>) -> Self {
        Self {
            name: name.to_string(),
            color,
            style,
            points,
        }
    }
}

#[derive(Clone, Debug)]
pub struct LogLogPlot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

fn usable(p: &(f64, f64)) -> bool {
    p.0 > 0.0 && p.1 > 0.0 && p.0.is_finite() && p.1.is_finite()
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Decade range `[10^a, 10^b]` enclosing the values, at least one decade wide.
fn decades<I: Iterator<Item = f64>>(values: I) -> (i32, i32) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values {
        lo = lo.min(v.log10());
        hi = hi.max(v.log10());
    }
    if !lo.is_finite() {
        return (0, 1);
    }
    // tolerate rounding just past a decade
    let a = (lo + 1e-9).floor() as i32;
    let mut b = (hi - 1e-9).ceil() as i32;
    if b <= a {
        b = a + 1;
    }
    (a, b)
}

impl LogLogPlot {
    pub fn render(&self) -> String {
        let pts = || self.series.iter().flat_map(|s| s.points.iter().filter(|p| usable(p)));
        let (xa, xb) = decades(pts().map(|p| p.0));
        let (ya, yb) = decades(pts().map(|p| p.1));
        let pw = WIDTH - LEFT - RIGHT;
        let ph = HEIGHT - TOP - BOTTOM;
        let sx = |x: f64| LEFT + (x.log10() - xa as f64) / (xb - xa) as f64 * pw;
        let sy = |y: f64| TOP + ph - (y.log10() - ya as f64) / (yb - ya) as f64 * ph;

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="800" height="600" viewBox="0 0 800 600" font-family="sans-serif" font-size="13">"#
        );
        let _ = writeln!(s, r#"<rect x="0" y="0" width="800" height="600" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="400" y="28" text-anchor="middle" font-size="16">{}</text>"#,
            escape(&self.title)
        );
        for k in xa..=xb {
            let x = LEFT + (k - xa) as f64 / (xb - xa) as f64 * pw;
            let _ = writeln!(
                s,
                r##"<line x1="{x:.2}" y1="{TOP:.2}" x2="{x:.2}" y2="{:.2}" stroke="#dddddd"/>"##,
                TOP + ph
            );
            let _ = writeln!(
                s,
                r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">1e{k}</text>"#,
                TOP + ph + 20.0
            );
        }
        for k in ya..=yb {
            let y = TOP + ph - (k - ya) as f64 / (yb - ya) as f64 * ph;
            let _ = writeln!(
                s,
                r##"<line x1="{LEFT:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#dddddd"/>"##,
                LEFT + pw
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="end">1e{k}</text>"#,
                LEFT - 8.0,
                y + 4.0
            );
        }
        let _ = writeln!(
            s,
            r#"<rect x="{LEFT:.2}" y="{TOP:.2}" width="{pw:.2}" height="{ph:.2}" fill="none" stroke="black"/>"#
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            LEFT + pw / 2.0,
            HEIGHT - 20.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="20" y="{:.2}" text-anchor="middle" transform="rotate(-90 20 {:.2})">{}</text>"#,
            TOP + ph / 2.0,
            TOP + ph / 2.0,
            escape(&self.y_label)
        );

        for (i, series) in self.series.iter().enumerate() {
            let p: Vec<(f64, f64)> = series.points.iter().copied().filter(usable).collect();
            match series.style {
                Style::Line if p.len() >= 2 => {
                    let path: Vec<String> = p.iter().map(|(x, y)| format!("{:.2},{:.2}", sx(*x), sy(*y))).collect();
                    let _ = writeln!(
                        s,
                        r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="2"/>"#,
                        path.join(" "),
                        series.color
                    );
                }
                Style::Line => {}
                Style::Markers => {
                    for (x, y) in &p {
                        let _ = writeln!(
                            s,
                            r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="{}"/>"#,
                            sx(*x),
                            sy(*y),
                            series.color
                        );
                    }
                }
            }
            let ly = TOP + 18.0 + 18.0 * i as f64;
            let lx = LEFT + 14.0;
            match series.style {
                Style::Line => {
                    let _ = writeln!(
                        s,
                        r#"<line x1="{lx:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{}" stroke-width="2"/>"#,
                        ly - 4.0,
                        lx + 20.0,
                        ly - 4.0,
                        series.color
                    );
                }
                Style::Markers => {
                    let _ = writeln!(
                        s,
                        r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="{}"/>"#,
                        lx + 10.0,
                        ly - 4.0,
                        series.color
                    );
                }
            }
            let _ = writeln!(s, r#"<text x="{:.2}" y="{ly:.2}">{}</text>"#, lx + 28.0, escape(&series.name));
        }
        s.push_str("</svg>\n");
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decade_bounds() {
        assert_eq!(decades([0.5, 20.0].into_iter()), (-1, 2));
        assert_eq!(decades([1.0, 10.0].into_iter()), (0, 1));
        assert_eq!(decades([3.0].into_iter()), (0, 1));
    }

    #[test]
    fn renders_fixed_canvas() {
        let p = LogLogPlot {
            title: "t".into(),
            x_label: "x".into(),
            y_label: "y".into(),
            series: vec![
                Series::new("line", "black", Style::Line, vec![(1.0, 1.0), (100.0, 0.01)]),
                Series::new("pts", "red", Style::Markers, vec![(10.0, 0.1), (0.0, 1.0)]),
            ],
        };
        let s = p.render();
        assert!(s.contains(r#"viewBox="0 0 800 600""#));
        assert_eq!(s.matches("<circle").count(), 2);
        assert!(s.contains(">1e-2<") && s.contains(">1e2<"));
    }
}
