//! Static SVG log-log plot of a rate sweep.

use std::fmt::Write as _;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 64.0;

pub struct RatePlot<'a> {
    pub title: &'a str,
    /// Individual `(N, W2)` runs.
    pub runs: &'a [(f64, f64)],
    /// Per-N means.
    pub means: &'a [(f64, f64)],
    pub slope: f64,
    pub intercept: f64,
}

fn decade_ticks(lo: f64, hi: f64) -> Vec<f64> {
    (lo.floor() as i32..=hi.ceil() as i32).map(f64::from).collect()
}

fn fmt_num(v: f64) -> String {
    format!("{v:.4}")
}

impl RatePlot<'_> {
    pub fn to_svg(&self) -> String {
        let lx: Vec<f64> = self.runs.iter().chain(self.means).map(|p| p.0.log10()).collect();
        let ly: Vec<f64> = self.runs.iter().chain(self.means).map(|p| p.1.log10()).collect();
        let (x0, x1) = bounds(&lx);
        let (y0, y1) = bounds(&ly);
        let px = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
        let py = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            WIDTH - 2.0 * MARGIN,
            HEIGHT - 2.0 * MARGIN
        );
        for t in decade_ticks(x0, x1).into_iter().filter(|t| (x0..=x1).contains(t)) {
            let x = fmt_num(px(t));
            let _ = writeln!(
                s,
                r##"<line x1="{x}" y1="{}" x2="{x}" y2="{}" stroke="#ddd"/><text x="{x}" y="{}" text-anchor="middle">1e{t}</text>"##,
                MARGIN,
                HEIGHT - MARGIN,
                HEIGHT - MARGIN + 18.0
            );
        }
        for t in decade_ticks(y0, y1).into_iter().filter(|t| (y0..=y1).contains(t)) {
            let y = fmt_num(py(t));
            let _ = writeln!(
                s,
                r##"<line x1="{}" y1="{y}" x2="{}" y2="{y}" stroke="#ddd"/><text x="{}" y="{y}" text-anchor="end" dominant-baseline="middle">1e{t}</text>"##,
                MARGIN,
                WIDTH - MARGIN,
                MARGIN - 6.0
            );
        }
        for &(n, w) in self.runs {
            let _ = writeln!(
                s,
                r##"<circle cx="{}" cy="{}" r="2" fill="#9ab"/>"##,
                fmt_num(px(n.log10())),
                fmt_num(py(w.log10()))
            );
        }
        for &(n, w) in self.means {
            let _ = writeln!(
                s,
                r##"<circle cx="{}" cy="{}" r="4" fill="#1f4e9c"/>"##,
                fmt_num(px(n.log10())),
                fmt_num(py(w.log10()))
            );
        }
        let fit = |x: f64| self.slope * x + self.intercept;
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="red" stroke-width="2"/>"#,
            fmt_num(px(x0)),
            fmt_num(py(fit(x0))),
            fmt_num(px(x1)),
            fmt_num(py(fit(x1)))
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" fill="red">log10 W2 = {:.4} log10 N {} {:.4}</text>"#,
            MARGIN + 8.0,
            MARGIN + 18.0,
            self.slope,
            if self.intercept < 0.0 { '-' } else { '+' },
            self.intercept.abs()
        );
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, WIDTH / 2.0, MARGIN - 20.0, escape(self.title));
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">N</text>"#, WIDTH / 2.0, HEIGHT - 16.0);
        let _ = writeln!(
            s,
            r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">validation W2</text>"#,
            HEIGHT / 2.0,
            HEIGHT / 2.0
        );
        s.push_str("</svg>\n");
        s
    }
}

/// Data range padded by 5% on each side, never degenerate.
fn bounds(v: &[f64]) -> (f64, f64) {
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let pad = ((hi - lo) * 0.05).max(0.05);
    (lo - pad, hi + pad)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn svg_contains_points_and_fit() {
        let runs = [(100.0, 0.1), (1000.0, 0.03), (10_000.0, 0.01)];
        let svg = RatePlot { title: "1d <desk>", runs: &runs, means: &runs, slope: -0.5, intercept: 0.0 }.to_svg();
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<circle").count(), 6);
        assert!(svg.contains("stroke=\"red\""));
        assert!(svg.contains("-0.5000"));
        assert!(svg.contains("1d &lt;desk&gt;"));
    }
}
