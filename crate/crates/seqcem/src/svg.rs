//! Minimal SVG rendering of the QQ, scatter and ratio panels.

use std::fmt::Write;

use seqcem_core::evaluation::{EvalReport, QqData, ScatterData};

const W: f64 = 420.0;
const H: f64 = 360.0;
const LEFT: f64 = 56.0;
const RIGHT: f64 = 16.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 46.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

struct Frame {
    x0: f64,
    y0: f64,
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn new(x0: f64, y0: f64, x: (f64, f64), y: (f64, f64)) -> Self {
        Self { x0, y0, x: widen(x), y: widen(y) }
    }

    fn px(&self, v: f64) -> f64 {
        self.x0 + LEFT + (v - self.x.0) / (self.x.1 - self.x.0) * (W - LEFT - RIGHT)
    }

    fn py(&self, v: f64) -> f64 {
        self.y0 + H - BOTTOM - (v - self.y.0) / (self.y.1 - self.y.0) * (H - TOP - BOTTOM)
    }

    fn axes(&self, out: &mut String, title: &str, xlabel: &str, ylabel: &str) {
        let (l, r) = (self.x0 + LEFT, self.x0 + W - RIGHT);
        let (t, b) = (self.y0 + TOP, self.y0 + H - BOTTOM);
        let _ = write!(
            out,
            r##"<rect x="{l:.1}" y="{t:.1}" width="{:.1}" height="{:.1}" fill="none" stroke="#444"/>"##,
            r - l,
            b - t
        );
        for j in 0..=4 {
            let vx = self.x.0 + (self.x.1 - self.x.0) * j as f64 / 4.0;
            let vy = self.y.0 + (self.y.1 - self.y.0) * j as f64 / 4.0;
            let (px, py) = (self.px(vx), self.py(vy));
            let _ = write!(
                out,
                r##"<line x1="{px:.1}" y1="{b:.1}" x2="{px:.1}" y2="{:.1}" stroke="#444"/><text x="{px:.1}" y="{:.1}" font-size="10" text-anchor="middle">{}</text>"##,
                b + 4.0,
                b + 15.0,
                tick(vx)
            );
            let _ = write!(
                out,
                r##"<line x1="{:.1}" y1="{py:.1}" x2="{l:.1}" y2="{py:.1}" stroke="#444"/><text x="{:.1}" y="{:.1}" font-size="10" text-anchor="end">{}</text>"##,
                l - 4.0,
                l - 6.0,
                py + 3.5,
                tick(vy)
            );
        }
        let _ = write!(
            out,
            r#"<text x="{:.1}" y="{:.1}" font-size="13" text-anchor="middle">{}</text>"#,
            (l + r) / 2.0,
            self.y0 + 18.0,
            escape(title)
        );
        let _ = write!(
            out,
            r#"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="middle">{}</text>"#,
            (l + r) / 2.0,
            b + 32.0,
            escape(xlabel)
        );
        let (yx, yy) = (self.x0 + 14.0, (t + b) / 2.0);
        let _ = write!(
            out,
            r#"<text x="{yx:.1}" y="{yy:.1}" font-size="11" text-anchor="middle" transform="rotate(-90 {yx:.1} {yy:.1})">{}</text>"#,
            escape(ylabel)
        );
    }

    fn hline(&self, out: &mut String, v: f64) {
        if v >= self.y.0 && v <= self.y.1 {
            let _ = write!(
                out,
                r##"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="#999" stroke-dasharray="4 3"/>"##,
                self.px(self.x.0),
                self.py(v),
                self.px(self.x.1),
                self.py(v)
            );
        }
    }
}

fn widen((lo, hi): (f64, f64)) -> (f64, f64) {
    if !(lo.is_finite() && hi.is_finite()) {
        (0.0, 1.0)
    } else if hi > lo {
        let pad = (hi - lo) * 0.04;
        (lo - pad, hi + pad)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

fn tick(v: f64) -> String {
    let s = format!("{v:.2}");
    if s == "-0.00" {
        "0.00".into()
    } else {
        s
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn extent(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

fn document(width: f64, height: f64, body: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\" font-family=\"sans-serif\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{body}\n</svg>\n"
    )
}

/// Quantile pairs with the identity line.
pub fn qq_panel(qq: &QqData, title: &str, xlabel: &str, ylabel: &str) -> String {
    let both = extent(qq.a.iter().chain(&qq.b).copied());
    let f = Frame::new(0.0, 0.0, both, both);
    let mut body = String::new();
    f.axes(&mut body, title, xlabel, ylabel);
    let _ = write!(
        body,
        r##"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="#999" stroke-dasharray="4 3"/>"##,
        f.px(f.x.0),
        f.py(f.x.0),
        f.px(f.x.1),
        f.py(f.x.1)
    );
    for (a, b) in qq.a.iter().zip(&qq.b) {
        let _ = write!(body, r#"<circle cx="{:.1}" cy="{:.1}" r="2.5" fill="{}"/>"#, f.px(*a), f.py(*b), PALETTE[0]);
    }
    document(W, H, &body)
}

/// One point per unit defined in both vectors.
pub fn scatter_panel(data: &ScatterData, title: &str, xlabel: &str, ylabel: &str) -> String {
    let f = Frame::new(
        0.0,
        0.0,
        extent(data.points.iter().map(|p| p.1)),
        extent(data.points.iter().map(|p| p.2)),
    );
    let mut body = String::new();
    f.axes(&mut body, title, xlabel, ylabel);
    f.hline(&mut body, 0.0);
    for (_, a, b) in &data.points {
        let _ = write!(
            body,
            r#"<circle cx="{:.1}" cy="{:.1}" r="1.8" fill="{}" fill-opacity="0.5"/>"#,
            f.px(*a),
            f.py(*b),
            PALETTE[0]
        );
    }
    document(W, H, &body)
}

/// Mean CEM/KNN ratio against the repair threshold, one line per injection
/// scenario, for each of the three rates side by side.
pub fn ratio_panels(report: &EvalReport) -> String {
    let mut body = String::new();
    let scenarios = &report.config.grid;
    for (p, metric) in ["cpr_ratio", "tpr_ratio", "fnr_ratio"].iter().enumerate() {
        let series: Vec<Vec<(f64, f64)>> = scenarios
            .iter()
            .map(|&(v1, v2)| {
                report
                    .summary
                    .iter()
                    .filter(|s| s.v1 == v1 && s.v2 == v2)
                    .filter_map(|s| s.metrics.get(*metric).and_then(|m| m.mean).map(|m| (s.q_d, m)))
                    .collect()
            })
            .collect();
        let xs = extent(report.config.thresholds.iter().copied());
        let ys = extent(series.iter().flatten().map(|p| p.1).chain([1.0]));
        let f = Frame::new(p as f64 * W, 0.0, xs, ys);
        f.axes(&mut body, &metric.replace("_ratio", " ratio (CEM / KNN)"), "q_D (%)", "mean ratio");
        f.hline(&mut body, 1.0);
        for (s, points) in series.iter().enumerate() {
            let colour = PALETTE[s % PALETTE.len()];
            let path: Vec<String> = points.iter().map(|(x, y)| format!("{:.1},{:.1}", f.px(*x), f.py(*y))).collect();
            let _ = write!(body, r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="1.5"/>"#, path.join(" "));
            for (x, y) in points {
                let _ = write!(body, r#"<circle cx="{:.1}" cy="{:.1}" r="2.5" fill="{colour}"/>"#, f.px(*x), f.py(*y));
            }
        }
    }
    for (s, (v1, v2)) in scenarios.iter().enumerate() {
        let x = 20.0 + s as f64 * 120.0;
        let colour = PALETTE[s % PALETTE.len()];
        let _ = write!(
            body,
            r#"<rect x="{x}" y="{}" width="10" height="10" fill="{colour}"/><text x="{}" y="{}" font-size="11">v1={v1}, v2={v2}</text>"#,
            H + 6.0,
            x + 14.0,
            H + 15.0
        );
    }
    document(3.0 * W, H + 24.0, &body)
}
