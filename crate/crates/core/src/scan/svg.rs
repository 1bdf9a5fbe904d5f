//! Region map rendering: one rectangle per cell, legend, ticks.

use std::fmt::Write;

use super::spec::ScanSpec;
use super::{AxisGrid, RegionCell};
use crate::classifier::VerdictKind;

const PLOT_X: f64 = 80.0;
const PLOT_Y: f64 = 50.0;
const PLOT_W: f64 = 480.0;
const PLOT_H_2D: f64 = 480.0;
const PLOT_H_1D: f64 = 60.0;
const LEGEND_X: f64 = 590.0;
const WIDTH: f64 = 760.0;

fn color(kind: VerdictKind) -> &'static str {
    match kind {
        VerdictKind::Nonexistence => "#d7301f",
        VerdictKind::Existence => "#2b8cbe",
        VerdictKind::Undetermined => "#bdbdbd",
    }
}

/// Cell edges: midpoints between neighbors, half a spacing beyond the ends.
fn edges(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut e = Vec::with_capacity(n + 1);
    e.push(values[0] - 0.5 * (values[1] - values[0]));
    for w in values.windows(2) {
        e.push(0.5 * (w[0] + w[1]));
    }
    e.push(values[n - 1] + 0.5 * (values[n - 1] - values[n - 2]));
    e
}

fn num(x: f64) -> String {
    let s = format!("{x:.2}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

fn px(x: f64) -> String {
    format!("{x:.3}")
}

struct Scale {
    lo: f64,
    hi: f64,
    start: f64,
    len: f64,
    flip: bool,
}

impl Scale {
    fn map(&self, v: f64) -> f64 {
        let t = (v - self.lo) / (self.hi - self.lo);
        if self.flip {
            self.start + self.len * (1.0 - t)
        } else {
            self.start + self.len * t
        }
    }
}

pub(super) fn render(spec: &ScanSpec, axes: &[AxisGrid], cells: &[RegionCell]) -> String {
    let two_d = axes.len() == 2;
    let plot_h = if two_d { PLOT_H_2D } else { PLOT_H_1D };
    let height = PLOT_Y + plot_h + 70.0;
    let xv = axes[0].as_f64();
    let xe = edges(&xv);
    let xs = Scale {
        lo: xe[0],
        hi: xe[xe.len() - 1],
        start: PLOT_X,
        len: PLOT_W,
        flip: false,
    };
    let (ye, ys) = if two_d {
        let yv = axes[1].as_f64();
        let ye = edges(&yv);
        let ys = Scale {
            lo: ye[0],
            hi: ye[ye.len() - 1],
            start: PLOT_Y,
            len: plot_h,
            flip: true,
        };
        (ye, Some(ys))
    } else {
        (Vec::new(), None)
    };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}" font-family="sans-serif" font-size="12">"#,
        WIDTH, height, WIDTH, height
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" font-size="14">{}</text>"#,
        PLOT_X,
        escape(&title(spec))
    );

    let _ = writeln!(s, r#"<g shape-rendering="crispEdges">"#);
    let ny = if two_d { axes[1].values.len() } else { 1 };
    for (idx, c) in cells.iter().enumerate() {
        let (i, j) = (idx / ny, idx % ny);
        let x0 = xs.map(xe[i]);
        let x1 = xs.map(xe[i + 1]);
        let (y0, y1) = match &ys {
            Some(ys) => (ys.map(ye[j + 1]), ys.map(ye[j])),
            None => (PLOT_Y, PLOT_Y + plot_h),
        };
        let _ = writeln!(
            s,
            r#"<rect x="{}" y="{}" width="{}" height="{}" fill="{}"/>"#,
            px(x0),
            px(y0),
            px(x1 - x0),
            px(y1 - y0),
            color(c.verdict.kind)
        );
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(
        s,
        r#"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        PLOT_X, PLOT_Y, PLOT_W, plot_h
    );

    // ticks at five evenly spaced values of the requested range
    let ax0 = &spec.axes[0];
    let (lo, hi) = (ax0.min.to_f64(), ax0.max.to_f64());
    for k in 0..5 {
        let v = lo + (hi - lo) * k as f64 / 4.0;
        let x = xs.map(v);
        let y = PLOT_Y + plot_h;
        let _ = writeln!(
            s,
            r#"<line x1="{x}" y1="{y}" x2="{x}" y2="{}" stroke="black"/><text x="{x}" y="{}" text-anchor="middle">{}</text>"#,
            px(y + 5.0),
            px(y + 19.0),
            num(v),
            x = px(x),
            y = px(y)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="14">{}</text>"#,
        px(PLOT_X + PLOT_W / 2.0),
        px(PLOT_Y + plot_h + 42.0),
        axes[0].param.symbol()
    );
    if let Some(ys) = &ys {
        let ax1 = &spec.axes[1];
        let (lo, hi) = (ax1.min.to_f64(), ax1.max.to_f64());
        for k in 0..5 {
            let v = lo + (hi - lo) * k as f64 / 4.0;
            let y = ys.map(v);
            let _ = writeln!(
                s,
                r#"<line x1="{}" y1="{y}" x2="{}" y2="{y}" stroke="black"/><text x="{}" y="{}" text-anchor="end">{}</text>"#,
                px(PLOT_X - 5.0),
                px(PLOT_X),
                px(PLOT_X - 8.0),
                px(y + 4.0),
                num(v),
                y = px(y)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle" font-size="14">{}</text>"#,
            px(PLOT_X - 50.0),
            px(PLOT_Y + plot_h / 2.0),
            axes[1].param.symbol()
        );
    }

    for (k, kind) in [
        VerdictKind::Nonexistence,
        VerdictKind::Existence,
        VerdictKind::Undetermined,
    ]
    .into_iter()
    .enumerate()
    {
        let y = PLOT_Y + 22.0 * k as f64;
        let _ = writeln!(
            s,
            r#"<rect x="{}" y="{}" width="14" height="14" fill="{}" stroke="black"/><text x="{}" y="{}">{}</text>"#,
            LEGEND_X,
            px(y),
            color(kind),
            LEGEND_X + 20.0,
            px(y + 11.0),
            kind
        );
    }
    s.push_str("</svg>\n");
    s
}

fn title(spec: &ScanSpec) -> String {
    let f = &spec.fixed;
    let mut t = format!("α = {}, β = {}, N = {}", f.alpha, f.beta, f.dimension);
    for (name, v) in [("λ", &f.lambda), ("μ", &f.mu), ("ν", &f.nu), ("ξ", &f.xi)] {
        if let Some(v) = v {
            let _ = write!(t, ", {name} = {v}");
        }
    }
    t
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
