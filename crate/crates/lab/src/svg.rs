//! Minimal deterministic SVG line charts.

use std::fmt::Write as _;
use std::path::Path;

use crate::config::Experiment;
use crate::error::{LabError, Result};
use crate::harness::{aggregate, TrialResult};

/// Plotted values below this are drawn at this level on log axes.
pub const LOG_FLOOR: f64 = 1e-16;

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    pub series: Vec<Series>,
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 200.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

struct Axis {
    log: bool,
    lo: f64,
    hi: f64,
}

impl Axis {
    fn new(values: impl Iterator<Item = f64>, log: bool) -> Self {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values {
            let v = if log { v.max(LOG_FLOOR).log10() } else { v };
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if log {
            lo = lo.floor();
            hi = hi.ceil();
        }
        if hi - lo < 1e-12 {
            hi = lo + 1.0;
        }
        Axis { log, lo, hi }
    }

    fn frac(&self, v: f64) -> f64 {
        let v = if self.log { v.max(LOG_FLOOR).log10() } else { v };
        (v - self.lo) / (self.hi - self.lo)
    }

    fn ticks(&self) -> Vec<(f64, String)> {
        if self.log {
            let (lo, hi) = (self.lo as i32, self.hi as i32);
            let step = ((hi - lo) / 8).max(1);
            (lo..=hi)
                .step_by(step as usize)
                .map(|e| (10f64.powi(e), format!("1e{e}")))
                .collect()
        } else {
            (0..=5)
                .map(|i| {
                    let v = self.lo + (self.hi - self.lo) * i as f64 / 5.0;
                    (v, format!("{:.3}", v))
                })
                .collect()
        }
    }
}

pub fn render(chart: &Chart) -> String {
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let all = || chart.series.iter().flat_map(|s| s.points.iter());
    let xa = Axis::new(all().map(|p| p.0), chart.log_x);
    let ya = Axis::new(all().map(|p| p.1), chart.log_y);
    let px = |x: f64| LEFT + xa.frac(x) * pw;
    let py = |y: f64| TOP + (1.0 - ya.frac(y)) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
        LEFT + pw / 2.0,
        escape(&chart.title)
    );
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for (v, label) in xa.ticks() {
        let x = px(v);
        let _ = writeln!(
            s,
            r##"<line x1="{x:.1}" y1="{:.1}" x2="{x:.1}" y2="{:.1}" stroke="#ddd"/><text x="{x:.1}" y="{:.1}" text-anchor="middle">{label}</text>"##,
            TOP,
            TOP + ph,
            TOP + ph + 16.0
        );
    }
    for (v, label) in ya.ticks() {
        let y = py(v);
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#ddd"/><text x="{:.1}" y="{:.1}" text-anchor="end">{label}</text>"##,
            LEFT + pw,
            LEFT - 6.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 15.0,
        escape(&chart.x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.1}" text-anchor="middle" transform="rotate(-90 18 {:.1})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(&chart.y_label)
    );
    for (i, series) in chart.series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<String> = series
            .points
            .iter()
            .map(|&(x, y)| format!("{:.1},{:.1}", px(x), py(y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            pts.join(" ")
        );
        for p in &pts {
            let (x, y) = p.split_once(',').unwrap();
            let _ = writeln!(s, r#"<circle cx="{x}" cy="{y}" r="2.5" fill="{color}"/>"#);
        }
        let ly = TOP + 10.0 + 18.0 * i as f64;
        let lx = LEFT + pw + 12.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/><text x="{:.1}" y="{:.1}">{}</text>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            escape(&series.label)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Mean sign-invariant recovery error per curve of an experiment.
pub fn chart_for(experiment: Experiment, results: &[TrialResult]) -> Chart {
    let mut series: Vec<Series> = Vec::new();
    for agg in aggregate(results) {
        let p = &agg.point;
        let (label, x) = match experiment {
            Experiment::Fig1a => (format!("{} b={}", p.algorithm.id(), p.b), p.t.unwrap_or(0.0)),
            Experiment::Fig1b => (format!("d={} S={} T={} b={}", p.d, p.s, p.total, p.b), p.n as f64),
            Experiment::Fig2a => (format!("d={} S={} T={}", p.d, p.s, p.total), p.b),
            _ => (format!("d={} S={} b={}", p.d, p.s, p.b), p.rho * p.rho),
        };
        match series.iter_mut().find(|s| s.label == label) {
            Some(s) => s.points.push((x, agg.dist_sign)),
            None => series.push(Series {
                label,
                points: vec![(x, agg.dist_sign)],
            }),
        }
    }
    let x_label = match experiment {
        Experiment::Fig1a => "t",
        Experiment::Fig1b => "N",
        Experiment::Fig2a => "b",
        _ => "rho^2",
    };
    Chart {
        title: format!("{experiment}: recovery error"),
        x_label: x_label.into(),
        y_label: "mean recovery error".into(),
        log_x: experiment == Experiment::Fig1b,
        log_y: true,
        series,
    }
}

pub fn emit_svg(experiment: Experiment, results: &[TrialResult], path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))?;
    }
    std::fs::write(path, render(&chart_for(experiment, results))).map_err(|e| LabError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chart() -> Chart {
        Chart {
            title: "a < b".into(),
            x_label: "N".into(),
            y_label: "err".into(),
            log_x: true,
            log_y: true,
            series: vec![Series {
                label: "d=8".into(),
                points: vec![(128.0, 0.1), (1024.0, 0.03), (16384.0, 0.0)],
            }],
        }
    }

    #[test]
    fn render_is_deterministic_and_escaped() {
        let a = render(&chart());
        assert_eq!(a, render(&chart()));
        assert!(a.starts_with("<svg") && a.ends_with("</svg>\n"));
        assert!(a.contains("a &lt; b"));
        assert_eq!(a.matches("<polyline").count(), 1);
        assert!(!a.contains("NaN") && !a.contains("inf"));
    }

    #[test]
    fn empty_chart_renders() {
        let mut c = chart();
        c.series.clear();
        assert!(render(&c).contains("</svg>"));
    }
}
