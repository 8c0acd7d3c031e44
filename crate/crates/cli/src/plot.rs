//! Self-contained SVG line and scatter plots.

use std::fmt::Write;

use tensor_denoise_core::{ExperimentRecord, PowerLawFit};

use crate::error::{CliError, Result};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 200.0;
const TOP: f64 = 44.0;
const BOTTOM: f64 = 56.0;
const PALETTE: &[&str] = &[
    "#1f77b4", "#d62728", "#2ca02c", "#e6b800", "#9467bd", "#8c564b",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Style {
    Line,
    Markers,
    LineMarkers,
}

#[derive(Debug, Clone)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    pub style: Style,
}

#[derive(Debug, Clone)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub x_log: bool,
    pub y_log: bool,
    pub series: Vec<Series>,
}

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>, log: bool) -> Axis {
        let vals: Vec<f64> = values
            .filter(|v| v.is_finite() && (!log || *v > 0.0))
            .map(|v| if log { v.log10() } else { v })
            .collect();
        let (mut lo, mut hi) = vals
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
                (a.min(v), b.max(v))
            });
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if log {
            lo = (lo - 0.05).floor();
            hi = (hi + 0.05).ceil();
            if hi - lo < 1.0 {
                lo -= 1.0;
                hi += 1.0;
            }
        } else {
            if hi - lo < 1e-12 {
                lo -= 1.0;
                hi += 1.0;
            }
            let pad = 0.05 * (hi - lo);
            lo -= pad;
            hi += pad;
        }
        Axis { lo, hi, log }
    }

    fn map(&self, v: f64) -> Option<f64> {
        let t = if self.log {
            if v <= 0.0 {
                return None;
            }
            v.log10()
        } else {
            v
        };
        t.is_finite().then(|| (t - self.lo) / (self.hi - self.lo))
    }

    fn ticks(&self) -> Vec<(f64, String)> {
        if self.log {
            let (a, b) = (self.lo as i32, self.hi as i32);
            let step = ((b - a) as f64 / 8.0).ceil().max(1.0) as i32;
            (a..=b)
                .step_by(step as usize)
                .map(|e| (10f64.powi(e), format!("1e{e}")))
                .collect()
        } else {
            let raw = (self.hi - self.lo) / 6.0;
            let mag = 10f64.powf(raw.log10().floor());
            let step = [1.0, 2.0, 5.0, 10.0]
                .iter()
                .map(|m| m * mag)
                .find(|s| *s >= raw)
                .unwrap_or(10.0 * mag);
            let mut v = (self.lo / step).ceil() * step;
            let mut out = Vec::new();
            while v <= self.hi + 1e-9 * step {
                out.push((v, trim_number(v)));
                v += step;
            }
            out
        }
    }
}

fn trim_number(v: f64) -> String {
    let s = format!("{:.6}", if v.abs() < 1e-12 { 0.0 } else { v });
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

impl Plot {
    pub fn to_svg(&self) -> Result<String> {
        if self.series.iter().all(|s| s.points.is_empty()) {
            return Err(CliError::Config(format!(
                "plot {:?} has no data",
                self.title
            )));
        }
        let pts = || self.series.iter().flat_map(|s| s.points.iter());
        let xa = Axis::fit(pts().map(|p| p.0), self.x_log);
        let ya = Axis::fit(pts().map(|p| p.1), self.y_log);
        let pw = WIDTH - LEFT - RIGHT;
        let ph = HEIGHT - TOP - BOTTOM;
        let px = |t: f64| LEFT + t * pw;
        let py = |t: f64| TOP + (1.0 - t) * ph;

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
            LEFT + pw / 2.0,
            escape(&self.title)
        );
        let _ = writeln!(
            s,
            r#"<g class="axes" stroke="black" fill="none"><rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}"/></g>"#
        );
        let _ = writeln!(
            s,
            r#"<g class="x-axis" data-scale="{}">"#,
            if xa.log { "log" } else { "linear" }
        );
        for (v, label) in xa.ticks() {
            if let Some(t) = xa.map(v) {
                let x = px(t);
                let _ = writeln!(
                    s,
                    r##"<line x1="{x:.1}" y1="{:.1}" x2="{x:.1}" y2="{:.1}" stroke="#ccc"/><text x="{x:.1}" y="{:.1}" text-anchor="middle">{label}</text>"##,
                    TOP,
                    TOP + ph,
                    TOP + ph + 18.0
                );
            }
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text></g>"#,
            LEFT + pw / 2.0,
            HEIGHT - 14.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<g class="y-axis" data-scale="{}">"#,
            if ya.log { "log" } else { "linear" }
        );
        for (v, label) in ya.ticks() {
            if let Some(t) = ya.map(v) {
                let y = py(t);
                let _ = writeln!(
                    s,
                    r##"<line x1="{LEFT}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#ccc"/><text x="{:.1}" y="{:.1}" text-anchor="end">{label}</text>"##,
                    LEFT + pw,
                    LEFT - 6.0,
                    y + 4.0
                );
            }
        }
        let _ = writeln!(
            s,
            r#"<text transform="translate(18 {:.1}) rotate(-90)" text-anchor="middle">{}</text></g>"#,
            TOP + ph / 2.0,
            escape(&self.y_label)
        );

        for (k, series) in self.series.iter().enumerate() {
            let color = PALETTE[k % PALETTE.len()];
            let mapped: Vec<(f64, f64)> = series
                .points
                .iter()
                .filter_map(|&(x, y)| Some((px(xa.map(x)?), py(ya.map(y)?))))
                .collect();
            let _ = writeln!(
                s,
                r#"<g class="series" data-name="{}">"#,
                escape(&series.name)
            );
            if series.style != Style::Markers && mapped.len() > 1 {
                let path: Vec<String> = mapped
                    .iter()
                    .map(|(x, y)| format!("{x:.2},{y:.2}"))
                    .collect();
                let _ = writeln!(
                    s,
                    r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
                    path.join(" ")
                );
            }
            if series.style != Style::Line {
                for (x, y) in &mapped {
                    let _ = writeln!(
                        s,
                        r#"<circle cx="{x:.2}" cy="{y:.2}" r="3.5" fill="{color}"/>"#
                    );
                }
            }
            let ly = TOP + 16.0 + 22.0 * k as f64;
            let lx = LEFT + pw + 14.0;
            let _ = writeln!(
                s,
                r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="3"/><text x="{:.1}" y="{:.1}">{}</text></g>"#,
                lx + 22.0,
                lx + 28.0,
                ly + 4.0,
                escape(&series.name)
            );
        }
        s.push_str("</svg>\n");
        Ok(s)
    }
}

/// Per-dimension means for one noise ratio.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DimensionPoint {
    pub d: usize,
    pub epsilon: f64,
    pub residual: f64,
    pub noise_norm: f64,
    pub empirical_bound: f64,
}

pub const DIMENSION_SERIES: [&str; 4] = [
    "Projection error",
    "ALS residual",
    "Noise norm",
    "Empirical bound",
];

pub fn dimension_plot(points: &[DimensionPoint], ratio: f64, elements: usize) -> Result<String> {
    if points.is_empty() {
        return Err(CliError::Config(
            "dimension plot needs at least one point".into(),
        ));
    }
    let series = |name: &str, f: fn(&DimensionPoint) -> f64, style| Series {
        name: name.into(),
        points: points.iter().map(|p| (p.d as f64, f(p))).collect(),
        style,
    };
    Plot {
        title: format!("Rank-1 filtration, M = {elements}, noise ratio {ratio}"),
        x_label: "dimensionality d".into(),
        y_label: "Frobenius norm".into(),
        x_log: false,
        y_log: true,
        series: vec![
            series(DIMENSION_SERIES[0], |p| p.epsilon, Style::LineMarkers),
            series(DIMENSION_SERIES[1], |p| p.residual, Style::LineMarkers),
            series(DIMENSION_SERIES[2], |p| p.noise_norm, Style::LineMarkers),
            series(DIMENSION_SERIES[3], |p| p.empirical_bound, Style::Line),
        ],
    }
    .to_svg()
}

pub const FIT_SERIES: &str = "Fit C r^alpha";

/// Scatter of per-trial errors against rank, with the fitted power law
/// drawn across the observed rank range when `fit` is given and at least
/// two distinct ranks are present.
pub fn rank_plot(
    records: &[ExperimentRecord],
    fit: Option<&PowerLawFit>,
    title: &str,
) -> Result<String> {
    if records.is_empty() {
        return Err(CliError::Config(
            "rank plot needs at least one record".into(),
        ));
    }
    let points: Vec<(f64, f64)> = records.iter().map(|r| (r.rank as f64, r.epsilon)).collect();
    let mut series = vec![Series {
        name: "Projection error".into(),
        points,
        style: Style::Markers,
    }];
    let lo = records.iter().map(|r| r.rank).min().unwrap_or(1) as f64;
    let hi = records.iter().map(|r| r.rank).max().unwrap_or(1) as f64;
    if let Some(f) = fit.filter(|_| hi > lo) {
        let n = 40;
        let curve = (0..=n)
            .map(|k| {
                let r = lo * (hi / lo).powf(k as f64 / n as f64);
                (r, f.eval(r))
            })
            .collect();
        series.push(Series {
            name: format!("{FIT_SERIES} (alpha = {:.3})", f.alpha),
            points: curve,
            style: Style::Line,
        });
    }
    Plot {
        title: title.into(),
        x_label: "rank r".into(),
        y_label: "projection error".into(),
        x_log: true,
        y_log: true,
        series,
    }
    .to_svg()
}

#[cfg(test)]
mod tests {
    use super::*;
    use tensor_denoise_core::FormatKind;

    fn rec(rank: usize, eps: f64) -> ExperimentRecord {
        ExperimentRecord {
            trial: 0,
            format: FormatKind::Canonical,
            shape: vec![4, 4],
            rank,
            seed: 0,
            noise_ratio: 0.1,
            solver: "als".into(),
            epsilon: eps,
            noise_norm: 1.0,
            residual: 1.0,
            hypothesis_holds: true,
            guarantee_holds: true,
            knorm: None,
            wall_time: 0.0,
        }
    }

    #[test]
    fn dimension_plot_has_the_four_series_and_log_y() {
        let pts: Vec<DimensionPoint> = [2usize, 3, 4, 6, 12]
            .iter()
            .map(|&d| DimensionPoint {
                d,
                epsilon: 0.01 / d as f64,
                residual: 1.0,
                noise_norm: 1.0,
                empirical_bound: 0.02 / d as f64,
            })
            .collect();
        let svg = dimension_plot(&pts, 0.1, 4096).unwrap();
        for name in DIMENSION_SERIES {
            assert_eq!(
                svg.matches(&format!("data-name=\"{name}\"")).count(),
                1,
                "{name}"
            );
        }
        assert_eq!(svg.matches("class=\"series\"").count(), 4);
        assert!(svg.contains(r#"class="y-axis" data-scale="log""#));
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert!(!svg.contains("href"));
    }

    #[test]
    fn rank_plot_overlays_fit_when_possible() {
        let recs = vec![rec(1, 1.0), rec(2, 1.5), rec(4, 2.0)];
        let fit = PowerLawFit {
            c: 1.0,
            alpha: 0.5,
            r_squared: 1.0,
        };
        let svg = rank_plot(&recs, Some(&fit), "cp").unwrap();
        assert!(svg.contains(FIT_SERIES));
        assert_eq!(svg.matches("<circle").count(), 3);
        assert!(svg.contains(r#"class="x-axis" data-scale="log""#));

        let one = rank_plot(&[rec(3, 0.5)], Some(&fit), "cp").unwrap();
        assert_eq!(one.matches("<circle").count(), 1);
        assert!(!one.contains(FIT_SERIES));
        assert!(!one.contains("<polyline"));
    }

    #[test]
    fn empty_inputs_rejected() {
        assert!(rank_plot(&[], None, "x").is_err());
        assert!(dimension_plot(&[], 0.1, 16).is_err());
    }

    #[test]
    fn non_positive_values_are_dropped_on_log_axes() {
        let svg = rank_plot(&[rec(1, 0.0), rec(2, 1.0)], None, "x").unwrap();
        assert_eq!(svg.matches("<circle").count(), 1);
    }
}
