//! Static SVG charts of pool size versus value fraction, without a plotting
//! dependency: axes, tick marks, polylines, error bars and a legend are
//! emitted directly.

use std::fmt::Write;

/// A polyline (analytic curve or reference curve).
#[derive(Debug, Clone)]
pub struct Curve {
    pub label: String,
    pub color: &'static str,
    pub dashed: bool,
    pub points: Vec<(f64, f64)>,
}

/// Scatter points with symmetric error bars.
#[derive(Debug, Clone)]
pub struct Scatter {
    pub label: String,
    pub color: &'static str,
    /// (x, y, half-height of the error bar)
    pub points: Vec<(f64, f64, f64)>,
}

pub const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#7f7f7f",
];

const WIDTH: f64 = 860.0;
const HEIGHT: f64 = 520.0;
const MARGIN_LEFT: f64 = 72.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 56.0;

struct Frame {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
    log_y: bool,
}

impl Frame {
    fn x(&self, x: f64) -> f64 {
        let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
        MARGIN_LEFT + (x - self.x_min) / (self.x_max - self.x_min) * plot_w
    }

    fn y(&self, y: f64) -> f64 {
        let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
        let (v, lo, hi) = if self.log_y {
            (
                y.max(self.y_min).log10(),
                self.y_min.log10(),
                self.y_max.log10(),
            )
        } else {
            (y, self.y_min, self.y_max)
        };
        MARGIN_TOP + plot_h - (v - lo) / (hi - lo) * plot_h
    }
}

/// Renders the chart. The y axis switches to log scale when the data spans
/// more than a factor of 30 (the canonical sweep runs from ~40 to ~1640).
pub fn render(
    title: &str,
    x_label: &str,
    y_label: &str,
    curves: &[Curve],
    scatters: &[Scatter],
) -> String {
    let mut xs: Vec<f64> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    for curve in curves {
        for &(x, y) in &curve.points {
            xs.push(x);
            ys.push(y);
        }
    }
    for scatter in scatters {
        for &(x, y, e) in &scatter.points {
            xs.push(x);
            ys.push((y - e).max(f64::MIN_POSITIVE));
            ys.push(y + e);
        }
    }
    if xs.is_empty() {
        xs.extend([0.0, 1.0]);
        ys.extend([0.0, 1.0]);
    }
    let x_min = xs.iter().cloned().fold(f64::INFINITY, f64::min);
    let x_max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let y_lo = ys
        .iter()
        .cloned()
        .filter(|v| *v > 0.0)
        .fold(f64::INFINITY, f64::min);
    let y_hi = ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let log_y = y_lo.is_finite() && y_hi / y_lo > 30.0;
    let frame = if log_y {
        Frame {
            x_min,
            x_max: pad_max(x_min, x_max),
            y_min: y_lo / 1.3,
            y_max: y_hi * 1.3,
            log_y,
        }
    } else {
        let span = (y_hi - y_lo).max(1e-9);
        Frame {
            x_min,
            x_max: pad_max(x_min, x_max),
            y_min: (y_lo - 0.08 * span)
                .min(0.0)
                .max(ys.iter().cloned().fold(f64::INFINITY, f64::min).min(0.0)),
            y_max: y_hi + 0.08 * span,
            log_y,
        }
    };

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\">"
    );
    let _ = writeln!(
        svg,
        "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>"
    );
    let _ = writeln!(
        svg,
        "<text x=\"{:.2}\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">{}</text>",
        WIDTH / 2.0,
        escape(title)
    );

    axes(&mut svg, &frame, x_label, y_label);

    for curve in curves {
        if curve.points.is_empty() {
            continue;
        }
        let mut path = String::new();
        for &(x, y) in &curve.points {
            let _ = write!(path, "{:.2},{:.2} ", frame.x(x), frame.y(y));
        }
        let dash = if curve.dashed {
            " stroke-dasharray=\"6 4\""
        } else {
            ""
        };
        let _ = writeln!(
            svg,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.8\"{}/>",
            path.trim_end(),
            curve.color,
            dash
        );
    }

    for scatter in scatters {
        for &(x, y, e) in &scatter.points {
            let cx = frame.x(x);
            let cy = frame.y(y);
            if e > 0.0 {
                let top = frame.y(y + e);
                let bottom = frame.y((y - e).max(f64::MIN_POSITIVE));
                let _ = writeln!(
                    svg,
                    "<line x1=\"{cx:.2}\" y1=\"{top:.2}\" x2=\"{cx:.2}\" y2=\"{bottom:.2}\" \
                     stroke=\"{}\" stroke-width=\"1.2\"/>",
                    scatter.color
                );
                for tip in [top, bottom] {
                    let _ = writeln!(
                        svg,
                        "<line x1=\"{:.2}\" y1=\"{tip:.2}\" x2=\"{:.2}\" y2=\"{tip:.2}\" \
                         stroke=\"{}\" stroke-width=\"1.2\"/>",
                        cx - 3.0,
                        cx + 3.0,
                        scatter.color
                    );
                }
            }
            let _ = writeln!(
                svg,
                "<circle cx=\"{cx:.2}\" cy=\"{cy:.2}\" r=\"3.2\" fill=\"{}\"/>",
                scatter.color
            );
        }
    }

    legend(&mut svg, curves, scatters);
    svg.push_str("</svg>\n");
    svg
}

fn pad_max(min: f64, max: f64) -> f64 {
    if max > min {
        max
    } else {
        min + 1.0
    }
}

fn axes(svg: &mut String, frame: &Frame, x_label: &str, y_label: &str) {
    let x0 = MARGIN_LEFT;
    let x1 = WIDTH - MARGIN_RIGHT;
    let y0 = HEIGHT - MARGIN_BOTTOM;
    let y1 = MARGIN_TOP;
    let _ = writeln!(
        svg,
        "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x1}\" y2=\"{y0}\" stroke=\"black\"/>\n\
         <line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x0}\" y2=\"{y1}\" stroke=\"black\"/>"
    );
    for tick in linear_ticks(frame.x_min, frame.x_max) {
        let x = frame.x(tick);
        let _ = writeln!(
            svg,
            "<line x1=\"{x:.2}\" y1=\"{y0}\" x2=\"{x:.2}\" y2=\"{:.2}\" stroke=\"black\"/>\n\
             <text x=\"{x:.2}\" y=\"{:.2}\" text-anchor=\"middle\" font-size=\"12\">{}</text>",
            y0 + 5.0,
            y0 + 20.0,
            format_tick(tick)
        );
        let _ = writeln!(
            svg,
            "<line x1=\"{x:.2}\" y1=\"{y0}\" x2=\"{x:.2}\" y2=\"{y1}\" stroke=\"#dddddd\" stroke-width=\"0.6\"/>"
        );
    }
    let y_ticks = if frame.log_y {
        log_ticks(frame.y_min, frame.y_max)
    } else {
        linear_ticks(frame.y_min, frame.y_max)
    };
    for tick in y_ticks {
        let y = frame.y(tick);
        let _ = writeln!(
            svg,
            "<line x1=\"{:.2}\" y1=\"{y:.2}\" x2=\"{x0}\" y2=\"{y:.2}\" stroke=\"black\"/>\n\
             <text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\" font-size=\"12\">{}</text>",
            x0 - 5.0,
            x0 - 8.0,
            y + 4.0,
            format_tick(tick)
        );
        let _ = writeln!(
            svg,
            "<line x1=\"{x0}\" y1=\"{y:.2}\" x2=\"{x1}\" y2=\"{y:.2}\" stroke=\"#dddddd\" stroke-width=\"0.6\"/>"
        );
    }
    let _ = writeln!(
        svg,
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\" font-size=\"13\">{}</text>",
        (x0 + x1) / 2.0,
        HEIGHT - 14.0,
        escape(x_label)
    );
    let _ = writeln!(
        svg,
        "<text x=\"18\" y=\"{:.2}\" text-anchor=\"middle\" font-size=\"13\" \
         transform=\"rotate(-90 18 {:.2})\">{}</text>",
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(y_label)
    );
}

fn legend(svg: &mut String, curves: &[Curve], scatters: &[Scatter]) {
    let mut entries: Vec<(&str, &str, bool, bool)> = Vec::new();
    for curve in curves {
        entries.push((&curve.label, curve.color, curve.dashed, false));
    }
    for scatter in scatters {
        entries.push((&scatter.label, scatter.color, false, true));
    }
    if entries.is_empty() {
        return;
    }
    let x = MARGIN_LEFT + 14.0;
    let mut y = MARGIN_TOP + 16.0;
    let height = entries.len() as f64 * 18.0 + 10.0;
    let _ = writeln!(
        svg,
        "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"190\" height=\"{height:.2}\" fill=\"white\" \
         fill-opacity=\"0.85\" stroke=\"#999999\" stroke-width=\"0.7\"/>",
        x - 8.0,
        y - 12.0
    );
    for (label, color, dashed, is_point) in entries {
        if is_point {
            let _ = writeln!(
                svg,
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3.2\" fill=\"{color}\"/>",
                x + 11.0,
                y - 3.0
            );
        } else {
            let dash = if dashed {
                " stroke-dasharray=\"6 4\""
            } else {
                ""
            };
            let _ = writeln!(
                svg,
                "<line x1=\"{x:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"{color}\" \
                 stroke-width=\"1.8\"{dash}/>",
                y - 3.0,
                x + 22.0,
                y - 3.0
            );
        }
        let _ = writeln!(
            svg,
            "<text x=\"{:.2}\" y=\"{y:.2}\" font-size=\"12\">{}</text>",
            x + 30.0,
            escape(label)
        );
        y += 18.0;
    }
}

/// Tick positions at a 1/2/5 x 10^n step covering the range.
fn linear_ticks(min: f64, max: f64) -> Vec<f64> {
    let span = (max - min).max(1e-12);
    let raw = span / 6.0;
    let magnitude = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * magnitude)
        .find(|&s| span / s <= 7.0)
        .unwrap_or(10.0 * magnitude);
    let mut ticks = Vec::new();
    let mut tick = (min / step).ceil() * step;
    while tick <= max + 1e-9 * span {
        ticks.push(if tick.abs() < 1e-12 * span { 0.0 } else { tick });
        tick += step;
    }
    ticks
}

/// Powers of ten inside the range.
fn log_ticks(min: f64, max: f64) -> Vec<f64> {
    let lo = min.log10().ceil() as i32;
    let hi = max.log10().floor() as i32;
    (lo..=hi).map(|e| 10f64.powi(e)).collect()
}

fn format_tick(value: f64) -> String {
    if value == 0.0 {
        return "0".into();
    }
    let abs = value.abs();
    if !(0.01..1000.0).contains(&abs) {
        format!("{value:e}")
    } else {
        let text = format!("{value:.3}");
        text.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
