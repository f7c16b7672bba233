//! Minimal SVG rendering of the CSV artifacts.
//!
//! Pure-text output with no drawing dependency: an axes box, polylines for
//! curve files, and a colored cell grid for the phase sweep. Intended as a
//! quick look at a run, not as publication graphics.

use std::fmt::Write as _;

const WIDTH: f64 = 860.0;
const HEIGHT: f64 = 520.0;
const MARGIN: f64 = 60.0;

pub struct Series<'a> {
    pub label: &'a str,
    pub color: &'a str,
    /// (x, y) pairs; gaps may be encoded by splitting into separate series.
    pub points: Vec<(f64, f64)>,
}

fn finite_bounds(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in values.filter(|v| v.is_finite()) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if lo > hi {
        return None;
    }
    if lo == hi {
        lo -= 0.5;
        hi += 0.5;
    }
    Some((lo, hi))
}

/// Window-to-canvas mapping shared by the curve and scatter plots.
struct Axes {
    x_lo: f64,
    x_hi: f64,
    y_lo: f64,
    y_hi: f64,
}

impl Axes {
    fn x_to(&self, x: f64) -> f64 {
        MARGIN + (x - self.x_lo) / (self.x_hi - self.x_lo) * (WIDTH - 2.0 * MARGIN)
    }

    fn y_to(&self, y: f64) -> f64 {
        HEIGHT - MARGIN - (y - self.y_lo) / (self.y_hi - self.y_lo) * (HEIGHT - 2.0 * MARGIN)
    }

    /// Document opening, title, axes box, zero line, ticks, axis labels.
    fn open_frame(&self, title: &str, x_label: &str, y_label: &str) -> String {
        let mut svg = String::new();
        let _ = writeln!(
            svg,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
        );
        let _ = writeln!(svg, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"28\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">{}</text>",
            WIDTH / 2.0,
            title
        );
        let _ = writeln!(
            svg,
            "<rect x=\"{MARGIN}\" y=\"{MARGIN}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>",
            WIDTH - 2.0 * MARGIN,
            HEIGHT - 2.0 * MARGIN
        );
        if self.y_lo < 0.0 && self.y_hi > 0.0 {
            let y0 = self.y_to(0.0);
            let _ = writeln!(
                svg,
                "<line x1=\"{MARGIN}\" y1=\"{y0:.2}\" x2=\"{}\" y2=\"{y0:.2}\" stroke=\"#bbbbbb\" stroke-dasharray=\"4 4\"/>",
                WIDTH - MARGIN
            );
        }
        for value in [self.x_lo, self.x_hi] {
            let _ = writeln!(
                svg,
                "<text x=\"{:.2}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">{value:.3}</text>",
                self.x_to(value),
                HEIGHT - MARGIN + 20.0
            );
        }
        for value in [self.y_lo, self.y_hi] {
            let _ = writeln!(
                svg,
                "<text x=\"{}\" y=\"{:.2}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">{value:.3}</text>",
                MARGIN - 8.0,
                self.y_to(value) + 4.0
            );
        }
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">{}</text>",
            WIDTH / 2.0,
            HEIGHT - 16.0,
            x_label
        );
        let _ = writeln!(
            svg,
            "<text x=\"18\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" transform=\"rotate(-90 18 {})\">{}</text>",
            HEIGHT / 2.0,
            HEIGHT / 2.0,
            y_label
        );
        svg
    }
}

/// Render overlaid line plots with a legend.
pub fn line_plot(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let (x_lo, x_hi) = finite_bounds(series.iter().flat_map(|s| s.points.iter().map(|p| p.0)))
        .unwrap_or((0.0, 1.0));
    let (y_lo, y_hi) = finite_bounds(series.iter().flat_map(|s| s.points.iter().map(|p| p.1)))
        .unwrap_or((0.0, 1.0));
    let axes = Axes {
        x_lo,
        x_hi,
        y_lo,
        y_hi,
    };
    let x_to = |x: f64| axes.x_to(x);
    let y_to = |y: f64| axes.y_to(y);
    let mut svg = axes.open_frame(title, x_label, y_label);

    for (idx, s) in series.iter().enumerate() {
        let mut path = String::new();
        for &(x, y) in s
            .points
            .iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
        {
            if path.is_empty() {
                let _ = write!(path, "M{:.2} {:.2}", x_to(x), y_to(y));
            } else {
                let _ = write!(path, " L{:.2} {:.2}", x_to(x), y_to(y));
            }
        }
        let _ = writeln!(
            svg,
            "<path d=\"{path}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.4\"/>",
            s.color
        );
        let legend_y = MARGIN + 18.0 * idx as f64 + 14.0;
        let _ = writeln!(
            svg,
            "<line x1=\"{}\" y1=\"{legend_y}\" x2=\"{}\" y2=\"{legend_y}\" stroke=\"{}\" stroke-width=\"2\"/>",
            WIDTH - MARGIN - 150.0,
            WIDTH - MARGIN - 120.0,
            s.color
        );
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\">{}</text>",
            WIDTH - MARGIN - 112.0,
            legend_y + 4.0,
            s.label
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Render unconnected points, one dot per datum.
pub fn scatter_plot(title: &str, x_label: &str, y_label: &str, points: &[(f64, f64)]) -> String {
    let (x_lo, x_hi) = finite_bounds(points.iter().map(|p| p.0)).unwrap_or((0.0, 1.0));
    let (y_lo, y_hi) = finite_bounds(points.iter().map(|p| p.1)).unwrap_or((0.0, 1.0));
    let axes = Axes {
        x_lo,
        x_hi,
        y_lo,
        y_hi,
    };
    let mut svg = axes.open_frame(title, x_label, y_label);
    for &(x, y) in points
        .iter()
        .filter(|(x, y)| x.is_finite() && y.is_finite())
    {
        let _ = writeln!(
            svg,
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2.2\" fill=\"#3b6cc2\"/>",
            axes.x_to(x),
            axes.y_to(y)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Render the phase sweep as a colored cell grid on log-log axes; cell color
/// encodes the exact negativity flag, a dot marks the lifetime flag.
pub fn phase_map(
    title: &str,
    r_values: &[f64],
    u_values: &[f64],
    ndos_exact: &[bool],
    ndos_lifetime: &[bool],
) -> String {
    let nr = r_values.len();
    let nu = u_values.len();
    let cell_w = (WIDTH - 2.0 * MARGIN) / nr as f64;
    let cell_h = (HEIGHT - 2.0 * MARGIN) / nu as f64;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
    );
    let _ = writeln!(svg, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"28\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">{}</text>",
        WIDTH / 2.0,
        title
    );
    for (ir, _) in r_values.iter().enumerate() {
        for (iu, _) in u_values.iter().enumerate() {
            let flat = ir * nu + iu;
            let x = MARGIN + ir as f64 * cell_w;
            // u grows upward.
            let y = HEIGHT - MARGIN - (iu as f64 + 1.0) * cell_h;
            let fill = if ndos_exact[flat] {
                "#c23b22"
            } else {
                "#3b6cc2"
            };
            let _ = writeln!(
                svg,
                "<rect x=\"{x:.2}\" y=\"{y:.2}\" width=\"{cell_w:.2}\" height=\"{cell_h:.2}\" fill=\"{fill}\" stroke=\"white\" stroke-width=\"0.4\"/>"
            );
            if ndos_lifetime[flat] {
                let _ = writeln!(
                    svg,
                    "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"{:.2}\" fill=\"white\"/>",
                    x + cell_w / 2.0,
                    y + cell_h / 2.0,
                    (cell_w.min(cell_h) / 5.0).max(1.0)
                );
            }
        }
    }
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">r (left {:.3}, right {:.3})</text>",
        WIDTH / 2.0,
        HEIGHT - 16.0,
        r_values.first().copied().unwrap_or(0.0),
        r_values.last().copied().unwrap_or(0.0)
    );
    let _ = writeln!(
        svg,
        "<text x=\"18\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" transform=\"rotate(-90 18 {})\">u (bottom {:.3}, top {:.3})</text>",
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        u_values.first().copied().unwrap_or(0.0),
        u_values.last().copied().unwrap_or(0.0)
    );
    svg.push_str("</svg>\n");
    svg
}
