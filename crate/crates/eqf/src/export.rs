//! Serialization of experiment records: CSV traces, snapshot documents and
//! SVG convergence charts.
//!
//! CSV columns are `t` followed by one group per landmark `i` (1-based):
//! `x_i_1, x_i_2, xhat_i_1, xhat_i_2, y_i_1, y_i_2, l_i, sigma_i_min_eig`.
//! Floats are written with Rust's shortest round-trip formatting, so equal
//! runs serialize to byte-identical files and parsing recovers the exact
//! values.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::ConfigError;
use crate::sim::RunRecord;

/// Header line for a trace with `n` landmarks.
pub fn csv_header(n: usize) -> String {
    let mut cols = vec!["t".to_string()];
    for i in 1..=n {
        for name in ["x", "xhat", "y"] {
            cols.push(format!("{name}_{i}_1"));
            cols.push(format!("{name}_{i}_2"));
        }
        cols.push(format!("l_{i}"));
        cols.push(format!("sigma_{i}_min_eig"));
    }
    cols.join(",")
}

/// Renders the full trace as CSV text.
pub fn csv_string(record: &RunRecord) -> String {
    let n = record.landmark_count();
    let mut out = csv_header(n);
    out.push('\n');
    for step in &record.steps {
        let _ = write!(out, "{}", step.t);
        for i in 0..n {
            let _ = write!(
                out,
                ",{},{},{},{},{},{},{},{}",
                step.truth[i].x,
                step.truth[i].y,
                step.estimate[i].x,
                step.estimate[i].y,
                step.bearings[i].x,
                step.bearings[i].y,
                step.lyapunov[i],
                step.sigma_eigenvalues[i].0,
            );
        }
        out.push('\n');
    }
    out
}

/// A parsed CSV trace: the header names and the numeric rows.
#[derive(Clone, Debug, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl CsvTable {
    /// Extracts one column by header name.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[idx]).collect())
    }
}

/// Parses CSV text produced by [`csv_string`]. Comment lines starting with
/// `#` and blank lines are skipped, so snapshot documents parse too.
pub fn parse_csv(text: &str) -> Result<CsvTable, ConfigError> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
    let (_, header_line) = lines.next().ok_or(ConfigError::Invalid {
        detail: "no header line".to_string(),
    })?;
    let header: Vec<String> = header_line.split(',').map(|s| s.to_string()).collect();
    let mut rows = Vec::new();
    for (idx, line) in lines {
        let row: Vec<f64> = line
            .split(',')
            .map(|tok| tok.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| ConfigError::Malformed {
                line: idx + 1,
                text: line.to_string(),
            })?;
        if row.len() != header.len() {
            return Err(ConfigError::Malformed {
                line: idx + 1,
                text: line.to_string(),
            });
        }
        rows.push(row);
    }
    Ok(CsvTable { header, rows })
}

/// Renders a snapshot document: the scenario and sampled origin echoed as
/// comments, followed by the CSV trace. The result is self-describing and
/// still parses with [`parse_csv`].
pub fn snapshot_string(record: &RunRecord) -> String {
    let mut out = String::new();
    out.push_str("# scenario\n");
    for line in crate::config::to_config_string(&record.scenario).lines() {
        let _ = writeln!(out, "# {line}");
    }
    out.push_str("# origin\n");
    for (i, x) in record.origin.landmarks().iter().enumerate() {
        let _ = writeln!(out, "# origin_{} = {} {}", i + 1, x.x, x.y);
    }
    out.push('\n');
    out.push_str(&csv_string(record));
    out
}

/// Writes text to a file, wrapping IO failures with the path.
pub fn write_text(path: &Path, text: &str) -> Result<(), ConfigError> {
    std::fs::write(path, text).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })
}

const CHART_WIDTH: f64 = 860.0;
const CHART_HEIGHT: f64 = 520.0;
const MARGIN_LEFT: f64 = 72.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 28.0;
const MARGIN_BOTTOM: f64 = 52.0;
/// Values below this floor are clamped before taking log10.
const CHART_FLOOR: f64 = 1e-18;

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

/// Renders the per-landmark Lyapunov traces as a standalone SVG line chart
/// with a log10 vertical axis.
pub fn chart_svg(record: &RunRecord) -> String {
    let n = record.landmark_count();
    let t_max = record.steps.last().map(|s| s.t).unwrap_or(1.0).max(1e-9);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for step in &record.steps {
        for &l in &step.lyapunov {
            let v = l.max(CHART_FLOOR).log10();
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    if !lo.is_finite() || !hi.is_finite() {
        lo = -1.0;
        hi = 1.0;
    }
    if hi - lo < 1.0 {
        hi = lo + 1.0;
    }

    let plot_w = CHART_WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = CHART_HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let x_of = |t: f64| MARGIN_LEFT + t / t_max * plot_w;
    let y_of = |v: f64| MARGIN_TOP + (hi - v) / (hi - lo) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {CHART_WIDTH} {CHART_HEIGHT}\" \
         font-family=\"sans-serif\" font-size=\"12\">"
    );
    let _ = writeln!(
        svg,
        "<rect width=\"{CHART_WIDTH}\" height=\"{CHART_HEIGHT}\" fill=\"white\"/>"
    );
    let _ = writeln!(
        svg,
        "<text x=\"{:.1}\" y=\"16\" text-anchor=\"middle\" font-size=\"14\">\
         Lyapunov value per landmark</text>",
        MARGIN_LEFT + plot_w / 2.0
    );

    let y_step = (((hi - lo) / 8.0).ceil() as i64).max(1);
    let mut tick = (lo.ceil() as i64 / y_step) * y_step;
    while (tick as f64) < lo {
        tick += y_step;
    }
    while tick as f64 <= hi {
        let y = y_of(tick as f64);
        let _ = writeln!(
            svg,
            "<line x1=\"{MARGIN_LEFT:.1}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" \
             stroke=\"#dddddd\"/>",
            MARGIN_LEFT + plot_w
        );
        let _ = writeln!(
            svg,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">1e{tick}</text>",
            MARGIN_LEFT - 8.0,
            y + 4.0
        );
        tick += y_step;
    }

    let x_step = nice_step(t_max / 8.0);
    let mut t = 0.0;
    while t <= t_max * (1.0 + 1e-9) {
        let x = x_of(t.min(t_max));
        let _ = writeln!(
            svg,
            "<line x1=\"{x:.1}\" y1=\"{MARGIN_TOP:.1}\" x2=\"{x:.1}\" y2=\"{:.1}\" \
             stroke=\"#dddddd\"/>",
            MARGIN_TOP + plot_h
        );
        let _ = writeln!(
            svg,
            "<text x=\"{x:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{t}</text>",
            MARGIN_TOP + plot_h + 18.0
        );
        t += x_step;
    }

    let _ = writeln!(
        svg,
        "<rect x=\"{MARGIN_LEFT:.1}\" y=\"{MARGIN_TOP:.1}\" width=\"{plot_w:.1}\" \
         height=\"{plot_h:.1}\" fill=\"none\" stroke=\"black\"/>"
    );
    let _ = writeln!(
        svg,
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">t [s]</text>",
        MARGIN_LEFT + plot_w / 2.0,
        CHART_HEIGHT - 14.0
    );
    let _ = writeln!(
        svg,
        "<text x=\"18\" y=\"{:.1}\" text-anchor=\"middle\" \
         transform=\"rotate(-90 18 {:.1})\">l_i (log scale)</text>",
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0
    );

    for i in 0..n {
        let color = PALETTE[i % PALETTE.len()];
        let mut points = String::new();
        for step in &record.steps {
            let v = step.lyapunov[i].max(CHART_FLOOR).log10();
            let _ = write!(points, "{:.2},{:.2} ", x_of(step.t), y_of(v));
        }
        let _ = writeln!(
            svg,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>",
            points.trim_end()
        );
        let ly = MARGIN_TOP + 14.0 + 16.0 * i as f64;
        let lx = MARGIN_LEFT + plot_w - 118.0;
        let _ = writeln!(
            svg,
            "<line x1=\"{lx:.1}\" y1=\"{ly:.1}\" x2=\"{:.1}\" y2=\"{ly:.1}\" \
             stroke=\"{color}\" stroke-width=\"1.5\"/>",
            lx + 22.0
        );
        let _ = writeln!(
            svg,
            "<text x=\"{:.1}\" y=\"{:.1}\">landmark {}</text>",
            lx + 28.0,
            ly + 4.0,
            i + 1
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn nice_step(raw: f64) -> f64 {
    let raw = raw.max(1e-12);
    let mag = 10f64.powf(raw.log10().floor());
    for m in [1.0, 2.0, 5.0, 10.0] {
        if m * mag >= raw {
            return m * mag;
        }
    }
    10.0 * mag
}
