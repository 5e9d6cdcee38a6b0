//! Minimal SVG plots straight from CSV tables.

use crate::csv::Table;
use crate::error::CliError;
use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 150.0;
const MARGIN_Y: f64 = 40.0;
const COLORS: &[&str] = &["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

#[derive(Debug, Clone, PartialEq)]
pub struct PlotSpec {
    pub title: String,
    pub x: String,
    pub ys: Vec<String>,
    /// Column whose distinct values split each y column into separate series.
    pub group: Option<String>,
    pub scatter: bool,
    pub log_x: bool,
}

struct Series {
    name: String,
    points: Vec<(f64, f64)>,
}

fn column(table: &Table, name: &str) -> Result<usize, CliError> {
    table.column(name).ok_or_else(|| CliError::Parse(format!("plot: CSV has no column '{name}'")))
}

fn collect(table: &Table, plot: &PlotSpec) -> Result<Vec<Series>, CliError> {
    let xi = column(table, &plot.x)?;
    let gi = plot.group.as_deref().map(|g| column(table, g)).transpose()?;
    let mut series: Vec<Series> = Vec::new();
    for y in &plot.ys {
        let yi = column(table, y)?;
        for row in &table.rows {
            let (Ok(x), Ok(v)) = (row[xi].parse::<f64>(), row[yi].parse::<f64>()) else { continue };
            if !x.is_finite() || !v.is_finite() || (plot.log_x && x <= 0.0) {
                continue;
            }
            let name = match gi {
                Some(g) if plot.ys.len() > 1 => format!("{y} ({})", row[g]),
                Some(g) => row[g].clone(),
                None => y.clone(),
            };
            match series.iter_mut().find(|s| s.name == name) {
                Some(s) => s.points.push((x, v)),
                None => series.push(Series { name, points: vec![(x, v)] }),
            }
        }
    }
    Ok(series)
}

fn span(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi - lo < 1e-300 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Renders the requested columns of a CSV table as a line or scatter plot.
pub fn render_svg(csv: &str, plot: &PlotSpec) -> Result<String, CliError> {
    let table = Table::parse(csv).map_err(CliError::Parse)?;
    let series = collect(&table, plot)?;
    let fx = |x: f64| if plot.log_x { x.log10() } else { x };
    let (x0, x1) = span(series.iter().flat_map(|s| s.points.iter().map(|p| fx(p.0))));
    let (y0, y1) = span(series.iter().flat_map(|s| s.points.iter().map(|p| p.1)));
    let (pw, ph) = (WIDTH - MARGIN_LEFT - MARGIN_RIGHT, HEIGHT - 2.0 * MARGIN_Y);
    let px = |x: f64| MARGIN_LEFT + (fx(x) - x0) / (x1 - x0) * pw;
    let py = |y: f64| MARGIN_Y + (y1 - y) / (y1 - y0) * ph;

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle">{}</text>"#, MARGIN_LEFT + pw / 2.0, escape(&plot.title));
    let _ = writeln!(s, r#"<rect x="{MARGIN_LEFT}" y="{MARGIN_Y}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let (gx, gy) = (MARGIN_LEFT + f * pw, MARGIN_Y + ph - f * ph);
        let xv = x0 + f * (x1 - x0);
        let xl = if plot.log_x { format!("1e{xv:.1}") } else { format!("{xv:.3}") };
        let _ = writeln!(s, r#"<text x="{gx:.1}" y="{:.1}" text-anchor="middle">{xl}</text>"#, MARGIN_Y + ph + 16.0);
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{:.3}</text>"#, MARGIN_LEFT - 6.0, gy + 4.0, y0 + f * (y1 - y0));
    }
    let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, MARGIN_LEFT + pw / 2.0, HEIGHT - 6.0, escape(&plot.x));
    for (k, ser) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        if plot.scatter {
            for &(x, y) in &ser.points {
                let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="1.6" fill="{color}"/>"#, px(x), py(y));
            }
        } else {
            let pts: Vec<String> = ser.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
            let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, pts.join(" "));
        }
        let ly = MARGIN_Y + 14.0 + 18.0 * k as f64;
        let lx = WIDTH - MARGIN_RIGHT + 12.0;
        let _ = writeln!(s, r#"<rect x="{lx}" y="{:.1}" width="10" height="10" fill="{color}"/>"#, ly - 9.0);
        let _ = writeln!(s, r#"<text x="{:.1}" y="{ly:.1}">{}</text>"#, lx + 14.0, escape(&ser.name));
    }
    s.push_str("</svg>\n");
    Ok(s)
}
