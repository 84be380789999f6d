//! CSV and SVG output for grid searches and error ensembles.
//!
//! Heat map: one square of [`CELL_PX`] pixels per grid cell, first axis
//! horizontal, second vertical (increasing upwards). Certified cells are
//! filled [`CERTIFIED_FILL`], cells inside the classical region get a
//! [`CLASSICAL_FILL`] overlay at [`CLASSICAL_OPACITY`], failed cells
//! [`ERROR_FILL`]. Line plots put the step on the horizontal axis and one
//! polyline per series.

use std::fmt::Write as _;
use std::io::Write;

use crate::certify::GridReport;
use crate::error::{Error, Result};
use crate::sim::RunEnsemble;

pub const CELL_PX: f64 = 14.0;
pub const CERTIFIED_FILL: &str = "#1f4fa8";
pub const CLASSICAL_FILL: &str = "#808080";
pub const CLASSICAL_OPACITY: f64 = 0.5;
pub const ERROR_FILL: &str = "#c0392b";
const MARGIN_PX: f64 = 60.0;
const SERIES_COLORS: [&str; 6] = ["#c0392b", "#1f4fa8", "#27ae60", "#8e44ad", "#d35400", "#2c3e50"];

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_grid_csv<W: Write>(report: &GridReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = report.axes.iter().map(|a| a.param.name()).collect();
    header.extend(["classical_ok", "sublinear", "gamma_star", "margin", "error"].map(String::from));
    w.write_record(&header)?;
    for cell in &report.cells {
        let mut row: Vec<String> = cell.point.iter().map(f64::to_string).collect();
        row.push(opt(cell.classical_ok));
        row.push(opt(cell.sublinear));
        row.push(opt(cell.gamma_star));
        row.push(opt(cell.margin));
        row.push(cell.error.clone().unwrap_or_default());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Heat map of a one- or two-axis grid.
pub fn grid_svg(report: &GridReport, title: &str) -> Result<String> {
    let (xs, ys, y_name) = match report.axes.as_slice() {
        [x] => (&x.values, vec![0.0], String::new()),
        [x, y] => (&x.values, y.values.clone(), y.param.name()),
        _ => return Err(Error::NotApplicable("heat maps need one or two axes".into())),
    };
    let (nx, ny) = (xs.len(), ys.len());
    let width = 2.0 * MARGIN_PX + nx as f64 * CELL_PX;
    let height = 2.0 * MARGIN_PX + ny as f64 * CELL_PX;
    let mut s = String::new();
    writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#).unwrap();
    writeln!(s, r#"<rect width="{width}" height="{height}" fill="white"/>"#).unwrap();
    writeln!(s, r#"<text x="{}" y="20" font-family="sans-serif" font-size="13" text-anchor="middle">{}</text>"#, width / 2.0, escape(title)).unwrap();
    for (idx, cell) in report.cells.iter().enumerate() {
        let (i, j) = (idx / ny, idx % ny);
        let x = MARGIN_PX + i as f64 * CELL_PX;
        let y = MARGIN_PX + (ny - 1 - j) as f64 * CELL_PX;
        let fill = if cell.error.is_some() {
            ERROR_FILL
        } else if cell.certified() {
            CERTIFIED_FILL
        } else {
            "white"
        };
        writeln!(s, r##"<rect x="{x}" y="{y}" width="{CELL_PX}" height="{CELL_PX}" fill="{fill}" stroke="#dddddd" stroke-width="0.5"/>"##).unwrap();
        if cell.classical_ok == Some(true) {
            writeln!(s, r#"<rect x="{x}" y="{y}" width="{CELL_PX}" height="{CELL_PX}" fill="{CLASSICAL_FILL}" fill-opacity="{CLASSICAL_OPACITY}"/>"#).unwrap();
        }
    }
    let bottom = MARGIN_PX + ny as f64 * CELL_PX;
    let tick_every = (nx / 6).max(1);
    for i in (0..nx).step_by(tick_every) {
        let x = MARGIN_PX + (i as f64 + 0.5) * CELL_PX;
        writeln!(s, r#"<text x="{x}" y="{}" font-family="sans-serif" font-size="9" text-anchor="middle">{:.3}</text>"#, bottom + 12.0, xs[i]).unwrap();
    }
    writeln!(s, r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">{}</text>"#, width / 2.0, bottom + 30.0, escape(&report.axes[0].param.name())).unwrap();
    if !y_name.is_empty() {
        let tick_every = (ny / 6).max(1);
        for j in (0..ny).step_by(tick_every) {
            let y = MARGIN_PX + (ny - 1 - j) as f64 * CELL_PX + 0.5 * CELL_PX + 3.0;
            writeln!(s, r#"<text x="{}" y="{y}" font-family="sans-serif" font-size="9" text-anchor="end">{:.3}</text>"#, MARGIN_PX - 4.0, ys[j]).unwrap();
        }
        writeln!(s, r#"<text x="16" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#, height / 2.0, height / 2.0, escape(&y_name)).unwrap();
    }
    let ly = height - 14.0;
    writeln!(s, r#"<rect x="{MARGIN_PX}" y="{}" width="10" height="10" fill="{CERTIFIED_FILL}"/>"#, ly - 9.0).unwrap();
    writeln!(s, r#"<text x="{}" y="{ly}" font-family="sans-serif" font-size="10">certified</text>"#, MARGIN_PX + 14.0).unwrap();
    writeln!(s, r#"<rect x="{}" y="{}" width="10" height="10" fill="{CLASSICAL_FILL}" fill-opacity="{CLASSICAL_OPACITY}"/>"#, MARGIN_PX + 80.0, ly - 9.0).unwrap();
    writeln!(s, r#"<text x="{}" y="{ly}" font-family="sans-serif" font-size="10">classical bound</text>"#, MARGIN_PX + 94.0).unwrap();
    s.push_str("</svg>\n");
    Ok(s)
}

/// Mean log error per step; with `per_run`, one extra column per run holding `e(k)`.
pub fn write_ensemble_csv<W: Write>(series: &[(&str, &RunEnsemble)], per_run: bool, out: W) -> Result<()> {
    let steps = series.first().map(|(_, e)| e.mean_log_error.len()).unwrap_or(0);
    if series.iter().any(|(_, e)| e.mean_log_error.len() != steps) {
        return Err(Error::DimensionMismatch("ensembles differ in horizon".into()));
    }
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["step".to_string()];
    for (label, e) in series {
        header.push(format!("{label}_mean_log10_error"));
        if per_run {
            header.extend((0..e.runs).map(|r| format!("{label}_run{r}")));
        }
    }
    w.write_record(&header)?;
    for k in 0..steps {
        let mut row = vec![k.to_string()];
        for (_, e) in series {
            row.push(e.mean_log_error[k].to_string());
            if per_run {
                row.extend(e.error_curves.iter().map(|c| c[k].to_string()));
            }
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Line plot of `(label, values)` series against the step index.
pub fn line_svg(series: &[(&str, &[f64])], title: &str, y_label: &str) -> String {
    let (width, height) = (640.0, 400.0);
    let (pw, ph) = (width - 2.0 * MARGIN_PX, height - 2.0 * MARGIN_PX);
    let steps = series.iter().map(|(_, v)| v.len()).max().unwrap_or(0).max(2);
    let finite = series.iter().flat_map(|(_, v)| v.iter().copied()).filter(|x| x.is_finite());
    let (mut lo, mut hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    if !(lo < hi) {
        lo = if lo.is_finite() { lo - 1.0 } else { 0.0 };
        hi = lo + 2.0;
    }
    let px = |k: usize| MARGIN_PX + pw * k as f64 / (steps - 1) as f64;
    let py = |v: f64| MARGIN_PX + ph * (hi - v) / (hi - lo);
    let mut s = String::new();
    writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#).unwrap();
    writeln!(s, r#"<rect width="{width}" height="{height}" fill="white"/>"#).unwrap();
    writeln!(s, r#"<text x="{}" y="20" font-family="sans-serif" font-size="13" text-anchor="middle">{}</text>"#, width / 2.0, escape(title)).unwrap();
    writeln!(s, r#"<rect x="{MARGIN_PX}" y="{MARGIN_PX}" width="{pw}" height="{ph}" fill="none" stroke="black" stroke-width="0.8"/>"#).unwrap();
    for t in 0..=4 {
        let v = lo + (hi - lo) * t as f64 / 4.0;
        writeln!(s, r#"<text x="{}" y="{}" font-family="sans-serif" font-size="9" text-anchor="end">{v:.2}</text>"#, MARGIN_PX - 4.0, py(v) + 3.0).unwrap();
        let k = (steps - 1) * t / 4;
        writeln!(s, r#"<text x="{}" y="{}" font-family="sans-serif" font-size="9" text-anchor="middle">{k}</text>"#, px(k), height - MARGIN_PX + 12.0).unwrap();
    }
    writeln!(s, r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">step</text>"#, width / 2.0, height - MARGIN_PX + 30.0).unwrap();
    writeln!(s, r#"<text x="16" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#, height / 2.0, height / 2.0, escape(y_label)).unwrap();
    for (idx, (label, values)) in series.iter().enumerate() {
        let color = SERIES_COLORS[idx % SERIES_COLORS.len()];
        let points: Vec<String> = values
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_finite())
            .map(|(k, &v)| format!("{:.2},{:.2}", px(k), py(v)))
            .collect();
        writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, points.join(" ")).unwrap();
        let ly = MARGIN_PX + 14.0 + 14.0 * idx as f64;
        writeln!(s, r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="{color}" stroke-width="2"/>"#, width - MARGIN_PX - 150.0, ly - 4.0, width - MARGIN_PX - 130.0, ly - 4.0).unwrap();
        writeln!(s, r#"<text x="{}" y="{ly}" font-family="sans-serif" font-size="10">{}</text>"#, width - MARGIN_PX - 125.0, escape(label)).unwrap();
    }
    s.push_str("</svg>\n");
    s
}
