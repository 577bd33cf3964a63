//! CSV and SVG emission for metrics tables.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{BonusError, Result};

use super::metrics::{MeanSe, MetricsRow, MetricsTable};

pub const CSV_HEADER: [&str; 7] = [
    "procedure",
    "alpha",
    "replication",
    "fdp",
    "power",
    "rejections",
    "runtime_ms",
];

fn csv_err(path: &Path, e: csv::Error) -> BonusError {
    let row = e.position().map_or(0, |p| p.line() as usize);
    BonusError::Csv {
        path: path.to_path_buf(),
        row,
        message: e.to_string(),
    }
}

pub fn write_csv<W: std::io::Write>(table: &MetricsTable, out: W) -> std::result::Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in &table.rows {
        w.write_record([
            r.procedure.clone(),
            r.alpha.to_string(),
            r.replication.to_string(),
            r.fdp.to_string(),
            r.power.to_string(),
            r.rejections.to_string(),
            r.runtime_ms.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_csv(table: &MetricsTable, path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| BonusError::io(path, e))?;
    write_csv(table, file).map_err(|e| csv_err(path, e))
}

pub fn read_csv(path: &Path) -> Result<MetricsTable> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let header = rdr.headers().map_err(|e| csv_err(path, e))?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(BonusError::Csv {
            path: path.to_path_buf(),
            row: 1,
            message: format!("unexpected header {:?}", header.iter().collect::<Vec<_>>()),
        });
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = i + 2;
        let bad = |col: &str| BonusError::Csv {
            path: path.to_path_buf(),
            row: line,
            message: format!("column {col} is not numeric"),
        };
        rows.push(MetricsRow {
            procedure: rec[0].to_string(),
            alpha: rec[1].parse().map_err(|_| bad("alpha"))?,
            replication: rec[2].parse().map_err(|_| bad("replication"))?,
            fdp: rec[3].parse().map_err(|_| bad("fdp"))?,
            power: rec[4].parse().map_err(|_| bad("power"))?,
            rejections: rec[5].parse().map_err(|_| bad("rejections"))?,
            runtime_ms: rec[6].parse().map_err(|_| bad("runtime_ms"))?,
            detail: String::new(),
            error: None,
        });
    }
    Ok(MetricsTable::new(rows))
}

/// Mean FDP and power per alpha for one procedure.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub procedure: String,
    pub points: Vec<(f64, MeanSe, MeanSe)>,
}

pub fn plot_series(table: &MetricsTable) -> Vec<Series> {
    let aggs = table.aggregates();
    table
        .procedures()
        .into_iter()
        .map(|p| Series {
            points: aggs
                .iter()
                .filter(|a| a.procedure == p && a.runs > 0)
                .map(|a| (a.alpha, a.fdp, a.power))
                .collect(),
            procedure: p,
        })
        .collect()
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];
const PANEL_W: f64 = 360.0;
const PANEL_H: f64 = 260.0;
const MARGIN: f64 = 48.0;
const LEGEND_H: f64 = 20.0;

struct Panel {
    left: f64,
    x_min: f64,
    x_max: f64,
}

impl Panel {
    fn x(&self, alpha: f64) -> f64 {
        self.left + MARGIN + (alpha - self.x_min) / (self.x_max - self.x_min) * PANEL_W
    }

    fn y(v: f64) -> f64 {
        MARGIN + (1.0 - v.clamp(0.0, 1.0)) * PANEL_H
    }
}

/// SVG with mean FDP (left) and mean power (right) against alpha, shaded
/// ±2SE bands, and the `FDP = α` reference line.
pub fn render_svg(table: &MetricsTable, title: &str) -> String {
    let series = plot_series(table);
    let alphas: Vec<f64> = series.iter().flat_map(|s| s.points.iter().map(|p| p.0)).collect();
    let (mut x_min, mut x_max) = alphas
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &a| (lo.min(a), hi.max(a)));
    if !x_min.is_finite() {
        (x_min, x_max) = (0.0, 1.0);
    }
    if x_max - x_min < 1e-12 {
        x_min = (x_min - 0.01).max(0.0);
        x_max += 0.01;
    }
    let width = 2.0 * (PANEL_W + 2.0 * MARGIN);
    let height = PANEL_H + 2.0 * MARGIN + LEGEND_H * series.len() as f64 + 10.0;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="18" text-anchor="middle" font-size="13">{}</text>"#,
        width / 2.0,
        escape(title)
    );
    for (panel_idx, label) in ["mean FDP", "mean power"].iter().enumerate() {
        let panel = Panel {
            left: panel_idx as f64 * (PANEL_W + 2.0 * MARGIN),
            x_min,
            x_max,
        };
        axes(&mut s, &panel, label);
        if panel_idx == 0 {
            let _ = writeln!(
                s,
                r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#999" stroke-dasharray="4,3"/>"##,
                panel.x(x_min),
                Panel::y(x_min),
                panel.x(x_max),
                Panel::y(x_max)
            );
        }
        for (i, ser) in series.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            let pick = |p: &(f64, MeanSe, MeanSe)| if panel_idx == 0 { p.1 } else { p.2 };
            let upper: Vec<String> = ser
                .points
                .iter()
                .map(|p| format!("{:.2},{:.2}", panel.x(p.0), Panel::y(pick(p).mean + 2.0 * pick(p).se)))
                .collect();
            let lower: Vec<String> = ser
                .points
                .iter()
                .rev()
                .map(|p| format!("{:.2},{:.2}", panel.x(p.0), Panel::y(pick(p).mean - 2.0 * pick(p).se)))
                .collect();
            let _ = writeln!(
                s,
                r#"<polygon points="{} {}" fill="{color}" fill-opacity="0.15" stroke="none"/>"#,
                upper.join(" "),
                lower.join(" ")
            );
            let line: Vec<String> = ser
                .points
                .iter()
                .map(|p| format!("{:.2},{:.2}", panel.x(p.0), Panel::y(pick(p).mean)))
                .collect();
            let _ = writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.8"/>"#,
                line.join(" ")
            );
            for p in &ser.points {
                let _ = writeln!(
                    s,
                    r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}"><title>{} alpha={} mean={:.6} se={:.6}</title></circle>"#,
                    panel.x(p.0),
                    Panel::y(pick(p).mean),
                    escape(&ser.procedure),
                    p.0,
                    pick(p).mean,
                    pick(p).se
                );
            }
        }
    }
    let legend_top = PANEL_H + 2.0 * MARGIN + 4.0;
    for (i, ser) in series.iter().enumerate() {
        let y = legend_top + i as f64 * LEGEND_H;
        let color = PALETTE[i % PALETTE.len()];
        let _ = writeln!(
            s,
            r#"<line x1="{MARGIN:.0}" y1="{y:.1}" x2="{:.0}" y2="{y:.1}" stroke="{color}" stroke-width="3"/>"#,
            MARGIN + 24.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.0}" y="{:.1}">{}</text>"#,
            MARGIN + 30.0,
            y + 4.0,
            escape(&ser.procedure)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn axes(s: &mut String, panel: &Panel, label: &str) {
    let x0 = panel.left + MARGIN;
    let y0 = MARGIN + PANEL_H;
    let _ = writeln!(
        s,
        r#"<rect x="{x0:.1}" y="{MARGIN:.1}" width="{PANEL_W:.1}" height="{PANEL_H:.1}" fill="none" stroke="black"/>"#
    );
    for i in 0..=4 {
        let v = i as f64 / 4.0;
        let y = Panel::y(v);
        let _ = writeln!(
            s,
            r##"<line x1="{:.1}" y1="{y:.1}" x2="{x0:.1}" y2="{y:.1}" stroke="black"/><text x="{:.1}" y="{:.1}" text-anchor="end">{v:.2}</text>"##,
            x0 - 4.0,
            x0 - 6.0,
            y + 4.0
        );
        let a = panel.x_min + v * (panel.x_max - panel.x_min);
        let x = panel.x(a);
        let _ = writeln!(
            s,
            r##"<line x1="{x:.1}" y1="{y0:.1}" x2="{x:.1}" y2="{:.1}" stroke="black"/><text x="{x:.1}" y="{:.1}" text-anchor="middle">{a:.3}</text>"##,
            y0 + 4.0,
            y0 + 16.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">alpha</text>"#,
        x0 + PANEL_W / 2.0,
        y0 + 32.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{label}</text>"#,
        x0 + PANEL_W / 2.0,
        MARGIN - 8.0
    );
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn emit_plot(table: &MetricsTable, path: &Path) -> Result<()> {
    let title = path.file_stem().and_then(|s| s.to_str()).unwrap_or("metrics");
    fs::write(path, render_svg(table, title)).map_err(|e| BonusError::io(path, e))
}
