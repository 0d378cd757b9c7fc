//! CSV and SVG output.

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EmitError {
    #[error("nothing to emit: no rows")]
    Empty,
    #[error("row {row} has {found} cells, header has {expected}")]
    Ragged { row: usize, expected: usize, found: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Int(i64),
    Real(f64),
    Text(String),
    Bool(bool),
}

impl Cell {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Int(i) => Some(*i as f64),
            Cell::Real(x) => Some(*x),
            _ => None,
        }
    }
}

/// Twelve significant digits, scientific notation.
pub fn format_real(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.11e}")
    } else {
        x.to_string()
    }
}

impl std::fmt::Display for Cell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Cell::Int(i) => write!(f, "{i}"),
            Cell::Real(x) => f.write_str(&format_real(*x)),
            Cell::Text(s) => f.write_str(s),
            Cell::Bool(b) => write!(f, "{b}"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.header.iter().position(|h| h == name)?;
        self.rows.iter().map(|r| r[idx].as_f64()).collect()
    }
}

pub fn render_csv(table: &Table) -> Result<String, EmitError> {
    if table.rows.is_empty() {
        return Err(EmitError::Empty);
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&table.header)?;
    for (i, row) in table.rows.iter().enumerate() {
        if row.len() != table.header.len() {
            return Err(EmitError::Ragged {
                row: i,
                expected: table.header.len(),
                found: row.len(),
            });
        }
        w.write_record(row.iter().map(Cell::to_string))?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn emit_csv(path: &Path, table: &Table) -> Result<(), EmitError> {
    std::fs::write(path, render_csv(table)?)?;
    Ok(())
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 60.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Single-polyline line plot with labelled axes and min/max ticks.
pub fn render_svg(points: &[(f64, f64)], x_label: &str, y_label: &str) -> Result<String, EmitError> {
    if points.is_empty() {
        return Err(EmitError::Empty);
    }
    let range = |vals: Vec<f64>| {
        let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if hi > lo {
            (lo, hi)
        } else {
            (lo - 0.5, lo + 0.5)
        }
    };
    let (x0, x1) = range(points.iter().map(|p| p.0).collect());
    let (y0, y1) = range(points.iter().map(|p| p.1).collect());
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let (left, right, top, bottom) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
    let _ = writeln!(
        svg,
        r#"<path d="M{left} {top} L{left} {bottom} L{right} {bottom}" fill="none" stroke="black"/>"#
    );
    let vertices: Vec<String> = points
        .iter()
        .map(|&(x, y)| format!("{:.3},{:.3}", sx(x), sy(y)))
        .collect();
    let _ = writeln!(
        svg,
        r#"<polyline points="{}" fill="none" stroke="steelblue" stroke-width="2"/>"#,
        vertices.join(" ")
    );
    let text = |svg: &mut String, x: f64, y: f64, anchor: &str, body: &str, extra: &str| {
        let _ = writeln!(
            svg,
            r#"<text x="{x:.1}" y="{y:.1}" text-anchor="{anchor}" font-family="sans-serif" font-size="12"{extra}>{}</text>"#,
            escape(body)
        );
    };
    text(&mut svg, left, bottom + 16.0, "middle", &format!("{x0:.4e}"), "");
    text(&mut svg, right, bottom + 16.0, "middle", &format!("{x1:.4e}"), "");
    text(&mut svg, left - 6.0, bottom, "end", &format!("{y0:.3e}"), "");
    text(&mut svg, left - 6.0, top, "end", &format!("{y1:.3e}"), "");
    text(&mut svg, WIDTH / 2.0, HEIGHT - 12.0, "middle", x_label, "");
    let (cx, cy) = (16.0, HEIGHT / 2.0);
    text(
        &mut svg,
        cx,
        cy,
        "middle",
        y_label,
        &format!(r#" transform="rotate(-90 {cx} {cy})""#),
    );
    svg.push_str("</svg>\n");
    Ok(svg)
}

pub fn emit_svg(path: &Path, points: &[(f64, f64)], x_label: &str, y_label: &str) -> Result<(), EmitError> {
    std::fs::write(path, render_svg(points, x_label, y_label)?)?;
    Ok(())
}
