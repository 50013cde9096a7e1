//! Minimal SVG line charts of CSV columns against `t`.

use std::fmt::Write;

use crate::error::{Error, Result};

pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: Vec<String> = lines
            .next()
            .ok_or_else(|| Error::Invalid("empty CSV file".into()))?
            .split(',')
            .map(|s| s.trim().to_string())
            .collect();
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            let row = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Invalid(format!("CSV row {}: {e}", i + 2)))?;
            if row.len() != header.len() {
                return Err(Error::Invalid(format!(
                    "CSV row {} has {} fields, header has {}",
                    i + 2,
                    row.len(),
                    header.len()
                )));
            }
            rows.push(row);
        }
        Ok(Self { header, rows })
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let idx = self
            .header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Invalid(format!("no column `{name}` (have {})", self.header.join(", "))))?;
        Ok(self.rows.iter().map(|r| r[idx]).collect())
    }
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const MARGIN: f64 = 64.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Renders `cols` of `table` against its `t` column. With `log` the y axis is
/// logarithmic and non-positive values are dropped.
pub fn render_svg(table: &Table, cols: &[String], log: bool) -> Result<String> {
    if cols.is_empty() {
        return Err(Error::Invalid("no columns to plot".into()));
    }
    let t = table.column("t")?;
    let ty = |v: f64| if log { v.log10() } else { v };
    let mut series = Vec::new();
    for name in cols {
        let pts: Vec<(f64, f64)> = t
            .iter()
            .zip(table.column(name)?)
            .filter(|(x, y)| x.is_finite() && y.is_finite() && (!log || *y > 0.0))
            .map(|(&x, y)| (x, ty(y)))
            .collect();
        series.push((name.as_str(), pts));
    }
    let all = || series.iter().flat_map(|(_, p)| p.iter());
    let (mut x0, mut x1) = all().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.0), b.max(p.0)));
    let (mut y0, mut y1) = all().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.1), b.max(p.1)));
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 == x0 {
        x1 = x0 + 1.0;
    }
    if y1 == y0 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let px = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let py = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);
    let label = |y: f64| if log { format!("1e{y:.1}") } else { format!("{y:.3e}") };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    );
    let text = |s: &mut String, x: f64, y: f64, anchor: &str, body: &str| {
        let _ = writeln!(
            s,
            r#"<text x="{x:.1}" y="{y:.1}" font-family="sans-serif" font-size="12" text-anchor="{anchor}">{body}</text>"#
        );
    };
    text(&mut s, MARGIN, HEIGHT - MARGIN + 18.0, "start", &format!("{x0:.3e}"));
    text(&mut s, WIDTH - MARGIN, HEIGHT - MARGIN + 18.0, "end", &format!("{x1:.3e}"));
    text(&mut s, WIDTH / 2.0, HEIGHT - 16.0, "middle", "t");
    text(&mut s, MARGIN - 6.0, HEIGHT - MARGIN, "end", &label(y0));
    text(&mut s, MARGIN - 6.0, MARGIN + 4.0, "end", &label(y1));
    for (i, (name, pts)) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            path.join(" ")
        );
        let ly = MARGIN + 16.0 + 16.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#,
            WIDTH - MARGIN - 90.0,
            WIDTH - MARGIN - 70.0
        );
        let title = if log { format!("log10 {name}") } else { name.to_string() };
        text(&mut s, WIDTH - MARGIN - 64.0, ly + 4.0, "start", &title);
    }
    s.push_str("</svg>\n");
    Ok(s)
}
