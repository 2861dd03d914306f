//! CSV, JSON and SVG artifacts written by the command-line runners.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::analysis::{CwtMap, Snapshot};
use crate::error::{Result, WaveError};
use crate::laplace::TimeSeriesField;

/// Nine significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.8e}")
}

/// Plain comma-separated table with a header row.
#[derive(Debug, Clone, Default)]
pub struct CsvTable {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.header.iter().map(|h| quote(h)).collect::<Vec<_>>().join(","));
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }
}

fn quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Time in the first column, one column per channel.
pub fn field_csv(field: &TimeSeriesField) -> String {
    let mut t = CsvTable::new(std::iter::once("t_s".to_string()).chain(field.labels.iter().cloned()));
    for i in 0..field.len() {
        let mut row = vec![fmt_f64(i as f64 * field.dt)];
        row.extend(field.values.iter().map(|v| fmt_f64(v[i])));
        t.push(row);
    }
    t.render()
}

/// Position in the first column, one column per snapshot time.
pub fn snapshots_csv(snaps: &[Snapshot]) -> String {
    let Some(first) = snaps.first() else {
        return "x_m\n".into();
    };
    let mut t = CsvTable::new(std::iter::once("x_m".to_string()).chain(snaps.iter().map(|s| format!("t={}", fmt_f64(s.time)))));
    for (j, &x) in first.positions.iter().enumerate() {
        let mut row = vec![fmt_f64(x)];
        row.extend(snaps.iter().map(|s| fmt_f64(s.values[j])));
        t.push(row);
    }
    t.render()
}

/// `(t, f, magnitude)` triples.
pub fn cwt_csv(map: &CwtMap) -> String {
    let mut t = CsvTable::new(["t_s", "f_hz", "magnitude"]);
    let n = map.magnitude.first().map_or(0, Vec::len);
    for i in 0..n {
        for (fi, &f) in map.frequencies.iter().enumerate() {
            t.push(vec![fmt_f64(i as f64 * map.dt), fmt_f64(f), fmt_f64(map.magnitude[fi][i])]);
        }
    }
    t.render()
}

/// One named curve of a line plot.
#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl Series {
    pub fn new(label: impl Into<String>, x: Vec<f64>, y: Vec<f64>) -> Self {
        Self {
            label: label.into(),
            x,
            y,
        }
    }

    /// Channel `i` of a field against time in milliseconds.
    pub fn from_field(field: &TimeSeriesField, i: usize, label: impl Into<String>) -> Self {
        let x = (0..field.len()).map(|n| n as f64 * field.dt * 1e3).collect();
        Self::new(label, x, field.values[i].clone())
    }
}

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

/// Static SVG line plot.
pub fn line_plot(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let (w, h) = (800.0, 480.0);
    let (left, right, top, bottom) = (80.0, 170.0, 40.0, 60.0);
    let pw = w - left - right;
    let ph = h - top - bottom;
    let finite = |v: &&f64| v.is_finite();
    let xs = series.iter().flat_map(|s| s.x.iter()).filter(finite);
    let (x0, x1) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let ys = series.iter().flat_map(|s| s.y.iter()).filter(finite);
    let (mut y0, mut y1) = ys.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let (x0, x1) = if x0.is_finite() && x1 > x0 { (x0, x1) } else { (0.0, 1.0) };
    if !(y0.is_finite() && y1 > y0) {
        let c = if y0.is_finite() { y0 } else { 0.0 };
        y0 = c - 1.0;
        y1 = c + 1.0;
    }
    let pad = 0.05 * (y1 - y0);
    let (y0, y1) = (y0 - pad, y1 + pad);
    let px = |x: f64| left + (x - x0) / (x1 - x0) * pw;
    let py = |y: f64| top + (y1 - y) / (y1 - y0) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#, left + pw / 2.0, escape(title));
    let _ = writeln!(s, r#"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
    for i in 0..=4 {
        let fx = x0 + (x1 - x0) * i as f64 / 4.0;
        let fy = y0 + (y1 - y0) * i as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            px(fx),
            top + ph + 18.0,
            tick(fx)
        );
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#, left - 6.0, py(fy) + 4.0, tick(fy));
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, left + pw / 2.0, h - 16.0, escape(x_label));
    let _ = writeln!(
        s,
        r#"<text x="18" y="{0}" text-anchor="middle" transform="rotate(-90 18 {0})">{1}</text>"#,
        top + ph / 2.0,
        escape(y_label)
    );
    for (k, ser) in series.iter().enumerate() {
        let colour = PALETTE[k % PALETTE.len()];
        let pts: Vec<String> = ser
            .x
            .iter()
            .zip(&ser.y)
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|(&x, &y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        let _ = writeln!(s, r#"<polyline fill="none" stroke="{colour}" stroke-width="1.2" points="{}"/>"#, pts.join(" "));
        let ly = top + 16.0 + 18.0 * k as f64;
        let lx = left + pw + 12.0;
        let _ = writeln!(s, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{colour}" stroke-width="2"/>"#, lx + 20.0);
        let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, lx + 26.0, ly + 4.0, escape(&ser.label));
    }
    s.push_str("</svg>\n");
    s
}

fn tick(v: f64) -> String {
    if v == 0.0 || (1e-2..1e4).contains(&v.abs()) {
        format!("{v:.3}")
    } else {
        format!("{v:.2e}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Output directory; created on first write.
#[derive(Debug, Clone)]
pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn create(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(|e| WaveError::Io(format!("cannot create {}: {e}", root.display())))?;
        Ok(Self { root })
    }

    pub fn path(&self) -> &Path {
        &self.root
    }

    pub fn write(&self, name: &str, contents: &str) -> Result<PathBuf> {
        let p = self.root.join(name);
        fs::write(&p, contents).map_err(|e| WaveError::Io(format!("cannot write {}: {e}", p.display())))?;
        log::info!("wrote {}", p.display());
        Ok(p)
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf> {
        let text = serde_json::to_string_pretty(value).map_err(|e| WaveError::Io(e.to_string()))?;
        self.write(name, &(text + "\n"))
    }
}
