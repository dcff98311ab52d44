//! CSV tables and minimal SVG line charts.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::CliError;

pub const OUT_DIR_ENV: &str = "RLMIX_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "rlmix-out";

/// Where files go and how they are named.
#[derive(Debug, Clone)]
pub struct Sink {
    pub dir: PathBuf,
    pub prefix: String,
    pub plot: bool,
    written: Vec<PathBuf>,
}

impl Sink {
    pub fn new(dir: PathBuf, prefix: String, plot: bool) -> Self {
        Self { dir, prefix, plot, written: Vec::new() }
    }

    /// Command-line flag, then config, then environment, then the default.
    pub fn resolve_dir(flag: Option<&Path>, config: Option<&Path>) -> PathBuf {
        flag.map(Path::to_path_buf)
            .or_else(|| config.map(Path::to_path_buf))
            .or_else(|| std::env::var_os(OUT_DIR_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
    }

    pub fn child(&self, name: &str) -> Self {
        Self::new(self.dir.join(name), self.prefix.clone(), self.plot)
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(format!("{}{name}", self.prefix))
    }

    pub fn write_table(&mut self, name: &str, table: &Table) -> Result<PathBuf, CliError> {
        let path = self.path(&format!("{name}.csv"));
        self.ensure_dir()?;
        let mut w = csv::Writer::from_path(&path).map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
        let io = |e: csv::Error| CliError::io(format!("{}: {e}", path.display()));
        w.write_record(&table.header).map_err(io)?;
        for row in &table.rows {
            w.write_record(row).map_err(io)?;
        }
        w.flush().map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
        self.written.push(path.clone());
        Ok(path)
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> Result<PathBuf, CliError> {
        let path = self.path(name);
        self.ensure_dir()?;
        fs::write(&path, text).map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
        self.written.push(path.clone());
        Ok(path)
    }

    pub fn write_plot(&mut self, name: &str, chart: &Chart) -> Result<Option<PathBuf>, CliError> {
        if !self.plot {
            return Ok(None);
        }
        self.write_text(&format!("{name}.svg"), &chart.render()).map(Some)
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    pub fn absorb(&mut self, other: Sink) {
        self.written.extend(other.written);
    }

    fn ensure_dir(&self) -> Result<(), CliError> {
        fs::create_dir_all(&self.dir).map_err(|e| CliError::io(format!("{}: {e}", self.dir.display())))
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        Self { header: header.iter().map(|s| s.as_ref().to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }
}

pub fn num(x: f64) -> String {
    if x == 0.0 || (x.is_finite() && (1e-4..1e15).contains(&x.abs())) {
        format!("{x}")
    } else if x.is_finite() {
        format!("{x:e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

#[derive(Debug, Clone)]
pub struct Line {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    pub lines: Vec<Line>,
}

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

impl Chart {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Self {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            log_x: false,
            log_y: false,
            lines: Vec::new(),
        }
    }

    pub fn line(mut self, label: &str, points: Vec<(f64, f64)>) -> Self {
        self.lines.push(Line { label: label.into(), points });
        self
    }

    pub fn render(&self) -> String {
        let (w, h) = (640.0, 420.0);
        let (left, right, top, bottom) = (70.0, 150.0, 40.0, 50.0);
        let tx = |x: f64| if self.log_x { x.log10() } else { x };
        let ty = |y: f64| if self.log_y { y.log10() } else { y };
        let usable = |x: f64, y: f64| x.is_finite() && y.is_finite() && (!self.log_x || x > 0.0) && (!self.log_y || y > 0.0);
        let pts: Vec<(f64, f64)> =
            self.lines.iter().flat_map(|l| l.points.iter()).filter(|(x, y)| usable(*x, *y)).map(|(x, y)| (tx(*x), ty(*y))).collect();
        let span = |vals: Vec<f64>| {
            let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            match (lo.is_finite(), hi > lo) {
                (false, _) => (0.0, 1.0),
                (true, true) => (lo, hi),
                (true, false) => (lo - 0.5, lo + 0.5),
            }
        };
        let (x0, x1) = span(pts.iter().map(|p| p.0).collect());
        let (y0, y1) = span(pts.iter().map(|p| p.1).collect());
        let (pw, ph) = (w - left - right, h - top - bottom);
        let sx = |x: f64| left + (x - x0) / (x1 - x0) * pw;
        let sy = |y: f64| top + ph - (y - y0) / (y1 - y0) * ph;

        let mut s = String::new();
        let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="11">"#);
        let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
        let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="13">{}</text>"#, left + pw / 2.0, escape(&self.title));
        let _ = writeln!(s, r#"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
        for i in 0..=4 {
            let f = i as f64 / 4.0;
            let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
            let label = |v: f64, log: bool| if log { format!("1e{v:.1}") } else { format!("{v:.3}") };
            let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, sx(xv), top + ph + 15.0, label(xv, self.log_x));
            let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#, left - 5.0, sy(yv) + 4.0, label(yv, self.log_y));
        }
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, left + pw / 2.0, h - 12.0, escape(&self.x_label));
        let _ = writeln!(
            s,
            r#"<text x="15" y="{y}" text-anchor="middle" transform="rotate(-90 15 {y})">{}</text>"#,
            escape(&self.y_label),
            y = top + ph / 2.0
        );
        for (i, line) in self.lines.iter().enumerate() {
            let colour = PALETTE[i % PALETTE.len()];
            let mut d = String::new();
            let mut pen_down = false;
            for &(x, y) in &line.points {
                if !usable(x, y) {
                    pen_down = false;
                    continue;
                }
                let _ = write!(d, "{}{:.2},{:.2} ", if pen_down { "L" } else { "M" }, sx(tx(x)), sy(ty(y)));
                pen_down = true;
            }
            let _ = writeln!(s, r#"<path d="{}" fill="none" stroke="{colour}" stroke-width="1.5"/>"#, d.trim_end());
            let ly = top + 12.0 + 16.0 * i as f64;
            let _ = writeln!(s, r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{colour}" stroke-width="2"/>"#, w - right + 10.0, w - right + 30.0);
            let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, w - right + 35.0, ly + 4.0, escape(&line.label));
        }
        s.push_str("</svg>\n");
        s
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
