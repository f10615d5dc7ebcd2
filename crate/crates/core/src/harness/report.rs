//! Output bundles: atomic file writes, a hashed manifest, and SVG line plots.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const MANIFEST_NAME: &str = "manifest.json";
pub const TOOL_NAME: &str = "fracwave";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileRecord {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub parallel: bool,
    pub inputs: serde_json::Value,
    pub files: Vec<FileRecord>,
    pub failures: Vec<String>,
    pub status: String,
}

impl Manifest {
    pub fn read(dir: &Path) -> Result<Manifest> {
        let path = dir.join(MANIFEST_NAME);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Output format for tabular results.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest.iter() {
        let _ = write!(out, "{b:02x}");
    }
    out
}

/// Write `contents` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(contents).map_err(|e| Error::io(tmp.path(), e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(tmp.path(), e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

/// A directory of results tracked by a manifest.
///
/// Opening a non-empty directory succeeds only when it already holds a
/// manifest written by this tool; the files it lists are removed first.
#[derive(Debug)]
pub struct Bundle {
    dir: PathBuf,
    command: String,
    inputs: serde_json::Value,
    files: Vec<FileRecord>,
    failures: Vec<String>,
    format: Format,
}

impl Bundle {
    pub fn create(dir: impl Into<PathBuf>, command: &str, inputs: serde_json::Value, format: Format) -> Result<Bundle> {
        let dir = dir.into();
        if dir.exists() {
            let mut entries = fs::read_dir(&dir).map_err(|e| Error::io(&dir, e))?;
            if entries.next().is_some() {
                let old = Manifest::read(&dir).map_err(|_| {
                    Error::Parameter(format!(
                        "refusing to write into non-empty directory {} without a {TOOL_NAME} manifest",
                        dir.display()
                    ))
                })?;
                if old.tool != TOOL_NAME {
                    return Err(Error::Parameter(format!(
                        "{} holds a manifest from `{}`, not {TOOL_NAME}",
                        dir.display(),
                        old.tool
                    )));
                }
                for f in &old.files {
                    let p = dir.join(&f.path);
                    if p.exists() {
                        fs::remove_file(&p).map_err(|e| Error::io(&p, e))?;
                    }
                }
            }
        } else {
            fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        }
        Ok(Bundle {
            dir,
            command: command.to_string(),
            inputs,
            files: Vec::new(),
            failures: Vec::new(),
            format,
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn format(&self) -> Format {
        self.format
    }

    pub fn write(&mut self, name: &str, contents: &[u8]) -> Result<()> {
        if name == MANIFEST_NAME || name.contains('/') || name.contains('\\') {
            return Err(Error::Parameter(format!("invalid bundle file name {name:?}")));
        }
        write_atomic(&self.dir.join(name), contents)?;
        self.files.retain(|f| f.path != name);
        self.files.push(FileRecord {
            path: name.to_string(),
            sha256: sha256_hex(contents),
            bytes: contents.len() as u64,
        });
        Ok(())
    }

    pub fn write_json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    /// Write a table as `<stem>.csv` or `<stem>.json` depending on the bundle format.
    pub fn write_table(&mut self, stem: &str, header: &[&str], rows: &[Vec<f64>]) -> Result<String> {
        match self.format {
            Format::Csv => {
                let name = format!("{stem}.csv");
                self.write(&name, table_csv(header, rows).as_bytes())?;
                Ok(name)
            }
            Format::Json => {
                let name = format!("{stem}.json");
                let records: Vec<serde_json::Map<String, serde_json::Value>> = rows
                    .iter()
                    .map(|r| header.iter().map(|h| h.to_string()).zip(r.iter().map(|&v| json_number(v))).collect())
                    .collect();
                self.write_json(&name, &records)?;
                Ok(name)
            }
        }
    }

    pub fn record_failure(&mut self, message: impl Into<String>) {
        self.failures.push(message.into());
    }

    pub fn failures(&self) -> &[String] {
        &self.failures
    }

    /// Write `manifest.json` and return it.
    pub fn finish(mut self) -> Result<Manifest> {
        self.files.sort_by(|a, b| a.path.cmp(&b.path));
        let manifest = Manifest {
            tool: TOOL_NAME.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: self.command,
            parallel: crate::par::is_parallel(),
            inputs: self.inputs,
            status: if self.failures.is_empty() { "ok" } else { "failed" }.to_string(),
            files: self.files,
            failures: self.failures,
        };
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        write_atomic(&self.dir.join(MANIFEST_NAME), text.as_bytes())?;
        Ok(manifest)
    }
}

fn json_number(v: f64) -> serde_json::Value {
    serde_json::Number::from_f64(v)
        .map(serde_json::Value::Number)
        .unwrap_or_else(|| serde_json::Value::String(format!("{v}")))
}

/// CSV text with full round-trip precision.
pub fn table_csv(header: &[&str], rows: &[Vec<f64>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.17e}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Two-column `param,value` CSV.
pub fn param_value_csv(rows: &[(String, f64)]) -> String {
    let mut out = String::from("param,value\n");
    for (p, v) in rows {
        let _ = writeln!(out, "{p},{v:.17e}");
    }
    out
}

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Standalone SVG with one polyline per series. With `log_y`, non-positive
/// values are dropped and the axis shows `log10 y`.
pub fn line_plot_svg(title: &str, x_label: &str, y_label: &str, series: &[Series], log_y: bool) -> String {
    let (w, h) = (720.0, 480.0);
    let (left, right, top, bottom) = (70.0, 160.0, 40.0, 50.0);
    let transformed: Vec<Vec<(f64, f64)>> = series
        .iter()
        .map(|s| {
            s.points
                .iter()
                .filter(|(x, y)| x.is_finite() && y.is_finite() && (!log_y || *y > 0.0))
                .map(|&(x, y)| (x, if log_y { y.log10() } else { y }))
                .collect()
        })
        .collect();
    let all = transformed.iter().flatten();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 == x0 {
        x1 = x0 + 1.0;
    }
    if y1 == y0 {
        y1 = y0 + 1.0;
    }
    let pw = w - left - right;
    let ph = h - top - bottom;
    let sx = |x: f64| left + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| top + (1.0 - (y - y0) / (y1 - y0)) * ph;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#, left + pw / 2.0, escape(title));
    let _ = writeln!(
        out,
        r#"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let xv = x0 + f * (x1 - x0);
        let yv = y0 + f * (y1 - y0);
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            sx(xv),
            top + ph + 18.0,
            tick(xv)
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            left - 6.0,
            sy(yv) + 4.0,
            tick(yv)
        );
    }
    let y_title = if log_y { format!("log10 {y_label}") } else { y_label.to_string() };
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        left + pw / 2.0,
        h - 12.0,
        escape(x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
        top + ph / 2.0,
        top + ph / 2.0,
        escape(&y_title)
    );
    for (k, (s, pts)) in series.iter().zip(&transformed).enumerate() {
        let colour = PALETTE[k % PALETTE.len()];
        let coords: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{}"/>"#,
            coords.join(" ")
        );
        let ly = top + 16.0 + 18.0 * k as f64;
        let _ = writeln!(
            out,
            r#"<line x1="{:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{colour}" stroke-width="2"/>"#,
            w - right + 10.0,
            w - right + 30.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}">{}</text>"#,
            w - right + 36.0,
            ly + 4.0,
            escape(&s.label)
        );
    }
    out.push_str("</svg>\n");
    out
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.1e}")
    } else {
        format!("{v:.2}")
    }
}
