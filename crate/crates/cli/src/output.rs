//! Artifacts: CSV tables, minimal SVG plots and the run manifest.
//!
//! Commands build artifacts in memory so identical runs can be compared byte
//! for byte before anything touches the disk.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

pub const MANIFEST_SCHEMA: u32 = 1;
pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

/// Floats are written with Rust's shortest round-trip formatting, which is
/// deterministic.
pub struct Table {
    writer: csv::Writer<Vec<u8>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Table {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(header).expect("writing to memory");
        Table { writer }
    }

    pub fn row<I, S>(&mut self, fields: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields).expect("writing to memory");
    }

    pub fn finish(self, name: &str) -> Artifact {
        Artifact {
            name: name.into(),
            bytes: self.writer.into_inner().expect("flushing to memory"),
        }
    }
}

pub fn num(x: f64) -> String {
    format!("{x}")
}

pub fn join(v: &[f64]) -> String {
    v.iter().map(|x| num(*x)).collect::<Vec<_>>().join(" ")
}

/// A plot in data coordinates, mapped onto a fixed canvas.
pub struct Svg {
    lo: [f64; 2],
    hi: [f64; 2],
    body: String,
}

const SIZE: f64 = 480.0;
const MARGIN: f64 = 40.0;

impl Svg {
    /// Bounds are padded so degenerate extents still draw.
    pub fn new(points: &[[f64; 2]]) -> Svg {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in points {
            for a in 0..2 {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
        for a in 0..2 {
            if !lo[a].is_finite() {
                (lo[a], hi[a]) = (0.0, 1.0);
            }
            let pad = ((hi[a] - lo[a]) * 0.05).max(1e-3);
            lo[a] -= pad;
            hi[a] += pad;
        }
        Svg { lo, hi, body: String::new() }
    }

    fn map(&self, p: [f64; 2]) -> (f64, f64) {
        let w = SIZE - 2.0 * MARGIN;
        let x = MARGIN + (p[0] - self.lo[0]) / (self.hi[0] - self.lo[0]) * w;
        let y = SIZE - MARGIN - (p[1] - self.lo[1]) / (self.hi[1] - self.lo[1]) * w;
        (x, y)
    }

    fn coords(&self, pts: &[[f64; 2]]) -> String {
        pts.iter()
            .map(|&p| {
                let (x, y) = self.map(p);
                format!("{x:.2},{y:.2}")
            })
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn points(&mut self, pts: &[[f64; 2]], color: &str) {
        for &p in pts {
            let (x, y) = self.map(p);
            let _ = writeln!(self.body, r#"<circle cx="{x:.2}" cy="{y:.2}" r="1.5" fill="{color}"/>"#);
        }
    }

    pub fn polyline(&mut self, pts: &[[f64; 2]], color: &str) {
        let c = self.coords(pts);
        let _ = writeln!(self.body, r#"<polyline points="{c}" fill="none" stroke="{color}" stroke-width="1"/>"#);
    }

    pub fn polygon(&mut self, pts: &[[f64; 2]], color: &str) {
        let c = self.coords(pts);
        let _ = writeln!(
            self.body,
            r#"<polygon points="{c}" fill="{color}" fill-opacity="0.15" stroke="{color}" stroke-width="1.5"/>"#
        );
    }

    pub fn finish(self, name: &str, title: &str, x_label: &str, y_label: &str) -> Artifact {
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let (x0, y0) = (MARGIN, SIZE - MARGIN);
        let _ = writeln!(
            s,
            r#"<path d="M{x0},{} V{y0} H{}" fill="none" stroke="black"/>"#,
            MARGIN,
            SIZE - MARGIN
        );
        let _ = writeln!(s, r#"<text x="{}" y="20" font-size="14" text-anchor="middle">{}</text>"#, SIZE / 2.0, escape(title));
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">{}</text>"#,
            SIZE / 2.0,
            SIZE - 8.0,
            escape(x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="12" y="{}" font-size="12" text-anchor="middle" transform="rotate(-90 12 {})">{}</text>"#,
            SIZE / 2.0,
            SIZE / 2.0,
            escape(y_label)
        );
        for (x, anchor, label) in [(MARGIN, "start", self.lo[0]), (SIZE - MARGIN, "end", self.hi[0])] {
            let _ = writeln!(s, r#"<text x="{x}" y="{}" font-size="10" text-anchor="{anchor}">{label:.3}</text>"#, SIZE - MARGIN + 14.0);
        }
        for (y, label) in [(SIZE - MARGIN, self.lo[1]), (MARGIN, self.hi[1])] {
            let _ = writeln!(s, r#"<text x="{}" y="{y}" font-size="10" text-anchor="end">{label:.3}</text>"#, MARGIN - 4.0);
        }
        s.push_str(&self.body);
        s.push_str("</svg>\n");
        Artifact {
            name: name.into(),
            bytes: s.into_bytes(),
        }
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Lift a vector of dimension 1 or 2 to plot coordinates.
pub fn plane(v: &[f64]) -> [f64; 2] {
    [v.first().copied().unwrap_or(0.0), v.get(1).copied().unwrap_or(0.0)]
}

#[derive(Clone, Debug, Serialize)]
pub struct FileEntry {
    pub name: String,
    pub bytes: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub catalog: String,
    pub params: Value,
    pub status: &'static str,
    pub exit_code: i32,
    pub failure: Option<String>,
    pub results: Value,
    pub files: Vec<FileEntry>,
}

impl Manifest {
    pub fn new(command: &str, catalog: &str, params: Value) -> Manifest {
        Manifest {
            schema_version: MANIFEST_SCHEMA,
            tool: "ergokit",
            version: env!("CARGO_PKG_VERSION"),
            command: command.into(),
            catalog: catalog.into(),
            params,
            status: "ok",
            exit_code: 0,
            failure: None,
            results: Value::Null,
            files: Vec::new(),
        }
    }

    pub fn to_artifact(&self) -> Artifact {
        let mut bytes = serde_json::to_vec_pretty(self).expect("manifest serializes");
        bytes.push(b'\n');
        Artifact {
            name: MANIFEST_NAME.into(),
            bytes,
        }
    }
}

/// Write artifacts under `dir`, creating it if needed.
pub fn write_all(dir: &Path, artifacts: &[Artifact]) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    for a in artifacts {
        std::fs::write(dir.join(&a.name), &a.bytes)?;
    }
    Ok(())
}
