//! Text formats for data, weights and polygons.
//!
//! CSV files start with `# key=value` metadata lines. Floats are written with
//! the shortest representation that parses back to the same value.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::criterion::{DoseResponseData, WeightedSample};
use crate::error::{Error, Result};
use crate::geometry::{ConvexPolygon, Point};
use crate::kernel::GridData;
use crate::synth::Seed;

struct Parsed<'a> {
    source: &'a str,
    meta: BTreeMap<String, (String, usize)>,
    /// Non-comment, non-empty lines with 1-based line numbers.
    rows: Vec<(usize, &'a str)>,
}

impl<'a> Parsed<'a> {
    fn new(source: &'a str, text: &'a str) -> Result<Self> {
        let mut meta = BTreeMap::new();
        let mut rows = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                for part in rest.split(',') {
                    if let Some((k, v)) = part.split_once('=') {
                        meta.insert(k.trim().to_string(), (v.trim().to_string(), i + 1));
                    }
                }
                continue;
            }
            rows.push((i + 1, line));
        }
        Ok(Parsed { source, meta, rows })
    }

    fn err(&self, line: usize, key: &str, message: impl Into<String>) -> Error {
        Error::Parse { source_name: self.source.to_string(), line, key: key.to_string(), message: message.into() }
    }

    fn meta<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.meta.get(key) {
            None => Ok(None),
            Some((v, line)) => v
                .parse()
                .map(Some)
                .map_err(|e| self.err(*line, key, format!("cannot parse `{v}`: {e}"))),
        }
    }

    fn require_meta<T: std::str::FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        self.meta(key)?.ok_or_else(|| self.err(0, key, "missing metadata"))
    }

    fn header(&self, want: &[&str]) -> Result<&[(usize, &'a str)]> {
        let Some(&(line, head)) = self.rows.first() else {
            return Err(self.err(0, "header", "missing header row"));
        };
        let cols: Vec<&str> = head.split(',').map(str::trim).collect();
        if cols != want {
            return Err(self.err(line, "header", format!("expected `{}`, found `{head}`", want.join(","))));
        }
        Ok(&self.rows[1..])
    }

    fn floats(&self, line: usize, text: &str, names: &[&str]) -> Result<Vec<f64>> {
        let cells: Vec<&str> = text.split(',').map(str::trim).collect();
        if !names.is_empty() && cells.len() != names.len() {
            return Err(self.err(line, "row", format!("expected {} columns, found {}", names.len(), cells.len())));
        }
        cells
            .iter()
            .enumerate()
            .map(|(c, cell)| {
                let key = names.get(c).map(|s| s.to_string()).unwrap_or_else(|| format!("column {}", c + 1));
                let v: f64 = cell.parse().map_err(|e| self.err(line, &key, format!("cannot parse `{cell}`: {e}")))?;
                if !v.is_finite() {
                    return Err(self.err(line, &key, "value must be finite"));
                }
                Ok(v)
            })
            .collect()
    }
}

pub fn dose_response_to_csv(data: &DoseResponseData, seed: Option<Seed>) -> String {
    let mut out = format!("# m={}\n", data.m);
    if let Some(s) = data.sigma0 {
        let _ = writeln!(out, "# sigma0={s}");
    }
    if let Some(s) = seed {
        let _ = writeln!(out, "# seed={}", s.0);
    }
    out.push_str("x,y,ybar\n");
    for (p, y) in data.points.iter().zip(&data.replicate_means) {
        let _ = writeln!(out, "{},{},{}", p.x, p.y, y);
    }
    out
}

pub fn dose_response_from_csv(source: &str, text: &str) -> Result<DoseResponseData> {
    let parsed = Parsed::new(source, text)?;
    let m: usize = parsed.require_meta("m")?;
    let sigma0: Option<f64> = parsed.meta("sigma0")?;
    let names = ["x", "y", "ybar"];
    let mut points = Vec::new();
    let mut means = Vec::new();
    for &(line, row) in parsed.header(&names)? {
        let v = parsed.floats(line, row, &names)?;
        points.push(Point::new(v[0], v[1]));
        means.push(v[2]);
    }
    DoseResponseData::new(points, means, m, sigma0).map_err(|e| parsed.err(0, "data", e.to_string()))
}

pub fn grid_to_csv(data: &GridData, seed: Option<Seed>) -> String {
    let mut out = format!("# m={}\n", data.m);
    if let Some(s) = data.sigma0 {
        let _ = writeln!(out, "# sigma0={s}");
    }
    if let Some(s) = seed {
        let _ = writeln!(out, "# seed={}", s.0);
    }
    for row in data.responses.chunks(data.m) {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn grid_from_csv(source: &str, text: &str) -> Result<GridData> {
    let parsed = Parsed::new(source, text)?;
    let m: usize = parsed.require_meta("m")?;
    let sigma0: Option<f64> = parsed.meta("sigma0")?;
    if parsed.rows.len() != m {
        return Err(parsed.err(0, "rows", format!("expected {m} rows, found {}", parsed.rows.len())));
    }
    let mut responses = Vec::with_capacity(m * m);
    for &(line, row) in &parsed.rows {
        let v = parsed.floats(line, row, &[])?;
        if v.len() != m {
            return Err(parsed.err(line, "row", format!("expected {m} columns, found {}", v.len())));
        }
        responses.extend(v);
    }
    GridData::new(m, responses, sigma0)
}

pub fn weighted_sample_to_csv(sample: &WeightedSample, tau_hat: f64, m: usize) -> String {
    let mut out = format!(
        "# gamma={},tau_hat={},m={},normalizer={}\nx,y,weight\n",
        sample.gamma, tau_hat, m, sample.normalizer
    );
    for (p, w) in sample.points.iter().zip(&sample.weights) {
        let _ = writeln!(out, "{},{},{}", p.x, p.y, w);
    }
    out
}

pub fn weighted_sample_from_csv(source: &str, text: &str) -> Result<WeightedSample> {
    let parsed = Parsed::new(source, text)?;
    let gamma: f64 = parsed.require_meta("gamma")?;
    let normalizer: Option<f64> = parsed.meta("normalizer")?;
    let names = ["x", "y", "weight"];
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for &(line, row) in parsed.header(&names)? {
        let v = parsed.floats(line, row, &names)?;
        points.push(Point::new(v[0], v[1]));
        weights.push(v[2]);
    }
    let n = normalizer.unwrap_or(points.len() as f64);
    WeightedSample::with_normalizer(points, weights, gamma, n)
}

pub fn polygon_to_json(poly: &ConvexPolygon) -> String {
    serde_json::to_string(poly).expect("polygon serializes")
}

/// Reads `[[x, y], ...]` and normalizes to the convex hull of the vertices.
pub fn polygon_from_json(text: &str) -> Result<ConvexPolygon> {
    let pts: Vec<Point> = serde_json::from_str(text)?;
    Ok(ConvexPolygon::hull_of(&pts))
}

pub fn read_text(path: &Path) -> Result<String> {
    Ok(std::fs::read_to_string(path)?)
}
