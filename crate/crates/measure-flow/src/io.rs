//! CSV and JSON output, plus the particle CSV reader.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use measure_flow_core::linear::MeasureCurve;
use measure_flow_core::ParticleMeasure;
use serde_json::Value;

/// C's `%.17g`: shortest of fixed/scientific with 17 significant digits and
/// trailing zeros removed.
pub fn fmt_g17(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    const P: i32 = 17;
    let sci = format!("{:.*e}", (P - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("exponent digits");
    if (-4..P).contains(&exp) {
        let decimals = (P - 1 - exp) as usize;
        strip_zeros(&format!("{:.*}", decimals, x)).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", strip_zeros(mantissa), sign, exp.abs())
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Buffered RFC-4180 writer with a fixed header.
pub struct Table {
    writer: csv::Writer<File>,
}

impl Table {
    pub fn create(path: &Path, header: &[&str]) -> Result<Self> {
        let mut writer = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
        writer.write_record(header)?;
        Ok(Table { writer })
    }

    pub fn row(&mut self, fields: &[Cell]) -> Result<()> {
        self.writer.write_record(fields.iter().map(Cell::render))?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.writer.flush()?;
        Ok(())
    }
}

pub enum Cell {
    Num(f64),
    Int(usize),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(x) => fmt_g17(*x),
            Cell::Int(n) => n.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(n: usize) -> Self {
        Cell::Int(n)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

fn coord_header(dim: usize) -> Vec<String> {
    (0..dim).map(|k| format!("x{k}")).collect()
}

/// `x0,…,x{d−1},weight`.
pub fn write_measure(path: &Path, mu: &ParticleMeasure) -> Result<()> {
    let mut header = coord_header(mu.dim());
    header.push("weight".into());
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut table = Table::create(path, &header)?;
    for (x, &a) in mu.points().zip(mu.weights()) {
        let mut row: Vec<Cell> = x.iter().map(|&v| Cell::Num(v)).collect();
        row.push(Cell::Num(a));
        table.row(&row)?;
    }
    table.finish()
}

/// `t,particle,x0,…,weight`, one row per particle per node.
pub fn write_curve(path: &Path, curve: &MeasureCurve) -> Result<()> {
    let mut header = vec!["t".to_string(), "particle".to_string()];
    header.extend(coord_header(curve.dim()));
    header.push("weight".into());
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut table = Table::create(path, &header)?;
    for (k, snap) in curve.snapshots().iter().enumerate() {
        let t = curve.grid().time(k);
        for (i, (x, &a)) in snap.points().zip(snap.weights()).enumerate() {
            let mut row = vec![Cell::Num(t), Cell::Int(i)];
            row.extend(x.iter().map(|&v| Cell::Num(v)));
            row.push(Cell::Num(a));
            table.row(&row)?;
        }
    }
    table.finish()
}

/// Reads `x0,…,weight` rows; the header line is required and ignored
/// beyond its width.
pub fn read_measure(path: &Path, dim: usize) -> Result<ParticleMeasure> {
    let mut reader = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let width = reader.headers()?.len();
    if width != dim + 1 {
        bail!("{}: expected {} columns (x0..x{}, weight), found {width}", path.display(), dim + 1, dim - 1);
    }
    let mut coords = Vec::new();
    let mut weights = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let mut values = Vec::with_capacity(width);
        for field in record.iter() {
            let v: f64 = field
                .trim()
                .parse()
                .with_context(|| format!("{}: row {}: `{field}` is not a number", path.display(), line + 1))?;
            if !v.is_finite() {
                bail!("{}: row {}: non-finite value `{field}`", path.display(), line + 1);
            }
            values.push(v);
        }
        weights.push(values.pop().expect("width checked"));
        coords.extend(values);
    }
    Ok(ParticleMeasure::new(dim, coords, weights)?)
}

/// Flat key/value summary, written as sorted JSON.
#[derive(Debug, Default, Clone)]
pub struct Summary {
    entries: BTreeMap<String, Value>,
}

impl Summary {
    pub fn set(&mut self, key: impl Into<String>, value: impl Into<Value>) {
        self.entries.insert(key.into(), value.into());
    }

    /// Non-finite numbers have no JSON form and are stored as strings.
    pub fn num(&mut self, key: impl Into<String>, x: f64) {
        let v = serde_json::Number::from_f64(x).map(Value::Number).unwrap_or_else(|| Value::String(fmt_g17(x)));
        self.entries.insert(key.into(), v);
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.entries.get(key)
    }

    pub fn merge(&mut self, other: Summary) {
        self.entries.extend(other.entries);
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        serde_json::to_writer_pretty(&mut f, &self.entries)?;
        writeln!(f)?;
        Ok(())
    }
}
