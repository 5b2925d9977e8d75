//! Self-describing CSV tables: `# key: value` header lines, one column-name
//! row, then comma-separated samples at full double precision.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use lfgp::TimeSeries;

use crate::error::{ErrorKind, PipelineError, Result, Stage};

/// A set of equally sampled columns sharing one time axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub meta: Vec<(String, String)>,
    pub t0: f64,
    pub dt: f64,
    /// Column names, excluding the leading `time` column.
    pub names: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(t0: f64, dt: f64) -> Self {
        Self {
            meta: Vec::new(),
            t0,
            dt,
            names: Vec::new(),
            columns: Vec::new(),
        }
    }

    pub fn with_meta(mut self, key: &str, value: impl ToString) -> Self {
        self.meta.push((key.to_string(), value.to_string()));
        self
    }

    pub fn push(&mut self, name: &str, values: Vec<f64>) {
        self.names.push(name.to_string());
        self.columns.push(values);
    }

    pub fn push_series(&mut self, name: &str, s: &TimeSeries<f64>) {
        self.push(name, s.values.clone());
    }

    pub fn n_rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.columns[i].as_slice())
    }

    pub fn series(&self, name: &str) -> Option<TimeSeries<f64>> {
        let v = self.column(name)?;
        TimeSeries::new(self.t0, self.dt, v.to_vec()).ok()
    }
}

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_table(stage: Stage, path: &Path, table: &Table) -> Result<()> {
    let io_err = |e: std::io::Error| PipelineError::io(stage, path, e);
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(io_err)?;
    }
    let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
    for (k, v) in &table.meta {
        writeln!(w, "# {k}: {v}").map_err(io_err)?;
    }
    writeln!(w, "# t0: {}", fmt_f64(table.t0)).map_err(io_err)?;
    writeln!(w, "# dt: {}", fmt_f64(table.dt)).map_err(io_err)?;
    let n = table.n_rows();
    if table.columns.iter().any(|c| c.len() != n) {
        return Err(PipelineError::new(stage, ErrorKind::Numerical, "ragged table columns"));
    }
    let mut csv = csv::Writer::from_writer(w);
    let mut header = vec!["time".to_string()];
    header.extend(table.names.iter().cloned());
    csv.write_record(&header)
        .map_err(|e| PipelineError::io(stage, path, e))?;
    let mut row = Vec::with_capacity(header.len());
    for i in 0..n {
        row.clear();
        row.push(fmt_f64(table.t0 + table.dt * i as f64));
        row.extend(table.columns.iter().map(|c| fmt_f64(c[i])));
        csv.write_record(&row).map_err(|e| PipelineError::io(stage, path, e))?;
    }
    csv.flush().map_err(io_err)
}

pub fn read_table(stage: Stage, path: &Path) -> Result<Table> {
    let io_err = |e: std::io::Error| PipelineError::io(stage, path, e);
    let corrupt = |msg: String| PipelineError::new(stage, ErrorKind::Io, format!("{}: {msg}", path.display()));

    let file = File::open(path).map_err(io_err)?;
    let mut meta = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(io_err)?;
        let Some(rest) = line.strip_prefix('#') else { break };
        if let Some((k, v)) = rest.split_once(':') {
            meta.push((k.trim().to_string(), v.trim().to_string()));
        }
    }
    let get = |key: &str| -> Result<f64> {
        meta.iter()
            .find(|(k, _)| k == key)
            .and_then(|(_, v)| v.parse::<f64>().ok())
            .ok_or_else(|| corrupt(format!("missing or invalid `{key}` header")))
    };
    let t0 = get("t0")?;
    let dt = get("dt")?;
    if !(dt > 0.0) {
        return Err(corrupt(format!("non-positive dt {dt}")));
    }

    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| corrupt(e.to_string()))?;
    let header = rdr.headers().map_err(|e| corrupt(e.to_string()))?.clone();
    if header.get(0) != Some("time") {
        return Err(corrupt("first column must be `time`".into()));
    }
    let names: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let mut columns = vec![Vec::new(); names.len()];
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| corrupt(e.to_string()))?;
        if rec.len() != names.len() + 1 {
            return Err(corrupt(format!("row {i} has {} fields, expected {}", rec.len(), names.len() + 1)));
        }
        let parse = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| corrupt(format!("row {i}: cannot parse {s:?}")))
        };
        let t = parse(&rec[0])?;
        let expect = t0 + dt * i as f64;
        if (t - expect).abs() > 1e-6 * dt {
            return Err(corrupt(format!("row {i}: time {t} off the declared grid")));
        }
        for (c, col) in columns.iter_mut().enumerate() {
            col.push(parse(&rec[c + 1])?);
        }
    }
    if columns.first().is_some_and(Vec::is_empty) {
        return Err(corrupt("table has no rows".into()));
    }
    meta.retain(|(k, _)| k != "t0" && k != "dt");
    Ok(Table {
        meta,
        t0,
        dt,
        names,
        columns,
    })
}

/// Frequency-domain table (`freq` first column, not on a time grid).
pub fn write_spectrum(
    stage: Stage,
    path: &Path,
    meta: &[(String, String)],
    freqs: &[f64],
    columns: &[(&str, &[f64])],
) -> Result<()> {
    let io_err = |e: std::io::Error| PipelineError::io(stage, path, e);
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(io_err)?;
    }
    let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
    for (k, v) in meta {
        writeln!(w, "# {k}: {v}").map_err(io_err)?;
    }
    let mut csv = csv::Writer::from_writer(w);
    let mut header = vec!["freq"];
    header.extend(columns.iter().map(|c| c.0));
    csv.write_record(&header).map_err(|e| PipelineError::io(stage, path, e))?;
    for i in 0..freqs.len() {
        let mut row = vec![fmt_f64(freqs[i])];
        row.extend(columns.iter().map(|c| fmt_f64(c.1[i])));
        csv.write_record(&row).map_err(|e| PipelineError::io(stage, path, e))?;
    }
    csv.flush().map_err(io_err)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let mut t = Table::new(0.25, 0.05).with_meta("units", "m").with_meta("seed", 42);
        t.push("a", vec![1.0 / 3.0, -2.5e-300, 7.0]);
        t.push("b", vec![f64::MAX, 0.0, -0.0]);
        write_table(Stage::Simulate, &path, &t).unwrap();
        let back = read_table(Stage::Simulate, &path).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn corrupt_files_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "# dt: 0.1\n# t0: 0\ntime,a\n0,1\n0.1,zz\n").unwrap();
        let err = read_table(Stage::Metrics, &path).unwrap_err();
        assert_eq!(err.kind, ErrorKind::Io);
        assert!(err.to_string().starts_with("[metrics]"));
        std::fs::write(&path, "time,a\n0,1\n").unwrap();
        assert!(read_table(Stage::Metrics, &path).is_err());
        assert!(read_table(Stage::Metrics, &dir.path().join("missing.csv")).is_err());
    }
}
