//! CSV formats for designs and traces, and the `key = value` run summary.
//!
//! Design files carry real coordinates `x1..xd` (12 significant digits) and,
//! optionally, the exact level indices `x1.idx..xd.idx`. Trace files have
//! the columns `elapsed,best_value,restart`.

use crate::error::{Error, Result};
use crate::grid::{GridPoint, GridSpace};
use crate::psa::TraceRow;

/// Coordinates further than this from a level are snapped with a warning.
pub const SNAP_TOLERANCE: f64 = 1e-9;

/// `%.12g`-style formatting for coordinates in `[-1, 1]`.
pub fn format_coord(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".into() } else { x.to_string() };
    }
    let exp = x.abs().log10().floor() as i32;
    let decimals = (11 - exp).max(0) as usize;
    let mut s = format!("{x:.decimals$}");
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    if s == "-0" {
        s = "0".into();
    }
    s
}

fn csv_string(header: &[String], rows: impl Iterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    // Writing to memory cannot fail and the fields never need quoting.
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ASCII output")
}

pub fn write_design_csv(points: &[GridPoint], space: &GridSpace) -> String {
    let d = space.dim();
    let mut header: Vec<String> = (1..=d).map(|i| format!("x{i}")).collect();
    header.extend((1..=d).map(|i| format!("x{i}.idx")));
    csv_string(
        &header,
        points.iter().map(|p| {
            let coords = p.indices().iter().map(|&i| format_coord(space.level_coord(i)));
            coords.chain(p.indices().iter().map(u32::to_string)).collect()
        }),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignCsv {
    /// Rows in file order; duplicates are kept.
    pub points: Vec<GridPoint>,
    /// One message per snapped coordinate.
    pub warnings: Vec<String>,
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn csv_reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes())
}

fn csv_err(e: &csv::Error) -> Error {
    let line = e.position().map_or(1, |p| p.line() as usize);
    let message = match e.kind() {
        csv::ErrorKind::UnequalLengths { expected_len, len, .. } => {
            format!("expected {expected_len} fields, found {len}")
        }
        _ => e.to_string().replace('\n', " "),
    };
    parse_err(line, message)
}

/// Data records with their 1-based line numbers.
type Records = Vec<(usize, csv::StringRecord)>;

fn records(text: &str) -> Result<(Vec<String>, Records)> {
    let mut reader = csv_reader(text);
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| csv_err(&e))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.iter().all(String::is_empty) {
        return Err(parse_err(1, "missing header"));
    }
    let rows = reader
        .records()
        .map(|r| {
            let r = r.map_err(|e| csv_err(&e))?;
            let line = r.position().map_or(0, |p| p.line() as usize);
            Ok((line, r))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((header, rows))
}

/// Reads a design CSV against `space`. Index columns, when present, are
/// authoritative and must agree with the coordinates.
pub fn read_design_csv(text: &str, space: &GridSpace) -> Result<DesignCsv> {
    let (names, rows) = records(text)?;
    let d = space.dim();
    let coord_names: Vec<String> = (1..=d).map(|i| format!("x{i}")).collect();
    let idx_names: Vec<String> = (1..=d).map(|i| format!("x{i}.idx")).collect();
    let find = |name: &str| names.iter().position(|n| n == name);
    let coord_cols = coord_names
        .iter()
        .map(|n| find(n).ok_or_else(|| parse_err(1, format!("missing column `{n}`"))))
        .collect::<Result<Vec<_>>>()?;
    let idx_cols: Option<Vec<usize>> = idx_names.iter().map(|n| find(n)).collect();
    if idx_cols.is_none() && idx_names.iter().any(|n| find(n).is_some()) {
        return Err(parse_err(1, "index columns must be given for every axis or none"));
    }
    if let Some(extra) = names
        .iter()
        .find(|n| !coord_names.iter().chain(&idx_names).any(|c| c == *n))
    {
        return Err(parse_err(1, format!("unexpected column `{extra}`")));
    }

    let mut points = Vec::new();
    let mut warnings = Vec::new();
    for (line, fields) in rows {
        let mut levels = Vec::with_capacity(d);
        for axis in 0..d {
            let raw = &fields[coord_cols[axis]];
            let x: f64 = raw
                .parse()
                .map_err(|_| parse_err(line, format!("x{}: not a number `{raw}`", axis + 1)))?;
            if !x.is_finite() {
                return Err(parse_err(line, format!("x{}: not finite", axis + 1)));
            }
            let (level, gap) = space.nearest_level(x);
            if gap > space.spacing() / 2.0 {
                return Err(parse_err(line, format!("x{} = {x} lies outside [-1, 1]", axis + 1)));
            }
            let level = match &idx_cols {
                Some(cols) => {
                    let raw = &fields[cols[axis]];
                    let idx: u32 = raw.parse().map_err(|_| {
                        parse_err(line, format!("x{}.idx: not a level index `{raw}`", axis + 1))
                    })?;
                    if idx >= space.levels() {
                        return Err(parse_err(
                            line,
                            format!("x{}.idx = {idx} exceeds {} levels", axis + 1, space.levels()),
                        ));
                    }
                    if (space.level_coord(idx) - x).abs() > SNAP_TOLERANCE.max(gap) {
                        return Err(parse_err(
                            line,
                            format!("x{}.idx = {idx} disagrees with coordinate {x}", axis + 1),
                        ));
                    }
                    idx
                }
                None => level,
            };
            if gap > SNAP_TOLERANCE {
                warnings.push(format!(
                    "line {line}: x{} = {x} is off-grid, snapped to {}",
                    axis + 1,
                    format_coord(space.level_coord(level))
                ));
            }
            levels.push(level);
        }
        points.push(GridPoint::new(levels));
    }
    Ok(DesignCsv { points, warnings })
}

pub fn write_trace_csv(rows: &[TraceRow]) -> String {
    let header = ["elapsed", "best_value", "restart"].map(String::from);
    csv_string(
        &header,
        rows.iter()
            .map(|r| vec![r.elapsed.to_string(), r.best_value.to_string(), u8::from(r.restart).to_string()]),
    )
}

pub fn read_trace_csv(text: &str) -> Result<Vec<TraceRow>> {
    let (names, records) = records(text)?;
    if names != ["elapsed", "best_value", "restart"] {
        return Err(parse_err(1, "expected header `elapsed,best_value,restart`"));
    }
    let mut rows = Vec::new();
    for (line, fields) in records {
        let (elapsed, best, restart) = (&fields[0], &fields[1], &fields[2]);
        let elapsed: f64 = elapsed
            .parse()
            .map_err(|_| parse_err(line, format!("elapsed: not a number `{elapsed}`")))?;
        if !elapsed.is_finite() || elapsed < 0.0 {
            return Err(parse_err(line, "elapsed must be a finite non-negative number"));
        }
        let best_value: f64 = best
            .parse()
            .map_err(|_| parse_err(line, format!("best_value: not a number `{best}`")))?;
        if best_value.is_nan() {
            return Err(parse_err(line, "best_value is NaN"));
        }
        let restart = match restart {
            "0" => false,
            "1" => true,
            other => return Err(parse_err(line, format!("restart: expected 0 or 1, got `{other}`"))),
        };
        rows.push(TraceRow {
            elapsed,
            best_value,
            restart,
        });
    }
    Ok(rows)
}

/// Ordered `key = value` record; reals keep full round-trip precision.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Summary {
    entries: Vec<(String, String)>,
}

impl Summary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn text(&mut self, key: &str, value: impl std::fmt::Display) -> &mut Self {
        self.entries.push((key.to_string(), value.to_string()));
        self
    }

    pub fn real(&mut self, key: &str, value: f64) -> &mut Self {
        self.entries.push((key.to_string(), format!("{value:?}")));
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| parse_err(i + 1, "expected `key = value`"))?;
            entries.push((k.trim().to_string(), v.trim().to_string()));
        }
        Ok(Self { entries })
    }
}

impl std::fmt::Display for Summary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (k, v) in &self.entries {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}
