//! File formats: signal CSV, JSON documents and matrix CSV, all written
//! atomically through a temporary file in the target directory.

use std::io::Write;
use std::path::Path;

use serde::{de::DeserializeOwned, Serialize};

use crate::error::{Error, Result};
use crate::signal::Signal;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.to_path_buf(), source }
}

fn parse_err(path: &Path, msg: impl std::fmt::Display) -> Error {
    Error::Parse { path: path.to_path_buf(), msg: msg.to_string() }
}

/// Write `bytes` to a temporary sibling of `path` and rename it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(path))?;
    tmp.write_all(bytes).map_err(io_err(path))?;
    tmp.as_file().sync_all().map_err(io_err(path))?;
    tmp.persist(path).map_err(|e| Error::Io { path: path.to_path_buf(), source: e.error })?;
    Ok(())
}

/// One value per row, optionally under a `value` header. Rows may carry a
/// leading position column (`position,value`); positions set the start
/// coordinate and must be consecutive.
pub fn read_signal_csv(path: &Path) -> Result<Signal> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    parse_signal_csv(&text).map_err(|e| match e {
        Bad::NonFinite(line) => Error::NonFinite { line },
        Bad::Msg(msg) => parse_err(path, msg),
    })
}

#[derive(Debug)]
enum Bad {
    NonFinite(usize),
    Msg(String),
}

impl From<String> for Bad {
    fn from(s: String) -> Self {
        Bad::Msg(s)
    }
}

fn parse_signal_csv(text: &str) -> std::result::Result<Signal, Bad> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut samples = Vec::new();
    let mut start: Option<i64> = None;
    let mut line = 0;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| e.to_string())?;
        line += 1;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        let (pos, val) = match rec.len() {
            1 => (None, &rec[0]),
            2 => (Some(&rec[0]), &rec[1]),
            n => return Err(format!("line {line}: expected 1 or 2 columns, found {n}").into()),
        };
        let v: f64 = match val.parse() {
            Ok(v) => v,
            Err(_) if samples.is_empty() && line == 1 => continue,
            Err(_) => return Err(format!("line {line}: cannot parse {val:?}").into()),
        };
        if !v.is_finite() {
            return Err(Bad::NonFinite(line));
        }
        if let Some(p) = pos {
            let p: i64 = p.parse().map_err(|_| format!("line {line}: bad position {p:?}"))?;
            match start {
                None => start = Some(p),
                Some(s) if p != s + samples.len() as i64 => {
                    return Err(format!("line {line}: positions must be consecutive").into());
                }
                _ => {}
            }
        }
        samples.push(v);
    }
    if samples.is_empty() {
        return Err(Bad::Msg("no samples".into()));
    }
    Ok(Signal::with_start(samples, start.unwrap_or(1)))
}

pub fn signal_csv(s: &Signal) -> String {
    let mut out = String::from("position,value\n");
    for (i, v) in s.samples.iter().enumerate() {
        out.push_str(&format!("{},{}\n", s.start + i as i64, v));
    }
    out
}

pub fn write_signal_csv(path: &Path, s: &Signal) -> Result<()> {
    write_atomic(path, signal_csv(s).as_bytes())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| parse_err(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

/// Square matrix with a header row of item ids.
pub fn matrix_csv(ids: &[String], m: &[Vec<f64>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(ids).map_err(|e| Error::invalid(e.to_string()))?;
    for row in m {
        w.write_record(row.iter().map(|v| v.to_string())).map_err(|e| Error::invalid(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::invalid(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn read_matrix_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).map_err(|e| parse_err(path, e))?;
    let ids: Vec<String> = rdr.headers().map_err(|e| parse_err(path, e))?.iter().map(String::from).collect();
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| parse_err(path, e))?;
        let row = rec
            .iter()
            .map(|v| v.parse::<f64>().map_err(|_| parse_err(path, format!("row {}: bad value {v:?}", i + 1))))
            .collect::<Result<Vec<f64>>>()?;
        if row.len() != ids.len() {
            return Err(parse_err(path, format!("row {} has {} values for {} ids", i + 1, row.len(), ids.len())));
        }
        rows.push(row);
    }
    if rows.len() != ids.len() {
        return Err(parse_err(path, "matrix is not square"));
    }
    Ok((ids, rows))
}

/// Integer labels, one per row, optional `label` header.
pub fn read_labels(path: &Path) -> Result<Vec<i64>> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || (i == 0 && t.parse::<i64>().is_err() && t.chars().all(|c| c.is_alphabetic() || c == '_')) {
            continue;
        }
        out.push(t.parse().map_err(|_| parse_err(path, format!("line {}: bad label {t:?}", i + 1)))?);
    }
    Ok(out)
}
