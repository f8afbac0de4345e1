// SPDX-License-Identifier: Apache-2.0

//! Plain-text file formats.
//!
//! * Trace CSV: header `step,error,residual_norm,sigma`, one row per step.
//! * Basis file: first line `n d`, then `n` lines of `d` whitespace-separated
//!   values.
//! * Stream file: one line per step, `t;i1,i2,...;v1,v2,...` with `t` and the
//!   row indices counted from 1.
//!
//! Every float is written with 17 significant digits, which round-trips
//! `f64` exactly.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::subspace::{Observation, SubspaceEstimate};
use crate::trackers::StepRecord;

pub const TRACE_HEADER: &str = "step,error,residual_norm,sigma";

/// 17 significant digits in scientific notation.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Streams trace rows to a CSV sink.
pub struct TraceWriter<W: Write> {
    out: W,
    rows: usize,
}

impl<W: Write> TraceWriter<W> {
    pub fn new(mut out: W) -> Result<Self> {
        writeln!(out, "{TRACE_HEADER}")?;
        Ok(Self { out, rows: 0 })
    }

    pub fn write(&mut self, rec: &StepRecord) -> Result<()> {
        let error = rec.error.map_or_else(|| "nan".to_string(), fmt_f64);
        writeln!(
            self.out,
            "{},{},{},{}",
            rec.step,
            error,
            fmt_f64(rec.residual_norm),
            fmt_f64(rec.sigma)
        )?;
        self.rows += 1;
        Ok(())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn flush(&mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

/// Parses a trace CSV back into records.
pub fn read_trace<R: BufRead>(input: R) -> Result<Vec<StepRecord>> {
    let mut lines = input.lines();
    let header = lines.next().transpose()?.unwrap_or_default();
    if header.trim() != TRACE_HEADER {
        return Err(Error::parse(1, format!("expected header `{TRACE_HEADER}`")));
    }
    let mut records = Vec::new();
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(Error::parse(
                lineno,
                format!("expected 4 fields, found {}", fields.len()),
            ));
        }
        let step = fields[0]
            .trim()
            .parse()
            .map_err(|e| Error::parse(lineno, format!("bad step: {e}")))?;
        let num = |s: &str| -> Result<f64> {
            s.trim()
                .parse()
                .map_err(|e| Error::parse(lineno, format!("bad number `{s}`: {e}")))
        };
        let error = num(fields[1])?;
        records.push(StepRecord {
            step,
            error: (!error.is_nan()).then_some(error),
            residual_norm: num(fields[2])?,
            sigma: num(fields[3])?,
        });
    }
    Ok(records)
}

pub fn write_basis<W: Write>(mut out: W, basis: &DMatrix<f64>) -> Result<()> {
    let (n, d) = basis.shape();
    writeln!(out, "{n} {d}")?;
    for i in 0..n {
        let row: Vec<String> = basis.row(i).iter().map(|&x| fmt_f64(x)).collect();
        writeln!(out, "{}", row.join(" "))?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a basis file and checks that the columns are orthonormal.
pub fn read_basis<R: BufRead>(input: R) -> Result<SubspaceEstimate> {
    let mut lines = input.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (n, d) = loop {
        let Some((lineno, line)) = lines.next() else {
            return Err(Error::parse(1, "missing `n d` header"));
        };
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let dims: Vec<&str> = line.split_whitespace().collect();
        if dims.len() != 2 {
            return Err(Error::parse(lineno, "header must be `n d`"));
        }
        let parse = |s: &str| {
            s.parse::<usize>()
                .map_err(|e| Error::parse(lineno, format!("bad dimension `{s}`: {e}")))
        };
        break (parse(dims[0])?, parse(dims[1])?);
    };

    let mut data = Vec::with_capacity(n * d);
    let mut last_line = 1;
    for row in 0..n {
        let Some((lineno, line)) = lines.next() else {
            return Err(Error::parse(
                last_line + 1,
                format!("file ends after {row} of {n} rows"),
            ));
        };
        last_line = lineno;
        let line = line?;
        let values = line
            .split_whitespace()
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|e| Error::parse(lineno, format!("bad number `{s}`: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if values.len() != d {
            return Err(Error::parse(
                lineno,
                format!("expected {d} values, found {}", values.len()),
            ));
        }
        data.extend(values);
    }
    for (lineno, line) in lines {
        if !line?.trim().is_empty() {
            return Err(Error::parse(lineno, "unexpected data after the last row"));
        }
    }
    SubspaceEstimate::new(DMatrix::from_row_slice(n, d, &data))
}

pub fn save_basis(path: &Path, basis: &DMatrix<f64>) -> Result<()> {
    write_basis(BufWriter::new(File::create(path)?), basis)
}

pub fn load_basis(path: &Path) -> Result<SubspaceEstimate> {
    read_basis(BufReader::new(File::open(path)?))
}

pub fn write_stream<'a, W, I>(mut out: W, observations: I) -> Result<()>
where
    W: Write,
    I: IntoIterator<Item = &'a Observation>,
{
    for (t, obs) in observations.into_iter().enumerate() {
        let idx: Vec<String> = obs.indices().iter().map(|i| (i + 1).to_string()).collect();
        let vals: Vec<String> = obs.values().iter().map(|&v| fmt_f64(v)).collect();
        writeln!(out, "{};{};{}", t + 1, idx.join(","), vals.join(","))?;
    }
    out.flush()?;
    Ok(())
}

/// Parses a stream file. Steps must be numbered consecutively from 1.
pub fn read_stream<R: BufRead>(input: R) -> Result<Vec<Observation>> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let lineno = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.trim().split(';').collect();
        if parts.len() != 3 {
            return Err(Error::parse(lineno, "expected `t;indices;values`"));
        }
        let t: usize = parts[0]
            .parse()
            .map_err(|e| Error::parse(lineno, format!("bad step number: {e}")))?;
        if t != out.len() + 1 {
            return Err(Error::parse(
                lineno,
                format!("expected step {}, found {t}", out.len() + 1),
            ));
        }
        let indices = parts[1]
            .split(',')
            .map(|s| match s.trim().parse::<usize>() {
                Ok(0) => Err(Error::parse(lineno, "row indices start at 1")),
                Ok(i) => Ok(i - 1),
                Err(e) => Err(Error::parse(lineno, format!("bad index `{s}`: {e}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        let values = parts[2]
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::parse(lineno, format!("bad value `{s}`: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let obs =
            Observation::new(indices, values).map_err(|e| Error::parse(lineno, e.to_string()))?;
        out.push(obs);
    }
    Ok(out)
}

pub fn save_stream(path: &Path, observations: &[Observation]) -> Result<()> {
    write_stream(BufWriter::new(File::create(path)?), observations)
}

pub fn load_stream(path: &Path) -> Result<Vec<Observation>> {
    read_stream(BufReader::new(File::open(path)?))
}
