//! Plain-text readers and writers for fields, matrix fields, sample
//! tables, and records.

use crate::error::{DnlsError, Result};
use crate::grid::Grid;
use crate::harness::{SampleRow, StabilityRecord};
use crate::lax::MatrixField;
use crate::C64;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

fn field_error(message: impl Into<String>) -> DnlsError {
    DnlsError::FieldFile(message.into())
}

fn write_header(w: &mut impl Write, grid: &Grid, t: f64) -> Result<()> {
    writeln!(w, "# L={} N={} t={}", grid.length(), grid.n(), t)?;
    Ok(())
}

fn parse_header(line: &str) -> Result<(f64, usize, f64)> {
    let body = line
        .strip_prefix('#')
        .ok_or_else(|| field_error("missing '# L=<L> N=<N> t=<t>' header"))?;
    let mut length = None;
    let mut n = None;
    let mut t = None;
    for part in body.split_whitespace() {
        if let Some(v) = part.strip_prefix("L=") {
            length = v.parse::<f64>().ok();
        } else if let Some(v) = part.strip_prefix("N=") {
            n = v.parse::<usize>().ok();
        } else if let Some(v) = part.strip_prefix("t=") {
            t = v.parse::<f64>().ok();
        } else {
            return Err(field_error(format!("unrecognized header item '{part}'")));
        }
    }
    match (length, n, t) {
        (Some(length), Some(n), Some(t)) => Ok((length, n, t)),
        _ => Err(field_error("header must define L, N and t")),
    }
}

fn parse_row(line_no: usize, line: &str, cols: usize) -> Result<Vec<f64>> {
    let vals: Vec<f64> = line
        .split_whitespace()
        .map(|s| s.parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| field_error(format!("line {line_no}: non-numeric entry")))?;
    if vals.len() != cols {
        return Err(field_error(format!(
            "line {line_no}: expected {cols} columns, found {}",
            vals.len()
        )));
    }
    Ok(vals)
}

/// Writes a field as a commented header plus `x re im` rows.
pub fn write_field(path: impl AsRef<Path>, q: &[C64], grid: &Grid, t: f64) -> Result<()> {
    grid.check(q)?;
    let mut w = BufWriter::new(File::create(path)?);
    write_header(&mut w, grid, t)?;
    for (j, v) in q.iter().enumerate() {
        writeln!(w, "{:.17e} {:.17e} {:.17e}", grid.x(j), v.re, v.im)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a field file written by [`write_field`].
pub fn read_field(path: impl AsRef<Path>) -> Result<(Vec<C64>, Grid, f64)> {
    let r = BufReader::new(File::open(path)?);
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| field_error("empty file"))??;
    let (length, n, t) = parse_header(&header)?;
    let grid = Grid::new(n, length)?;
    let mut q = Vec::with_capacity(n);
    for (idx, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let vals = parse_row(idx + 2, &line, 3)?;
        q.push(C64::new(vals[1], vals[2]));
    }
    if q.len() != n {
        return Err(field_error(format!(
            "header says N={n} but file holds {} rows",
            q.len()
        )));
    }
    Ok((q, grid, t))
}

/// Writes a matrix field as a commented header plus
/// `x re11 im11 re12 im12 re21 im21 re22 im22` rows.
pub fn write_matrix_field(
    path: impl AsRef<Path>,
    m: &MatrixField,
    grid: &Grid,
    t: f64,
) -> Result<()> {
    grid.check(&m.m11)?;
    let mut w = BufWriter::new(File::create(path)?);
    write_header(&mut w, grid, t)?;
    for j in 0..grid.n() {
        writeln!(
            w,
            "{:.17e} {:.17e} {:.17e} {:.17e} {:.17e} {:.17e} {:.17e} {:.17e} {:.17e}",
            grid.x(j),
            m.m11[j].re,
            m.m11[j].im,
            m.m12[j].re,
            m.m12[j].im,
            m.m21[j].re,
            m.m21[j].im,
            m.m22[j].re,
            m.m22[j].im,
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a matrix-field file written by [`write_matrix_field`].
pub fn read_matrix_field(path: impl AsRef<Path>) -> Result<(MatrixField, Grid, f64)> {
    let r = BufReader::new(File::open(path)?);
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| field_error("empty file"))??;
    let (length, n, t) = parse_header(&header)?;
    let grid = Grid::new(n, length)?;
    let mut m = MatrixField {
        m11: Vec::with_capacity(n),
        m12: Vec::with_capacity(n),
        m21: Vec::with_capacity(n),
        m22: Vec::with_capacity(n),
    };
    for (idx, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let vals = parse_row(idx + 2, &line, 9)?;
        m.m11.push(C64::new(vals[1], vals[2]));
        m.m12.push(C64::new(vals[3], vals[4]));
        m.m21.push(C64::new(vals[5], vals[6]));
        m.m22.push(C64::new(vals[7], vals[8]));
    }
    if m.len() != n {
        return Err(field_error(format!(
            "header says N={n} but file holds {} rows",
            m.len()
        )));
    }
    Ok((m, grid, t))
}

/// Writes the per-sample table as CSV with the fixed column order
/// `t,d,a,b,M,E,P,residual`.
pub fn write_sample_csv(path: impl AsRef<Path>, rows: &[SampleRow]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "t,d,a,b,M,E,P,residual")?;
    for r in rows {
        writeln!(
            w,
            "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
            r.t, r.distance, r.shift, r.phase, r.mass, r.energy, r.momentum, r.zc_residual
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a table written by [`write_sample_csv`].
pub fn read_sample_csv(path: impl AsRef<Path>) -> Result<Vec<SampleRow>> {
    let r = BufReader::new(File::open(path)?);
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| field_error("empty file"))??;
    if header.trim() != "t,d,a,b,M,E,P,residual" {
        return Err(field_error(format!("unexpected CSV header '{header}'")));
    }
    let mut rows = Vec::new();
    for (idx, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let vals: Vec<f64> = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| field_error(format!("line {}: non-numeric entry", idx + 2)))?;
        if vals.len() != 8 {
            return Err(field_error(format!(
                "line {}: expected 8 columns, found {}",
                idx + 2,
                vals.len()
            )));
        }
        rows.push(SampleRow {
            t: vals[0],
            distance: vals[1],
            shift: vals[2],
            phase: vals[3],
            mass: vals[4],
            energy: vals[5],
            momentum: vals[6],
            zc_residual: vals[7],
        });
    }
    Ok(rows)
}

/// Writes a stability record as pretty-printed JSON.
pub fn write_record_json(path: impl AsRef<Path>, record: &StabilityRecord) -> Result<()> {
    let w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(w, record)?;
    Ok(())
}
