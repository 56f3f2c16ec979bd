//! Field dump formats. CSV: a header row listing the 2n axis sizes, n,
//! and N, then one value per row in row-major order (x¹ fastest). The
//! binary format stores the same ordering as little-endian f64.

use super::{PeriodicGrid, ScalarField};
use crate::{Error, Result};
use std::io::{BufRead, BufWriter, Write};
use std::path::Path;

fn header(grid: &PeriodicGrid) -> String {
    let mut cols: Vec<String> = (0..grid.axes())
        .map(|_| grid.points_per_axis().to_string())
        .collect();
    cols.push(grid.complex_dim().to_string());
    cols.push(grid.points_per_axis().to_string());
    cols.join(",")
}

fn parse_header(line: &str) -> Result<PeriodicGrid> {
    let nums: Vec<usize> = line
        .trim()
        .split(',')
        .map(|t| t.trim().parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Data(format!("bad field header: {e}")))?;
    if nums.len() < 3 {
        return Err(Error::Data("field header too short".into()));
    }
    let points_per_axis = *nums.last().unwrap();
    let n = nums[nums.len() - 2];
    if nums.len() - 2 != 2 * n || nums[..2 * n].iter().any(|&s| s != points_per_axis) {
        return Err(Error::Data("field header axis sizes are inconsistent".into()));
    }
    PeriodicGrid::new(n, points_per_axis)
}

pub fn dump_scalar_csv(field: &ScalarField, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "{}", header(&field.grid))?;
    for v in &field.values {
        writeln!(w, "{}", ryu_format(*v))?;
    }
    Ok(())
}

pub fn load_scalar_csv(path: &Path) -> Result<ScalarField> {
    let reader = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut lines = reader.lines();
    let head = lines
        .next()
        .ok_or_else(|| Error::Data("empty field file".into()))??;
    let grid = parse_header(&head)?;
    let mut values = Vec::with_capacity(grid.total_points());
    for line in lines {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        values.push(
            t.parse::<f64>()
                .map_err(|e| Error::Data(format!("bad field value {t:?}: {e}")))?,
        );
    }
    ScalarField::from_values(grid, values)
}

/// Boolean masks dump as 0/1 with the same header.
pub fn dump_mask_csv(grid: &PeriodicGrid, mask: &[bool], path: &Path) -> Result<()> {
    if mask.len() != grid.total_points() {
        return Err(Error::GridMismatch("mask length does not match grid".into()));
    }
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "{}", header(grid))?;
    for &b in mask {
        writeln!(w, "{}", if b { 1 } else { 0 })?;
    }
    Ok(())
}

pub fn dump_scalar_bin(field: &ScalarField, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    w.write_all(&(field.grid.complex_dim() as u64).to_le_bytes())?;
    w.write_all(&(field.grid.points_per_axis() as u64).to_le_bytes())?;
    for v in &field.values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn load_scalar_bin(path: &Path) -> Result<ScalarField> {
    let bytes = std::fs::read(path)?;
    if bytes.len() < 16 {
        return Err(Error::Data("binary field file too short".into()));
    }
    let n = u64::from_le_bytes(bytes[0..8].try_into().unwrap()) as usize;
    let points = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    let grid = PeriodicGrid::new(n, points)?;
    let body = &bytes[16..];
    if body.len() != grid.total_points() * 8 {
        return Err(Error::Data("binary field length mismatch".into()));
    }
    let values = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    ScalarField::from_values(grid, values)
}

/// Shortest round-trippable decimal for f64.
fn ryu_format(v: f64) -> String {
    // {:?} on f64 is guaranteed to round-trip
    format!("{v:?}")
}
