//! CSV exchange formats.
//!
//! Curves: row 0 holds the grid points, each later row one curve's values.
//! Responses: one value per row, aligned with the curve rows. Basis: row 0
//! holds the eigenvalues, row k the k-th eigenfunction on the grid.
//!
//! Numbers are written in shortest round-trip form, so a write/read cycle
//! reproduces every value bit for bit. Writes go to a temporary sibling
//! first and are renamed into place.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::curve::{Dataset, Grid, ReferenceCurve};
use crate::error::{Error, Result};
use crate::kl_basis::EigenBasis;

/// Shortest representation that parses back to the same f64.
pub fn format_number(v: f64) -> String {
    format!("{v:?}")
}

fn push_row(out: &mut String, values: &[f64]) {
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        write!(out, "{v:?}").expect("writing to a String");
    }
    out.push('\n');
}

fn temp_sibling(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(|s| s.to_os_string()).unwrap_or_default();
    name.push(format!(".tmp-{}", std::process::id()));
    path.with_file_name(name)
}

/// Writes `contents` to `path` through a temporary sibling and a rename.
/// On failure nothing is left at either location.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let tmp = temp_sibling(path);
    if let Err(e) = fs::write(&tmp, contents) {
        let _ = fs::remove_file(&tmp);
        return Err(Error::io(path, e));
    }
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::io(path, e)
    })
}

pub fn format_curves(grid: &Grid, curves: &[ReferenceCurve]) -> String {
    let mut out = String::new();
    push_row(&mut out, grid.points());
    for c in curves {
        push_row(&mut out, c.values());
    }
    out
}

pub fn write_curves(path: &Path, grid: &Grid, curves: &[ReferenceCurve]) -> Result<()> {
    write_atomic(path, format_curves(grid, curves).as_bytes())
}

pub fn format_responses(values: &[f64]) -> String {
    let mut out = String::new();
    for v in values {
        push_row(&mut out, std::slice::from_ref(v));
    }
    out
}

pub fn write_responses(path: &Path, values: &[f64]) -> Result<()> {
    write_atomic(path, format_responses(values).as_bytes())
}

/// Writes the curves and responses of `data` to two files.
pub fn write_dataset(curves_path: &Path, responses_path: &Path, data: &Dataset) -> Result<()> {
    write_curves(curves_path, data.grid(), data.curves())?;
    if let Err(e) = write_responses(responses_path, data.responses()) {
        let _ = fs::remove_file(curves_path);
        return Err(e);
    }
    Ok(())
}

fn read_rows(path: &Path) -> Result<Vec<Vec<f64>>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse {
            path: path.into(),
            message: format!("row {i}: {e}"),
        })?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        let row = record
            .iter()
            .enumerate()
            .map(|(j, field)| {
                field.parse::<f64>().map_err(|_| Error::Parse {
                    path: path.into(),
                    message: format!("row {i}, column {j}: {field:?} is not a number"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

/// Curves read from a curve CSV. An empty file yields no grid and no curves.
#[derive(Debug, Clone)]
pub struct CurveTable {
    pub grid: Option<Arc<Grid>>,
    pub curves: Vec<ReferenceCurve>,
}

pub fn read_curves(path: &Path) -> Result<CurveTable> {
    let mut rows = read_rows(path)?.into_iter();
    let Some(points) = rows.next() else {
        return Ok(CurveTable {
            grid: None,
            curves: Vec::new(),
        });
    };
    let grid = Arc::new(Grid::from_points(points).map_err(|e| Error::Parse {
        path: path.into(),
        message: format!("row 0 is not a valid grid: {e}"),
    })?);
    let curves = rows
        .enumerate()
        .map(|(i, values)| {
            if values.len() != grid.len() {
                return Err(Error::GridMismatch(format!(
                    "{}: row {} has {} values but the grid has {} points",
                    path.display(),
                    i + 1,
                    values.len(),
                    grid.len()
                )));
            }
            ReferenceCurve::new(Arc::clone(&grid), values).map_err(|e| Error::Parse {
                path: path.into(),
                message: format!("row {}: {e}", i + 1),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CurveTable {
        grid: Some(grid),
        curves,
    })
}

pub fn read_responses(path: &Path) -> Result<Vec<f64>> {
    read_rows(path)?
        .into_iter()
        .enumerate()
        .map(|(i, row)| match row.as_slice() {
            [y] => Ok(*y),
            _ => Err(Error::Parse {
                path: path.into(),
                message: format!("row {i} has {} columns, expected 1", row.len()),
            }),
        })
        .collect()
}

pub fn read_dataset(curves_path: &Path, responses_path: &Path) -> Result<Dataset> {
    let table = read_curves(curves_path)?;
    let responses = read_responses(responses_path)?;
    if table.curves.len() != responses.len() {
        return Err(Error::Data(format!(
            "{} has {} curves but {} has {} responses",
            curves_path.display(),
            table.curves.len(),
            responses_path.display(),
            responses.len()
        )));
    }
    Dataset::new(table.curves, responses)
}

pub fn format_basis(basis: &EigenBasis) -> String {
    let mut out = String::new();
    push_row(&mut out, basis.eigenvalues());
    for v in basis.eigenfunctions() {
        push_row(&mut out, v.values());
    }
    out
}

pub fn write_basis(path: &Path, basis: &EigenBasis) -> Result<()> {
    write_atomic(path, format_basis(basis).as_bytes())
}

/// Reads a basis on `grid`. The file carries no mean; `mean` defaults to
/// the zero curve, which leaves every d_p unchanged.
pub fn read_basis(path: &Path, grid: Arc<Grid>, mean: Option<ReferenceCurve>) -> Result<EigenBasis> {
    let mut rows = read_rows(path)?.into_iter();
    let eigenvalues = rows.next().ok_or_else(|| Error::Parse {
        path: path.into(),
        message: "empty basis file".into(),
    })?;
    let functions = rows
        .enumerate()
        .map(|(i, values)| {
            if values.len() != grid.len() {
                return Err(Error::GridMismatch(format!(
                    "{}: row {} has {} values but the grid has {} points",
                    path.display(),
                    i + 1,
                    values.len(),
                    grid.len()
                )));
            }
            ReferenceCurve::new(Arc::clone(&grid), values)
        })
        .collect::<Result<Vec<_>>>()?;
    let mean = match mean {
        Some(m) => m,
        None => ReferenceCurve::constant(Arc::clone(&grid), 0.0)?,
    };
    EigenBasis::from_parts(eigenvalues, functions, mean)
}
