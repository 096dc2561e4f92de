//! CSV readers and writers for matrices, densities and weak datasets.
//!
//! Matrix and density files are headerless: one row per line, values
//! comma-separated. Pmfs are written as `index,value` rows.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::confusion::{dmatrix_from_rows, ConfusionMatrix, Orientation};
use crate::density::{DiscretePmf, SignedMeasure, WeakDataset, WeakSample};
use crate::error::{Error, Result};

fn reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(r)
}

/// Reads a headerless table of decimals.
pub fn read_rows<R: Read>(r: R, what: &str) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    for (idx, record) in reader(r).records().enumerate() {
        let record = record?;
        let line = record.position().map_or(idx as u64 + 1, |p| p.line());
        let row = record
            .iter()
            .enumerate()
            .map(|(col, field)| {
                field.parse::<f64>().map_err(|e| Error::Parse {
                    what: what.to_string(),
                    detail: format!("line {line}, column {}: '{field}': {e}", col + 1),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

pub fn read_rows_csv(path: &Path) -> Result<Vec<Vec<f64>>> {
    read_rows(std::fs::File::open(path)?, &path.display().to_string())
}

pub fn read_matrix_csv(path: &Path) -> Result<DMatrix<f64>> {
    dmatrix_from_rows(&read_rows_csv(path)?)
}

/// Loads a K×K matrix and validates it with the declared orientation.
pub fn read_confusion_csv(path: &Path, orientation: Orientation) -> Result<ConfusionMatrix> {
    ConfusionMatrix::new(read_matrix_csv(path)?, orientation)
}

/// Reads `x_index,weak_label` pairs.
pub fn read_weak_dataset<R: Read>(r: R, support_size: usize, num_classes: usize) -> Result<WeakDataset> {
    let mut samples = Vec::new();
    for (idx, record) in reader(r).records().enumerate() {
        let record = record?;
        let line = record.position().map_or(idx as u64 + 1, |p| p.line());
        if record.len() != 2 {
            return Err(Error::Parse {
                what: "weak dataset".into(),
                detail: format!("line {line}: expected 2 fields, found {}", record.len()),
            });
        }
        let field = |i: usize| {
            record[i].parse::<usize>().map_err(|e| Error::Parse {
                what: "weak dataset".into(),
                detail: format!("line {line}, column {}: '{}': {e}", i + 1, &record[i]),
            })
        };
        samples.push(WeakSample {
            x: field(0)?,
            weak_label: field(1)?,
        });
    }
    WeakDataset::new(samples, support_size, num_classes)
}

pub fn write_pmf<W: Write>(pmf: &DiscretePmf, out: W) -> Result<()> {
    write_indexed(pmf.masses(), out)
}

pub fn write_signed_measure<W: Write>(sm: &SignedMeasure, out: W) -> Result<()> {
    write_indexed(sm.values(), out)
}

fn write_indexed<W: Write>(values: &[f64], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for (i, v) in values.iter().enumerate() {
        w.write_record([i.to_string(), format!("{v:e}")])?;
    }
    w.flush()?;
    Ok(())
}

/// Long-form `class,index,corrected,projected` table of a density correction.
pub fn write_corrected<W: Write>(raw: &[SignedMeasure], projected: &[DiscretePmf], out: W) -> Result<()> {
    if raw.len() != projected.len() {
        return Err(Error::DimensionMismatch {
            expected: raw.len(),
            found: projected.len(),
        });
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["class", "index", "corrected", "projected"])?;
    for (class, (sm, pmf)) in raw.iter().zip(projected).enumerate() {
        for (index, (v, p)) in sm.values().iter().zip(pmf.masses()).enumerate() {
            w.write_record([
                class.to_string(),
                index.to_string(),
                format!("{v:e}"),
                format!("{p:e}"),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
